#include "facefit/objective.hpp"

#include "facefit/errors.hpp"
#include "facefit/illumination.hpp"
#include "facefit/mesh.hpp"

#include <cmath>

namespace facefit {

SceneRender render_scene(const MorphableModel& model, const FaceParams& params, int width, int height,
                         const ProjectionMatrix& pr)
{
    SceneRender scene;
    scene.shape = assemble_shape(model, params);
    scene.albedo_unclamped = assemble_albedo_unclamped(model, params);
    scene.albedo = as_columns(scene.albedo_unclamped).cwiseMax(0.0).cwiseMin(1.0);
    const Eigen::Matrix3Xd positions = as_columns(scene.shape);
    scene.model_normals = vertex_normals(positions, model.triangles()).normals;
    const Pose& pose = params.pose;
    scene.camera_normals = rotation_from_euler(pose.pitch, pose.yaw, pose.roll) * scene.model_normals;
    scene.shaded = shade_vertices(scene.albedo, scene.camera_normals, params.gamma);
    scene.projection = project_vertices(scene.shape, pose, pr);
    scene.raster = rasterize(model.triangles(), scene.projection.pixels, scene.projection.depths, scene.shaded,
                             width, height);
    return scene;
}

Eigen::Matrix2Xd landmark_positions(const MorphableModel& model, const Projection& projection)
{
    const auto& idx = model.landmark_indices();
    Eigen::Matrix2Xd out(2, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = projection.pixels.col(idx[k]);
    return out;
}

namespace {

ImageRGB masked(const ImageRGB& image, const Mask& active)
{
    ImageRGB out(image.width(), image.height(), Eigen::Vector3d::Zero());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (active[i])
            out[i] = image[i];
    return out;
}

FaceParams zero_like(const FaceParams& params)
{
    FaceParams g;
    g.alpha_id = Eigen::VectorXd::Zero(params.alpha_id.size());
    g.beta_exp = Eigen::VectorXd::Zero(params.beta_exp.size());
    g.beta_tex = Eigen::VectorXd::Zero(params.beta_tex.size());
    g.gamma = ShMatrix::Zero();
    g.pose = Pose{0.0, 0.0, 0.0, 0.0, Eigen::Vector3d::Zero()};
    g.lighting = params.lighting;
    return g;
}

} // namespace

ObjectiveValue evaluate_objective(const ObjectiveInputs& in, const FaceParams& params, bool with_gradient)
{
    if (!in.model || !in.target || !in.visibility)
        throw Error(ErrorCode::usage, "objective needs a model, a target image and a visibility mask");
    in.weights.validate();
    const MorphableModel& model = *in.model;
    const ImageRGB& target = *in.target;
    require_same_shape(*in.visibility, target, "visibility mask");
    if (in.weights.lambda_land > 0.0 && !in.landmarks)
        throw Error(ErrorCode::usage, "landmarks are required when lambda_land > 0");

    const MeanPoolEmbedder default_embedder;
    const EmbeddingProvider& embedder = in.embedder ? *in.embedder : default_embedder;

    const int w = target.width(), h = target.height();
    const SceneRender scene = render_scene(model, params, w, h, in.pr);
    const RenderBuffer& buf = scene.raster.buffer;
    const Mask active = active_pixels(buf, *in.visibility);

    ObjectiveValue out;
    const PhotometricResult phot = photometric_loss(buf, target, *in.visibility);
    out.components.phot = phot.value;
    out.active_pixels = phot.active_pixels;
    out.components.regu = regularization_loss(params, model);

    const ImageRGB render_masked = masked(buf.color, active);
    const ImageRGB target_masked = masked(target, active);
    bool feature_ok = false;
    try
    {
        out.components.feat = feature_loss(render_masked, target_masked, embedder);
        feature_ok = true;
    }
    catch (const Error& e)
    {
        if (e.code() != ErrorCode::degenerate_embedding)
            throw;
        out.components.feat = 0.0;
        out.feature_degenerate = true;
    }

    const double diag = std::hypot(static_cast<double>(w), static_cast<double>(h));
    Eigen::Matrix2Xd lm_projected;
    if (in.landmarks)
    {
        lm_projected = landmark_positions(model, scene.projection);
        out.components.land = landmark_loss(lm_projected, *in.landmarks, diag);
    }
    out.total = shape_loss(out.components, in.weights);
    out.tri_index = buf.tri_index;
    if (!with_gradient)
        return out;

    const LossWeights& lw = in.weights;
    const int nv = model.vertex_count();
    FaceParams grad = zero_like(params);

    // Per-pixel colour gradient.
    ImageRGB g_color = photometric_loss_gradient(buf, target, *in.visibility);
    for (std::size_t i = 0; i < g_color.size(); ++i)
        g_color[i] *= lw.lambda_phot;
    if (feature_ok && lw.lambda_feat > 0.0)
    {
        const ImageRGB g_feat = feature_loss_gradient(render_masked, target_masked, embedder);
        for (std::size_t i = 0; i < g_color.size(); ++i)
            if (active[i])
                g_color[i] += lw.lambda_feat * g_feat[i];
    }

    // Rasterizer pullback at fixed coverage.
    Eigen::Matrix3Xd g_shaded = Eigen::Matrix3Xd::Zero(3, nv);
    Eigen::Matrix2Xd g_pix = Eigen::Matrix2Xd::Zero(2, nv);
    const auto& tris = model.triangles();
    const Eigen::Matrix2Xd& pix = scene.projection.pixels;
    for (int row = 0; row < h; ++row)
    {
        for (int col = 0; col < w; ++col)
        {
            const std::int32_t t = buf.tri_index(row, col);
            if (t < 0)
                continue;
            const Eigen::Vector3d& gc = g_color(row, col);
            if (gc.isZero(0.0))
                continue;
            const Triangle& tri = tris[static_cast<std::size_t>(t)];
            const Eigen::Vector3d& bw = buf.bary(row, col);
            Eigen::Vector3d g_w;
            for (int k = 0; k < 3; ++k)
            {
                g_shaded.col(tri[k]) += bw[k] * gc;
                g_w[k] = gc.dot(scene.shaded.col(tri[k]));
            }
            Eigen::Vector2d ga, gb, gcv;
            barycentric_vjp(pix.col(tri[0]), pix.col(tri[1]), pix.col(tri[2]), Eigen::Vector2d(col + 0.5, row + 0.5),
                            g_w, ga, gb, gcv);
            g_pix.col(tri[0]) += ga;
            g_pix.col(tri[1]) += gb;
            g_pix.col(tri[2]) += gcv;
        }
    }

    if (in.landmarks && lw.lambda_land > 0.0)
    {
        const Eigen::Matrix2Xd g_lm = landmark_loss_gradient(lm_projected, *in.landmarks, diag);
        const auto& idx = model.landmark_indices();
        for (std::size_t k = 0; k < idx.size(); ++k)
            g_pix.col(idx[k]) += lw.lambda_land * g_lm.col(static_cast<Eigen::Index>(k));
    }

    // Shading pullback.
    Eigen::Matrix3Xd g_albedo(3, nv);
    Eigen::Matrix3Xd g_cam_normals(3, nv);
    for (int v = 0; v < nv; ++v)
    {
        const Eigen::Vector3d n = scene.camera_normals.col(v);
        const ShVector y = sh_basis(n);
        const Eigen::Vector3d irradiance = params.gamma.transpose() * y;
        const Eigen::Vector3d gs = g_shaded.col(v);
        g_albedo.col(v) = gs.cwiseProduct(irradiance);
        const Eigen::Vector3d gs_a = gs.cwiseProduct(scene.albedo.col(v));
        grad.gamma += y * gs_a.transpose();
        g_cam_normals.col(v) = sh_basis_jacobian(n).transpose() * (params.gamma * gs_a);
    }

    // Albedo clamp.
    Eigen::VectorXd g_albedo_flat = as_interleaved(g_albedo);
    for (Eigen::Index i = 0; i < g_albedo_flat.size(); ++i)
    {
        const double a = scene.albedo_unclamped[i];
        if (a < 0.0 || a > 1.0)
            g_albedo_flat[i] = 0.0;
    }
    grad.beta_tex = model.tex_basis().transpose() * g_albedo_flat;

    // Camera normals n = R N and projection q = f Pr (R S + tz e_z) + t.
    const Pose& pose = params.pose;
    const Eigen::Matrix3d R = rotation_from_euler(pose.pitch, pose.yaw, pose.roll);
    const auto dR = rotation_derivatives(pose.pitch, pose.yaw, pose.roll);
    Eigen::Vector3d g_angles = Eigen::Vector3d::Zero();
    const Eigen::Matrix3Xd g_model_normals = R.transpose() * g_cam_normals;
    for (int v = 0; v < nv; ++v)
        accumulate_rotation_gradient(dR, scene.model_normals.col(v), g_cam_normals.col(v), g_angles);

    const Eigen::Matrix3Xd positions = as_columns(scene.shape);
    const Eigen::Matrix<double, 2, 3>& P = in.pr.rows;
    Eigen::Matrix3Xd g_positions(3, nv);
    double g_f = 0.0;
    Eigen::Vector3d g_t = Eigen::Vector3d::Zero();
    for (int v = 0; v < nv; ++v)
    {
        const Eigen::Vector2d gq = g_pix.col(v);
        const Eigen::Vector3d cam = R * positions.col(v) + Eigen::Vector3d(0.0, 0.0, pose.t2d.z());
        const Eigen::Vector3d g_cam = pose.f * (P.transpose() * gq);
        g_positions.col(v) = R.transpose() * g_cam;
        accumulate_rotation_gradient(dR, positions.col(v), g_cam, g_angles);
        g_f += gq.dot(P * cam);
        g_t.x() += gq.x();
        g_t.y() += gq.y();
        g_t.z() += g_cam.z();
    }

    g_positions += vertex_normals_vjp(positions, tris, g_model_normals);
    const Eigen::VectorXd g_shape = as_interleaved(g_positions);
    grad.alpha_id = model.id_basis().transpose() * g_shape;
    grad.beta_exp = model.exp_basis().transpose() * g_shape;
    accumulate_regularization_gradient(params, model, lw.lambda_regu, grad);

    grad.pose.pitch = g_angles.x();
    grad.pose.yaw = g_angles.y();
    grad.pose.roll = g_angles.z();
    grad.pose.f = g_f;
    grad.pose.t2d = g_t;
    out.gradient = std::move(grad);
    return out;
}

} // namespace facefit
