#include "facefit/losses.hpp"

#include "facefit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace facefit {

namespace {

void require_non_negative(double v, const char* name)
{
    if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::domain, std::string(name) + " must be finite and non-negative");
}

int cell_of(int i, int n, int cells)
{
    return static_cast<int>(static_cast<long long>(i) * cells / n);
}

} // namespace

void LossWeights::validate() const
{
    require_non_negative(lambda_feat, "lambda_feat");
    require_non_negative(lambda_regu, "lambda_regu");
    require_non_negative(lambda_phot, "lambda_phot");
    require_non_negative(lambda_land, "lambda_land");
}

void LandmarkSet::validate() const
{
    for (int k = 0; k < landmark_count; ++k)
    {
        if (!points[k].allFinite())
            throw Error(ErrorCode::domain, "landmark " + std::to_string(k) + " is not finite");
        if (!(confidence[k] >= 0.0 && confidence[k] <= 1.0))
            throw Error(ErrorCode::domain, "landmark " + std::to_string(k) + " confidence outside [0, 1]");
    }
}

Mask active_pixels(const RenderBuffer& render, const Mask& visibility)
{
    require_same_shape(render.coverage, visibility, "visibility mask");
    Mask active(visibility.width(), visibility.height(), 0);
    for (std::size_t i = 0; i < active.size(); ++i)
        active[i] = render.coverage[i] && visibility[i];
    return active;
}

PhotometricResult photometric_loss(const RenderBuffer& render, const ImageRGB& target, const Mask& visibility)
{
    require_same_shape(render.color, target, "photometric_loss target");
    const Mask active = active_pixels(render, visibility);
    PhotometricResult result;
    double total = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i)
    {
        if (!active[i])
            continue;
        total += (render.color[i] - target[i]).norm();
        ++result.active_pixels;
    }
    if (result.active_pixels > 0)
        result.value = total / static_cast<double>(result.active_pixels);
    return result;
}

ImageRGB photometric_loss_gradient(const RenderBuffer& render, const ImageRGB& target, const Mask& visibility)
{
    require_same_shape(render.color, target, "photometric_loss target");
    const Mask active = active_pixels(render, visibility);
    const std::size_t n = count_set(active);
    ImageRGB grad(target.width(), target.height(), Eigen::Vector3d::Zero());
    if (n == 0)
        return grad;
    for (std::size_t i = 0; i < active.size(); ++i)
    {
        if (!active[i])
            continue;
        const Eigen::Vector3d r = render.color[i] - target[i];
        const double len = r.norm();
        if (len > 0.0)
            grad[i] = r / (len * static_cast<double>(n));
    }
    return grad;
}

double landmark_loss(const Eigen::Matrix2Xd& projected, const LandmarkSet& target, double image_diag)
{
    if (projected.cols() != landmark_count)
        throw_shape_error("projected landmarks", landmark_count, static_cast<std::size_t>(projected.cols()));
    if (!(image_diag > 0.0))
        throw Error(ErrorCode::domain, "image diagonal must be > 0");
    double weighted = 0.0, total_confidence = 0.0;
    for (int k = 0; k < landmark_count; ++k)
    {
        weighted += target.confidence[k] * (projected.col(k) - target.points[k]).squaredNorm();
        total_confidence += target.confidence[k];
    }
    if (total_confidence <= 0.0)
        return 0.0;
    return weighted / (total_confidence * image_diag * image_diag);
}

Eigen::Matrix2Xd landmark_loss_gradient(const Eigen::Matrix2Xd& projected, const LandmarkSet& target,
                                        double image_diag)
{
    if (projected.cols() != landmark_count)
        throw_shape_error("projected landmarks", landmark_count, static_cast<std::size_t>(projected.cols()));
    Eigen::Matrix2Xd grad = Eigen::Matrix2Xd::Zero(2, landmark_count);
    double total_confidence = 0.0;
    for (int k = 0; k < landmark_count; ++k)
        total_confidence += target.confidence[k];
    if (total_confidence <= 0.0)
        return grad;
    const double scale = 2.0 / (total_confidence * image_diag * image_diag);
    for (int k = 0; k < landmark_count; ++k)
        grad.col(k) = scale * target.confidence[k] * (projected.col(k) - target.points[k]);
    return grad;
}

Eigen::VectorXd MeanPoolEmbedder::pool(const ImageRGB& image) const
{
    if (image.empty())
        throw Error(ErrorCode::degenerate_embedding, "cannot embed an empty image");
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(grid * grid);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid * grid);
    for (int row = 0; row < image.height(); ++row)
    {
        const int cr = cell_of(row, image.height(), grid);
        for (int col = 0; col < image.width(); ++col)
        {
            const int k = cr * grid + cell_of(col, image.width(), grid);
            sums[k] += image(row, col).sum() / 3.0;
            counts[k] += 1.0;
        }
    }
    for (int k = 0; k < grid * grid; ++k)
        if (counts[k] > 0.0)
            sums[k] /= counts[k];
    return sums;
}

Eigen::VectorXd MeanPoolEmbedder::embed(const ImageRGB& image) const
{
    const Eigen::VectorXd pooled = pool(image);
    const double len = pooled.norm();
    if (!(len > 0.0) || !std::isfinite(len))
        throw Error(ErrorCode::degenerate_embedding, "mean-pool embedding has zero norm");
    return pooled / len;
}

ImageRGB MeanPoolEmbedder::embed_vjp(const ImageRGB& image, const Eigen::VectorXd& grad) const
{
    const Eigen::VectorXd pooled = pool(image);
    const double len = pooled.norm();
    if (!(len > 0.0) || !std::isfinite(len))
        throw Error(ErrorCode::degenerate_embedding, "mean-pool embedding has zero norm");
    const Eigen::VectorXd e = pooled / len;
    const Eigen::VectorXd grad_pooled = (grad - grad.dot(e) * e) / len;

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid * grid);
    for (int row = 0; row < image.height(); ++row)
        for (int col = 0; col < image.width(); ++col)
            counts[cell_of(row, image.height(), grid) * grid + cell_of(col, image.width(), grid)] += 1.0;

    ImageRGB out(image.width(), image.height(), Eigen::Vector3d::Zero());
    for (int row = 0; row < image.height(); ++row)
    {
        for (int col = 0; col < image.width(); ++col)
        {
            const int k = cell_of(row, image.height(), grid) * grid + cell_of(col, image.width(), grid);
            out(row, col) = Eigen::Vector3d::Constant(grad_pooled[k] / (3.0 * counts[k]));
        }
    }
    return out;
}

double feature_loss(const ImageRGB& render, const ImageRGB& target, const EmbeddingProvider& embedder)
{
    const Eigen::VectorXd a = embedder.embed(render);
    const Eigen::VectorXd b = embedder.embed(target);
    if (a.size() != b.size())
        throw_shape_error("embedding", static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()));
    return std::clamp(1.0 - a.dot(b), 0.0, 2.0);
}

ImageRGB feature_loss_gradient(const ImageRGB& render, const ImageRGB& target, const EmbeddingProvider& embedder)
{
    const Eigen::VectorXd b = embedder.embed(target);
    return embedder.embed_vjp(render, -b);
}

double shape_loss(const LossComponents& c, const LossWeights& weights)
{
    require_non_negative(c.feat, "L_feat");
    require_non_negative(c.regu, "L_regu");
    require_non_negative(c.phot, "L_phot");
    require_non_negative(c.land, "L_land");
    return weights.lambda_feat * c.feat + weights.lambda_regu * c.regu + weights.lambda_phot * c.phot +
           weights.lambda_land * c.land;
}

} // namespace facefit
