#include "facefit/errors.hpp"
#include "facefit/mesh.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/random.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace facefit {

namespace {

constexpr int landmark_count = 68;

struct Icosphere
{
    std::vector<Eigen::Vector3d> vertices; // unit length
    std::vector<Triangle> triangles;       // counter-clockwise seen from outside
};

Icosphere make_icosphere(int subdivisions)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Icosphere s;
    for (const auto& v : {Eigen::Vector3d(-1, t, 0), Eigen::Vector3d(1, t, 0), Eigen::Vector3d(-1, -t, 0),
                          Eigen::Vector3d(1, -t, 0), Eigen::Vector3d(0, -1, t), Eigen::Vector3d(0, 1, t),
                          Eigen::Vector3d(0, -1, -t), Eigen::Vector3d(0, 1, -t), Eigen::Vector3d(t, 0, -1),
                          Eigen::Vector3d(t, 0, 1), Eigen::Vector3d(-t, 0, -1), Eigen::Vector3d(-t, 0, 1)})
        s.vertices.push_back(v.normalized());
    s.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                   {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                   {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level)
    {
        std::map<std::pair<int, int>, int> midpoints;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoints.find(key); it != midpoints.end())
                return it->second;
            s.vertices.push_back((s.vertices[a] + s.vertices[b]).normalized());
            const int idx = static_cast<int>(s.vertices.size()) - 1;
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<Triangle> next;
        next.reserve(s.triangles.size() * 4);
        for (const auto& tri : s.triangles)
        {
            const int ab = midpoint(tri[0], tri[1]);
            const int bc = midpoint(tri[1], tri[2]);
            const int ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        s.triangles = std::move(next);
    }

    for (auto& tri : s.triangles)
    {
        const Eigen::Vector3d& a = s.vertices[tri[0]];
        const Eigen::Vector3d n = (s.vertices[tri[1]] - a).cross(s.vertices[tri[2]] - a);
        if (n.dot(a + s.vertices[tri[1]] + s.vertices[tri[2]]) < 0.0)
            std::swap(tri[1], tri[2]);
    }
    return s;
}

double bump(const Eigen::Vector3d& u, const Eigen::Vector3d& centre, double width)
{
    return std::exp(-(u - centre).squaredNorm() / (2.0 * width * width));
}

Eigen::Vector3d random_unit(Rng& rng)
{
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    while (v.norm() < 1e-9)
        v = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

/// A random direction in the cap around `axis` with angular radius ~ `spread`.
Eigen::Vector3d random_in_cap(Rng& rng, const Eigen::Vector3d& axis, double spread)
{
    return (axis + spread * random_unit(rng)).normalized();
}

void normalize_column(Eigen::Ref<Eigen::VectorXd> column)
{
    double peak = 0.0;
    for (Eigen::Index i = 0; i + 2 < column.size(); i += 3)
        peak = std::max(peak, column.segment<3>(i).norm());
    if (peak > 0.0)
        column /= peak;
}

Eigen::VectorXd geometric_sigma(int n, double first, double ratio)
{
    Eigen::VectorXd sigma(n);
    for (int i = 0; i < n; ++i)
        sigma[i] = first * std::pow(ratio, i);
    return sigma;
}

} // namespace

Mesh icosphere(int subdivisions)
{
    if (subdivisions < 0 || subdivisions > 6)
        throw Error(ErrorCode::domain, "icosphere subdivisions must lie in [0, 6]");
    const Icosphere s = make_icosphere(subdivisions);
    Mesh mesh;
    const int n = static_cast<int>(s.vertices.size());
    mesh.vertices.resize(3, n);
    for (int v = 0; v < n; ++v)
        mesh.vertices.col(v) = s.vertices[v];
    mesh.colors = Eigen::Matrix3Xd::Constant(3, n, 0.5);
    mesh.normals = mesh.vertices;
    mesh.triangles = s.triangles;
    return mesh;
}

MorphableModel make_toy_model(const ToyModelOptions& options)
{
    if (options.subdivisions < 2 || options.subdivisions > 5)
        throw Error(ErrorCode::domain, "toy model subdivisions must be in [2, 5]");
    if (options.n_id < 0 || options.n_exp < 0 || options.n_tex < 0)
        throw Error(ErrorCode::domain, "basis sizes must be non-negative");

    Rng rng(options.seed);
    const Icosphere sphere = make_icosphere(options.subdivisions);
    const int v = static_cast<int>(sphere.vertices.size());

    const Eigen::Vector3d front(0.0, 0.0, -1.0);
    const Eigen::Vector3d nose_tip = Eigen::Vector3d(0.0, 0.05, -1.0).normalized();
    const Eigen::Vector3d left_eye = Eigen::Vector3d(-0.38, -0.28, -0.88).normalized();
    const Eigen::Vector3d right_eye = Eigen::Vector3d(0.38, -0.28, -0.88).normalized();
    const Eigen::Vector3d mouth = Eigen::Vector3d(0.0, 0.45, -0.89).normalized();
    const Eigen::Vector3d left_brow = Eigen::Vector3d(-0.36, -0.52, -0.78).normalized();
    const Eigen::Vector3d right_brow = Eigen::Vector3d(0.36, -0.52, -0.78).normalized();

    Eigen::VectorXd mean_shape(3 * v);
    Eigen::VectorXd mean_albedo(3 * v);
    const Eigen::Vector3d skin(0.78, 0.58, 0.48);
    const Eigen::Vector3d eye_colour(0.12, 0.09, 0.08);
    const Eigen::Vector3d lip_colour(0.72, 0.28, 0.26);
    const Eigen::Vector3d brow_colour(0.30, 0.20, 0.14);
    for (int i = 0; i < v; ++i)
    {
        const Eigen::Vector3d& u = sphere.vertices[i];
        Eigen::Vector3d p(0.85 * u.x(), 1.05 * u.y(), 0.80 * u.z());
        p.z() -= 0.30 * bump(u, nose_tip, 0.18);
        mean_shape.segment<3>(3 * i) = p;

        Eigen::Vector3d c = skin;
        const auto blend = [&](const Eigen::Vector3d& centre, double width, const Eigen::Vector3d& colour) {
            const double w = bump(u, centre, width);
            c = (1.0 - w) * c + w * colour;
        };
        blend(left_eye, 0.16, eye_colour);
        blend(right_eye, 0.16, eye_colour);
        blend(left_brow, 0.14, brow_colour);
        blend(right_brow, 0.14, brow_colour);
        blend(mouth, 0.17, lip_colour);
        // darker back of the head keeps the silhouette informative
        c *= 0.75 + 0.25 * std::clamp(-u.z() + 0.3, 0.0, 1.0);
        mean_albedo.segment<3>(3 * i) = c.cwiseMax(0.0).cwiseMin(1.0);
    }

    auto radial_basis = [&](int columns, const Eigen::Vector3d& focus, double spread, double width_lo,
                            double width_hi) {
        Eigen::MatrixXd basis(3 * v, columns);
        for (int k = 0; k < columns; ++k)
        {
            const int terms = 3;
            std::vector<Eigen::Vector3d> centres;
            std::vector<double> widths, amps;
            for (int m = 0; m < terms; ++m)
            {
                centres.push_back(random_in_cap(rng, focus, spread));
                widths.push_back(rng.uniform(width_lo, width_hi));
                amps.push_back(rng.normal());
            }
            for (int i = 0; i < v; ++i)
            {
                const Eigen::Vector3d& u = sphere.vertices[i];
                double h = 0.0;
                for (int m = 0; m < terms; ++m)
                    h += amps[m] * bump(u, centres[m], widths[m]);
                basis.block<3, 1>(3 * i, k) = h * u;
            }
            normalize_column(basis.col(k));
        }
        return basis;
    };

    Eigen::MatrixXd id_basis = radial_basis(options.n_id, front, 1.2, 0.35, 0.9);
    Eigen::MatrixXd exp_basis = radial_basis(options.n_exp, mouth, 0.5, 0.2, 0.4);

    Eigen::MatrixXd tex_basis(3 * v, options.n_tex);
    for (int k = 0; k < options.n_tex; ++k)
    {
        const Eigen::Vector3d centre = random_in_cap(rng, front, 1.2);
        const double width = rng.uniform(0.3, 0.8);
        const Eigen::Vector3d colour = random_unit(rng);
        for (int i = 0; i < v; ++i)
            tex_basis.block<3, 1>(3 * i, k) = bump(sphere.vertices[i], centre, width) * colour;
        normalize_column(tex_basis.col(k));
    }

    std::vector<int> order(v);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sphere.vertices[a].z() < sphere.vertices[b].z(); });
    std::vector<int> landmarks(order.begin(), order.begin() + std::min(landmark_count, v));
    std::sort(landmarks.begin(), landmarks.end());

    return MorphableModel(std::move(mean_shape), std::move(id_basis), std::move(exp_basis), std::move(mean_albedo),
                          std::move(tex_basis), sphere.triangles, std::move(landmarks),
                          geometric_sigma(options.n_id, 0.03, 0.96), geometric_sigma(options.n_exp, 0.02, 0.96),
                          geometric_sigma(options.n_tex, 0.04, 0.96));
}

} // namespace facefit
