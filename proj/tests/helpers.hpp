#pragma once

#include "facefit/mesh.hpp"
#include "facefit/morphable_model.hpp"
#include "facefit/random.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

namespace facefit::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("facefit_" + tag + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Level-2 icosphere model with 2 identity, 2 expression and 2 texture components.
inline MorphableModel tiny_model(std::uint64_t seed = 3)
{
    Rng rng(seed);
    auto random_matrix = [&](Eigen::Index r, Eigen::Index c, double scale) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i)
                m(i, j) = scale * rng.uniform(-1.0, 1.0);
        return m;
    };
    const Mesh sphere = icosphere(2);
    const Eigen::VectorXd mean = as_interleaved(sphere.vertices);
    const Eigen::Index n = mean.size();
    const Eigen::VectorXd albedo = Eigen::VectorXd::Constant(n, 0.5);
    std::vector<int> landmarks(68);
    for (int k = 0; k < 68; ++k)
        landmarks[k] = 2 * k;
    return MorphableModel(mean, random_matrix(n, 2, 0.1), random_matrix(n, 2, 0.1), albedo, random_matrix(n, 2, 0.3),
                          sphere.triangles, landmarks, Eigen::Vector2d(0.5, 0.25), Eigen::Vector2d(0.3, 0.2),
                          Eigen::Vector2d(0.1, 0.05));
}

/// Central differences of a scalar function of a vector.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double denom = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / denom;
}

inline Eigen::Vector3d random_unit(Rng& rng)
{
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

} // namespace facefit::test
