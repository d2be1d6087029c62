#pragma once

#include "facefit/morphable_model.hpp"

#include <Eigen/Core>

#include <vector>

namespace facefit {

/// Indexed triangle mesh; per-vertex attributes are stored column-wise (3 x V).
struct Mesh
{
    Eigen::Matrix3Xd vertices;
    Eigen::Matrix3Xd colors;  // RGB in [0, 1]
    Eigen::Matrix3Xd normals; // unit length
    std::vector<Triangle> triangles;

    int vertex_count() const noexcept { return static_cast<int>(vertices.cols()); }
};

/// Unit icosphere, outward-wound; `subdivisions` in [0, 6]. Colours are mid grey.
Mesh icosphere(int subdivisions);

/// View an interleaved 3V-vector as a 3 x V matrix (copy).
inline Eigen::Matrix3Xd as_columns(const Eigen::VectorXd& interleaved)
{
    return Eigen::Map<const Eigen::Matrix3Xd>(interleaved.data(), 3, interleaved.size() / 3);
}

inline Eigen::VectorXd as_interleaved(const Eigen::Matrix3Xd& columns)
{
    return Eigen::Map<const Eigen::VectorXd>(columns.data(), columns.size());
}

} // namespace facefit
