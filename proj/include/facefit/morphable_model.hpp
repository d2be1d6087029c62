#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace facefit {

using Triangle = std::array<int, 3>;

/**
 * Linear face prior: shape = mean + id_basis * alpha + exp_basis * beta,
 * albedo = mean_albedo + tex_basis * beta_tex.
 *
 * All 3V-vectors are interleaved (x0 y0 z0 x1 y1 z1 ...). The model is
 * immutable once constructed and can be shared between threads.
 */
class MorphableModel
{
public:
    MorphableModel() = default;

    /// Validates all invariants and throws Error(shape / domain) on violation.
    MorphableModel(Eigen::VectorXd mean_shape, Eigen::MatrixXd id_basis, Eigen::MatrixXd exp_basis,
                   Eigen::VectorXd mean_albedo, Eigen::MatrixXd tex_basis, std::vector<Triangle> triangles,
                   std::vector<int> landmark_indices, Eigen::VectorXd id_sigma, Eigen::VectorXd exp_sigma,
                   Eigen::VectorXd tex_sigma);

    int vertex_count() const noexcept { return static_cast<int>(mean_shape_.size() / 3); }
    int n_id() const noexcept { return static_cast<int>(id_basis_.cols()); }
    int n_exp() const noexcept { return static_cast<int>(exp_basis_.cols()); }
    int n_tex() const noexcept { return static_cast<int>(tex_basis_.cols()); }

    const Eigen::VectorXd& mean_shape() const noexcept { return mean_shape_; }
    const Eigen::MatrixXd& id_basis() const noexcept { return id_basis_; }
    const Eigen::MatrixXd& exp_basis() const noexcept { return exp_basis_; }
    const Eigen::VectorXd& mean_albedo() const noexcept { return mean_albedo_; }
    const Eigen::MatrixXd& tex_basis() const noexcept { return tex_basis_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const std::vector<int>& landmark_indices() const noexcept { return landmark_indices_; }
    const Eigen::VectorXd& id_sigma() const noexcept { return id_sigma_; }
    const Eigen::VectorXd& exp_sigma() const noexcept { return exp_sigma_; }
    const Eigen::VectorXd& tex_sigma() const noexcept { return tex_sigma_; }

private:
    Eigen::VectorXd mean_shape_;
    Eigen::MatrixXd id_basis_;
    Eigen::MatrixXd exp_basis_;
    Eigen::VectorXd mean_albedo_;
    Eigen::MatrixXd tex_basis_;
    std::vector<Triangle> triangles_;
    std::vector<int> landmark_indices_;
    Eigen::VectorXd id_sigma_;
    Eigen::VectorXd exp_sigma_;
    Eigen::VectorXd tex_sigma_;
};

struct Pose
{
    double pitch = 0.0; // radians, about x
    double yaw = 0.0;   // radians, about y
    double roll = 0.0;  // radians, about z
    double f = 1.0;     // scale factor, > 0
    /// x/y are added after projection (pixels); z translates in camera space.
    Eigen::Vector3d t2d = Eigen::Vector3d::Zero();

    bool operator==(const Pose&) const = default;
};

/// Whether the 9 SH coefficients are tied across RGB (9 DOF) or free (27 DOF).
enum class LightingProfile { shared, per_channel };

using ShMatrix = Eigen::Matrix<double, 9, 3>;

/// The unknown vector y = (alpha_id, beta_exp, beta_tex, gamma, pose).
struct FaceParams
{
    Eigen::VectorXd alpha_id;
    Eigen::VectorXd beta_exp;
    Eigen::VectorXd beta_tex;
    ShMatrix gamma = ShMatrix::Zero(); // column per channel
    Pose pose;
    LightingProfile lighting = LightingProfile::shared;

    /// All-zero coefficients sized for the model, gamma zero, identity pose.
    static FaceParams zeros(const MorphableModel& model, LightingProfile lighting = LightingProfile::shared);

    int lighting_channels() const noexcept { return lighting == LightingProfile::shared ? 1 : 3; }

    /// N_id + N_exp + N_tex + 9 * channels + 6 (pitch, yaw, roll, f, t_x, t_y).
    /// The camera-space z translation does not move the image under the
    /// orthographic projection and is not a free parameter.
    int degrees_of_freedom() const noexcept;

    bool all_finite() const;

    bool operator==(const FaceParams& other) const;
};

/// Flattening of FaceParams into the optimizer's vector, in block order
/// alpha_id | beta_exp | beta_tex | gamma (9 or 27, channel-major) | pitch yaw roll f t_x t_y.
struct ParameterLayout
{
    int n_id = 0;
    int n_exp = 0;
    int n_tex = 0;
    LightingProfile lighting = LightingProfile::shared;

    static ParameterLayout of(const FaceParams& params);

    int gamma_size() const noexcept { return lighting == LightingProfile::shared ? 9 : 27; }
    int id_offset() const noexcept { return 0; }
    int exp_offset() const noexcept { return n_id; }
    int tex_offset() const noexcept { return n_id + n_exp; }
    int gamma_offset() const noexcept { return n_id + n_exp + n_tex; }
    int pose_offset() const noexcept { return gamma_offset() + gamma_size(); }
    int size() const noexcept { return pose_offset() + 6; }

    Eigen::VectorXd pack(const FaceParams& params) const;
    /// Gradients of tied SH coefficients are summed over channels.
    Eigen::VectorXd pack_gradient(const FaceParams& gradient) const;
    /// Values not represented in the flat vector (pose.t2d.z) come from `base`.
    FaceParams unpack(const Eigen::VectorXd& flat, const FaceParams& base) const;
};

/// mean_shape + id_basis * alpha_id + exp_basis * beta_exp.
Eigen::VectorXd assemble_shape(const MorphableModel& model, const FaceParams& params);

/// Unclamped mean_albedo + tex_basis * beta_tex.
Eigen::VectorXd assemble_albedo_unclamped(const MorphableModel& model, const FaceParams& params);

/// assemble_albedo_unclamped clamped to [0, 1] per channel.
Eigen::VectorXd assemble_albedo(const MorphableModel& model, const FaceParams& params);

/// Sum of squared sigma-normalised coefficients over all three blocks.
double regularization_loss(const FaceParams& params, const MorphableModel& model);

/// Writes d(regularization_loss)/d(coefficients) into the coefficient blocks of `gradient`, scaled by `weight`.
void accumulate_regularization_gradient(const FaceParams& params, const MorphableModel& model, double weight,
                                        FaceParams& gradient);

struct ToyModelOptions
{
    int subdivisions = 2; // icosphere level, level 2 gives 162 vertices
    int n_id = 80;
    int n_exp = 64;
    int n_tex = 80;
    std::uint64_t seed = 7;
};

/**
 * Synthetic face-like model built on an icosphere. The face looks down -z
 * (towards the default camera), with the chin towards +y (image down).
 * Identity and expression bases displace vertices along the mean-shape
 * normals; texture bases are smooth colour fields. Columns are scaled to
 * unit maximum per-vertex magnitude, so sigma carries the physical scale.
 */
MorphableModel make_toy_model(const ToyModelOptions& options = {});

} // namespace facefit
