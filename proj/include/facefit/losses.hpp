#pragma once

#include "facefit/image.hpp"
#include "facefit/rasterizer.hpp"

#include <Eigen/Core>

#include <array>

namespace facefit {

inline constexpr int landmark_count = 68;

/// Weights of the four-part coarse loss. Defaults are the reference weights.
struct LossWeights
{
    double lambda_feat = 0.2;
    double lambda_regu = 3.6e-4;
    double lambda_phot = 1.4;
    double lambda_land = 1.6e-3;

    void validate() const;
};

struct LandmarkSet
{
    std::array<Eigen::Vector2d, landmark_count> points{};
    std::array<double, landmark_count> confidence{};

    void validate() const;
};

struct LossComponents
{
    double feat = 0.0;
    double regu = 0.0;
    double phot = 0.0;
    double land = 0.0;

    bool operator==(const LossComponents&) const = default;
};

struct PhotometricResult
{
    double value = 0.0;
    std::size_t active_pixels = 0;

    bool empty() const noexcept { return active_pixels == 0; }
};

/// Pixels where the render covers the face and the visibility mask is set.
Mask active_pixels(const RenderBuffer& render, const Mask& visibility);

/**
 * Mean over active pixels of the per-pixel RGB L2 norm |render - target|.
 * Returns 0 with active_pixels == 0 when nothing is active.
 */
PhotometricResult photometric_loss(const RenderBuffer& render, const ImageRGB& target, const Mask& visibility);

/// dL_phot / d(render colour) per pixel; zero outside the active set and at zero residual.
ImageRGB photometric_loss_gradient(const RenderBuffer& render, const ImageRGB& target, const Mask& visibility);

/**
 * sum_k c_k |p_k - t_k|^2 / (sum_k c_k * image_diag^2), 0 when all
 * confidences are 0. `projected` holds the 68 landmark positions as columns.
 */
double landmark_loss(const Eigen::Matrix2Xd& projected, const LandmarkSet& target, double image_diag);

/// dL_land / d(projected landmark positions).
Eigen::Matrix2Xd landmark_loss_gradient(const Eigen::Matrix2Xd& projected, const LandmarkSet& target,
                                        double image_diag);

/// Image embedding used by the perceptual term. Implementations must be
/// safe for concurrent const use.
class EmbeddingProvider
{
public:
    virtual ~EmbeddingProvider() = default;

    /// Unit-norm embedding; throws Error(degenerate_embedding) if it has no direction.
    virtual Eigen::VectorXd embed(const ImageRGB& image) const = 0;

    /// Vector-Jacobian product: d(grad . embed(image)) / d(image).
    virtual ImageRGB embed_vjp(const ImageRGB& image, const Eigen::VectorXd& grad) const = 0;
};

/// Stand-in embedder: grayscale (mean of RGB), mean-pooled onto an 8x8 grid
/// of equal-as-possible cells, unit-normalised.
class MeanPoolEmbedder final : public EmbeddingProvider
{
public:
    static constexpr int grid = 8;

    Eigen::VectorXd embed(const ImageRGB& image) const override;
    ImageRGB embed_vjp(const ImageRGB& image, const Eigen::VectorXd& grad) const override;

    /// Unnormalised pooled vector.
    Eigen::VectorXd pool(const ImageRGB& image) const;
};

/// 1 - cos(embed(render), embed(target)), in [0, 2].
double feature_loss(const ImageRGB& render, const ImageRGB& target, const EmbeddingProvider& embedder);

/// d(feature_loss) / d(render).
ImageRGB feature_loss_gradient(const ImageRGB& render, const ImageRGB& target, const EmbeddingProvider& embedder);

/// Weighted sum of the four components. Throws Error(domain) on a negative
/// or non-finite component.
double shape_loss(const LossComponents& components, const LossWeights& weights = {});

} // namespace facefit
