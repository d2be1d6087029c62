#include "facefit/edge_effectiveness.hpp"

#include "facefit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace facefit {

namespace {

constexpr double far_away = std::numeric_limits<double>::infinity();

/// 1-D squared distance transform of a sampled function (Felzenszwalb & Huttenlocher).
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                   std::vector<double>& z)
{
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q)
    {
        if (f[q] == far_away)
            continue;
        while (k >= 0)
        {
            const int p = v[k];
            const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k])
                --k;
            else
                break;
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -far_away
                      : ((f[q] + double(q) * q) - (f[v[k - 1]] + double(v[k - 1]) * v[k - 1])) /
                            (2.0 * (q - v[k - 1]));
        z[k + 1] = far_away;
    }
    if (k < 0)
    {
        std::fill(out.begin(), out.end(), far_away);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q)
    {
        while (z[j + 1] < q)
            ++j;
        const double d = q - v[j];
        out[q] = d * d + f[v[j]];
    }
}

double checked_log(double argument, double& clamped_sum, bool& saturated)
{
    if (argument < log_epsilon)
    {
        saturated = true;
        clamped_sum += std::log(log_epsilon);
        return 0.0;
    }
    clamped_sum += std::log(argument);
    return std::log(argument);
}

} // namespace

DistanceField distance_field(const EdgeLinesMap& gt_edges, double threshold)
{
    const int w = gt_edges.width(), h = gt_edges.height();
    DistanceField sq(w, h, far_away);
    bool any = false;
    for (std::size_t i = 0; i < gt_edges.size(); ++i)
    {
        if (gt_edges[i] >= threshold)
        {
            sq[i] = 0.0;
            any = true;
        }
    }
    if (!any)
        throw Error(ErrorCode::empty_ground_truth, "no ground-truth edge pixel reaches the threshold");

    const int n = std::max(w, h);
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    for (int col = 0; col < w; ++col)
    {
        f.resize(h);
        out.resize(h);
        for (int row = 0; row < h; ++row)
            f[row] = sq(row, col);
        squared_dt_1d(f, out, v, z);
        for (int row = 0; row < h; ++row)
            sq(row, col) = out[row];
    }
    for (int row = 0; row < h; ++row)
    {
        f.resize(w);
        out.resize(w);
        for (int col = 0; col < w; ++col)
            f[col] = sq(row, col);
        squared_dt_1d(f, out, v, z);
        for (int col = 0; col < w; ++col)
            sq(row, col) = std::sqrt(out[col]);
    }
    return sq;
}

double effective_fraction(const CoordinateSet& coords, const DistanceField& field, double theta)
{
    if (coords.empty())
        throw Error(ErrorCode::undefined_fraction, "coordinate set is empty");
    std::size_t close = 0;
    for (const auto& c : coords)
    {
        if (c.x < 0 || c.y < 0 || c.x >= field.width() || c.y >= field.height())
            throw Error(ErrorCode::domain,
                        "coordinate (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ") outside the map");
        close += field(c.y, c.x) < theta;
    }
    return static_cast<double>(close) / static_cast<double>(coords.size());
}

int ground_truth_label(const CoordinateSet& coords, const DistanceField& field, double theta, double delta)
{
    return effective_fraction(coords, field, theta) < delta ? 0 : 1;
}

double discriminator_loss(std::span<const double> d_gen, std::span<const int> d_gt_label,
                          std::span<const double> d_real)
{
    if (d_gen.size() != d_gt_label.size())
        throw_shape_error("discriminator labels", d_gen.size(), d_gt_label.size());
    if (d_gen.empty() || d_real.empty())
        throw Error(ErrorCode::undefined_fraction, "discriminator_loss needs a non-empty batch");

    double gen_sum = 0.0, gen_clamped = 0.0, real_sum = 0.0, real_clamped = 0.0;
    bool saturated = false;
    for (std::size_t i = 0; i < d_gen.size(); ++i)
        gen_sum += checked_log(1.0 - std::abs(d_gen[i] - d_gt_label[i]), gen_clamped, saturated);
    for (double d : d_real)
        real_sum += checked_log(d, real_clamped, saturated);

    const double ng = static_cast<double>(d_gen.size()), nr = static_cast<double>(d_real.size());
    if (saturated)
        throw SaturationError("discriminator_loss: log argument below epsilon", gen_clamped / ng - real_clamped / nr);
    return gen_sum / ng - real_sum / nr;
}

double discriminator_loss(double d_gen, int d_gt_label, double d_real)
{
    return discriminator_loss(std::span<const double>(&d_gen, 1), std::span<const int>(&d_gt_label, 1),
                              std::span<const double>(&d_real, 1));
}

double adversarial_loss(std::span<const double> d_gen)
{
    if (d_gen.empty())
        throw Error(ErrorCode::undefined_fraction, "adversarial_loss needs a non-empty batch");
    double sum = 0.0, clamped = 0.0;
    bool saturated = false;
    for (double d : d_gen)
        sum += checked_log(1.0 - d, clamped, saturated);
    const double n = static_cast<double>(d_gen.size());
    if (saturated)
        throw SaturationError("adversarial_loss: log argument below epsilon", clamped / n);
    return sum / n;
}

double adversarial_loss(double d_gen)
{
    return adversarial_loss(std::span<const double>(&d_gen, 1));
}

double edge_mse(const EdgeLinesMap& estimated, const EdgeLinesMap& truth)
{
    require_same_shape(estimated, truth, "edge_mse");
    if (estimated.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i)
    {
        const double d = estimated[i] - truth[i];
        sum += d * d;
    }
    return sum / static_cast<double>(estimated.size());
}

} // namespace facefit
