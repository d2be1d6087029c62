#pragma once

#include "facefit/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace facefit {

/// Row-major H x W raster. Origin top-left, y (row) increases downwards.
template <typename T>
class Grid
{
public:
    Grid() = default;
    Grid(int width, int height, const T& fill = T{})
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill)
    {
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const { return data_[index(row, col)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Grid&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ImageRGB = Grid<Eigen::Vector3d>;
using ImageGray = Grid<double>;
/// Boolean per-pixel mask stored as bytes (0 / 1).
using Mask = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, std::string_view what)
{
    if (!a.same_shape(b))
    {
        throw Error(ErrorCode::shape, std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                                          "x" + std::to_string(a.height()) + " vs " +
                                          std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

inline std::size_t count_set(const Mask& mask)
{
    std::size_t n = 0;
    for (auto v : mask)
        n += v != 0;
    return n;
}

} // namespace facefit
