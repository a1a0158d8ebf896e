#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "melidar/core_model.hpp"
#include "melidar/tensor_io.hpp"

namespace melidar {

struct MappingError : Error {
    using Error::Error;
};
struct EmptyInputError : Error {
    using Error::Error;
};

/// A point together with the echo slot it came from.
struct LabeledPoint {
    Vec3 point;
    double reflectance = 0.0;
    PixelIndex pixel;
    std::uint32_t echo = 0;
};

/// Every echo of the frame, row-major, echoes in order.
std::vector<LabeledPoint> frame_points(const MultiEchoFrame& frame);

struct ReassignedSets {
    std::vector<LabeledPoint> penetrable;
    std::vector<LabeledPoint> impenetrable;
};

/// Per echo group, the return farthest from `origin` is impenetrable and the
/// rest penetrable. Equal ranges go to the stronger (earlier) echo.
ReassignedSets reassign(const MultiEchoFrame& frame, const Vec3& origin = {});

/// [M, 7] f32 tensor: x, y, z, reflectance, row, col, echo.
Tensor point_set_tensor(std::span<const LabeledPoint> points, const char* kind);

/// Image-space 2D box on the LiDAR image: u is the column, v the row.
struct Box2D {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;
    int class_id = 0;

    [[nodiscard]] bool contains(double u, double v) const { return u >= u_min && u <= u_max && v >= v_min && v <= v_max; }
};

/// Per-point class vector, row-major [N, num_classes]. Entry c is 1 when the
/// pixel lies inside (inclusive) any box of class c, else 0.
std::vector<float> paint_class(std::span<const PixelIndex> pixels, std::span<const Box2D> boxes,
                               std::size_t num_classes);

/// Per-point (ambient, own reflectance) looked up in the LiDAR image.
std::vector<std::array<float, 2>> paint_pixel(std::span<const LabeledPoint> points, const LidarImage& image);

/// Proposal-centered, heading-aligned coordinates: R_z(-yaw) * (p - center).
std::vector<Vec3> canonical_transform(std::span<const Vec3> points, const OrientedBox3D& proposal);
std::vector<Vec3> canonical_inverse(std::span<const Vec3> points, const OrientedBox3D& proposal);

/// Indices of `n` points drawn from `count`: without replacement when
/// count >= n, with replacement otherwise. Deterministic per seed.
std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n, std::uint64_t seed);

template <typename T>
std::vector<T> subsample(std::span<const T> points, std::size_t n, std::uint64_t seed) {
    std::vector<T> out;
    out.reserve(n);
    for (auto i : subsample_indices(points.size(), n, seed)) out.push_back(points[i]);
    return out;
}

/// 1 when the point lies inside (inclusive) at least one box.
std::vector<std::uint8_t> foreground_labels(std::span<const Vec3> points, std::span<const OrientedBox3D> boxes);

}  // namespace melidar
