#include "melidar/echo_ops.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace melidar {

std::vector<LabeledPoint> frame_points(const MultiEchoFrame& frame) {
    std::vector<LabeledPoint> out;
    out.reserve(frame.total_points());
    for (const auto& g : frame.groups) {
        for (std::size_t k = 0; k < g.echoes.size(); ++k) {
            out.push_back({g.echoes[k].point, g.echoes[k].reflectance, g.pixel, static_cast<std::uint32_t>(k)});
        }
    }
    return out;
}

ReassignedSets reassign(const MultiEchoFrame& frame, const Vec3& origin) {
    ReassignedSets sets;
    for (const auto& g : frame.groups) {
        if (g.echoes.empty()) continue;
        std::size_t far = 0;
        double far_range = (g.echoes[0].point - origin).norm();
        for (std::size_t k = 1; k < g.echoes.size(); ++k) {
            const double r = (g.echoes[k].point - origin).norm();
            if (r > far_range) {
                far = k;
                far_range = r;
            }
        }
        for (std::size_t k = 0; k < g.echoes.size(); ++k) {
            LabeledPoint p{g.echoes[k].point, g.echoes[k].reflectance, g.pixel, static_cast<std::uint32_t>(k)};
            (k == far ? sets.impenetrable : sets.penetrable).push_back(p);
        }
    }
    return sets;
}

Tensor point_set_tensor(std::span<const LabeledPoint> points, const char* kind) {
    auto t = Tensor::zeros<float>({points.size(), 7});
    auto px = t.as<float>();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        float* d = &px[i * 7];
        d[0] = static_cast<float>(p.point.x);
        d[1] = static_cast<float>(p.point.y);
        d[2] = static_cast<float>(p.point.z);
        d[3] = static_cast<float>(p.reflectance);
        d[4] = static_cast<float>(p.pixel.row);
        d[5] = static_cast<float>(p.pixel.col);
        d[6] = static_cast<float>(p.echo);
    }
    t.meta = {{"kind", kind}, {"layout", "M,C"}, {"channels", {"x", "y", "z", "reflectance", "row", "col", "echo"}}};
    return t;
}

std::vector<float> paint_class(std::span<const PixelIndex> pixels, std::span<const Box2D> boxes,
                               std::size_t num_classes) {
    std::vector<float> out(pixels.size() * num_classes, 0.0f);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double u = pixels[i].col;
        const double v = pixels[i].row;
        for (const auto& b : boxes) {
            if (b.class_id < 0 || static_cast<std::size_t>(b.class_id) >= num_classes) continue;
            if (b.contains(u, v)) out[i * num_classes + static_cast<std::size_t>(b.class_id)] = 1.0f;
        }
    }
    return out;
}

std::vector<std::array<float, 2>> paint_pixel(std::span<const LabeledPoint> points, const LidarImage& image) {
    std::vector<std::array<float, 2>> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (p.pixel.row >= image.height || p.pixel.col >= image.width) {
            throw MappingError("point maps outside the LiDAR image at (" + std::to_string(p.pixel.row) + ", " +
                               std::to_string(p.pixel.col) + ")");
        }
        if (static_cast<std::size_t>(p.echo) + 1 >= image.channels) {
            throw MappingError("echo index " + std::to_string(p.echo) + " has no reflectance channel");
        }
        out.push_back({image.at(p.pixel.row, p.pixel.col, 0), image.at(p.pixel.row, p.pixel.col, 1 + p.echo)});
    }
    return out;
}

std::vector<Vec3> canonical_transform(std::span<const Vec3> points, const OrientedBox3D& proposal) {
    const Mat3 rot = Mat3::rot_z(-proposal.yaw);
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(rot * (p - proposal.center));
    return out;
}

std::vector<Vec3> canonical_inverse(std::span<const Vec3> points, const OrientedBox3D& proposal) {
    const Mat3 rot = Mat3::rot_z(proposal.yaw);
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(rot * p + proposal.center);
    return out;
}

std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n, std::uint64_t seed) {
    if (count == 0) throw EmptyInputError("cannot subsample an empty point set");
    if (n == 0) throw ConfigError("subsample size must be >= 1");
    std::mt19937_64 rng(seed);
    if (count >= n) {
        // partial Fisher-Yates: the first n slots end up a uniform sample
        std::vector<std::size_t> idx(count);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, count - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(n);
        return idx;
    }
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

std::vector<std::uint8_t> foreground_labels(std::span<const Vec3> points, std::span<const OrientedBox3D> boxes) {
    std::vector<std::uint8_t> out(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        out[i] = std::any_of(boxes.begin(), boxes.end(), [&](const OrientedBox3D& b) { return b.contains(points[i]); })
                     ? 1
                     : 0;
    }
    return out;
}

}  // namespace melidar
