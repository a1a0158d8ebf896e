#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "melidar/core_model.hpp"
#include "melidar/tensor_io.hpp"

namespace melidar {

/// Detector layout in polar coordinates. Row 0 is the highest elevation and
/// column 0 the largest azimuth, so the LiDAR image reads like a photo.
struct SensorArray {
    std::vector<double> elevations;  ///< radians, strictly decreasing
    std::vector<double> azimuths;    ///< radians, strictly decreasing

    [[nodiscard]] std::size_t rows() const { return elevations.size(); }
    [[nodiscard]] std::size_t cols() const { return azimuths.size(); }
    [[nodiscard]] Vec3 direction(std::size_t row, std::size_t col) const {
        return beam_direction(elevations[row], azimuths[col]);
    }
};

/// Angles in radians. Counts are round(span / step); angles sit at bin centers.
SensorArray build_sensor_array(double fov_v_min, double fov_v_max, double step_v,
                               double fov_h_min, double fov_h_max, double step_h);

SensorArray build_sensor_array(const ViewConfig& view);

/// Concatenates arrays along the column axis. All parts must share their rows.
struct SensorRig {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Vec3> directions;         ///< row-major unit rays
    std::vector<std::uint32_t> column_view;  ///< owning view of each column

    [[nodiscard]] const Vec3& direction(std::size_t row, std::size_t col) const { return directions[row * cols + col]; }
};

SensorRig build_rig(std::span<const SensorArray> arrays);

struct ImagePoint {
    double u = 0.0;
    double v = 0.0;
    bool valid = false;
};

/// Pinhole projection of a sensor-frame ray. Rays behind the camera or
/// landing outside [0, width-1] x [0, height-1] are invalid.
ImagePoint project_ray(const Vec3& ray, const CameraModel& cam);

/// Unit sensor-frame ray through pixel (u, v).
Vec3 unproject(double u, double v, const CameraModel& cam);

/// Per-detector sample positions in camera image space (the A_2D map).
struct PositionalMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<std::uint8_t> valid;
    std::vector<std::uint32_t> camera;  ///< camera index each position samples

    [[nodiscard]] std::size_t size() const { return rows * cols; }
};

PositionalMap project_to_image(const SensorArray& array, const CameraModel& cam);
PositionalMap project_to_image(const SensorRig& rig, const CameraModel& cam);

/// Picks, per ray, the camera whose optical axis is angularly closest among
/// those that see the ray.
PositionalMap project_to_cameras(const SensorRig& rig, std::span<const CameraModel> cams);

/// Resampled image in detector layout.
struct Raster {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 1;
    std::vector<double> data;
    std::vector<std::uint8_t> valid;

    Raster() = default;
    Raster(std::size_t r, std::size_t c, std::size_t ch)
        : rows(r), cols(c), channels(ch), data(r * c * ch, 0.0), valid(r * c, 0) {}

    [[nodiscard]] double at(std::size_t r, std::size_t c, std::size_t ch = 0) const { return data[(r * cols + c) * channels + ch]; }
    double& at(std::size_t r, std::size_t c, std::size_t ch = 0) { return data[(r * cols + c) * channels + ch]; }
    [[nodiscard]] bool is_valid(std::size_t r, std::size_t c) const { return valid[r * cols + c] != 0; }
};

enum class TapPolicy {
    Any,              ///< plain bilinear
    RejectNonPositive ///< invalid if any contributing tap is <= 0 or non-finite (depth)
};

/// Bilinear resampling of f32 [h, w] or [h, w, C] images. `sources` is
/// indexed by the map's camera index; a single source serves every camera.
Raster resample_image(std::span<const Tensor> sources, const PositionalMap& map, TapPolicy policy = TapPolicy::Any);
Raster resample_image(const Tensor& source, const PositionalMap& map, TapPolicy policy = TapPolicy::Any);

/// Planar z-depth to radial range along each ray.
Raster depth_to_range(const Raster& zdepth, const PositionalMap& map, std::span<const CameraModel> cams);

}  // namespace melidar
