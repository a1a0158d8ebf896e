#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace melidar {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small geometry helpers
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr bool operator==(const Vec3&) const = default;

    [[nodiscard]] constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    [[nodiscard]] double norm() const { return std::sqrt(dot(*this)); }
    [[nodiscard]] Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? *this * (1.0 / n) : Vec3{};
    }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Angle between two non-zero vectors, numerically stable near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

/// Row-major 3x3 rotation.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 rot_z(double angle);
    static Mat3 rot_x(double angle);

    [[nodiscard]] double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
    [[nodiscard]] Vec3 operator*(const Vec3& v) const;
    [[nodiscard]] Mat3 operator*(const Mat3& o) const;
    [[nodiscard]] Mat3 transposed() const;
};

struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// Unit beam direction for elevation `elev` (from the xy-plane) and azimuth
/// `azim` (in the xy-plane from +x). x forward, y left, z up.
Vec3 beam_direction(double elev, double azim);

constexpr double kPi = std::numbers::pi;

/// Wraps an angle into [-pi, pi).
double normalize_angle(double a);

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }

// ---------------------------------------------------------------------------
// Echo groups and frames
// ---------------------------------------------------------------------------

struct Echo {
    Vec3 point;
    double reflectance = 0.0;
    std::uint32_t bin = 0;   ///< time bin the return was extracted from
    double strength = 0.0;   ///< aggregated photon count of that bin
};

struct PixelIndex {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    constexpr bool operator==(const PixelIndex&) const = default;
};

/// Returns of one laser beam, strongest first, plus the ambient value the
/// detector saw for that beam.
struct EchoGroup {
    std::vector<Echo> echoes;
    double ambient = 0.0;
    PixelIndex pixel;
};

struct MultiEchoFrame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t max_echoes = 1;
    double bin_width = 0.0;
    RigidTransform sensor_pose;
    std::vector<EchoGroup> groups;        ///< row-major, height * width
    std::vector<Vec3> beam_directions;    ///< row-major unit rays, may be empty

    [[nodiscard]] const EchoGroup& at(std::size_t row, std::size_t col) const { return groups[row * width + col]; }
    [[nodiscard]] EchoGroup& at(std::size_t row, std::size_t col) { return groups[row * width + col]; }

    /// Number of points stored in echo slot `k` over the whole frame.
    [[nodiscard]] std::size_t echo_count(std::size_t k) const;
    [[nodiscard]] std::size_t total_points() const;
};

/// Dense [H, W, 1+K] image: channel 0 ambient, channels 1..K reflectance.
struct LidarImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<float> data;

    LidarImage() = default;
    LidarImage(std::size_t h, std::size_t w, std::size_t c) : height(h), width(w), channels(c), data(h * w * c, 0.0f) {}

    [[nodiscard]] float at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * width + c) * channels + ch]; }
    float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * width + c) * channels + ch]; }
};

/// Builds the LiDAR image of a frame (ambient + K reflectance channels).
LidarImage to_lidar_image(const MultiEchoFrame& frame);

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

enum class ObjectClass : int { Car = 0, Person = 1, Cyclist = 2 };

std::string class_name(int class_id);
/// Parses "Car", "Person" (alias "Pedestrian") or "Cyclist".
std::optional<int> class_from_name(const std::string& name);

/// Box with center (cx, cy, cz), height along z, width along the lateral
/// axis and length along the heading; yaw is the heading about +z from +x.
struct OrientedBox3D {
    Vec3 center;
    double h = 1.0;
    double w = 1.0;
    double l = 1.0;
    double yaw = 0.0;
    int class_id = 0;
    std::optional<double> score;

    /// Optional KITTI-style annotations used by the KITTI difficulty mode.
    std::optional<double> bbox_height_px;
    std::optional<int> occlusion;
    std::optional<double> truncation;

    [[nodiscard]] double volume() const { return h * w * l; }
    /// BEV footprint corners, counter-clockwise.
    [[nodiscard]] std::array<Vec3, 4> bev_corners() const;
    /// Inclusive containment with an absolute tolerance in meters.
    [[nodiscard]] bool contains(const Vec3& p, double tol = 1e-9) const;
};

// ---------------------------------------------------------------------------
// Simulation configuration
// ---------------------------------------------------------------------------

struct CameraModel {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    std::size_t width = 1;
    std::size_t height = 1;
    /// Camera-to-sensor rotation. The camera looks along its own +x axis;
    /// image u grows with camera +y and v grows with camera +z.
    Mat3 rotation;
};

struct ViewConfig {
    double fov_v_min_deg = -20.0;
    double fov_v_max_deg = 25.0;
    double step_v_deg = 0.2;
    double fov_h_min_deg = -70.0;
    double fov_h_max_deg = 70.0;
    double step_h_deg = 0.1;
    CameraModel camera;
};

struct SimConfig {
    std::uint32_t bins = 10240;
    double depth_range = 1000.0;
    double sbr = 200.0;
    std::size_t kernel_size = 5;
    double kernel_sigma = 1.0;
    /// Detection threshold in photons; unset means derive it from the
    /// ambient tail bound.
    std::optional<double> threshold;
    double ambient_tail_probability = 1e-9;
    std::size_t nms_window = 3;
    std::size_t max_echoes = 3;
    std::uint64_t seed = 0;
    std::size_t threads = 0;   ///< 0 = hardware concurrency
    std::vector<ViewConfig> views;

    [[nodiscard]] double bin_width() const { return depth_range / static_cast<double>(bins); }
    /// Throws ConfigError on the first broken invariant.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind { Ordering, Collinearity, NegativeValue, PixelMismatch, TooManyEchoes, GridShape };

struct Violation {
    ViolationKind kind;
    PixelIndex pixel;
    std::size_t echo = 0;
    std::string message;
};

constexpr double kCollinearityTolerance = 1e-6;

/// Lists every broken EchoGroup / frame invariant. Empty means valid.
std::vector<Violation> validate_frame(const MultiEchoFrame& frame);

}  // namespace melidar
