#include "melidar/polar_optics.hpp"

#include <algorithm>
#include <cmath>

namespace melidar {

namespace {

std::vector<double> centered_angles(double lo, double hi, double step, const char* axis) {
    if (!(step > 0.0)) throw ConfigError(std::string(axis) + " angular step must be positive");
    if (!(hi > lo)) throw ConfigError(std::string(axis) + " field of view must have positive span");
    const auto count = static_cast<long>(std::llround((hi - lo) / step));
    if (count < 1) throw ConfigError(std::string(axis) + " field of view is narrower than one step");
    const double mid = 0.5 * (lo + hi);
    const double first = mid + 0.5 * static_cast<double>(count - 1) * step;
    std::vector<double> out(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = first - static_cast<double>(i) * step;
    return out;
}

}  // namespace

SensorArray build_sensor_array(double fov_v_min, double fov_v_max, double step_v,
                               double fov_h_min, double fov_h_max, double step_h) {
    SensorArray a;
    a.elevations = centered_angles(fov_v_min, fov_v_max, step_v, "vertical");
    a.azimuths = centered_angles(fov_h_min, fov_h_max, step_h, "horizontal");
    return a;
}

SensorArray build_sensor_array(const ViewConfig& view) {
    return build_sensor_array(deg2rad(view.fov_v_min_deg), deg2rad(view.fov_v_max_deg), deg2rad(view.step_v_deg),
                              deg2rad(view.fov_h_min_deg), deg2rad(view.fov_h_max_deg), deg2rad(view.step_h_deg));
}

SensorRig build_rig(std::span<const SensorArray> arrays) {
    if (arrays.empty()) throw ConfigError("sensor rig needs at least one view");
    SensorRig rig;
    rig.rows = arrays.front().rows();
    for (const auto& a : arrays) {
        if (a.rows() != rig.rows) throw ConfigError("all views must have the same number of rows");
        rig.cols += a.cols();
    }
    rig.directions.resize(rig.rows * rig.cols);
    rig.column_view.reserve(rig.cols);
    std::size_t col0 = 0;
    for (std::size_t v = 0; v < arrays.size(); ++v) {
        const auto& a = arrays[v];
        for (std::size_t c = 0; c < a.cols(); ++c) rig.column_view.push_back(static_cast<std::uint32_t>(v));
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) rig.directions[r * rig.cols + col0 + c] = a.direction(r, c);
        }
        col0 += a.cols();
    }
    return rig;
}

ImagePoint project_ray(const Vec3& ray, const CameraModel& cam) {
    const Vec3 d = cam.rotation.transposed() * ray;
    ImagePoint p;
    if (!(d.x > 0.0)) return p;
    p.u = cam.fx * (d.y / d.x) + cam.cx;
    p.v = cam.fy * (d.z / d.x) + cam.cy;
    p.valid = p.u >= 0.0 && p.v >= 0.0 && p.u <= static_cast<double>(cam.width - 1) &&
              p.v <= static_cast<double>(cam.height - 1);
    return p;
}

Vec3 unproject(double u, double v, const CameraModel& cam) {
    const Vec3 d{1.0, (u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy};
    return (cam.rotation * d).normalized();
}

PositionalMap project_to_image(const SensorRig& rig, const CameraModel& cam) {
    return project_to_cameras(rig, std::span<const CameraModel>(&cam, 1));
}

PositionalMap project_to_image(const SensorArray& array, const CameraModel& cam) {
    const SensorRig rig = build_rig(std::span<const SensorArray>(&array, 1));
    return project_to_image(rig, cam);
}

PositionalMap project_to_cameras(const SensorRig& rig, std::span<const CameraModel> cams) {
    PositionalMap map;
    map.rows = rig.rows;
    map.cols = rig.cols;
    const std::size_t n = rig.rows * rig.cols;
    map.u.assign(n, 0.0);
    map.v.assign(n, 0.0);
    map.valid.assign(n, 0);
    map.camera.assign(n, 0);

    std::vector<Vec3> axes;
    axes.reserve(cams.size());
    for (const auto& c : cams) axes.push_back(c.rotation * Vec3{1, 0, 0});

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& ray = rig.directions[i];
        double best = -2.0;
        for (std::size_t k = 0; k < cams.size(); ++k) {
            const ImagePoint p = project_ray(ray, cams[k]);
            if (!p.valid) continue;
            const double cosang = axes[k].dot(ray);
            if (cosang > best) {
                best = cosang;
                map.u[i] = p.u;
                map.v[i] = p.v;
                map.valid[i] = 1;
                map.camera[i] = static_cast<std::uint32_t>(k);
            }
        }
    }
    return map;
}

Raster resample_image(std::span<const Tensor> sources, const PositionalMap& map, TapPolicy policy) {
    if (sources.empty()) throw ConfigError("resample_image needs at least one source image");
    const auto& d0 = sources.front().dims();
    if (d0.size() != 2 && d0.size() != 3) throw ConfigError("source image must be [h, w] or [h, w, C]");
    const std::size_t channels = d0.size() == 3 ? static_cast<std::size_t>(d0[2]) : 1;
    for (const auto& s : sources) {
        const std::size_t ch = s.ndim() == 3 ? static_cast<std::size_t>(s.dims()[2]) : 1;
        if ((s.ndim() != 2 && s.ndim() != 3) || ch != channels) throw ConfigError("source images disagree in layout");
    }

    Raster out(map.rows, map.cols, channels);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (!map.valid[i]) continue;
        const std::size_t cam = sources.size() == 1 ? 0 : map.camera[i];
        if (cam >= sources.size()) continue;
        const Tensor& src = sources[cam];
        const auto h = static_cast<std::size_t>(src.dims()[0]);
        const auto w = static_cast<std::size_t>(src.dims()[1]);
        const auto px = src.as<float>();

        const double u = map.u[i];
        const double v = map.v[i];
        if (!(u >= 0.0 && v >= 0.0 && u <= static_cast<double>(w - 1) && v <= static_cast<double>(h - 1))) continue;
        const auto x0 = static_cast<std::size_t>(std::floor(u));
        const auto y0 = static_cast<std::size_t>(std::floor(v));
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double ax = u - static_cast<double>(x0);
        const double ay = v - static_cast<double>(y0);
        const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
        const std::size_t taps[4] = {y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1};

        bool ok = true;
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double acc = 0.0;
            for (int t = 0; t < 4; ++t) {
                const double val = px[taps[t] * channels + ch];
                if (policy == TapPolicy::RejectNonPositive && wts[t] > 0.0 && !(val > 0.0 && std::isfinite(val))) {
                    ok = false;
                }
                acc += wts[t] * val;
            }
            out.data[i * channels + ch] = acc;
        }
        if (!ok) {
            for (std::size_t ch = 0; ch < channels; ++ch) out.data[i * channels + ch] = 0.0;
            continue;
        }
        out.valid[i] = 1;
    }
    return out;
}

Raster resample_image(const Tensor& source, const PositionalMap& map, TapPolicy policy) {
    return resample_image(std::span<const Tensor>(&source, 1), map, policy);
}

Raster depth_to_range(const Raster& zdepth, const PositionalMap& map, std::span<const CameraModel> cams) {
    Raster out(zdepth.rows, zdepth.cols, 1);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (!map.valid[i] || !zdepth.valid[i]) continue;
        const double z = zdepth.data[i * zdepth.channels];
        if (!(z > 0.0) || !std::isfinite(z)) continue;
        const CameraModel& cam = cams[cams.size() == 1 ? 0 : map.camera[i]];
        const double a = (map.u[i] - cam.cx) / cam.fx;
        const double b = (map.v[i] - cam.cy) / cam.fy;
        out.data[i] = z * std::sqrt(1.0 + a * a + b * b);
        out.valid[i] = 1;
    }
    return out;
}

}  // namespace melidar
