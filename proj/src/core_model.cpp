#include "melidar/core_model.hpp"

#include <algorithm>
#include <sstream>

namespace melidar {

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

Mat3 Mat3::rot_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
}

Mat3 Mat3::rot_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Mat3{{1, 0, 0, 0, c, -s, 0, s, c}};
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
            r.m[static_cast<std::size_t>(i * 3 + j)] = s;
        }
    }
    return r;
}

Mat3 Mat3::transposed() const {
    return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
}

Vec3 beam_direction(double elev, double azim) {
    const double ce = std::cos(elev);
    return {ce * std::cos(azim), ce * std::sin(azim), std::sin(elev)};
}

double normalize_angle(double a) {
    double r = std::fmod(a + kPi, 2.0 * kPi);
    if (r < 0.0) r += 2.0 * kPi;
    r -= kPi;
    // fmod can land exactly on +pi after the shift for inputs just below -pi.
    if (r >= kPi) r -= 2.0 * kPi;
    return r;
}

std::size_t MultiEchoFrame::echo_count(std::size_t k) const {
    return static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(),
                                                  [k](const EchoGroup& g) { return g.echoes.size() > k; }));
}

std::size_t MultiEchoFrame::total_points() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.echoes.size();
    return n;
}

LidarImage to_lidar_image(const MultiEchoFrame& frame) {
    LidarImage img(frame.height, frame.width, 1 + frame.max_echoes);
    for (std::size_t r = 0; r < frame.height; ++r) {
        for (std::size_t c = 0; c < frame.width; ++c) {
            const auto& g = frame.at(r, c);
            img.at(r, c, 0) = static_cast<float>(g.ambient);
            const std::size_t n = std::min(g.echoes.size(), frame.max_echoes);
            for (std::size_t k = 0; k < n; ++k) img.at(r, c, 1 + k) = static_cast<float>(g.echoes[k].reflectance);
        }
    }
    return img;
}

std::string class_name(int class_id) {
    switch (class_id) {
        case static_cast<int>(ObjectClass::Car): return "Car";
        case static_cast<int>(ObjectClass::Person): return "Person";
        case static_cast<int>(ObjectClass::Cyclist): return "Cyclist";
        default: return "Class" + std::to_string(class_id);
    }
}

std::optional<int> class_from_name(const std::string& name) {
    if (name == "Car") return static_cast<int>(ObjectClass::Car);
    if (name == "Person" || name == "Pedestrian") return static_cast<int>(ObjectClass::Person);
    if (name == "Cyclist") return static_cast<int>(ObjectClass::Cyclist);
    return std::nullopt;
}

std::array<Vec3, 4> OrientedBox3D::bev_corners() const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double hl = 0.5 * l;
    const double hw = 0.5 * w;
    const std::array<std::array<double, 2>, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
    std::array<Vec3, 4> out;
    for (std::size_t i = 0; i < 4; ++i) {
        const double lx = local[i][0];
        const double ly = local[i][1];
        out[i] = {center.x + c * lx - s * ly, center.y + s * lx + c * ly, center.z};
    }
    return out;
}

bool OrientedBox3D::contains(const Vec3& p, double tol) const {
    const Vec3 d = p - center;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double lx = c * d.x + s * d.y;
    const double ly = -s * d.x + c * d.y;
    return std::abs(lx) <= 0.5 * l + tol && std::abs(ly) <= 0.5 * w + tol && std::abs(d.z) <= 0.5 * h + tol;
}

void SimConfig::validate() const {
    if (bins < 1) throw ConfigError("bins must be >= 1");
    if (!(depth_range > 0.0)) throw ConfigError("depth_range must be positive");
    if (!(sbr > 0.0)) throw ConfigError("sbr must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
    if (!(kernel_sigma > 0.0)) throw ConfigError("kernel_sigma must be positive");
    if (threshold && !(*threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
    if (!(ambient_tail_probability > 0.0 && ambient_tail_probability < 1.0)) {
        throw ConfigError("ambient_tail_probability must lie in (0, 1)");
    }
    if (max_echoes < 1) throw ConfigError("max_echoes must be >= 1");
    if (views.empty()) throw ConfigError("at least one view is required");
    for (const auto& v : views) {
        if (!(v.step_v_deg > 0.0) || !(v.step_h_deg > 0.0)) throw ConfigError("angular steps must be positive");
        if (!(v.camera.fx > 0.0) || !(v.camera.fy > 0.0)) throw ConfigError("camera focal lengths must be positive");
    }
}

std::vector<Violation> validate_frame(const MultiEchoFrame& frame) {
    std::vector<Violation> out;
    auto add = [&out](ViolationKind kind, PixelIndex px, std::size_t echo, std::string msg) {
        out.push_back({kind, px, echo, std::move(msg)});
    };

    if (frame.max_echoes < 1) add(ViolationKind::GridShape, {}, 0, "max_echoes must be >= 1");
    if (frame.groups.size() != frame.height * frame.width) {
        add(ViolationKind::GridShape, {}, 0, "group count does not match height * width");
        return out;
    }
    const bool have_rays = frame.beam_directions.size() == frame.groups.size();

    for (std::size_t r = 0; r < frame.height; ++r) {
        for (std::size_t c = 0; c < frame.width; ++c) {
            const auto& g = frame.at(r, c);
            const PixelIndex px{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
            if (!(g.pixel == px)) add(ViolationKind::PixelMismatch, px, 0, "group pixel index does not match its grid slot");
            if (g.ambient < 0.0) add(ViolationKind::NegativeValue, px, 0, "negative ambient");
            if (g.echoes.size() > frame.max_echoes) add(ViolationKind::TooManyEchoes, px, 0, "more echoes than max_echoes");
            if (g.echoes.empty()) continue;

            const Vec3 ray = have_rays ? frame.beam_directions[r * frame.width + c] : g.echoes.front().point;
            for (std::size_t k = 0; k < g.echoes.size(); ++k) {
                const Echo& e = g.echoes[k];
                if (e.reflectance < 0.0) add(ViolationKind::NegativeValue, px, k, "negative reflectance");
                if (k > 0 && e.reflectance > g.echoes[k - 1].reflectance) {
                    add(ViolationKind::Ordering, px, k, "echo stronger than its predecessor");
                }
                if (e.point.norm() > 0.0 && ray.norm() > 0.0) {
                    const double dev = angle_between(e.point, ray);
                    if (dev > kCollinearityTolerance) {
                        std::ostringstream msg;
                        msg << "echo deviates " << dev << " rad from the beam";
                        add(ViolationKind::Collinearity, px, k, msg.str());
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace melidar
