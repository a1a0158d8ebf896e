#include "melidar/toy_scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace melidar {

namespace {

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 normal;
    double red = 0.0;
};

struct SceneObject {
    OrientedBox3D box;
    double red;
};

void intersect_box(const Vec3& dir, const SceneObject& obj, Hit& best) {
    const auto& b = obj.box;
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    const Vec3 o{-b.center.x, -b.center.y, -b.center.z};
    const Vec3 lo{c * o.x + s * o.y, -s * o.x + c * o.y, o.z};
    const Vec3 ld{c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
    const double half[3] = {0.5 * b.l, 0.5 * b.w, 0.5 * b.h};
    const double org[3] = {lo.x, lo.y, lo.z};
    const double d[3] = {ld.x, ld.y, ld.z};

    double tnear = -std::numeric_limits<double>::infinity();
    double tfar = std::numeric_limits<double>::infinity();
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (std::abs(org[a]) > half[a]) return;
            continue;
        }
        double t0 = (-half[a] - org[a]) / d[a];
        double t1 = (half[a] - org[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > tnear) {
            tnear = t0;
            axis = a;
        }
        tfar = std::min(tfar, t1);
    }
    if (axis < 0 || tnear > tfar || tnear <= 0.0 || tnear >= best.t) return;

    Vec3 ln;
    const double sign = d[axis] > 0.0 ? -1.0 : 1.0;
    if (axis == 0) ln = {sign, 0, 0};
    if (axis == 1) ln = {0, sign, 0};
    if (axis == 2) ln = {0, 0, sign};
    best.t = tnear;
    best.normal = {c * ln.x - s * ln.y, s * ln.x + c * ln.y, ln.z};
    best.red = obj.red;
}

std::vector<SceneObject> bundled_layout(double ground_z) {
    auto box = [ground_z](int cls, double x, double y, double yaw, double l, double w, double h) {
        OrientedBox3D b;
        b.class_id = cls;
        b.center = {x, y, ground_z + 0.5 * h};
        b.l = l;
        b.w = w;
        b.h = h;
        b.yaw = yaw;
        return b;
    };
    const int car = static_cast<int>(ObjectClass::Car);
    const int person = static_cast<int>(ObjectClass::Person);
    const int cyclist = static_cast<int>(ObjectClass::Cyclist);
    return {
        {box(car, 14.0, 3.0, 0.3, 4.4, 1.8, 1.5), 0.85},
        {box(car, 24.0, -5.0, -1.2, 4.6, 1.9, 1.6), 0.55},
        {box(person, 9.0, -1.5, 0.0, 0.6, 0.6, 1.75), 0.7},
        {box(cyclist, 18.0, 7.0, 1.5, 1.8, 0.6, 1.7), 0.45},
        {box(car, 42.0, 9.0, 0.1, 4.2, 1.8, 1.5), 0.9},
        {box(person, 31.0, 0.5, 0.5, 0.6, 0.6, 1.8), 0.6},
    };
}

std::vector<SceneObject> random_layout(std::uint64_t variant, std::size_t count, double ground_z) {
    std::mt19937_64 rng(variant);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SceneObject> objs;
    for (std::size_t attempt = 0; objs.size() < count && attempt < 200 * count; ++attempt) {
        const double pick = unit(rng);
        OrientedBox3D b;
        if (pick < 0.6) {
            b.class_id = static_cast<int>(ObjectClass::Car);
            b.l = 3.8 + unit(rng) * 1.2;
            b.w = 1.6 + unit(rng) * 0.4;
            b.h = 1.4 + unit(rng) * 0.4;
        } else if (pick < 0.85) {
            b.class_id = static_cast<int>(ObjectClass::Person);
            b.l = 0.5 + unit(rng) * 0.3;
            b.w = 0.5 + unit(rng) * 0.3;
            b.h = 1.6 + unit(rng) * 0.3;
        } else {
            b.class_id = static_cast<int>(ObjectClass::Cyclist);
            b.l = 1.6 + unit(rng) * 0.3;
            b.w = 0.5 + unit(rng) * 0.2;
            b.h = 1.6 + unit(rng) * 0.2;
        }
        const double x = 6.0 + unit(rng) * 50.0;
        const double y = (unit(rng) * 2.0 - 1.0) * 0.6 * x;
        b.center = {x, y, ground_z + 0.5 * b.h};
        b.yaw = normalize_angle((unit(rng) * 2.0 - 1.0) * kPi);
        const bool clash = std::any_of(objs.begin(), objs.end(), [&](const SceneObject& o) {
            const double dx = o.box.center.x - x;
            const double dy = o.box.center.y - y;
            return std::sqrt(dx * dx + dy * dy) < 0.5 * (o.box.l + b.l) + 0.5;
        });
        if (clash) continue;
        objs.push_back({b, 0.25 + 0.7 * unit(rng)});
    }
    return objs;
}

}  // namespace

ToyScene make_toy_scene(const ToySceneOptions& opt) {
    ToyScene scene;
    auto& cam = scene.camera;
    cam.fx = opt.fx;
    cam.fy = opt.fy;
    cam.cx = opt.cx;
    cam.cy = opt.cy;
    cam.width = opt.width;
    cam.height = opt.height;

    const double ground_z = -opt.sensor_height;
    const auto objects = opt.variant == 0 ? bundled_layout(ground_z) : random_layout(opt.variant, opt.objects, ground_z);
    for (const auto& o : objects) scene.objects.push_back(o.box);

    auto rgb = Tensor::zeros<float>({opt.height, opt.width, 3});
    auto depth = Tensor::zeros<float>({opt.height, opt.width});
    auto normals = Tensor::zeros<float>({opt.height, opt.width, 3});
    auto prgb = rgb.as<float>();
    auto pdepth = depth.as<float>();
    auto pnorm = normals.as<float>();

    for (std::size_t v = 0; v < opt.height; ++v) {
        for (std::size_t u = 0; u < opt.width; ++u) {
            // Unnormalized ray with unit forward component: t equals z-depth.
            const Vec3 dir{1.0, (static_cast<double>(u) - cam.cx) / cam.fx, (static_cast<double>(v) - cam.cy) / cam.fy};
            Hit hit;
            if (dir.z < 0.0) {
                const double t = ground_z / dir.z;
                const double gx = t * dir.x;
                const double gy = t * dir.y;
                if (std::sqrt(gx * gx + gy * gy) <= opt.max_ground_range) {
                    hit.t = t;
                    hit.normal = {0, 0, 1};
                    const bool checker = (static_cast<long>(std::floor(gx / 2.0)) + static_cast<long>(std::floor(gy / 2.0))) % 2 == 0;
                    hit.red = checker ? 0.3 : 0.4;
                }
            }
            for (const auto& o : objects) intersect_box(dir, o, hit);

            const std::size_t i = v * opt.width + u;
            if (std::isfinite(hit.t)) {
                prgb[3 * i] = static_cast<float>(hit.red);
                prgb[3 * i + 1] = static_cast<float>(0.5 * hit.red);
                prgb[3 * i + 2] = static_cast<float>(0.3);
                pdepth[i] = static_cast<float>(hit.t);
                pnorm[3 * i] = static_cast<float>(hit.normal.x);
                pnorm[3 * i + 1] = static_cast<float>(hit.normal.y);
                pnorm[3 * i + 2] = static_cast<float>(hit.normal.z);
            } else {
                // sky: bright, no surface
                prgb[3 * i] = 0.75f;
                prgb[3 * i + 1] = 0.8f;
                prgb[3 * i + 2] = 0.95f;
            }
        }
    }
    rgb.meta = {{"kind", "rgb"}, {"layout", "H,W,3"}, {"source", "toy_scene"}};
    depth.meta = {{"kind", "depth"}, {"layout", "H,W"}, {"units", "m"}, {"depth_type", "planar"}};
    normals.meta = {{"kind", "normals"}, {"layout", "H,W,3"}, {"frame", "camera"}};
    scene.inputs.rgb.push_back(std::move(rgb));
    scene.inputs.depth.push_back(std::move(depth));
    scene.inputs.normals.push_back(std::move(normals));
    return scene;
}

SimConfig toy_sim_config(const CameraModel& camera) {
    SimConfig cfg;
    ViewConfig v;
    v.fov_v_min_deg = -20.0;
    v.fov_v_max_deg = 8.0;
    v.step_v_deg = 0.875;
    v.fov_h_min_deg = -40.0;
    v.fov_h_max_deg = 40.0;
    v.step_h_deg = 1.25;
    v.camera = camera;
    cfg.views.push_back(v);
    return cfg;
}

ToySceneOptions frontal_scene_options(std::uint64_t variant) {
    ToySceneOptions o;
    o.width = 1920;
    o.height = 960;
    o.fx = 340.0;
    o.fy = 340.0;
    o.cx = 959.5;
    o.cy = 479.5;
    o.objects = 12;
    o.variant = variant;
    return o;
}

SimConfig frontal_sim_config(const CameraModel& camera) {
    SimConfig cfg;
    cfg.views.push_back(frontal_view(camera));
    return cfg;
}

}  // namespace melidar
