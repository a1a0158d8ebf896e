#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "melidar/polar_optics.hpp"

using namespace melidar;

namespace {

CameraModel camera(std::size_t w, std::size_t h, double f, double cx, double cy) {
    CameraModel c;
    c.width = w;
    c.height = h;
    c.fx = f;
    c.fy = f;
    c.cx = cx;
    c.cy = cy;
    return c;
}

PositionalMap single_position(double u, double v) {
    PositionalMap m;
    m.rows = 1;
    m.cols = 1;
    m.u = {u};
    m.v = {v};
    m.valid = {1};
    m.camera = {0};
    return m;
}

}  // namespace

TEST(SensorArray, FrontalCounts) {
    const auto a = build_sensor_array(deg2rad(-20), deg2rad(25), deg2rad(0.2), deg2rad(-70), deg2rad(70), deg2rad(0.1));
    EXPECT_EQ(a.rows(), 225u);
    EXPECT_EQ(a.cols(), 1400u);
    for (std::size_t i = 1; i < a.rows(); ++i) EXPECT_LT(a.elevations[i], a.elevations[i - 1]);
    for (std::size_t i = 1; i < a.cols(); ++i) EXPECT_LT(a.azimuths[i], a.azimuths[i - 1]);
    // bin centers: first and last half a step inside the span
    EXPECT_NEAR(a.elevations.front(), deg2rad(25 - 0.1), 1e-12);
    EXPECT_NEAR(a.elevations.back(), deg2rad(-20 + 0.1), 1e-12);
    EXPECT_NEAR(a.azimuths.front(), deg2rad(70 - 0.05), 1e-12);
}

TEST(SensorArray, SingleAngleAtSpanCenter) {
    const auto a = build_sensor_array(deg2rad(3), deg2rad(4), deg2rad(1), deg2rad(-1), deg2rad(0), deg2rad(1));
    ASSERT_EQ(a.rows(), 1u);
    ASSERT_EQ(a.cols(), 1u);
    EXPECT_NEAR(a.elevations[0], deg2rad(3.5), 1e-15);
    EXPECT_NEAR(a.azimuths[0], deg2rad(-0.5), 1e-15);
}

TEST(SensorArray, NonPositiveStepIsConfigError) {
    EXPECT_THROW(build_sensor_array(0, 1, 0, 0, 1, 0.1), ConfigError);
    EXPECT_THROW(build_sensor_array(0, 1, 0.1, 0, 1, -0.1), ConfigError);
}

TEST(Projection, PrincipalPoint) {
    const auto cam = camera(640, 480, 100, 320, 240);
    const auto p = project_ray(beam_direction(0, 0), cam);
    ASSERT_TRUE(p.valid);
    EXPECT_NEAR(p.u, 320, 1e-12);
    EXPECT_NEAR(p.v, 240, 1e-12);
}

TEST(Projection, PinholeAt45Degrees) {
    const auto cam = camera(640, 480, 100, 320, 240);
    const auto p = project_ray(beam_direction(0, deg2rad(45)), cam);
    ASSERT_TRUE(p.valid);
    EXPECT_NEAR(p.u, 100 * std::tan(deg2rad(45)) + 320, 1e-9);
    EXPECT_NEAR(p.v, 240, 1e-12);
}

TEST(Projection, OutsideImageOrBehindIsInvalid) {
    const auto cam = camera(640, 480, 100, 320, 240);
    EXPECT_FALSE(project_ray(beam_direction(0, deg2rad(80)), cam).valid);
    EXPECT_FALSE(project_ray(beam_direction(0, deg2rad(180)), cam).valid);
    EXPECT_FALSE(project_ray({-1, 0, 0}, cam).valid);
}

TEST(Projection, UnprojectRecoversRay) {
    auto cam = camera(1000, 800, 250, 499.5, 399.5);
    cam.rotation = Mat3::rot_z(0.3) * Mat3::rot_x(kPi);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> el(-0.6, 0.6), az(-0.6, 0.6);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 ray = beam_direction(el(rng), 0.3 + az(rng));
        const auto p = project_ray(ray, cam);
        if (!p.valid) continue;
        const Vec3 back = unproject(p.u, p.v, cam);
        EXPECT_LT((back - ray).norm(), 1e-9);
        ++checked;
    }
    EXPECT_GT(checked, 1000);
}

TEST(Projection, ClosestAxisCameraWins) {
    auto a = camera(400, 200, 100, 199.5, 99.5);
    auto b = a;
    b.rotation = Mat3::rot_z(deg2rad(60));
    SensorArray arr;
    arr.elevations = {0.0};
    arr.azimuths = {deg2rad(40), deg2rad(20)};
    const SensorArray parts[] = {arr};
    const auto rig = build_rig(parts);
    const CameraModel cams[] = {a, b};
    const auto map = project_to_cameras(rig, cams);
    ASSERT_TRUE(map.valid[0] && map.valid[1]);
    EXPECT_EQ(map.camera[0], 1u);  // 40 deg: 20 from b, 40 from a
    EXPECT_EQ(map.camera[1], 0u);  // 20 deg: closer to a
}

TEST(Resample, ConstantImageStaysConstant) {
    auto img = Tensor::zeros<float>({20, 30, 3});
    for (std::size_t i = 0; i < img.numel(); ++i) img.as<float>()[i] = i % 3 == 1 ? 2.5f : 0.75f;
    const auto cam = camera(30, 20, 10, 14.5, 9.5);
    const auto arr = build_sensor_array(deg2rad(-30), deg2rad(30), deg2rad(2), deg2rad(-60), deg2rad(60), deg2rad(2));
    const auto map = project_to_image(arr, cam);
    const auto r = resample_image(img, map);
    std::size_t valid = 0;
    for (std::size_t i = 0; i < r.rows; ++i) {
        for (std::size_t j = 0; j < r.cols; ++j) {
            if (!r.is_valid(i, j)) {
                EXPECT_EQ(r.at(i, j, 1), 0.0);
                continue;
            }
            ++valid;
            EXPECT_NEAR(r.at(i, j, 0), 0.75, 1e-12);
            EXPECT_NEAR(r.at(i, j, 1), 2.5, 1e-12);
        }
    }
    EXPECT_GT(valid, 0u);
    EXPECT_LT(valid, r.rows * r.cols);
}

TEST(Resample, BilinearCenterOfTwoByTwo) {
    auto img = Tensor::zeros<float>({2, 2});
    auto px = img.as<float>();
    px[0] = 0;
    px[1] = 1;
    px[2] = 0;
    px[3] = 1;
    const auto r = resample_image(img, single_position(0.5, 0.5));
    ASSERT_TRUE(r.is_valid(0, 0));
    EXPECT_DOUBLE_EQ(r.at(0, 0), 0.5);
    const auto q = resample_image(img, single_position(0.25, 0.0));
    EXPECT_DOUBLE_EQ(q.at(0, 0), 0.25);
}

TEST(Resample, AllMaskedGivesZeros) {
    auto img = Tensor::zeros<float>({4, 4});
    for (auto& v : img.as<float>()) v = 3.0f;
    auto map = single_position(1, 1);
    map.valid[0] = 0;
    const auto r = resample_image(img, map);
    EXPECT_EQ(r.at(0, 0), 0.0);
    EXPECT_FALSE(r.is_valid(0, 0));
}

TEST(Resample, DepthRejectsNonPositiveTaps) {
    auto img = Tensor::zeros<float>({2, 2});
    auto px = img.as<float>();
    px[0] = 10;
    px[1] = 10;
    px[2] = 10;
    px[3] = 0;  // sky
    EXPECT_FALSE(resample_image(img, single_position(0.5, 0.5), TapPolicy::RejectNonPositive).is_valid(0, 0));
    EXPECT_TRUE(resample_image(img, single_position(0.0, 0.0), TapPolicy::RejectNonPositive).is_valid(0, 0));
    EXPECT_TRUE(resample_image(img, single_position(0.5, 0.5), TapPolicy::Any).is_valid(0, 0));
}

TEST(DepthToRange, Examples) {
    const auto cam = camera(100, 100, 20, 50, 50);
    const CameraModel cams[] = {cam};
    Raster z(1, 1, 1);
    z.data[0] = 10;
    z.valid[0] = 1;
    EXPECT_DOUBLE_EQ(depth_to_range(z, single_position(50, 50), cams).data[0], 10.0);
    const auto off = depth_to_range(z, single_position(70, 50), cams);
    ASSERT_TRUE(off.valid[0]);
    EXPECT_NEAR(off.data[0], 10 * std::sqrt(2.0), 1e-12);
    z.data[0] = 0;
    EXPECT_FALSE(depth_to_range(z, single_position(50, 50), cams).valid[0]);
}

TEST(DepthToRange, RangeAtLeastDepth) {
    const auto cam = camera(64, 32, 32, 31.5, 15.5);
    const CameraModel cams[] = {cam};
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0, 63), v(0, 31), d(0.1, 100);
    for (int i = 0; i < 500; ++i) {
        Raster z(1, 1, 1);
        z.data[0] = d(rng);
        z.valid[0] = 1;
        const auto r = depth_to_range(z, single_position(u(rng), v(rng)), cams);
        EXPECT_GE(r.data[0], z.data[0]);
    }
}
