#pragma once

#include <cstdint>
#include <vector>

#include "melidar/core_model.hpp"
#include "melidar/simulator.hpp"

namespace melidar {

/// Procedural box-and-ground world seen by one forward camera at the sensor
/// origin. Depth and normals are exact (analytic ray casting).
struct ToySceneOptions {
    std::size_t width = 64;
    std::size_t height = 32;
    double fx = 32.0;
    double fy = 24.0;
    double cx = 31.5;
    double cy = 15.5;
    double sensor_height = 1.8;   ///< ground plane at z = -sensor_height
    double max_ground_range = 120.0;
    std::size_t objects = 6;
    std::uint64_t variant = 0;    ///< 0 is the bundled layout; others randomize
};

struct ToyScene {
    CameraModel camera;
    SceneInputs inputs;
    std::vector<OrientedBox3D> objects;
};

ToyScene make_toy_scene(const ToySceneOptions& opt = {});

/// Simulation config matching the default toy camera: 32 x 64 detectors.
SimConfig toy_sim_config(const CameraModel& camera);

/// Options and config for a frontal-view camera that covers the reference
/// [-20, 25] x [-70, 70] deg sensor array (225 x 1400 detectors).
ToySceneOptions frontal_scene_options(std::uint64_t variant = 0);
SimConfig frontal_sim_config(const CameraModel& camera);

}  // namespace melidar
