#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "melidar/core_model.hpp"
#include "melidar/echo_extract.hpp"
#include "melidar/photon_sim.hpp"
#include "melidar/polar_optics.hpp"
#include "melidar/tensor_io.hpp"

namespace melidar {

/// Camera images, one entry per configured view camera. RGB is f32
/// [h, w, 3], depth f32 [h, w] planar z, normals f32 [h, w, 3] unit vectors
/// in the camera frame.
struct SceneInputs {
    std::vector<Tensor> rgb;
    std::vector<Tensor> depth;
    std::vector<Tensor> normals;
};

/// Splits a [V, h, w, ...] tensor into V views; lower-rank tensors pass through.
std::vector<Tensor> split_views(const Tensor& t, std::size_t image_rank);

enum class HistogramPath {
    Sparse,  ///< production path, never materializes [H, W, N]
    Dense    ///< reference oracle, materializes the full histogram
};

struct SimulationResult {
    MultiEchoFrame frame;
    LidarImage image;
    Raster ambient;      ///< resampled R channel, the ambient image
    RateField rates;
    double threshold = 0.0;
    SensorRig rig;
};

SimulationResult simulate(const SceneInputs& inputs, const SimConfig& cfg,
                          HistogramPath path = HistogramPath::Sparse);

/// Threshold used by a run: the configured one or the ambient tail bound.
double effective_threshold(const SimConfig& cfg, const RateField& rates);

// Output tensors.
Tensor ambient_tensor(const MultiEchoFrame& frame);            ///< [H, W]
Tensor reflectance_tensor(const MultiEchoFrame& frame);        ///< [H, W, K]
Tensor point_cloud_tensor(const MultiEchoFrame& frame);        ///< [H, W, K, 5]
Tensor lidar_image_tensor(const LidarImage& image);            ///< [H, W, 1+K]

/// Rebuilds echo groups from a [H, W, K, 5] cloud plus [H, W] ambient.
MultiEchoFrame frame_from_tensors(const Tensor& cloud, const Tensor* ambient);

void write_simulation(const std::filesystem::path& out_dir, const SimulationResult& result);

// Configuration as JSON.
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {});
nlohmann::json sim_config_to_json(const SimConfig& cfg);
SimConfig load_sim_config(const std::filesystem::path& path);

/// Frontal view used by the reference sensor: [-20, 25] deg at 0.2 deg by
/// [-70, 70] deg at 0.1 deg.
ViewConfig frontal_view(const CameraModel& camera);

}  // namespace melidar
