#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "melidar/core_model.hpp"

namespace melidar {

struct OutOfRangeError : Error {
    using Error::Error;
};
struct DecodeError : Error {
    using Error::Error;
};

/// Mean object size (h, w, l) in meters.
using MeanSize = std::array<double, 3>;

/// Bin-based box regression settings. The binned axes are the ground-plane
/// axes x and y; z is the vertical axis and is regressed directly.
struct BinCodecConfig {
    double search_range = 3.0;
    double bin_size = 0.5;
    int yaw_bins = 12;
    std::map<int, MeanSize> mean_sizes{
        {static_cast<int>(ObjectClass::Car), {1.52, 1.63, 3.88}},
        {static_cast<int>(ObjectClass::Person), {1.76, 0.66, 0.84}},
        {static_cast<int>(ObjectClass::Cyclist), {1.74, 0.60, 1.76}},
    };

    [[nodiscard]] int location_bins() const;
    [[nodiscard]] const MeanSize& mean_size(int class_id) const;
    void validate() const;
};

BinCodecConfig codec_config_from_json(const nlohmann::json& j);
BinCodecConfig load_codec_config(const std::filesystem::path& path);

struct BoxTargets {
    int bin_x = 0;
    int bin_y = 0;
    int bin_yaw = 0;
    double res_x = 0.0;    ///< normalized by bin size
    double res_y = 0.0;    ///< normalized by bin size
    double res_yaw = 0.0;  ///< normalized by the yaw bin width
    double res_z = 0.0;    ///< meters
    double res_h = 0.0;    ///< log(size / mean size)
    double res_w = 0.0;
    double res_l = 0.0;
};

BoxTargets encode(const OrientedBox3D& box, const Vec3& anchor, const BinCodecConfig& cfg);
OrientedBox3D decode(const BoxTargets& t, const Vec3& anchor, int class_id, const BinCodecConfig& cfg);

enum class ProposalLabel { Positive, Negative, Ignored };

struct ProposalThresholds {
    double positive = 0.6;  ///< max IoU >= positive
    double negative = 0.45; ///< max IoU < negative
};

ProposalThresholds default_proposal_thresholds(int class_id);

struct ProposalAssignment {
    ProposalLabel label = ProposalLabel::Negative;
    int matched_gt = -1;  ///< index into the ground-truth list, -1 when none
    double max_iou = 0.0;
};

/// Labels proposals of `class_id` against ground-truth boxes of that class.
std::vector<ProposalAssignment> assign_proposal_labels(std::span<const OrientedBox3D> proposals,
                                                       std::span<const OrientedBox3D> gt, int class_id,
                                                       const ProposalThresholds& thresholds);
std::vector<ProposalAssignment> assign_proposal_labels(std::span<const OrientedBox3D> proposals,
                                                       std::span<const OrientedBox3D> gt, int class_id);

}  // namespace melidar
