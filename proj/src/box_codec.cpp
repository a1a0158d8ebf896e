#include "melidar/box_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "melidar/eval_metrics.hpp"

namespace melidar {

int BinCodecConfig::location_bins() const {
    return static_cast<int>(std::llround(2.0 * search_range / bin_size));
}

const MeanSize& BinCodecConfig::mean_size(int class_id) const {
    auto it = mean_sizes.find(class_id);
    if (it == mean_sizes.end()) throw ConfigError("no mean size configured for class " + class_name(class_id));
    return it->second;
}

void BinCodecConfig::validate() const {
    if (!(search_range > 0.0) || !(bin_size > 0.0)) throw ConfigError("search range and bin size must be positive");
    const double ratio = search_range / bin_size;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ConfigError("search range must be a multiple of bin size");
    if (yaw_bins < 2) throw ConfigError("need at least two orientation bins");
    for (const auto& [cls, m] : mean_sizes) {
        if (!(m[0] > 0.0 && m[1] > 0.0 && m[2] > 0.0)) throw ConfigError("mean sizes must be positive");
    }
}

BinCodecConfig codec_config_from_json(const nlohmann::json& j) {
    BinCodecConfig cfg;
    try {
        cfg.search_range = j.value("search_range", cfg.search_range);
        cfg.bin_size = j.value("bin_size", cfg.bin_size);
        cfg.yaw_bins = j.value("yaw_bins", cfg.yaw_bins);
        if (j.contains("mean_sizes")) {
            for (const auto& [name, v] : j.at("mean_sizes").items()) {
                const auto id = class_from_name(name);
                if (!id) throw ConfigError("unknown class in mean_sizes: " + name);
                cfg.mean_sizes[*id] = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad codec config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

BinCodecConfig load_codec_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return codec_config_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("codec config is not valid JSON: ") + e.what());
    }
}

namespace {

void encode_axis(double delta, const BinCodecConfig& cfg, int& bin, double& res, const char* axis) {
    if (!(std::abs(delta) < cfg.search_range)) {
        throw OutOfRangeError(std::string("offset along ") + axis + " is outside the search range");
    }
    const double shifted = delta + cfg.search_range;
    bin = std::min(static_cast<int>(std::floor(shifted / cfg.bin_size)), cfg.location_bins() - 1);
    res = (shifted - bin * cfg.bin_size - 0.5 * cfg.bin_size) / cfg.bin_size;
}

double decode_axis(int bin, double res, const BinCodecConfig& cfg, const char* axis) {
    if (bin < 0 || bin >= cfg.location_bins()) {
        throw DecodeError(std::string(axis) + " bin " + std::to_string(bin) + " out of range");
    }
    return bin * cfg.bin_size + 0.5 * cfg.bin_size + res * cfg.bin_size - cfg.search_range;
}

}  // namespace

BoxTargets encode(const OrientedBox3D& box, const Vec3& anchor, const BinCodecConfig& cfg) {
    BoxTargets t;
    const Vec3 d = box.center - anchor;
    encode_axis(d.x, cfg, t.bin_x, t.res_x, "x");
    encode_axis(d.y, cfg, t.bin_y, t.res_y, "y");

    const double width = 2.0 * kPi / cfg.yaw_bins;
    const double shifted = normalize_angle(box.yaw) + kPi;
    t.bin_yaw = std::clamp(static_cast<int>(std::floor(shifted / width)), 0, cfg.yaw_bins - 1);
    t.res_yaw = (shifted - t.bin_yaw * width - 0.5 * width) / width;

    const MeanSize& mean = cfg.mean_size(box.class_id);
    t.res_z = d.z;
    t.res_h = std::log(box.h / mean[0]);
    t.res_w = std::log(box.w / mean[1]);
    t.res_l = std::log(box.l / mean[2]);
    return t;
}

OrientedBox3D decode(const BoxTargets& t, const Vec3& anchor, int class_id, const BinCodecConfig& cfg) {
    if (t.bin_yaw < 0 || t.bin_yaw >= cfg.yaw_bins) {
        throw DecodeError("yaw bin " + std::to_string(t.bin_yaw) + " out of range");
    }
    OrientedBox3D b;
    b.class_id = class_id;
    b.center = {anchor.x + decode_axis(t.bin_x, t.res_x, cfg, "x"), anchor.y + decode_axis(t.bin_y, t.res_y, cfg, "y"),
                anchor.z + t.res_z};
    const double width = 2.0 * kPi / cfg.yaw_bins;
    b.yaw = normalize_angle(-kPi + t.bin_yaw * width + 0.5 * width + t.res_yaw * width);
    const MeanSize& mean = cfg.mean_size(class_id);
    b.h = mean[0] * std::exp(t.res_h);
    b.w = mean[1] * std::exp(t.res_w);
    b.l = mean[2] * std::exp(t.res_l);
    return b;
}

ProposalThresholds default_proposal_thresholds(int class_id) {
    if (class_id == static_cast<int>(ObjectClass::Car)) return {0.6, 0.45};
    return {0.5, 0.4};
}

std::vector<ProposalAssignment> assign_proposal_labels(std::span<const OrientedBox3D> proposals,
                                                       std::span<const OrientedBox3D> gt, int class_id,
                                                       const ProposalThresholds& thresholds) {
    std::vector<ProposalAssignment> out(proposals.size());
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        auto& a = out[i];
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (gt[g].class_id != class_id) continue;
            const double iou = iou3d(proposals[i], gt[g]);
            if (iou > a.max_iou) {
                a.max_iou = iou;
                a.matched_gt = static_cast<int>(g);
            }
        }
        if (a.max_iou >= thresholds.positive) a.label = ProposalLabel::Positive;
        else if (a.max_iou < thresholds.negative) a.label = ProposalLabel::Negative;
        else a.label = ProposalLabel::Ignored;
    }
    return out;
}

std::vector<ProposalAssignment> assign_proposal_labels(std::span<const OrientedBox3D> proposals,
                                                       std::span<const OrientedBox3D> gt, int class_id) {
    return assign_proposal_labels(proposals, gt, class_id, default_proposal_thresholds(class_id));
}

}  // namespace melidar
