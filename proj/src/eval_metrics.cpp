#include "melidar/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace melidar {

double polygon_area(std::span<const Vec3> poly) {
    if (poly.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& p = poly[i];
        const Vec3& q = poly[(i + 1) % poly.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return 0.5 * twice;
}

namespace {

/// Signed distance-like test: > 0 left of the directed edge a->b.
double side(const Vec3& a, const Vec3& b, const Vec3& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec3 edge_intersection(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b) {
    const double sp = side(a, b, p);
    const double sq = side(a, b, q);
    const double t = sp / (sp - sq);
    return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y), 0.0};
}

}  // namespace

std::vector<Vec3> clip_convex(std::span<const Vec3> subject, std::span<const Vec3> clip) {
    std::vector<Vec3> out(subject.begin(), subject.end());
    std::vector<Vec3> in;
    for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
        const Vec3& a = clip[e];
        const Vec3& b = clip[(e + 1) % clip.size()];
        in.swap(out);
        out.clear();
        for (std::size_t i = 0; i < in.size(); ++i) {
            const Vec3& cur = in[i];
            const Vec3& prev = in[(i + in.size() - 1) % in.size()];
            const bool cur_in = side(a, b, cur) >= 0.0;
            const bool prev_in = side(a, b, prev) >= 0.0;
            if (cur_in) {
                if (!prev_in) out.push_back(edge_intersection(prev, cur, a, b));
                out.push_back(cur);
            } else if (prev_in) {
                out.push_back(edge_intersection(prev, cur, a, b));
            }
        }
    }
    return out;
}

double bev_intersection(const OrientedBox3D& a, const OrientedBox3D& b) {
    const auto pa = a.bev_corners();
    const auto pb = b.bev_corners();
    const auto poly = clip_convex(pa, pb);
    return std::max(0.0, polygon_area(poly));
}

double iou3d(const OrientedBox3D& a, const OrientedBox3D& b) {
    const double za0 = a.center.z - 0.5 * a.h;
    const double za1 = a.center.z + 0.5 * a.h;
    const double zb0 = b.center.z - 0.5 * b.h;
    const double zb1 = b.center.z + 0.5 * b.h;
    const double dz = std::min(za1, zb1) - std::max(za0, zb0);
    if (dz <= 0.0) return 0.0;
    const double inter = bev_intersection(a, b) * dz;
    const double uni = a.volume() + b.volume() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::string difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Moderate: return "moderate";
        case Difficulty::Hard: return "hard";
        case Difficulty::Excluded: return "excluded";
    }
    return "excluded";
}

Difficulty difficulty_from_name(const std::string& name) {
    if (name == "easy") return Difficulty::Easy;
    if (name == "moderate") return Difficulty::Moderate;
    if (name == "hard") return Difficulty::Hard;
    throw ConfigError("unknown difficulty '" + name + "'");
}

Difficulty depth_difficulty(double range) {
    if (range < 40.0) return Difficulty::Easy;
    if (range < 80.0) return Difficulty::Moderate;
    if (range <= 200.0) return Difficulty::Hard;
    return Difficulty::Excluded;
}

namespace {

struct KittiLevel {
    double min_height;
    int max_occlusion;
    double max_truncation;
};

constexpr KittiLevel kKittiLevels[3] = {{40.0, 0, 0.15}, {25.0, 1, 0.30}, {25.0, 2, 0.50}};

bool meets(const OrientedBox3D& b, const KittiLevel& lvl) {
    const double height = b.bbox_height_px.value_or(std::numeric_limits<double>::infinity());
    return height >= lvl.min_height && b.occlusion.value_or(0) <= lvl.max_occlusion &&
           b.truncation.value_or(0.0) <= lvl.max_truncation;
}

}  // namespace

Difficulty difficulty(const OrientedBox3D& box, DifficultyMode mode) {
    if (mode == DifficultyMode::Depth) return depth_difficulty(box.center.norm());
    for (int i = 0; i < 3; ++i) {
        if (meets(box, kKittiLevels[i])) return static_cast<Difficulty>(i);
    }
    return Difficulty::Excluded;
}

bool counts_for(const OrientedBox3D& box, Difficulty level, DifficultyMode mode) {
    if (level == Difficulty::Excluded) return false;
    if (mode == DifficultyMode::Depth) return difficulty(box, mode) == level;
    return meets(box, kKittiLevels[static_cast<int>(level)]);
}

double interpolated_ap(std::span<const double> precision, std::span<const double> recall) {
    // suffix maximum of precision, so interpolation at r is max over recall >= r
    std::vector<double> best(precision.size());
    double run = 0.0;
    for (std::size_t i = precision.size(); i-- > 0;) {
        run = std::max(run, precision[i]);
        best[i] = run;
    }
    double sum = 0.0;
    for (std::size_t k = 1; k <= kRecallPoints; ++k) {
        const double r = static_cast<double>(k) / static_cast<double>(kRecallPoints);
        // small slack so that recall 1/3 etc. compare as intended
        auto it = std::find_if(recall.begin(), recall.end(), [r](double x) { return x >= r - 1e-12; });
        if (it == recall.end()) continue;
        sum += best[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / static_cast<double>(kRecallPoints);
}

ApResult average_precision(std::span<const EvalFrame> frames, int class_id, double iou_threshold,
                           Difficulty level, DifficultyMode mode) {
    ApResult res;
    struct Det {
        std::size_t frame;
        std::size_t index;
        double score;
    };
    std::vector<Det> dets;
    std::vector<std::vector<std::uint8_t>> matched(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        matched[f].assign(frames[f].gt.size(), 0);
        for (const auto& g : frames[f].gt) {
            if (g.class_id == class_id && counts_for(g, level, mode)) ++res.num_gt;
        }
        for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
            const auto& d = frames[f].detections[i];
            if (d.class_id != class_id) continue;
            dets.push_back({f, i, d.score.value_or(1.0)});
        }
    }
    res.num_det = dets.size();
    std::stable_sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) { return a.score > b.score; });

    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const auto& d : dets) {
        const auto& frame = frames[d.frame];
        const auto& det = frame.detections[d.index];
        int best = -1;
        double best_iou = iou_threshold;
        for (std::size_t g = 0; g < frame.gt.size(); ++g) {
            if (frame.gt[g].class_id != class_id || matched[d.frame][g]) continue;
            const double iou = iou3d(det, frame.gt[g]);
            if (iou >= best_iou && (best < 0 || iou > best_iou)) {
                best = static_cast<int>(g);
                best_iou = iou;
            }
        }
        if (best >= 0) {
            matched[d.frame][static_cast<std::size_t>(best)] = 1;
            if (counts_for(frame.gt[static_cast<std::size_t>(best)], level, mode)) {
                ++tp;
            } else {
                ++res.ignored;
                continue;
            }
        } else if (counts_for(det, level, mode) || mode == DifficultyMode::Kitti) {
            ++fp;
        } else {
            ++res.ignored;
            continue;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(res.num_gt > 0 ? static_cast<double>(tp) / static_cast<double>(res.num_gt) : 0.0);
    }
    res.true_positives = tp;
    res.false_positives = fp;
    res.ap = res.num_gt == 0 ? std::numeric_limits<double>::quiet_NaN() : interpolated_ap(precision, recall);
    return res;
}

std::vector<double> default_iou_thresholds(int class_id) {
    switch (class_id) {
        case static_cast<int>(ObjectClass::Car): return {0.7, 0.5};
        case static_cast<int>(ObjectClass::Person): return {0.5, 0.25};
        default: return {0.5};
    }
}

}  // namespace melidar
