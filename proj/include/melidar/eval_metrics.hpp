#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "melidar/core_model.hpp"

namespace melidar {

/// Area of a simple polygon (shoelace), positive for counter-clockwise.
double polygon_area(std::span<const Vec3> poly);

/// Sutherland-Hodgman: clips `subject` by the convex counter-clockwise `clip`.
std::vector<Vec3> clip_convex(std::span<const Vec3> subject, std::span<const Vec3> clip);

/// BEV footprint intersection area of two yawed boxes.
double bev_intersection(const OrientedBox3D& a, const OrientedBox3D& b);

/// Oriented 3D IoU: BEV intersection times vertical overlap over the union.
double iou3d(const OrientedBox3D& a, const OrientedBox3D& b);

enum class Difficulty { Easy, Moderate, Hard, Excluded };
enum class DifficultyMode {
    Depth,  ///< range bins [0, 40), [40, 80), [80, 200]; beyond is excluded
    Kitti   ///< 2D height / occlusion / truncation levels, cumulative
};

std::string difficulty_name(Difficulty d);
Difficulty difficulty_from_name(const std::string& name);

/// Depth-mode difficulty of an object at the given range from the sensor.
Difficulty depth_difficulty(double range);

/// Difficulty of a box (range of its center in depth mode).
Difficulty difficulty(const OrientedBox3D& box, DifficultyMode mode = DifficultyMode::Depth);

/// Whether a box counts for the evaluated level. Depth mode bins are
/// disjoint; KITTI levels are cumulative (moderate includes easy).
bool counts_for(const OrientedBox3D& box, Difficulty level, DifficultyMode mode);

struct EvalFrame {
    std::vector<OrientedBox3D> gt;
    std::vector<OrientedBox3D> detections;  ///< score defaults to 1 when absent
};

constexpr std::size_t kRecallPoints = 40;

struct ApResult {
    double ap = 0.0;             ///< NaN when no ground truth counts
    std::size_t num_gt = 0;      ///< ground-truth objects at this level
    std::size_t num_det = 0;     ///< detections of the class
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t ignored = 0;
};

/// Interpolated AP at 40 equally spaced recall levels.
ApResult average_precision(std::span<const EvalFrame> frames, int class_id, double iou_threshold,
                           Difficulty level, DifficultyMode mode = DifficultyMode::Depth);

/// Mean of interpolated precision over recall levels 1/40 .. 40/40, given a
/// precision/recall curve ordered by descending score.
double interpolated_ap(std::span<const double> precision, std::span<const double> recall);

/// Evaluation IoU thresholds used for a class: Car {0.7, 0.5},
/// Person {0.5, 0.25}, Cyclist {0.5}.
std::vector<double> default_iou_thresholds(int class_id);

}  // namespace melidar
