#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "garm/garments.hpp"
#include "garm/metrics.hpp"

namespace garm::fold {

struct FoldStep {
    std::vector<Vec2> picks;   // 1-2 world points, table plane
    std::vector<Vec2> places;  // matching
};

struct FoldPlan {
    garment::Category category = garment::Category::square;
    std::vector<FoldStep> steps;
};

/// Keypoint-heuristic fold plans.
/// long sleeve: each cuff folds across its shoulder->waist line, then a
/// dual-arm half fold maps the shoulders onto the waist keypoints.
/// pants/skirt: dual-arm fold of the bottom keypoints onto the waist, then
/// the waist points fold 3/4 of the way back toward the bottom keypoints.
/// Returns nullopt when a required keypoint is missing or occluded.
std::optional<FoldPlan> plan_fold(garment::Category category,
                                  const std::map<std::string, percept::Keypoint>& keypoints,
                                  double table_extent = 1.53);

struct FoldTarget {
    std::vector<Vec3> positions;
    MaskGrid mask;
};

/// Geometric oracle: apply each step to the canonical pose as a reflection
/// across the perpendicular bisector of pick->place; moved particles stack
/// 2 x thickness higher per fold.
FoldTarget fold_target(const garment::GarmentTemplate& tmpl, const FoldPlan& plan,
                       double cloth_thickness = 0.002);

struct FoldScore {
    double mean_distance = 0.0;  // m, after 2D centroid alignment
    bool success = false;        // mean < threshold
};

FoldScore fold_success(const sim::ClothState& final_state, const FoldTarget& target,
                       double threshold = 0.03);

Vec2 reflect_across_line(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace garm::fold
