#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "garm/cloth_sim.hpp"
#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::garment {

enum class Category { long_sleeve, pants, skirt, square };

const char* category_name(Category c);
Category category_from_name(const std::string& name);

/// Procedural garment silhouette on a bounding particle grid, plus everything
/// the metrics need: canonical flat pose, goal mask, goal keypoints, C_max.
struct GarmentTemplate {
    Category category = Category::square;
    double scale = 1.0;        // m, longest silhouette dimension
    double resolution = 50.0;  // particles per meter
    double spacing = 0.02;
    int grid_rows = 0;
    int grid_cols = 0;
    std::vector<std::uint8_t> layout;       // bounding-grid cells in the garment
    std::vector<int> particle_of_cell;      // cell -> particle index or -1
    std::map<std::string, int> keypoint_indices;
    std::vector<Vec3> canonical_positions;  // flat on the table, centered

    percept::CameraConfig camera;  // camera the stored goal data was built for
    MaskGrid goal_mask;            // m_gt
    std::map<std::string, Vec2> goal_keypoints_world;
    std::map<std::string, Vec2> goal_keypoints_px;
    int c_max_pixels = 0;
    double c_max_area_m2 = 0.0;

    int particle_count() const { return static_cast<int>(canonical_positions.size()); }
    int keypoint_count() const { return static_cast<int>(keypoint_indices.size()); }
};

struct CrumpleConfig {
    double drop_height_min = 0.6;  // m
    double drop_height_max = 1.6;
    double translate_max = 0.25;   // m
    int settle_steps = 1200;
    double lift_speed = 1.5;       // m/s
};

struct PhysicsSample {
    double total_mass = 0.5;  // kg, sampled from [0.2, 2.0]
    double stiffness = 0.9;   // kg/s^2, sampled from [0.85, 0.95]
};

constexpr double kMassMin = 0.2, kMassMax = 2.0;
constexpr double kStiffnessMin = 0.85, kStiffnessMax = 0.95;

/// Connected silhouette with keypoints at the silhouette extremes; rejects
/// under-resolved grids (< 8 particles across the narrowest feature).
GarmentTemplate make_template(Category category, double scale, double resolution,
                              const percept::CameraConfig& camera = {},
                              double table_width = 1.53);

PhysicsSample sample_physics(std::uint64_t seed);

/// Cloth + springs + stable integrator params for this template and physics.
sim::Scene make_scene(const GarmentTemplate& tmpl, const PhysicsSample& physics,
                      const sim::SimParams& base = {},
                      double stiffness_scale = sim::kDefaultStiffnessScale);

/// Randomized rotate - grasp - lift - drop - translate initialization.
/// Deterministic for a fixed seed. Records the resulting coverage when asked.
sim::Scene crumple_init(const GarmentTemplate& tmpl, const PhysicsSample& physics,
                        std::uint64_t seed, const CrumpleConfig& config = {},
                        const sim::SimParams& base = {},
                        double stiffness_scale = sim::kDefaultStiffnessScale,
                        double* coverage_out = nullptr);

struct GoalTemplate {
    MaskGrid mask;
    std::map<std::string, Vec2> keypoints_world;
    std::map<std::string, Vec2> keypoints_px;
    int mask_pixels = 0;
};

/// Rasterize the canonical pose with an arbitrary camera.
GoalTemplate goal_template(const GarmentTemplate& tmpl, const percept::CameraConfig& camera);

}  // namespace garm::garment
