#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "garm/common.hpp"

namespace garm::sim {

enum class SpringKind { structural, shear, bend };

struct Spring {
    int i = 0;
    int j = 0;
    double rest_length = 0.0;   // m
    double stiffness = 0.0;     // kg/s^2 (already scaled)
    SpringKind kind = SpringKind::structural;
};

struct SpringNetwork {
    std::vector<Spring> springs;
    double max_stiffness() const;
};

struct ClothState {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::vector<double> inverse_masses;  // 1/kg, 0 while pinned
    double unpinned_inverse_mass = 0.0;  // shared rest value, masses are uniform
    int grid_rows = 0;
    int grid_cols = 0;
    std::map<int, int> pinned;  // particle index -> picker id

    int particle_count() const { return static_cast<int>(positions.size()); }
    bool consistent() const {
        return positions.size() == velocities.size() && positions.size() == inverse_masses.size();
    }
};

struct SimParams {
    double dt = 1.0 / 240.0;
    int substeps = 32;
    double gravity = -9.8;           // m/s^2, along z
    double damping = 0.997;          // per-step velocity factor, (0, 1]
    double ground_height = 0.0;      // table surface
    double ground_friction = 0.5;    // Coulomb-like tangential coefficient
    double repulsion_radius = 0.01;  // m, 0 disables
    double repulsion_stiffness = 1000.0;
    double contact_offset = 0.002;   // particles rest this far above the ground
};

struct Picker {
    int id = 0;
    Vec3 position{};
    Vec3 velocity{};  // over the last control step, used for pinned particles
    std::optional<int> attached;
};

struct TrajectoryTrace {
    struct Row {
        double t = 0.0;
        int picker = 0;
        Vec3 position{};
    };
    std::vector<Row> rows;
    std::vector<std::pair<std::string, Vec3>> waypoints;  // labeled phase boundaries
    double clock = 0.0;
};

struct Scene {
    ClothState state;
    SpringNetwork springs;
    SimParams params;
    std::array<Picker, 2> pickers{Picker{0}, Picker{1}};
    TrajectoryTrace* trace = nullptr;
};

constexpr double kDefaultStiffnessScale = 5000.0;
constexpr double kDefaultMaxGraspDistance = 0.05;
constexpr double kSettleSpeedThreshold = 0.01;  // m/s
constexpr int kSettleStepCap = 1200;

/// Flat rectangular grid of rows x cols particles in the resting plane.
/// Springs: structural (4-neighbor), shear (quad diagonals), bend (2-apart).
std::pair<ClothState, SpringNetwork> build_cloth(int rows, int cols, double spacing,
                                                 double total_mass, double stiffness,
                                                 double stiffness_scale = kDefaultStiffnessScale);

/// Same as build_cloth but only grid cells with layout[r*cols+c] != 0 become
/// particles. Shear springs need the whole quad present, bend springs the
/// middle cell, so springs never bridge silhouette gaps.
std::pair<ClothState, SpringNetwork> build_cloth_masked(
    int rows, int cols, double spacing, double total_mass, double stiffness,
    const std::vector<std::uint8_t>& layout, double stiffness_scale = kDefaultStiffnessScale,
    std::vector<int>* particle_of_cell = nullptr);

/// Semi-implicit Euler over params.substeps. Pinned particles track their
/// picker kinematically; everything else feels gravity, springs, ground
/// contact and (optionally) short-range particle repulsion.
/// Throws SimulationError when positions stop being finite.
void step(ClothState& state, const SpringNetwork& springs, const SimParams& params,
          std::span<Picker> pickers);

/// Attach the picker (moved to `target`) to the nearest particle; ties break
/// to the lowest particle index. Throws MissedGraspError beyond max_grasp_distance.
void picker_grab(ClothState& state, Picker& picker, const Vec3& target,
                 double max_grasp_distance = kDefaultMaxGraspDistance);

/// Unpin; the particle inherits the picker velocity. No-op when unattached.
void picker_release(ClothState& state, Picker& picker);

/// Drive pickers along per-picker waypoint lists, phase-synchronized (each
/// phase lasts as long as the longest segment at `speed`), stepping the
/// simulation once per control step. No collision checking between arms.
void move_pickers_through(ClothState& state, const SpringNetwork& springs,
                          const SimParams& params, std::span<Picker> pickers,
                          std::span<const std::vector<Vec3>> paths, double speed,
                          TrajectoryTrace* trace = nullptr);

/// Single-picker convenience wrapper.
void move_picker_through(ClothState& state, const SpringNetwork& springs, const SimParams& params,
                         Picker& picker, const std::vector<Vec3>& waypoints, double speed,
                         TrajectoryTrace* trace = nullptr);

/// Step until every particle is slower than `speed_threshold` or `step_cap`
/// control steps have elapsed. Returns the number of steps taken.
int settle(ClothState& state, const SpringNetwork& springs, const SimParams& params,
           std::span<Picker> pickers, double speed_threshold = kSettleSpeedThreshold,
           int step_cap = kSettleStepCap);

double max_speed(const ClothState& state);
double kinetic_energy(const ClothState& state);
double total_mass(const ClothState& state);

/// Smallest substep count keeping semi-implicit Euler stable for the stiffest
/// spring / lightest particle combination (conservative spectral bound).
int stable_substeps(double dt, double max_stiffness, double min_mass, int at_least = 1);

}  // namespace garm::sim
