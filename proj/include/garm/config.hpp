#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "garm/trainer.hpp"

namespace garm::harness {

/// Flat run configuration; one field per [section] key=value entry. Units are
/// spelled out in key names. Unknown keys are rejected, every violation is
/// reported at once.
struct RunConfig {
    // [run]
    std::uint64_t seed = 0;
    std::string category = "long_sleeve";
    std::string variant = "full";
    int trials = 50;
    std::string out_dir = "out";

    // [camera]
    int image_dim = 128;
    double world_extent_m = 1.53;
    double splat_radius_px = 2.0;

    // [arms]
    double table_width_m = 1.53;
    double reach_m = 0.85;

    // [sim]
    double dt_s = 1.0 / 240.0;
    int substeps = 32;
    double gravity_mps2 = -9.8;
    double damping = 0.997;
    double ground_friction = 0.5;
    double repulsion_stiffness = 1000.0;
    double contact_offset_m = 0.002;

    // [garment]
    double garment_scale_m = 1.0;
    double garment_resolution_per_m = 50.0;
    double garment_mass_kg = 0.0;    // 0 samples from [0.2, 2.0] per episode
    double garment_stiffness = 0.0;  // 0 samples from [0.85, 0.95] per episode
    double stiffness_scale = 5000.0;

    // [crumple]
    double drop_height_min_m = 0.6;
    double drop_height_max_m = 1.6;
    double translate_max_m = 0.25;
    int settle_steps = 1200;

    // [fling]
    double fling_lift_height_m = 0.45;
    double fling_forward_m = 0.35;
    double fling_backward_m = 0.60;
    double fling_place_height_m = 0.05;
    bool fling_stretch = true;
    double fling_speed_lift_mps = 0.5;
    double fling_speed_forward_mps = 2.0;
    double fling_speed_back_mps = 2.0;
    double fling_speed_place_mps = 0.8;

    // [pnp]
    double pnp_lift_height_m = 0.15;
    double pnp_speed_mps = 0.5;

    // [fold]
    double fold_lift_height_m = 0.10;
    double fold_speed_mps = 0.4;
    double fold_thickness_m = 0.002;
    double fold_success_threshold_m = 0.03;

    // [policy]
    int rotations = 16;
    std::vector<double> scales{0.75, 1.0, 1.5, 2.0, 2.5};
    int grasp_halfwidth_px = 16;
    double aom_delta_px = 5.0;
    bool use_aom = true;

    // [reward]
    double alpha = 0.2;
    double beta = 0.4;

    // [train]
    double learning_rate = 1e-3;
    std::int64_t total_steps = 2000;
    int batch_size = 64;
    int replay_capacity = 20000;
    double epsilon_initial = 1.0;
    double epsilon_half_life_steps = 5000.0;
    std::int64_t checkpoint_every_steps = 500;
    int max_episode_steps = 10;
    double smooth_coverage = 0.85;
    double smooth_iou = 0.7;

    // [export]
    double export_coverage_threshold = 0.8;
    int export_episodes = 20;
};

/// Parse the key=value text; throws ConfigError listing every problem.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical serialization (fixed section/key order, full double precision).
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

/// FNV-1a hash of the canonical serialization.
std::uint64_t config_fingerprint(const RunConfig& cfg);

/// Throws ConfigError listing every violated constraint.
void validate_config(const RunConfig& cfg);

learn::EnvConfig to_env_config(const RunConfig& cfg);
learn::TrainConfig to_train_config(const RunConfig& cfg);

}  // namespace garm::harness
