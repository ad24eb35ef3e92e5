#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "garm/action_mask.hpp"
#include "garm/garments.hpp"
#include "garm/metrics.hpp"
#include "garm/policy.hpp"
#include "garm/primitives.hpp"
#include "garm/replay.hpp"
#include "garm/reward.hpp"
#include "garm/value_model.hpp"

namespace garm::learn {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::int64_t total_steps = 0;
    double epsilon_initial = 1.0;
    double epsilon_half_life = 5000.0;  // steps
    int batch_size = 64;
    int replay_capacity = 20000;
    std::int64_t checkpoint_every = 500;
    int max_episode_steps = 10;
    double smooth_coverage = 0.85;
    double smooth_iou = 0.7;
    std::uint64_t seed = 0;
};

/// epsilon_initial * 0.5^(step / half_life)
double epsilon(std::int64_t step, const TrainConfig& cfg);

enum class PolicyVariant { full, fling_only, pnp_only };

const char* variant_name(PolicyVariant v);
PolicyVariant variant_from_name(const std::string& name);

struct EnvConfig {
    garment::Category category = garment::Category::long_sleeve;
    double garment_scale = 1.0;
    double garment_resolution = 50.0;
    percept::CameraConfig camera;
    mask::ArmConfig arms;
    prim::FlingParams fling;
    prim::PnpParams pnp;
    garment::CrumpleConfig crumple;
    int rotations = policy::kDefaultRotations;
    std::vector<double> scales{std::begin(policy::kDefaultScales),
                               std::end(policy::kDefaultScales)};
    int grasp_halfwidth_px = policy::kDefaultGraspHalfwidthPx;
    policy::AomConfig aom;
    bool use_aom = true;
    RewardWeights weights;
    bool sample_physics = true;
    garment::PhysicsSample fixed_physics;
    double stiffness_scale = sim::kDefaultStiffnessScale;
    sim::SimParams sim_params;
};

/// One garment-on-a-table episode environment: owns the template, the scene
/// and a cached observation.
class Env {
public:
    explicit Env(EnvConfig cfg);

    void reset(std::uint64_t seed);  // crumple initialization
    void reset_to_goal();            // canonical flattened start

    const EnvConfig& config() const { return cfg_; }
    const garment::GarmentTemplate& tmpl() const { return tmpl_; }
    const percept::Observation& observation() const { return obs_; }
    const percept::Metrics& metrics() const { return metrics_; }
    sim::Scene& scene() { return scene_; }
    const garment::PhysicsSample& physics() const { return physics_; }

    struct WorldPoints {
        Primitive primitive = Primitive::pnp;
        Vec3 a{};  // fling: left-arm grasp; pnp: pick
        Vec3 b{};  // fling: right-arm grasp; pnp: place
    };

    /// Execute and refresh the observation. Returns false on a missed grasp
    /// (the step becomes a no-op).
    bool execute(const WorldPoints& action);

    /// Height of the rendered top surface at a world point (for grasp z).
    double surface_height(const Vec2& world) const;

    void refresh();

private:
    EnvConfig cfg_;
    garment::GarmentTemplate tmpl_;
    garment::PhysicsSample physics_;
    sim::Scene scene_;
    percept::Observation obs_;
    percept::Metrics metrics_;
};

enum class EpisodeMode { train, eval };

struct StepRecord {
    int step = 0;
    policy::SelectedAction action;
    bool explored = false;
    bool noop = false;          // empty masks: nothing executed
    bool missed_grasp = false;
    percept::Metrics before;
    percept::Metrics after;
    RewardDelta delta;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    bool goal_start = false;
    bool smooth = false;
    bool failed = false;  // simulation instability
    percept::Metrics initial;
    percept::Metrics final_metrics;
    int steps = 0;
    std::vector<StepRecord> step_records;
};

/// Called after each attempted action with the step record, the pre-action
/// observation, the pyramid and masks it produced, and the value maps when
/// the policy was queried (null for explored steps).
using StepObserver = std::function<void(const StepRecord&, const percept::Observation&,
                                        const policy::TransformPyramid&,
                                        const std::vector<policy::LayerMasks>&,
                                        const policy::ValueMapBatch*)>;

struct EpisodeOptions {
    EpisodeMode mode = EpisodeMode::eval;
    PolicyVariant variant = PolicyVariant::full;
    bool goal_start = false;
    double epsilon_override = -1.0;  // >= 0 forces epsilon in eval mode too
    int episode_index = 0;
    StepObserver observer;
};

/// Play one episode: render, pyramid, value maps, masking, epsilon-greedy
/// selection, AOM refinement (long-sleeve fling), primitive execution, reward
/// bookkeeping. Replay items are appended for every executed action when a
/// buffer is supplied. global_step advances once per attempted action.
EpisodeRecord run_episode(Env& env, const ValueModel& model, const TrainConfig& cfg,
                          const EpisodeOptions& options, std::uint64_t seed,
                          std::int64_t* global_step = nullptr, ReplayBuffer* replay = nullptr);

/// One optimizer update on a replay batch; returns the MSE loss over the
/// per-factor deltas. Throws DivergenceError on a non-finite loss.
double train_step(ValueModel& model, AdamState& adam, std::span<const ReplayItem> items);

/// Loss and parameter gradients without applying an update.
double compute_loss_and_grads(const ValueModel& model, std::span<const ReplayItem> items,
                              ValueModel& grads);

struct TrainLogRow {
    int episode = 0;
    std::int64_t step = 0;  // global step at episode end
    double coverage = 0.0;
    double iou = 0.0;
    double kd = 0.0;
    double r_cik = 0.0;
    double loss = 0.0;  // mean train loss during the episode
    double eps = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    std::int64_t steps_done = 0;
    int episodes = 0;
};

using CheckpointHook = std::function<void(std::int64_t step, const ValueModel&, const AdamState&)>;

/// Interleaves environment episodes with replay-batch updates until
/// total_steps actions have been attempted. Deterministic for a fixed config.
TrainResult train(Env& env, ValueModel& model, AdamState& adam, const TrainConfig& cfg,
                  PolicyVariant variant, ReplayBuffer& replay,
                  std::int64_t start_step = 0, const CheckpointHook& hook = {});

}  // namespace garm::learn
