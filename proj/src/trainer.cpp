#include "garm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace garm::learn {

double epsilon(std::int64_t step, const TrainConfig& cfg) {
    if (step < 0) throw std::invalid_argument("epsilon: step must be non-negative");
    return cfg.epsilon_initial * std::pow(0.5, static_cast<double>(step) / cfg.epsilon_half_life);
}

const char* variant_name(PolicyVariant v) {
    switch (v) {
        case PolicyVariant::full: return "full";
        case PolicyVariant::fling_only: return "fling_only";
        case PolicyVariant::pnp_only: return "pnp_only";
    }
    return "?";
}

PolicyVariant variant_from_name(const std::string& name) {
    if (name == "full") return PolicyVariant::full;
    if (name == "fling_only") return PolicyVariant::fling_only;
    if (name == "pnp_only") return PolicyVariant::pnp_only;
    throw std::invalid_argument("unknown policy variant: " + name);
}

Env::Env(EnvConfig cfg) : cfg_(std::move(cfg)) {
    tmpl_ = garment::make_template(cfg_.category, cfg_.garment_scale, cfg_.garment_resolution,
                                   cfg_.camera, cfg_.arms.table_width);
    physics_ = cfg_.fixed_physics;
    reset_to_goal();
}

void Env::reset(std::uint64_t seed) {
    physics_ = cfg_.sample_physics ? garment::sample_physics(derive_seed(seed, "physics"))
                                   : cfg_.fixed_physics;
    scene_ = garment::crumple_init(tmpl_, physics_, derive_seed(seed, "crumple"), cfg_.crumple,
                                   cfg_.sim_params, cfg_.stiffness_scale);
    refresh();
}

void Env::reset_to_goal() {
    scene_ = garment::make_scene(tmpl_, physics_, cfg_.sim_params, cfg_.stiffness_scale);
    refresh();
}

void Env::refresh() {
    obs_ = percept::render(scene_.state, cfg_.camera);
    metrics_ = percept::compute_metrics(obs_, scene_.state, tmpl_, cfg_.camera);
}

double Env::surface_height(const Vec2& world) const {
    Vec2 px = cfg_.camera.world_to_pixel(world);
    double h = obs_.height.get_or(static_cast<int>(std::floor(px.x)),
                                  static_cast<int>(std::floor(px.y)), 0.0);
    return std::max(h, scene_.params.ground_height + scene_.params.contact_offset);
}

bool Env::execute(const WorldPoints& action) {
    try {
        if (action.primitive == Primitive::fling) {
            prim::execute_fling(scene_, action.a, action.b, cfg_.fling);
        } else {
            prim::execute_pnp(scene_, action.a, action.b, cfg_.pnp);
        }
    } catch (const MissedGraspError&) {
        for (auto& pk : scene_.pickers) sim::picker_release(scene_.state, pk);
        refresh();
        return false;
    }
    refresh();
    return true;
}

namespace {

struct MaskedLayers {
    std::vector<policy::LayerMasks> masks;
    bool any_fling = false;
    bool any_pnp = false;
};

MaskedLayers masks_for_variant(const policy::TransformPyramid& pyramid, const EnvConfig& env_cfg,
                               PolicyVariant variant) {
    MaskedLayers out;
    out.masks =
        policy::build_masks(pyramid, env_cfg.camera, env_cfg.arms, env_cfg.grasp_halfwidth_px);
    const int dim = pyramid.image_dim;
    for (auto& lm : out.masks) {
        if (variant == PolicyVariant::fling_only) lm.pnp = MaskGrid(dim, dim, 0);
        if (variant == PolicyVariant::pnp_only) lm.fling = MaskGrid(dim, dim, 0);
        out.any_fling = out.any_fling || mask_count(lm.fling) > 0;
        out.any_pnp = out.any_pnp || mask_count(lm.pnp) > 0;
    }
    return out;
}

policy::SelectedAction explore_uniform(const policy::TransformPyramid& pyramid,
                                       const MaskedLayers& ml, int w_px, std::mt19937_64& rng) {
    std::vector<Primitive> prims;
    if (ml.any_fling) prims.push_back(Primitive::fling);
    if (ml.any_pnp) prims.push_back(Primitive::pnp);
    policy::SelectedAction a;
    a.w_px = w_px;
    if (prims.empty()) {
        a.fallback = true;
        return a;
    }
    Primitive p = prims[std::uniform_int_distribution<size_t>(0, prims.size() - 1)(rng)];

    std::vector<int> layers;
    for (size_t l = 0; l < ml.masks.size(); ++l) {
        const MaskGrid& m = p == Primitive::fling ? ml.masks[l].fling : ml.masks[l].pnp;
        if (mask_count(m) > 0) layers.push_back(static_cast<int>(l));
    }
    int layer = layers[std::uniform_int_distribution<size_t>(0, layers.size() - 1)(rng)];
    const MaskGrid& m = p == Primitive::fling ? ml.masks[layer].fling : ml.masks[layer].pnp;
    int count = mask_count(m);
    int target = std::uniform_int_distribution<int>(0, count - 1)(rng);
    Pixel pixel{};
    for (int y = 0, seen = 0; y < m.height() && seen <= target; ++y)
        for (int x = 0; x < m.width() && seen <= target; ++x)
            if (m.at(x, y) && seen++ == target) pixel = {x, y};

    a.primitive = p;
    a.layer = layer;
    a.pixel = pixel;
    a.theta_deg = pyramid.layers[layer].theta_deg();
    a.scale = pyramid.layers[layer].scale();
    return a;
}

/// Select, refine and execute one action; record rewards and optionally a
/// replay item. The heart of both the training loop and episode playback.
StepRecord act_once(Env& env, const ValueModel& model, const EnvConfig& env_cfg,
                    PolicyVariant variant, double eps, std::mt19937_64& rng, int episode_index,
                    int step_i, ReplayBuffer* replay, const StepObserver& observer = {}) {
    StepRecord sr;
    sr.step = step_i;
    sr.before = env.metrics();
    const auto& camera = env_cfg.camera;

    percept::Observation obs_before = env.observation();
    policy::TransformPyramid pyramid =
        policy::build_pyramid(obs_before, env_cfg.rotations, env_cfg.scales);
    MaskedLayers ml = masks_for_variant(pyramid, env_cfg, variant);

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    sr.explored = coin(rng) < eps;
    policy::SelectedAction action;
    std::optional<policy::ValueMapBatch> batch;
    if (sr.explored) {
        action = explore_uniform(pyramid, ml, env_cfg.grasp_halfwidth_px, rng);
    } else {
        batch = model_forward(model, pyramid, env_cfg.weights);
        action =
            policy::aggregate_and_select(*batch, ml.masks, pyramid, env_cfg.grasp_halfwidth_px);
    }
    sr.action = action;

    auto notify = [&] {
        if (observer) observer(sr, obs_before, pyramid, ml.masks, batch ? &*batch : nullptr);
    };

    if (action.fallback) {
        sr.noop = true;
        sr.after = sr.before;
        notify();
        return sr;
    }

    prim::ActionParams params{action.primitive, action.pixel.x, action.pixel.y, action.theta_deg,
                              action.w_px, action.layer};
    percept::PixelTransform transform{action.theta_deg, action.scale, pyramid.image_dim / 2.0};
    auto [pix_a, pix_b] = prim::action_pixels(params);
    Vec2 orig_a = transform.inverse(pix_a);
    Vec2 orig_b = transform.inverse(pix_b);

    if (action.primitive == Primitive::fling &&
        env_cfg.category == garment::Category::long_sleeve && env_cfg.use_aom) {
        auto kps = percept::keypoints(env.scene().state, env.tmpl(), camera);
        auto itl = kps.find("shoulder_left");
        auto itr = kps.find("shoulder_right");
        if (itl != kps.end() && itr != kps.end()) {
            policy::AomResult aom = policy::aom_refine(orig_a, orig_b, itl->second.pixel,
                                                       itr->second.pixel, env_cfg.aom);
            if (aom.replaced) {
                orig_a = aom.p1;
                orig_b = aom.p2;
            }
        }
    }

    Vec2 wa = camera.pixel_to_world(orig_a);
    Vec2 wb = camera.pixel_to_world(orig_b);
    Env::WorldPoints world;
    world.primitive = action.primitive;
    if (action.primitive == Primitive::fling) {
        // left arm (smaller world x) takes the grasp on its own side
        if (wa.x > wb.x) std::swap(wa, wb);
        world.a = {wa.x, wa.y, env.surface_height(wa)};
        world.b = {wb.x, wb.y, env.surface_height(wb)};
    } else {
        world.a = {wa.x, wa.y, env.surface_height(wa)};
        world.b = {wb.x, wb.y,
                   env.scene().params.ground_height + env.scene().params.contact_offset};
    }

    bool executed = env.execute(world);
    sr.missed_grasp = !executed;
    sr.after = env.metrics();
    sr.delta =
        reward_breakdown(sr.before, sr.after, env_cfg.weights, camera.world_extent).delta;

    if (executed && replay) {
        ReplayItem item;
        item.obs = obs_before;
        item.theta_deg = action.theta_deg;
        item.scale = action.scale;
        item.layer_index = action.layer;
        item.pixel = action.pixel;
        item.primitive = action.primitive;
        item.delta_c = sr.delta.d_c;
        item.delta_i = sr.delta.d_i;
        item.delta_k = sr.delta.d_k;
        item.episode = episode_index;
        item.step = step_i;
        replay->push(std::move(item));
    }
    notify();
    return sr;
}

}  // namespace

EpisodeRecord run_episode(Env& env, const ValueModel& model, const TrainConfig& cfg,
                          const EpisodeOptions& options, std::uint64_t seed,
                          std::int64_t* global_step, ReplayBuffer* replay) {
    EpisodeRecord rec;
    rec.seed = seed;
    rec.goal_start = options.goal_start;
    if (options.goal_start)
        env.reset_to_goal();
    else
        env.reset(seed);

    std::mt19937_64 rng(derive_seed(seed, "episode-actions", options.episode_index));
    rec.initial = env.metrics();

    for (int step_i = 0; step_i < cfg.max_episode_steps; ++step_i) {
        const percept::Metrics& m = env.metrics();
        if (m.coverage >= cfg.smooth_coverage && m.iou >= cfg.smooth_iou) {
            rec.smooth = true;
            break;
        }
        double eps = 0.0;
        if (options.epsilon_override >= 0.0)
            eps = options.epsilon_override;
        else if (options.mode == EpisodeMode::train)
            eps = epsilon(global_step ? *global_step : 0, cfg);

        StepRecord sr = act_once(env, model, env.config(), options.variant, eps, rng,
                                 options.episode_index, step_i, replay, options.observer);
        if (global_step) ++(*global_step);
        rec.step_records.push_back(sr);
        ++rec.steps;
    }

    rec.final_metrics = env.metrics();
    if (rec.final_metrics.coverage >= cfg.smooth_coverage &&
        rec.final_metrics.iou >= cfg.smooth_iou)
        rec.smooth = true;
    return rec;
}

double compute_loss_and_grads(const ValueModel& model, std::span<const ReplayItem> items,
                              ValueModel& grads) {
    if (items.empty()) throw std::invalid_argument("empty training batch");
    double loss = 0.0;
    ValueModel::Cache cache;
    const double inv_n = 1.0 / static_cast<double>(items.size());
    for (const auto& item : items) {
        const int dim = item.obs.height.width();
        percept::PixelTransform t{item.theta_deg, item.scale, dim / 2.0};
        percept::Observation layer_obs = percept::transform_observation(item.obs, t);
        model.forward(observation_tensor(layer_obs), cache);

        int head = item.primitive == Primitive::fling ? 0 : 1;
        const double targets[3] = {item.delta_c, item.delta_i, item.delta_k};
        for (int f = 0; f < ValueModel::kFactors; ++f) {
            double pred = cache.outputs[f][head].at(0, item.pixel.y, item.pixel.x);
            double diff = pred - targets[f];
            loss += diff * diff * inv_n;
            Tensor3 d_out(1, cache.outputs[f][head].h, cache.outputs[f][head].w);
            d_out.at(0, item.pixel.y, item.pixel.x) = 2.0 * diff * inv_n;
            model.backward(cache, f, head, d_out, grads);
        }
    }
    return loss;
}

double train_step(ValueModel& model, AdamState& adam, std::span<const ReplayItem> items) {
    ValueModel grads = model;
    grads.zero();
    double loss = compute_loss_and_grads(model, items, grads);
    if (!std::isfinite(loss))
        throw DivergenceError("non-finite training loss (batch of " +
                              std::to_string(items.size()) + " items)");
    adam.apply(model, grads);
    return loss;
}

TrainResult train(Env& env, ValueModel& model, AdamState& adam, const TrainConfig& cfg,
                  PolicyVariant variant, ReplayBuffer& replay, std::int64_t start_step,
                  const CheckpointHook& hook) {
    TrainResult result;
    std::int64_t step = start_step;
    std::mt19937_64 batch_rng(derive_seed(cfg.seed, "batch-sampling"));
    adam.learning_rate = cfg.learning_rate;
    int episode_index = 0;

    while (step - start_step < cfg.total_steps) {
        std::uint64_t ep_seed =
            derive_seed(cfg.seed, "episode", static_cast<std::uint64_t>(step));
        env.reset(ep_seed);
        std::mt19937_64 rng(derive_seed(ep_seed, "episode-actions", episode_index));

        double loss_sum = 0.0;
        int loss_count = 0;
        bool smooth = false;
        int steps_in_episode = 0;
        while (steps_in_episode < cfg.max_episode_steps && step - start_step < cfg.total_steps) {
            const percept::Metrics& m = env.metrics();
            if (m.coverage >= cfg.smooth_coverage && m.iou >= cfg.smooth_iou) {
                smooth = true;
                break;
            }
            double eps = epsilon(step, cfg);
            act_once(env, model, env.config(), variant, eps, rng, episode_index,
                     steps_in_episode, &replay);
            ++step;
            ++steps_in_episode;

            if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
                auto batch = replay.sample(cfg.batch_size, batch_rng);
                loss_sum += train_step(model, adam, batch);
                ++loss_count;
            }
            if (hook && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
                hook(step, model, adam);
        }
        (void)smooth;

        const percept::Metrics final_m = env.metrics();
        RewardBreakdown final_r = reward_from_metrics(final_m, env.config().weights,
                                                      env.config().camera.world_extent);
        TrainLogRow row;
        row.episode = episode_index;
        row.step = step;
        row.coverage = final_m.coverage;
        row.iou = final_m.iou;
        row.kd = final_m.kd;
        row.r_cik = final_r.r_cik;
        row.loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        row.eps = epsilon(step, cfg);
        result.log.push_back(row);
        ++episode_index;
    }

    result.steps_done = step - start_step;
    result.episodes = episode_index;
    return result;
}

}  // namespace garm::learn
