#include <cmath>
#include <random>

#include "doctest.h"
#include "garm/replay.hpp"
#include "garm/reward.hpp"
#include "garm/trainer.hpp"
#include "garm/value_model.hpp"

using namespace garm;
using namespace garm::learn;

namespace {

percept::Observation toy_observation(int dim, int blob = 1) {
    percept::Observation obs;
    obs.height = ValueGrid(dim, dim, 0.0);
    obs.mask = MaskGrid(dim, dim, 0);
    if (blob) {
        for (int y = dim / 4; y < 3 * dim / 4; ++y)
            for (int x = dim / 4; x < 3 * dim / 4; ++x) {
                obs.height.at(x, y) = 0.02;
                obs.mask.at(x, y) = 1;
            }
    }
    return obs;
}

EnvConfig tiny_env_config() {
    EnvConfig env;
    env.category = garment::Category::square;
    env.garment_scale = 0.55;
    env.garment_resolution = 22.0;
    env.camera = {32, 1.53, 1.2};
    env.rotations = 2;
    env.scales = {1.0};
    env.grasp_halfwidth_px = 2;
    env.use_aom = false;
    env.sample_physics = false;
    env.fixed_physics = {0.5, 0.9};
    env.stiffness_scale = 2000.0;
    return env;
}

TrainConfig tiny_train_config() {
    TrainConfig cfg;
    cfg.total_steps = 6;
    cfg.batch_size = 4;
    cfg.replay_capacity = 100;
    cfg.max_episode_steps = 3;
    cfg.epsilon_half_life = 50.0;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("reward_breakdown: goal state, zero deltas, linearity") {
    RewardWeights w{0.2, 0.4};
    percept::Metrics goal{1.0, 1.0, 0.0};
    RewardBreakdown r = reward_from_metrics(goal, w, 1.53);
    CHECK(r.r_c == 1.0);
    CHECK(r.r_i == 1.0);
    CHECK(r.r_k == 0.0);
    CHECK(r.r_cik == doctest::Approx(0.6).epsilon(1e-15));

    percept::Metrics any{0.62, 0.31, 0.4};
    RewardPair pair = reward_breakdown(any, any, w, 1.53);
    CHECK(pair.delta.d_c == 0.0);
    CHECK(pair.delta.d_i == 0.0);
    CHECK(pair.delta.d_k == 0.0);
    CHECK(pair.delta.d_cik == 0.0);

    // exact linearity in (alpha, beta)
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.01, 0.49);
    for (int i = 0; i < 100; ++i) {
        RewardWeights wi{u(rng), u(rng)};
        RewardBreakdown ri = reward_from_metrics(any, wi, 1.53);
        double expect = wi.alpha * ri.r_c + wi.beta * ri.r_i +
                        (1.0 - wi.alpha - wi.beta) * ri.r_k;
        CHECK(ri.r_cik == expect);
    }

    // r_k lands in [-1, 0] for any on-table keypoint distance
    percept::Metrics far{0.0, 0.0, 1.53 * std::sqrt(2.0)};
    CHECK(reward_from_metrics(far, w, 1.53).r_k == doctest::Approx(-1.0));
}

TEST_CASE("model: zero final layers give all-zero maps") {
    ValueModel model;
    model.init(3);
    const int dim = 32;
    percept::Observation obs = toy_observation(dim);
    policy::TransformPyramid pyr;
    pyr.image_dim = dim;
    policy::PyramidLayer layer;
    layer.transform = {0.0, 1.0, dim / 2.0};
    layer.obs = obs;
    pyr.layers.push_back(std::move(layer));

    RewardWeights w;
    policy::ValueMapBatch batch = model_forward(model, pyr, w);
    for (Primitive p : {Primitive::fling, Primitive::pnp}) {
        for (int f = 0; f < 3; ++f)
            for (double v : batch.factor(0, p, f).data()) CHECK(v == 0.0);
        for (double v : batch.combined_map(0, p).data()) CHECK(v == 0.0);
    }
}

TEST_CASE("model: constant input gives layer-independent output; forward deterministic") {
    ValueModel model;
    model.init(4);
    // give the final convs real weights
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.1);
    model.visit_params([&](const std::string& name, std::vector<double>& v) {
        if (name.find("conv1") != std::string::npos)
            for (auto& x : v) x = noise(rng);
    });

    const int dim = 32;
    percept::Observation zeros = toy_observation(dim, 0);
    policy::TransformPyramid pyr;
    pyr.image_dim = dim;
    for (int l = 0; l < 3; ++l) {
        policy::PyramidLayer layer;
        layer.transform = {0.0, 1.0, dim / 2.0};
        layer.obs = zeros;
        pyr.layers.push_back(std::move(layer));
    }
    RewardWeights w;
    policy::ValueMapBatch batch = model_forward(model, pyr, w);
    for (int l = 1; l < 3; ++l)
        for (Primitive p : {Primitive::fling, Primitive::pnp})
            CHECK(batch.combined_map(l, p).data() == batch.combined_map(0, p).data());

    policy::ValueMapBatch again = model_forward(model, pyr, w);
    CHECK(again.combined_map(0, Primitive::fling).data() ==
          batch.combined_map(0, Primitive::fling).data());
}

TEST_CASE("train_step: zero-error batch leaves parameters nearly unchanged") {
    ValueModel model;
    model.init(6);
    const int dim = 32;
    ReplayItem item;
    item.obs = toy_observation(dim);
    item.pixel = {10, 12};
    item.primitive = Primitive::pnp;
    item.delta_c = 0.0;  // zero-init model predicts exactly 0
    item.delta_i = 0.0;
    item.delta_k = 0.0;

    AdamState adam;
    std::vector<double> before;
    model.visit_params([&](const std::string&, const std::vector<double>& v) {
        before.insert(before.end(), v.begin(), v.end());
    });
    double loss = train_step(model, adam, std::vector<ReplayItem>{item});
    CHECK(loss == 0.0);
    std::vector<double> after;
    model.visit_params([&](const std::string&, const std::vector<double>& v) {
        after.insert(after.end(), v.begin(), v.end());
    });
    double max_change = 0.0;
    for (size_t i = 0; i < before.size(); ++i)
        max_change = std::max(max_change, std::abs(after[i] - before[i]));
    CHECK(max_change < 1e-8);
}

TEST_CASE("train_step: repeated training on one item reduces the loss") {
    ValueModel model;
    model.init(8);
    ReplayItem item;
    item.obs = toy_observation(32);
    item.pixel = {16, 16};
    item.primitive = Primitive::fling;
    item.delta_c = 0.3;
    item.delta_i = 0.1;
    item.delta_k = -0.05;

    AdamState adam;
    std::vector<ReplayItem> batch{item};
    double first = train_step(model, adam, batch);
    double last = first;
    for (int i = 0; i < 99; ++i) last = train_step(model, adam, batch);
    CHECK(last < 0.05 * first);
}

TEST_CASE("epsilon: exact schedule") {
    TrainConfig cfg;
    cfg.epsilon_initial = 1.0;
    cfg.epsilon_half_life = 5000.0;
    CHECK(epsilon(0, cfg) == 1.0);
    CHECK(epsilon(5000, cfg) == 0.5);
    CHECK(epsilon(10000, cfg) == 0.25);
    CHECK(epsilon(2500, cfg) == doctest::Approx(std::pow(0.5, 0.5)));
    for (std::int64_t s : {100, 1234, 9999})
        CHECK(epsilon(s + 5000, cfg) == doctest::Approx(epsilon(s, cfg) / 2.0).epsilon(1e-15));
    CHECK_THROWS_AS(epsilon(-1, cfg), std::invalid_argument);
}

TEST_CASE("replay buffer: capacity eviction and seeded sampling") {
    ReplayBuffer buffer(4);
    for (int i = 0; i < 6; ++i) {
        ReplayItem item;
        item.episode = i;
        buffer.push(std::move(item));
    }
    CHECK(buffer.size() == 4);
    std::mt19937_64 a(9), b(9);
    auto sa = buffer.sample(8, a);
    auto sb = buffer.sample(8, b);
    REQUIRE(sa.size() == 8);
    for (size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].episode == sb[i].episode);
}

TEST_CASE("run_episode: eval determinism, variant restriction, goal start") {
    Env env(tiny_env_config());
    ValueModel model;
    model.init(derive_seed(11, "model-init"));
    TrainConfig cfg = tiny_train_config();

    SUBCASE("eval mode with a fixed seed is deterministic") {
        EpisodeOptions options;
        options.mode = EpisodeMode::eval;
        EpisodeRecord a = run_episode(env, model, cfg, options, 77);
        EpisodeRecord b = run_episode(env, model, cfg, options, 77);
        CHECK(a.steps == b.steps);
        CHECK(a.final_metrics.coverage == b.final_metrics.coverage);
        CHECK(a.final_metrics.iou == b.final_metrics.iou);
        CHECK(a.final_metrics.kd == b.final_metrics.kd);
        REQUIRE(a.step_records.size() == b.step_records.size());
        for (size_t i = 0; i < a.step_records.size(); ++i) {
            CHECK(a.step_records[i].action.pixel == b.step_records[i].action.pixel);
            CHECK(a.step_records[i].action.primitive == b.step_records[i].action.primitive);
        }
    }

    SUBCASE("pnp_only stores only pnp items") {
        ReplayBuffer replay(100);
        EpisodeOptions options;
        options.mode = EpisodeMode::train;
        options.variant = PolicyVariant::pnp_only;
        options.epsilon_override = 1.0;
        std::int64_t step = 0;
        run_episode(env, model, cfg, options, 5, &step, &replay);
        CHECK(replay.size() > 0);
        for (size_t i = 0; i < replay.size(); ++i)
            CHECK(replay[i].primitive == Primitive::pnp);
    }

    SUBCASE("goal start terminates at step 0 as smooth") {
        EpisodeOptions options;
        options.goal_start = true;
        EpisodeRecord rec = run_episode(env, model, cfg, options, 5);
        CHECK(rec.smooth);
        CHECK(rec.steps == 0);
    }

    SUBCASE("replay items reference mask-valid pixels") {
        ReplayBuffer replay(200);
        EpisodeOptions options;
        options.mode = EpisodeMode::train;
        options.epsilon_override = 1.0;
        std::int64_t step = 0;
        for (std::uint64_t s = 0; s < 3; ++s)
            run_episode(env, model, cfg, options, 100 + s, &step, &replay);
        REQUIRE(replay.size() > 0);
        const EnvConfig& ec = env.config();
        for (size_t i = 0; i < replay.size(); ++i) {
            const ReplayItem& item = replay[i];
            policy::TransformPyramid pyr =
                policy::build_pyramid(item.obs, ec.rotations, ec.scales);
            auto masks = policy::build_masks(pyr, ec.camera, ec.arms, ec.grasp_halfwidth_px);
            const MaskGrid& m = item.primitive == Primitive::fling
                                    ? masks[item.layer_index].fling
                                    : masks[item.layer_index].pnp;
            CHECK(m.at(item.pixel.x, item.pixel.y) == 1);
        }
    }
}

TEST_CASE("train: zero steps, determinism of short runs") {
    SUBCASE("total_steps = 0 returns an empty log") {
        Env env(tiny_env_config());
        ValueModel model;
        model.init(1);
        AdamState adam;
        TrainConfig cfg = tiny_train_config();
        cfg.total_steps = 0;
        ReplayBuffer replay(10);
        TrainResult result = train(env, model, adam, cfg, PolicyVariant::full, replay);
        CHECK(result.log.empty());
        CHECK(result.steps_done == 0);
    }

    SUBCASE("identical seeds give identical logs") {
        auto run = [] {
            Env env(tiny_env_config());
            ValueModel model;
            model.init(derive_seed(11, "model-init"));
            AdamState adam;
            TrainConfig cfg = tiny_train_config();
            ReplayBuffer replay(100);
            return train(env, model, adam, cfg, PolicyVariant::full, replay);
        };
        TrainResult a = run();
        TrainResult b = run();
        REQUIRE(a.log.size() == b.log.size());
        for (size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].coverage == b.log[i].coverage);
            CHECK(a.log[i].iou == b.log[i].iou);
            CHECK(a.log[i].loss == b.log[i].loss);
            CHECK(a.log[i].step == b.log[i].step);
        }
    }
}
