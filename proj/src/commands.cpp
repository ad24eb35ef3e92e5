#include "garm/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "garm/checkpoint.hpp"
#include "garm/fold_planner.hpp"
#include "garm/png_io.hpp"

#include "json.hpp"

namespace garm::harness {

namespace fs = std::filesystem;

namespace {

std::string step_name(int step, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "step_%03d_%s.png", step, suffix);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<learn::TrainLogRow>& rows) {
    std::ofstream out(path);
    out << "episode,step,coverage,iou,kd,r_cik,loss,epsilon\n";
    for (const auto& r : rows) {
        out << r.episode << "," << r.step << "," << r.coverage << "," << r.iou << "," << r.kd
            << "," << r.r_cik << "," << r.loss << "," << r.eps << "\n";
    }
}

struct FoldOutcome {
    double distance = std::numeric_limits<double>::quiet_NaN();
    bool success = false;
};

/// Plan from the tracked keypoints, execute, and score against the
/// canonical-keypoint fold target.
FoldOutcome run_fold(learn::Env& env, const RunConfig& cfg) {
    FoldOutcome outcome;
    auto kps = percept::keypoints(env.scene().state, env.tmpl(), env.config().camera);
    auto plan = fold::plan_fold(env.tmpl().category, kps, cfg.world_extent_m);
    if (!plan) return outcome;

    std::map<std::string, percept::Keypoint> canonical;
    for (const auto& [name, world] : env.tmpl().goal_keypoints_world)
        canonical[name] = {world, env.tmpl().goal_keypoints_px.at(name), true};
    auto target_plan = fold::plan_fold(env.tmpl().category, canonical, cfg.world_extent_m);
    if (!target_plan) return outcome;
    fold::FoldTarget target = fold::fold_target(env.tmpl(), *target_plan, cfg.fold_thickness_m);

    prim::FoldStepParams fold_params{cfg.fold_lift_height_m, cfg.fold_speed_mps};
    try {
        for (const auto& step : plan->steps) {
            std::vector<Vec3> picks, places;
            for (size_t i = 0; i < step.picks.size(); ++i) {
                const Vec2& p = step.picks[i];
                picks.push_back({p.x, p.y, env.surface_height(p)});
                places.push_back({step.places[i].x, step.places[i].y,
                                  env.scene().params.contact_offset});
            }
            prim::execute_fold_step(env.scene(), picks, places, fold_params);
            env.refresh();
        }
    } catch (const MissedGraspError&) {
        return outcome;
    }
    fold::FoldScore score =
        fold::fold_success(env.scene().state, target, cfg.fold_success_threshold_m);
    outcome.distance = score.mean_distance;
    outcome.success = score.success;
    return outcome;
}

}  // namespace

TrainOutputs cmd_train(const RunConfig& cfg, const std::string& out_dir,
                       const std::optional<std::string>& resume_from) {
    fs::create_directories(out_dir);
    learn::Env env(to_env_config(cfg));
    learn::TrainConfig train_cfg = to_train_config(cfg);
    std::uint64_t fingerprint = config_fingerprint(cfg);

    learn::ValueModel model;
    model.init(derive_seed(cfg.seed, "model-init"));
    learn::AdamState adam;
    adam.learning_rate = cfg.learning_rate;
    std::int64_t start_step = 0;
    if (resume_from) {
        CheckpointInfo info = load_checkpoint(*resume_from, model, adam);
        if (info.config_fingerprint != fingerprint)
            throw std::runtime_error("checkpoint was produced by a different config");
        start_step = info.step;
    }

    learn::ReplayBuffer replay(static_cast<size_t>(cfg.replay_capacity));
    const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.bin").string();
    const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();

    learn::ValueModel last_good = model;
    learn::AdamState last_good_adam = adam;
    std::int64_t last_good_step = start_step;

    learn::CheckpointHook hook = [&](std::int64_t step, const learn::ValueModel& m,
                                     const learn::AdamState& a) {
        save_checkpoint(ckpt_path, m, a, step, fingerprint);
        last_good = m;
        last_good_adam = a;
        last_good_step = step;
        const percept::Observation& obs = env.observation();
        write_gray_png((fs::path(out_dir) / ("mask_step_" + std::to_string(step) + ".png"))
                           .string(),
                       mask_image(obs.mask));
        policy::TransformPyramid pyr = policy::build_pyramid(obs, 1, std::vector<double>{1.0});
        policy::ValueMapBatch batch = model_forward(m, pyr, env.config().weights);
        write_gray_png((fs::path(out_dir) / ("valuemap_step_" + std::to_string(step) + ".png"))
                           .string(),
                       value_image(batch.combined_map(0, Primitive::pnp)));
    };

    TrainOutputs outputs;
    try {
        learn::TrainResult result =
            train(env, model, adam, train_cfg, learn::variant_from_name(cfg.variant), replay,
                  start_step, hook);
        save_checkpoint(ckpt_path, model, adam, start_step + result.steps_done, fingerprint);
        write_metrics_csv(csv_path, result.log);
        outputs.episodes = result.episodes;
        outputs.steps = result.steps_done;
    } catch (const learn::DivergenceError&) {
        // keep the last good checkpoint on divergence
        save_checkpoint(ckpt_path, last_good, last_good_adam, last_good_step, fingerprint);
        throw;
    }
    outputs.checkpoint_path = ckpt_path;
    outputs.metrics_csv_path = csv_path;
    return outputs;
}

EvalReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                    const std::string& out_dir, int trials) {
    fs::create_directories(out_dir);
    learn::Env env(to_env_config(cfg));
    learn::TrainConfig train_cfg = to_train_config(cfg);

    learn::ValueModel model;
    model.init(derive_seed(cfg.seed, "model-init"));
    learn::AdamState adam;
    std::uint64_t fingerprint = config_fingerprint(cfg);
    CheckpointInfo info = load_checkpoint(checkpoint_path, model, adam);
    if (info.config_fingerprint != fingerprint)
        throw std::runtime_error("checkpoint/config fingerprint mismatch");

    EvalReport report;
    report.variant = cfg.variant;
    report.category = cfg.category;
    report.seed = cfg.seed;
    report.config_fingerprint = fingerprint;

    learn::PolicyVariant variant = learn::variant_from_name(cfg.variant);
    for (int t = 0; t < trials; ++t) {
        learn::EpisodeOptions options;
        options.mode = learn::EpisodeMode::eval;
        options.variant = variant;
        options.episode_index = t;
        std::uint64_t seed = derive_seed(cfg.seed, "eval-trial", static_cast<std::uint64_t>(t));
        learn::EpisodeRecord rec = run_episode(env, model, train_cfg, options, seed);

        EvalTrial trial;
        trial.trial = t;
        trial.coverage = rec.final_metrics.coverage;
        trial.iou = rec.final_metrics.iou;
        trial.kd = rec.final_metrics.kd;
        trial.steps = rec.steps;
        trial.smooth = rec.smooth;
        FoldOutcome fold = run_fold(env, cfg);
        trial.fold_distance = fold.distance;
        trial.success = fold.success;
        report.trials.push_back(trial);
    }

    double n = std::max<std::size_t>(1, report.trials.size());
    int successes = 0;
    for (const auto& t : report.trials) {
        report.mean_coverage += t.coverage / n;
        report.mean_iou += t.iou / n;
        report.mean_kd += t.kd / n;
        successes += t.success;
    }
    report.success_rate = report.trials.empty() ? 0.0 : successes / n;

    std::ofstream csv(fs::path(out_dir) / "eval.csv");
    csv << "# variant=" << report.variant << " category=" << report.category
        << " seed=" << report.seed << " fingerprint=" << report.config_fingerprint << "\n";
    csv << "trial,coverage,iou,kd,steps,smooth,fold_distance,success\n";
    for (const auto& t : report.trials) {
        csv << t.trial << "," << t.coverage << "," << t.iou << "," << t.kd << "," << t.steps
            << "," << (t.smooth ? 1 : 0) << "," << t.fold_distance << ","
            << (t.success ? 1 : 0) << "\n";
    }
    std::ofstream table(fs::path(out_dir) / "eval.txt");
    table << render_report_table(report);
    return report;
}

std::string render_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "variant: " << report.variant << "  category: " << report.category
        << "  seed: " << report.seed << "  fingerprint: " << report.config_fingerprint << "\n";
    out << "trial   cov     iou     kd      steps  success\n";
    char line[128];
    for (const auto& t : report.trials) {
        std::snprintf(line, sizeof(line), "%-7d %-7.3f %-7.3f %-7.3f %-6d %s\n", t.trial,
                      t.coverage, t.iou, t.kd, t.steps, t.success ? "yes" : "no");
        out << line;
    }
    std::snprintf(line, sizeof(line),
                  "mean    %-7.3f %-7.3f %-7.3f        rate %.2f\n", report.mean_coverage,
                  report.mean_iou, report.mean_kd, report.success_rate);
    out << line;
    return out.str();
}

ExportOutputs cmd_export_dataset(const RunConfig& cfg, const std::string& checkpoint_path,
                                 const std::string& out_dir) {
    fs::create_directories(out_dir);
    learn::Env env(to_env_config(cfg));
    learn::TrainConfig train_cfg = to_train_config(cfg);

    learn::ValueModel model;
    model.init(derive_seed(cfg.seed, "model-init"));
    learn::AdamState adam;
    CheckpointInfo info = load_checkpoint(checkpoint_path, model, adam);
    if (info.config_fingerprint != config_fingerprint(cfg))
        throw std::runtime_error("checkpoint/config fingerprint mismatch");

    ExportOutputs outputs;
    std::ofstream annotations(fs::path(out_dir) / "annotations.jsonl");
    learn::PolicyVariant variant = learn::variant_from_name(cfg.variant);

    int image_index = 0;
    for (int ep = 0; ep < cfg.export_episodes; ++ep) {
        std::uint64_t seed = derive_seed(cfg.seed, "export-episode", static_cast<std::uint64_t>(ep));
        learn::EpisodeOptions options;
        options.mode = learn::EpisodeMode::eval;
        options.variant = variant;
        options.episode_index = ep;

        std::vector<std::pair<percept::Observation, sim::ClothState>> snapshots;
        options.observer = [&](const learn::StepRecord&, const percept::Observation&,
                               const policy::TransformPyramid&,
                               const std::vector<policy::LayerMasks>&,
                               const policy::ValueMapBatch*) {
            snapshots.emplace_back(env.observation(), env.scene().state);
        };
        run_episode(env, model, train_cfg, options, seed);
        snapshots.emplace_back(env.observation(), env.scene().state);

        for (const auto& [obs, state] : snapshots) {
            double cov = percept::coverage(obs, env.tmpl());
            if (cov <= cfg.export_coverage_threshold) continue;
            char name[32];
            std::snprintf(name, sizeof(name), "obs_%05d.png", image_index);
            write_gray_png((fs::path(out_dir) / name).string(), height_image(obs.height));

            nlohmann::json record;
            record["image"] = name;
            record["category"] = cfg.category;
            record["coverage"] = cov;
            nlohmann::json kps = nlohmann::json::object();
            for (const auto& [kp_name, kp] :
                 percept::keypoints(state, env.tmpl(), env.config().camera))
                kps[kp_name] = {kp.pixel.x, kp.pixel.y};
            record["keypoints_px"] = kps;
            annotations << record.dump() << "\n";
            ++image_index;
        }
    }
    outputs.images = image_index;
    outputs.annotations = image_index;
    if (image_index == 0) {
        outputs.warned_empty = true;
        std::cerr << "warning: no observation exceeded coverage threshold "
                  << cfg.export_coverage_threshold << "; nothing exported\n";
    }
    return outputs;
}

DemoOutputs cmd_demo(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& out_dir, bool goal_start) {
    fs::create_directories(out_dir);
    learn::Env env(to_env_config(cfg));
    learn::TrainConfig train_cfg = to_train_config(cfg);

    learn::ValueModel model;
    model.init(derive_seed(cfg.seed, "model-init"));
    learn::AdamState adam;
    CheckpointInfo info = load_checkpoint(checkpoint_path, model, adam);
    if (info.config_fingerprint != config_fingerprint(cfg))
        throw std::runtime_error("checkpoint/config fingerprint mismatch");

    DemoOutputs outputs;
    auto save = [&](const std::string& name, const Grid<std::uint8_t>& img) {
        std::string path = (fs::path(out_dir) / name).string();
        write_gray_png(path, img);
        outputs.files.push_back(name);
    };

    learn::EpisodeOptions options;
    options.mode = learn::EpisodeMode::eval;
    options.variant = learn::variant_from_name(cfg.variant);
    options.goal_start = goal_start;

    bool first = true;
    options.observer = [&](const learn::StepRecord& sr, const percept::Observation& obs_before,
                           const policy::TransformPyramid& pyr,
                           const std::vector<policy::LayerMasks>& masks,
                           const policy::ValueMapBatch* batch) {
        if (first) {
            save("initial.png", height_image(obs_before.height));
            first = false;
        }
        int step = sr.step;
        const auto& action = sr.action;
        save(step_name(step, "observation"), height_image(env.observation().height));
        if (batch && !sr.action.fallback) {
            ValueGrid map = batch->combined_map(action.layer, action.primitive);
            const MaskGrid& m = action.primitive == Primitive::fling ? masks[action.layer].fling
                                                                     : masks[action.layer].pnp;
            mask::apply_mask(map, m);
            save(step_name(step, "valuemap"), value_image(map));
            save(step_name(step, "mask"), mask_image(m));
            save(step_name(step, "action"),
                 overlay_image(pyr.layers[action.layer].obs.mask, action.pixel));
        }
        ++outputs.steps;
    };

    std::uint64_t seed = derive_seed(cfg.seed, "demo-episode");
    learn::EpisodeRecord rec = run_episode(env, model, train_cfg, options, seed);
    if (rec.steps == 0) {
        save("initial.png", height_image(env.observation().height));
        outputs.steps = 0;
    }
    return outputs;
}

}  // namespace garm::harness
