#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "garm/commands.hpp"
#include "garm/config.hpp"

namespace {

garm::harness::RunConfig load(const std::string& config_path, std::optional<std::uint64_t> seed) {
    garm::harness::RunConfig cfg = garm::harness::load_config(config_path);
    if (seed) cfg.seed = *seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"garm: dual-arm garment unfolding, standardization and folding sandbox"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir, resume_path;
    std::optional<std::uint64_t> seed;
    int trials = -1;
    bool goal_start = false;

    auto* train = app.add_subcommand("train", "train the value model per config");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--out", out_dir, "output directory (default: config out_dir)");
    train->add_option("--seed", seed, "override the config seed");
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* eval = app.add_subcommand("eval", "run seeded unfold + fold trials");
    eval->add_option("--config", config_path, "config file")->required();
    eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    eval->add_option("--out", out_dir, "output directory");
    eval->add_option("--trials", trials, "trial count (default: config trials)");
    eval->add_option("--seed", seed, "override the config seed");

    auto* exp = app.add_subcommand("export-dataset",
                                   "export high-coverage observations with keypoint annotations");
    exp->add_option("--config", config_path, "config file")->required();
    exp->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    exp->add_option("--out", out_dir, "output directory");
    exp->add_option("--seed", seed, "override the config seed");

    auto* demo = app.add_subcommand("demo", "dump one episode step by step");
    demo->add_option("--config", config_path, "config file")->required();
    demo->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    demo->add_option("--out", out_dir, "output directory");
    demo->add_option("--seed", seed, "override the config seed");
    demo->add_flag("--goal-start", goal_start, "start from the canonical flattened pose");

    CLI11_PARSE(app, argc, argv);

    try {
        garm::harness::RunConfig cfg = load(config_path, seed);
        if (out_dir.empty()) out_dir = cfg.out_dir;

        if (*train) {
            std::optional<std::string> resume;
            if (!resume_path.empty()) resume = resume_path;
            auto outputs = garm::harness::cmd_train(cfg, out_dir, resume);
            std::cout << "trained " << outputs.steps << " steps over " << outputs.episodes
                      << " episodes\ncheckpoint: " << outputs.checkpoint_path
                      << "\nmetrics: " << outputs.metrics_csv_path << "\n";
        } else if (*eval) {
            int n = trials >= 0 ? trials : cfg.trials;
            auto report = garm::harness::cmd_eval(cfg, checkpoint_path, out_dir, n);
            std::cout << garm::harness::render_report_table(report);
        } else if (*exp) {
            auto outputs = garm::harness::cmd_export_dataset(cfg, checkpoint_path, out_dir);
            std::cout << "exported " << outputs.images << " images with " << outputs.annotations
                      << " annotation records\n";
        } else if (*demo) {
            auto outputs = garm::harness::cmd_demo(cfg, checkpoint_path, out_dir, goal_start);
            std::cout << "wrote " << outputs.files.size() << " images over " << outputs.steps
                      << " steps\n";
        }
    } catch (const garm::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
