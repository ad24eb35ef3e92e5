#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "garm/checkpoint.hpp"
#include "garm/commands.hpp"
#include "garm/config.hpp"
#include "garm/png_io.hpp"

using namespace garm;
using namespace garm::harness;

namespace fs = std::filesystem;

namespace {

/// Small-but-real config: tiny square cloth, 32x32 camera, two layers.
RunConfig smoke_config() {
    RunConfig cfg;
    cfg.category = "square";
    cfg.garment_scale_m = 0.55;
    cfg.garment_resolution_per_m = 22.0;
    cfg.garment_mass_kg = 0.5;
    cfg.garment_stiffness = 0.9;
    cfg.stiffness_scale = 2000.0;
    cfg.image_dim = 32;
    cfg.splat_radius_px = 1.2;
    cfg.rotations = 2;
    cfg.scales = {1.0};
    cfg.grasp_halfwidth_px = 2;
    cfg.use_aom = false;
    cfg.total_steps = 6;
    cfg.batch_size = 4;
    cfg.replay_capacity = 64;
    cfg.max_episode_steps = 3;
    cfg.checkpoint_every_steps = 4;
    cfg.epsilon_half_life_steps = 50.0;
    cfg.trials = 2;
    cfg.export_episodes = 2;
    cfg.seed = 21;
    return cfg;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("garm_test_" + name);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

int count_files(const fs::path& dir, const std::string& needle) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().find(needle) != std::string::npos) ++n;
    return n;
}

}  // namespace

TEST_CASE("config: round trip is identical; fingerprint is stable") {
    RunConfig cfg = smoke_config();
    std::string text = serialize_config(cfg);
    RunConfig parsed = parse_config(text);
    CHECK(serialize_config(parsed) == text);
    CHECK(config_fingerprint(parsed) == config_fingerprint(cfg));

    parsed.seed = cfg.seed + 1;
    CHECK(config_fingerprint(parsed) != config_fingerprint(cfg));
}

TEST_CASE("config: unknown keys and invalid values are all reported") {
    std::string text = "[run]\nseed=1\nbogus_key=3\n[sim]\ndt_s=banana\n[nosuch]\nx=1\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.issues().size() == 3);
        CHECK(e.issues()[0].find("bogus_key") != std::string::npos);
        CHECK(e.issues()[1].find("dt_s") != std::string::npos);
        CHECK(e.issues()[2].find("nosuch") != std::string::npos);
    }
}

TEST_CASE("config: constraint violations name the constraint") {
    RunConfig cfg = smoke_config();
    cfg.alpha = 0.6;
    cfg.beta = 0.5;
    try {
        validate_config(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        bool mentions = false;
        for (const auto& issue : e.issues())
            mentions = mentions || issue.find("alpha + beta") != std::string::npos;
        CHECK(mentions);
    }
}

TEST_CASE("checkpoint: save/load round trip preserves parameters and step") {
    TempDir dir("ckpt");
    learn::ValueModel model;
    model.init(77);
    learn::AdamState adam;
    adam.t = 12;
    adam.moments["enc0.conv0.w"] = {std::vector<double>(16, 0.5), std::vector<double>(16, 0.25)};

    std::string path = (dir.path / "model.bin").string();
    save_checkpoint(path, model, adam, 42, 0xFEEDu);

    learn::ValueModel loaded;
    loaded.init(1);  // different init, must be overwritten
    learn::AdamState loaded_adam;
    CheckpointInfo info = load_checkpoint(path, loaded, loaded_adam);
    CHECK(info.step == 42);
    CHECK(info.config_fingerprint == 0xFEEDu);
    CHECK(loaded_adam.t == 12);

    bool identical = true;
    std::vector<std::pair<std::string, std::vector<double>>> a, b;
    model.visit_params([&](const std::string& n, const std::vector<double>& v) {
        a.emplace_back(n, v);
    });
    loaded.visit_params([&](const std::string& n, const std::vector<double>& v) {
        b.emplace_back(n, v);
    });
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        identical = identical && a[i].first == b[i].first && a[i].second == b[i].second;
    CHECK(identical);
    CHECK(loaded_adam.moments.at("enc0.conv0.w").first == std::vector<double>(16, 0.5));
}

TEST_CASE("png writer produces decodable signatures") {
    TempDir dir("png");
    Grid<std::uint8_t> img(16, 16, 0);
    for (int i = 0; i < 16; ++i) img.at(i, i) = 255;
    std::string path = (dir.path / "x.png").string();
    write_gray_png(path, img);
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    unsigned char sig[8];
    in.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[0] == 0x89);
    CHECK(sig[1] == 'P');
    CHECK(fs::file_size(path) > 50);
}

TEST_CASE("cmd_train writes a checkpoint and one CSV row per episode; resume continues") {
    TempDir dir("train");
    RunConfig cfg = smoke_config();
    TrainOutputs out = cmd_train(cfg, dir.str());
    CHECK(fs::exists(out.checkpoint_path));
    CHECK(fs::exists(out.metrics_csv_path));
    // header + one row per episode
    CHECK(count_lines(out.metrics_csv_path) == out.episodes + 1);

    learn::ValueModel model;
    model.init(1);
    learn::AdamState adam;
    CheckpointInfo info = load_checkpoint(out.checkpoint_path, model, adam);
    CHECK(info.step == cfg.total_steps);

    // resume: the step counter continues
    TempDir dir2("train_resume");
    TrainOutputs out2 = cmd_train(cfg, dir2.str(), out.checkpoint_path);
    CheckpointInfo info2 = load_checkpoint(out2.checkpoint_path, model, adam);
    CHECK(info2.step == 2 * cfg.total_steps);

    // config mismatch is refused
    RunConfig other = cfg;
    other.seed = 999;
    TempDir dir3("train_mismatch");
    CHECK_THROWS(cmd_train(other, dir3.str(), out.checkpoint_path));
}

TEST_CASE("cmd_eval: zero trials, determinism, variant metadata") {
    TempDir dir("eval");
    RunConfig cfg = smoke_config();
    TrainOutputs trained = cmd_train(cfg, dir.str());

    EvalReport empty = cmd_eval(cfg, trained.checkpoint_path, dir.str(), 0);
    CHECK(empty.trials.empty());
    CHECK(empty.success_rate == 0.0);

    EvalReport a = cmd_eval(cfg, trained.checkpoint_path, dir.str(), 2);
    EvalReport b = cmd_eval(cfg, trained.checkpoint_path, dir.str(), 2);
    REQUIRE(a.trials.size() == 2);
    for (size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].coverage == b.trials[i].coverage);
        CHECK(a.trials[i].iou == b.trials[i].iou);
    }

    RunConfig pnp_cfg = cfg;
    pnp_cfg.variant = "pnp_only";
    TempDir dir_pnp("eval_pnp");
    TrainOutputs pnp_trained = cmd_train(pnp_cfg, dir_pnp.str());
    EvalReport pnp_report = cmd_eval(pnp_cfg, pnp_trained.checkpoint_path, dir_pnp.str(), 1);
    CHECK(pnp_report.variant == "pnp_only");
    CHECK(a.variant == "full");

    // fingerprint mismatch rejected
    CHECK_THROWS(cmd_eval(pnp_cfg, trained.checkpoint_path, dir.str(), 1));
}

TEST_CASE("cmd_export_dataset: thresholds and annotation counts") {
    TempDir dir("export");
    RunConfig cfg = smoke_config();
    TrainOutputs trained = cmd_train(cfg, dir.str());

    SUBCASE("every exported record exceeds the threshold; counts match") {
        TempDir out("export_out");
        cfg.export_coverage_threshold = 0.5;
        ExportOutputs ex = cmd_export_dataset(cfg, trained.checkpoint_path, out.str());
        CHECK(ex.images == ex.annotations);
        int pngs = count_files(out.path, "obs_");
        CHECK(pngs == ex.images);
        std::ifstream ann(out.path / "annotations.jsonl");
        std::string line;
        int rows = 0;
        while (std::getline(ann, line)) {
            if (line.empty()) continue;
            ++rows;
            CHECK(line.find("\"coverage\"") != std::string::npos);
            auto pos = line.find("\"coverage\":");
            double cov = std::stod(line.substr(pos + 11));
            CHECK(cov > 0.5);
        }
        CHECK(rows == ex.annotations);
    }

    SUBCASE("threshold above 1 exports nothing and warns") {
        TempDir out("export_none");
        cfg.export_coverage_threshold = 1.1;
        ExportOutputs ex = cmd_export_dataset(cfg, trained.checkpoint_path, out.str());
        CHECK(ex.images == 0);
        CHECK(ex.warned_empty);
    }
}

TEST_CASE("cmd_demo: per-step image triples with sortable names") {
    TempDir dir("demo");
    RunConfig cfg = smoke_config();
    TrainOutputs trained = cmd_train(cfg, dir.str());

    SUBCASE("an episode dumps one triple per policy step") {
        TempDir out("demo_out");
        DemoOutputs demo = cmd_demo(cfg, trained.checkpoint_path, out.str());
        CHECK(demo.steps > 0);
        int observations = count_files(out.path, "_observation.png");
        int valuemaps = count_files(out.path, "_valuemap.png");
        int actions = count_files(out.path, "_action.png");
        CHECK(valuemaps == demo.steps);
        CHECK(actions == demo.steps);
        CHECK(observations == demo.steps);
        CHECK(fs::exists(out.path / "initial.png"));
        CHECK(fs::exists(out.path / "step_000_valuemap.png"));
    }

    SUBCASE("goal start writes only the initial frame") {
        TempDir out("demo_goal");
        DemoOutputs demo = cmd_demo(cfg, trained.checkpoint_path, out.str(), true);
        CHECK(demo.steps == 0);
        CHECK(fs::exists(out.path / "initial.png"));
        CHECK(count_files(out.path, "_valuemap.png") == 0);
    }
}
