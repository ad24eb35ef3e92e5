#pragma once

#include <optional>
#include <string>
#include <vector>

#include "garm/config.hpp"

namespace garm::harness {

struct TrainOutputs {
    std::string checkpoint_path;
    std::string metrics_csv_path;
    int episodes = 0;
    std::int64_t steps = 0;
};

/// Train per config; writes <out>/checkpoint.bin, <out>/metrics.csv and
/// periodic mask / value-map PNG dumps. Resumes when `resume_from` is given.
TrainOutputs cmd_train(const RunConfig& cfg, const std::string& out_dir,
                       const std::optional<std::string>& resume_from = {});

struct EvalTrial {
    int trial = 0;
    double coverage = 0.0;
    double iou = 0.0;
    double kd = 0.0;
    int steps = 0;
    bool smooth = false;
    double fold_distance = 0.0;  // m; NaN when no fold was attempted
    bool success = false;
};

struct EvalReport {
    std::string variant;
    std::string category;
    std::uint64_t seed = 0;
    std::uint64_t config_fingerprint = 0;
    std::vector<EvalTrial> trials;
    double mean_coverage = 0.0;
    double mean_iou = 0.0;
    double mean_kd = 0.0;
    double success_rate = 0.0;
};

/// Fixed-seed crumple trials: unfold with epsilon=0, then plan and execute the
/// keypoint fold; success is the mean-particle-distance criterion.
EvalReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                    const std::string& out_dir, int trials);

std::string render_report_table(const EvalReport& report);

struct ExportOutputs {
    int images = 0;
    int annotations = 0;
    bool warned_empty = false;
};

/// Save every observation whose coverage exceeds the configured threshold as
/// PNG plus a JSON-lines annotation record (keypoints, category, coverage).
ExportOutputs cmd_export_dataset(const RunConfig& cfg, const std::string& checkpoint_path,
                                 const std::string& out_dir);

struct DemoOutputs {
    int steps = 0;
    std::vector<std::string> files;
};

/// One epsilon=0 episode with per-step dumps: observation, winning-layer value
/// map, action overlay and the valid-action mask.
DemoOutputs cmd_demo(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& out_dir, bool goal_start = false);

}  // namespace garm::harness
