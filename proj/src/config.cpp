#include "garm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace garm::harness {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<bool(RunConfig&, const std::string&)> set;  // false on parse failure
};

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

Field f_double(const char* section, const char* key, double RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) { return format_double(c.*member); },
            [member](RunConfig& c, const std::string& s) { return parse_double(s, c.*member); }};
}

Field f_int(const char* section, const char* key, int RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& s) {
                std::int64_t v;
                if (!parse_int64(s, v)) return false;
                c.*member = static_cast<int>(v);
                return true;
            }};
}

Field f_int64(const char* section, const char* key, std::int64_t RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& s) { return parse_int64(s, c.*member); }};
}

Field f_uint64(const char* section, const char* key, std::uint64_t RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& s) {
                try {
                    size_t pos = 0;
                    c.*member = std::stoull(s, &pos);
                    return pos == s.size();
                } catch (...) {
                    return false;
                }
            }};
}

Field f_bool(const char* section, const char* key, bool RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) { return c.*member ? "true" : "false"; },
            [member](RunConfig& c, const std::string& s) {
                if (s == "true") c.*member = true;
                else if (s == "false") c.*member = false;
                else return false;
                return true;
            }};
}

Field f_string(const char* section, const char* key, std::string RunConfig::* member) {
    return {section, key, [member](const RunConfig& c) { return c.*member; },
            [member](RunConfig& c, const std::string& s) {
                c.*member = s;
                return true;
            }};
}

Field f_double_list(const char* section, const char* key,
                    std::vector<double> RunConfig::* member) {
    return {section, key,
            [member](const RunConfig& c) {
                std::string out;
                for (size_t i = 0; i < (c.*member).size(); ++i) {
                    if (i) out += ",";
                    out += format_double((c.*member)[i]);
                }
                return out;
            },
            [member](RunConfig& c, const std::string& s) {
                std::vector<double> values;
                std::stringstream ss(s);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    double v;
                    if (!parse_double(item, v)) return false;
                    values.push_back(v);
                }
                if (values.empty()) return false;
                c.*member = std::move(values);
                return true;
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = {
        f_uint64("run", "seed", &RunConfig::seed),
        f_string("run", "category", &RunConfig::category),
        f_string("run", "variant", &RunConfig::variant),
        f_int("run", "trials", &RunConfig::trials),
        f_string("run", "out_dir", &RunConfig::out_dir),

        f_int("camera", "image_dim", &RunConfig::image_dim),
        f_double("camera", "world_extent_m", &RunConfig::world_extent_m),
        f_double("camera", "splat_radius_px", &RunConfig::splat_radius_px),

        f_double("arms", "table_width_m", &RunConfig::table_width_m),
        f_double("arms", "reach_m", &RunConfig::reach_m),

        f_double("sim", "dt_s", &RunConfig::dt_s),
        f_int("sim", "substeps", &RunConfig::substeps),
        f_double("sim", "gravity_mps2", &RunConfig::gravity_mps2),
        f_double("sim", "damping", &RunConfig::damping),
        f_double("sim", "ground_friction", &RunConfig::ground_friction),
        f_double("sim", "repulsion_stiffness", &RunConfig::repulsion_stiffness),
        f_double("sim", "contact_offset_m", &RunConfig::contact_offset_m),

        f_double("garment", "scale_m", &RunConfig::garment_scale_m),
        f_double("garment", "resolution_per_m", &RunConfig::garment_resolution_per_m),
        f_double("garment", "mass_kg", &RunConfig::garment_mass_kg),
        f_double("garment", "stiffness", &RunConfig::garment_stiffness),
        f_double("garment", "stiffness_scale", &RunConfig::stiffness_scale),

        f_double("crumple", "drop_height_min_m", &RunConfig::drop_height_min_m),
        f_double("crumple", "drop_height_max_m", &RunConfig::drop_height_max_m),
        f_double("crumple", "translate_max_m", &RunConfig::translate_max_m),
        f_int("crumple", "settle_steps", &RunConfig::settle_steps),

        f_double("fling", "lift_height_m", &RunConfig::fling_lift_height_m),
        f_double("fling", "forward_m", &RunConfig::fling_forward_m),
        f_double("fling", "backward_m", &RunConfig::fling_backward_m),
        f_double("fling", "place_height_m", &RunConfig::fling_place_height_m),
        f_bool("fling", "stretch", &RunConfig::fling_stretch),
        f_double("fling", "speed_lift_mps", &RunConfig::fling_speed_lift_mps),
        f_double("fling", "speed_forward_mps", &RunConfig::fling_speed_forward_mps),
        f_double("fling", "speed_back_mps", &RunConfig::fling_speed_back_mps),
        f_double("fling", "speed_place_mps", &RunConfig::fling_speed_place_mps),

        f_double("pnp", "lift_height_m", &RunConfig::pnp_lift_height_m),
        f_double("pnp", "speed_mps", &RunConfig::pnp_speed_mps),

        f_double("fold", "lift_height_m", &RunConfig::fold_lift_height_m),
        f_double("fold", "speed_mps", &RunConfig::fold_speed_mps),
        f_double("fold", "thickness_m", &RunConfig::fold_thickness_m),
        f_double("fold", "success_threshold_m", &RunConfig::fold_success_threshold_m),

        f_int("policy", "rotations", &RunConfig::rotations),
        f_double_list("policy", "scales", &RunConfig::scales),
        f_int("policy", "grasp_halfwidth_px", &RunConfig::grasp_halfwidth_px),
        f_double("policy", "aom_delta_px", &RunConfig::aom_delta_px),
        f_bool("policy", "use_aom", &RunConfig::use_aom),

        f_double("reward", "alpha", &RunConfig::alpha),
        f_double("reward", "beta", &RunConfig::beta),

        f_double("train", "learning_rate", &RunConfig::learning_rate),
        f_int64("train", "total_steps", &RunConfig::total_steps),
        f_int("train", "batch_size", &RunConfig::batch_size),
        f_int("train", "replay_capacity", &RunConfig::replay_capacity),
        f_double("train", "epsilon_initial", &RunConfig::epsilon_initial),
        f_double("train", "epsilon_half_life_steps", &RunConfig::epsilon_half_life_steps),
        f_int64("train", "checkpoint_every_steps", &RunConfig::checkpoint_every_steps),
        f_int("train", "max_episode_steps", &RunConfig::max_episode_steps),
        f_double("train", "smooth_coverage", &RunConfig::smooth_coverage),
        f_double("train", "smooth_iou", &RunConfig::smooth_iou),

        f_double("export", "coverage_threshold", &RunConfig::export_coverage_threshold),
        f_int("export", "episodes", &RunConfig::export_episodes),
    };
    return all;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> issues;
    std::map<std::string, const Field*> index;
    for (const auto& f : fields()) index[f.section + "." + f.key] = &f;

    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(line_no) + ": expected key=value");
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        auto it = index.find(section + "." + key);
        if (it == index.end()) {
            issues.push_back("line " + std::to_string(line_no) + ": unknown key [" + section +
                             "] " + key);
            continue;
        }
        if (!it->second->set(cfg, value))
            issues.push_back("line " + std::to_string(line_no) + ": cannot parse value for [" +
                             section + "] " + key + ": '" + value + "'");
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!out.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + "=" + f.get(cfg) + "\n";
    }
    return out;
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError({"cannot write config file: " + path});
    out << serialize_config(cfg);
}

std::uint64_t config_fingerprint(const RunConfig& cfg) {
    std::string s = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

void validate_config(const RunConfig& cfg) {
    std::vector<std::string> issues;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) issues.push_back(msg);
    };

    require(cfg.image_dim > 0, "[camera] image_dim must be positive");
    require(cfg.image_dim % 16 == 0, "[camera] image_dim must be divisible by 16 (model strides)");
    require(cfg.world_extent_m > 0, "[camera] world_extent_m must be positive");
    require(cfg.splat_radius_px > 0, "[camera] splat_radius_px must be positive");
    require(cfg.table_width_m > 0, "[arms] table_width_m must be positive");
    require(cfg.reach_m > 0 && cfg.reach_m < cfg.table_width_m,
            "[arms] reach_m must be in (0, table_width_m)");
    require(cfg.dt_s > 0, "[sim] dt_s must be positive");
    require(cfg.substeps >= 1, "[sim] substeps must be >= 1");
    require(cfg.damping > 0 && cfg.damping <= 1, "[sim] damping must be in (0, 1]");
    require(cfg.ground_friction >= 0, "[sim] ground_friction must be non-negative");
    require(cfg.contact_offset_m >= 0, "[sim] contact_offset_m must be non-negative");
    require(cfg.garment_scale_m > 0, "[garment] scale_m must be positive");
    require(cfg.garment_scale_m <= 0.9 * cfg.table_width_m,
            "[garment] scale_m exceeds the reachable envelope (0.9 x table width)");
    require(cfg.garment_resolution_per_m > 0, "[garment] resolution_per_m must be positive");
    require(cfg.garment_mass_kg == 0.0 ||
                (cfg.garment_mass_kg >= garment::kMassMin &&
                 cfg.garment_mass_kg <= garment::kMassMax),
            "[garment] mass_kg must be 0 (sample) or within [0.2, 2.0]");
    require(cfg.garment_stiffness == 0.0 ||
                (cfg.garment_stiffness >= garment::kStiffnessMin &&
                 cfg.garment_stiffness <= garment::kStiffnessMax),
            "[garment] stiffness must be 0 (sample) or within [0.85, 0.95]");
    require(cfg.stiffness_scale > 0, "[garment] stiffness_scale must be positive");
    require(cfg.drop_height_min_m >= 0 && cfg.drop_height_min_m <= cfg.drop_height_max_m,
            "[crumple] drop height range must satisfy 0 <= min <= max");
    require(cfg.translate_max_m >= 0, "[crumple] translate_max_m must be non-negative");
    require(cfg.settle_steps > 0, "[crumple] settle_steps must be positive");
    require(cfg.fling_lift_height_m > cfg.fling_place_height_m,
            "[fling] lift_height_m must exceed place_height_m");
    require(cfg.fling_place_height_m >= 0, "[fling] place_height_m must be non-negative");
    require(cfg.fling_forward_m > 0, "[fling] forward_m must be positive");
    require(cfg.fling_backward_m > 0, "[fling] backward_m must be positive");
    require(cfg.pnp_lift_height_m > 0, "[pnp] lift_height_m must be positive");
    require(cfg.fold_success_threshold_m > 0, "[fold] success_threshold_m must be positive");
    require(cfg.rotations >= 1, "[policy] rotations must be >= 1");
    require(!cfg.scales.empty(), "[policy] scales must not be empty");
    for (double s : cfg.scales) require(s > 0, "[policy] scales must be positive");
    require(cfg.grasp_halfwidth_px > 0, "[policy] grasp_halfwidth_px must be positive");
    require(cfg.aom_delta_px > 0, "[policy] aom_delta_px must be positive");
    require(cfg.alpha > 0 && cfg.alpha < 1, "[reward] alpha must be in (0, 1)");
    require(cfg.beta > 0 && cfg.beta < 1, "[reward] beta must be in (0, 1)");
    require(cfg.alpha + cfg.beta < 1, "[reward] alpha + beta must be < 1");
    require(cfg.learning_rate > 0, "[train] learning_rate must be positive");
    require(cfg.total_steps >= 0, "[train] total_steps must be non-negative");
    require(cfg.batch_size > 0, "[train] batch_size must be positive");
    require(cfg.replay_capacity > 0, "[train] replay_capacity must be positive");
    require(cfg.epsilon_initial > 0 && cfg.epsilon_initial <= 1,
            "[train] epsilon_initial must be in (0, 1]");
    require(cfg.epsilon_half_life_steps > 0, "[train] epsilon_half_life_steps must be positive");
    require(cfg.max_episode_steps > 0, "[train] max_episode_steps must be positive");
    require(cfg.smooth_coverage > 0 && cfg.smooth_coverage <= 1.2,
            "[train] smooth_coverage must be in (0, 1.2]");
    require(cfg.smooth_iou >= 0 && cfg.smooth_iou <= 1, "[train] smooth_iou must be in [0, 1]");
    require(cfg.trials >= 0, "[run] trials must be non-negative");
    require(cfg.export_coverage_threshold >= 0, "[export] coverage_threshold must be >= 0");
    require(cfg.export_episodes > 0, "[export] episodes must be positive");
    try {
        garment::category_from_name(cfg.category);
    } catch (const std::exception& e) {
        issues.push_back(std::string("[run] ") + e.what());
    }
    try {
        learn::variant_from_name(cfg.variant);
    } catch (const std::exception& e) {
        issues.push_back(std::string("[run] ") + e.what());
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

learn::EnvConfig to_env_config(const RunConfig& cfg) {
    learn::EnvConfig env;
    env.category = garment::category_from_name(cfg.category);
    env.garment_scale = cfg.garment_scale_m;
    env.garment_resolution = cfg.garment_resolution_per_m;
    env.camera = {cfg.image_dim, cfg.world_extent_m, cfg.splat_radius_px};
    env.arms.table_width = cfg.table_width_m;
    env.arms.left_base = {-cfg.table_width_m / 2.0, 0.0};
    env.arms.right_base = {cfg.table_width_m / 2.0, 0.0};
    env.arms.reach = cfg.reach_m;
    env.fling.lift_height = cfg.fling_lift_height_m;
    env.fling.forward = cfg.fling_forward_m;
    env.fling.backward = cfg.fling_backward_m;
    env.fling.place_height = cfg.fling_place_height_m;
    env.fling.stretch_enabled = cfg.fling_stretch;
    env.fling.phase_speeds[0] = cfg.fling_speed_lift_mps;
    env.fling.phase_speeds[1] = cfg.fling_speed_forward_mps;
    env.fling.phase_speeds[2] = cfg.fling_speed_back_mps;
    env.fling.phase_speeds[3] = cfg.fling_speed_place_mps;
    env.pnp.lift_height = cfg.pnp_lift_height_m;
    env.pnp.speed = cfg.pnp_speed_mps;
    env.crumple.drop_height_min = cfg.drop_height_min_m;
    env.crumple.drop_height_max = cfg.drop_height_max_m;
    env.crumple.translate_max = cfg.translate_max_m;
    env.crumple.settle_steps = cfg.settle_steps;
    env.rotations = cfg.rotations;
    env.scales = cfg.scales;
    env.grasp_halfwidth_px = cfg.grasp_halfwidth_px;
    env.aom.delta_px = cfg.aom_delta_px;
    env.use_aom = cfg.use_aom;
    env.weights.alpha = cfg.alpha;
    env.weights.beta = cfg.beta;
    env.sample_physics = cfg.garment_mass_kg == 0.0 || cfg.garment_stiffness == 0.0;
    if (!env.sample_physics)
        env.fixed_physics = {cfg.garment_mass_kg, cfg.garment_stiffness};
    env.stiffness_scale = cfg.stiffness_scale;
    env.sim_params.dt = cfg.dt_s;
    env.sim_params.substeps = cfg.substeps;
    env.sim_params.gravity = cfg.gravity_mps2;
    env.sim_params.damping = cfg.damping;
    env.sim_params.ground_friction = cfg.ground_friction;
    env.sim_params.repulsion_stiffness = cfg.repulsion_stiffness;
    env.sim_params.contact_offset = cfg.contact_offset_m;
    return env;
}

learn::TrainConfig to_train_config(const RunConfig& cfg) {
    learn::TrainConfig t;
    t.learning_rate = cfg.learning_rate;
    t.total_steps = cfg.total_steps;
    t.epsilon_initial = cfg.epsilon_initial;
    t.epsilon_half_life = cfg.epsilon_half_life_steps;
    t.batch_size = cfg.batch_size;
    t.replay_capacity = cfg.replay_capacity;
    t.checkpoint_every = cfg.checkpoint_every_steps;
    t.max_episode_steps = cfg.max_episode_steps;
    t.smooth_coverage = cfg.smooth_coverage;
    t.smooth_iou = cfg.smooth_iou;
    t.seed = cfg.seed;
    return t;
}

}  // namespace garm::harness
