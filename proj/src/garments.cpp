#include "garm/garments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

namespace garm::garment {

const char* category_name(Category c) {
    switch (c) {
        case Category::long_sleeve: return "long_sleeve";
        case Category::pants: return "pants";
        case Category::skirt: return "skirt";
        case Category::square: return "square";
    }
    return "?";
}

Category category_from_name(const std::string& name) {
    if (name == "long_sleeve") return Category::long_sleeve;
    if (name == "pants") return Category::pants;
    if (name == "skirt") return Category::skirt;
    if (name == "square") return Category::square;
    throw std::invalid_argument("unknown garment category: " + name);
}

namespace {

struct Silhouette {
    double bbox_w = 0.0, bbox_h = 0.0;
    double feature = 0.0;  // narrowest dimension, drives the resolution check
    std::function<bool(double, double)> inside;            // centered coords
    std::vector<std::pair<std::string, Vec2>> keypoints;   // centered coords
};

Silhouette shape_for(Category category, double s) {
    constexpr double eps = 1e-9;
    Silhouette sh;
    switch (category) {
        case Category::long_sleeve: {
            // T-shape: body 0.5s x 0.6s, sleeves 0.25s long and 0.30s thick
            // hanging off the shoulder band; shoulders face +y.
            double half_body = 0.25 * s, half_h = 0.30 * s, sleeve_th = 0.30 * s;
            sh.bbox_w = s;
            sh.bbox_h = 0.6 * s;
            sh.feature = sleeve_th;
            sh.inside = [=](double x, double y) {
                if (std::abs(y) > half_h + eps) return false;
                if (std::abs(x) <= half_body + eps) return true;
                return std::abs(x) <= 0.5 * s + eps && y >= half_h - sleeve_th - eps;
            };
            sh.keypoints = {{"shoulder_left", {-half_body, half_h}},
                            {"shoulder_right", {half_body, half_h}},
                            {"sleeve_left", {-0.5 * s, half_h - 0.5 * sleeve_th}},
                            {"sleeve_right", {0.5 * s, half_h - 0.5 * sleeve_th}},
                            {"waist_left", {-half_body, -half_h}},
                            {"waist_right", {half_body, -half_h}}};
            break;
        }
        case Category::pants: {
            // waistband 0.643s wide / 0.4s tall over two 0.257s-wide legs
            double half_w = 0.3215 * s, leg_w = 0.257 * s, band_top = 0.5 * s,
                   band_bottom = 0.1 * s;
            sh.bbox_w = 0.643 * s;
            sh.bbox_h = s;
            sh.feature = leg_w;
            sh.inside = [=](double x, double y) {
                if (y > band_top + eps || y < -0.5 * s - eps) return false;
                if (std::abs(x) > half_w + eps) return false;
                if (y >= band_bottom - eps) return true;
                return std::abs(x) >= half_w - leg_w - eps;
            };
            sh.keypoints = {{"waist_left", {-half_w, band_top}},
                            {"waist_right", {half_w, band_top}},
                            {"bottom_left", {-half_w, -0.5 * s}},
                            {"bottom_right", {half_w, -0.5 * s}}};
            break;
        }
        case Category::skirt: {
            // trapezoid, waist 0.714s narrowing from the hem s; length 0.714s
            double half_len = 0.357 * s, waist_half = 0.357 * s, hem_half = 0.5 * s;
            sh.bbox_w = s;
            sh.bbox_h = 0.714 * s;
            sh.feature = std::min(2.0 * waist_half, 2.0 * half_len);
            sh.inside = [=](double x, double y) {
                if (std::abs(y) > half_len + eps) return false;
                double t = (y + half_len) / (2.0 * half_len);  // 0 at hem, 1 at waist
                double half = hem_half + (waist_half - hem_half) * t;
                return std::abs(x) <= half + eps;
            };
            sh.keypoints = {{"waist_left", {-waist_half, half_len}},
                            {"waist_right", {waist_half, half_len}},
                            {"bottom_left", {-hem_half, -half_len}},
                            {"bottom_right", {hem_half, -half_len}}};
            break;
        }
        case Category::square: {
            double h = 0.5 * s;
            sh.bbox_w = s;
            sh.bbox_h = s;
            sh.feature = s;
            sh.inside = [=](double x, double y) {
                return std::abs(x) <= h + eps && std::abs(y) <= h + eps;
            };
            sh.keypoints = {{"corner_nw", {-h, h}},
                            {"corner_ne", {h, h}},
                            {"corner_sw", {-h, -h}},
                            {"corner_se", {h, -h}}};
            break;
        }
    }
    return sh;
}

void check_connected(const GarmentTemplate& t) {
    const int rows = t.grid_rows, cols = t.grid_cols;
    int start = -1;
    for (size_t i = 0; i < t.layout.size(); ++i)
        if (t.layout[i]) { start = static_cast<int>(i); break; }
    if (start < 0) throw std::invalid_argument("empty garment layout");
    std::vector<std::uint8_t> seen(t.layout.size(), 0);
    std::deque<int> work{start};
    seen[start] = 1;
    int visited = 0;
    while (!work.empty()) {
        int cur = work.front();
        work.pop_front();
        ++visited;
        int r = cur / cols, c = cur % cols;
        const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            int rr = r + dr[k], cc = c + dc[k];
            if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
            int idx = rr * cols + cc;
            if (t.layout[idx] && !seen[idx]) {
                seen[idx] = 1;
                work.push_back(idx);
            }
        }
    }
    int total = 0;
    for (auto v : t.layout) total += v != 0;
    if (visited != total) throw std::invalid_argument("garment layout is not connected");
}

}  // namespace

GarmentTemplate make_template(Category category, double scale, double resolution,
                              const percept::CameraConfig& camera, double table_width) {
    if (scale <= 0.0 || resolution <= 0.0)
        throw std::invalid_argument("garment scale and resolution must be positive");
    if (scale > 0.9 * table_width)
        throw std::invalid_argument("garment exceeds the dual-arm reachable envelope");

    Silhouette sh = shape_for(category, scale);
    int feature_particles = static_cast<int>(std::floor(sh.feature * resolution + 1e-9)) + 1;
    if (feature_particles < 8)
        throw std::invalid_argument("resolution leaves the narrowest garment feature with fewer "
                                    "than 8 particles");

    GarmentTemplate t;
    t.category = category;
    t.scale = scale;
    t.resolution = resolution;
    t.spacing = 1.0 / resolution;
    t.grid_cols = static_cast<int>(std::round(sh.bbox_w * resolution)) + 1;
    t.grid_rows = static_cast<int>(std::round(sh.bbox_h * resolution)) + 1;
    t.camera = camera;

    const double cx = (t.grid_cols - 1) * 0.5, cy = (t.grid_rows - 1) * 0.5;
    t.layout.assign(static_cast<size_t>(t.grid_rows) * t.grid_cols, 0);
    for (int r = 0; r < t.grid_rows; ++r) {
        for (int c = 0; c < t.grid_cols; ++c) {
            double x = (c - cx) * t.spacing;
            double y = (cy - r) * t.spacing;
            if (sh.inside(x, y)) t.layout[static_cast<size_t>(r) * t.grid_cols + c] = 1;
        }
    }
    check_connected(t);

    auto [state, net] = sim::build_cloth_masked(t.grid_rows, t.grid_cols, t.spacing, 1.0, 0.9,
                                                t.layout, sim::kDefaultStiffnessScale,
                                                &t.particle_of_cell);
    t.canonical_positions = state.positions;

    for (const auto& [name, pos] : sh.keypoints) {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int p = 0; p < state.particle_count(); ++p) {
            Vec2 d = state.positions[p].xy() - pos;
            double d2 = dot(d, d);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = p;
            }
        }
        t.keypoint_indices[name] = best;
    }

    GoalTemplate goal = goal_template(t, camera);
    t.goal_mask = std::move(goal.mask);
    t.goal_keypoints_world = std::move(goal.keypoints_world);
    t.goal_keypoints_px = std::move(goal.keypoints_px);
    t.c_max_pixels = goal.mask_pixels;
    t.c_max_area_m2 = goal.mask_pixels * camera.pixel_size() * camera.pixel_size();
    return t;
}

PhysicsSample sample_physics(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mass(kMassMin, kMassMax);
    std::uniform_real_distribution<double> stiff(kStiffnessMin, kStiffnessMax);
    PhysicsSample s;
    s.total_mass = mass(rng);
    s.stiffness = stiff(rng);
    return s;
}

sim::Scene make_scene(const GarmentTemplate& tmpl, const PhysicsSample& physics,
                      const sim::SimParams& base, double stiffness_scale) {
    sim::Scene scene;
    scene.params = base;
    auto [state, net] = sim::build_cloth_masked(tmpl.grid_rows, tmpl.grid_cols, tmpl.spacing,
                                                physics.total_mass, physics.stiffness,
                                                tmpl.layout, stiffness_scale);
    state.positions = tmpl.canonical_positions;
    scene.params.repulsion_radius = 0.5 * tmpl.spacing;
    double min_mass = physics.total_mass / state.particle_count();
    scene.params.substeps = sim::stable_substeps(scene.params.dt, net.max_stiffness(), min_mass,
                                                 scene.params.substeps);
    scene.state = std::move(state);
    scene.springs = std::move(net);
    return scene;
}

sim::Scene crumple_init(const GarmentTemplate& tmpl, const PhysicsSample& physics,
                        std::uint64_t seed, const CrumpleConfig& config,
                        const sim::SimParams& base, double stiffness_scale,
                        double* coverage_out) {
    if (config.drop_height_min > config.drop_height_max || config.drop_height_min < 0.0 ||
        config.translate_max < 0.0)
        throw std::invalid_argument("invalid crumple ranges");

    sim::Scene scene = make_scene(tmpl, physics, base, stiffness_scale);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> particle(0, scene.state.particle_count() - 1);
    std::uniform_real_distribution<double> height(config.drop_height_min, config.drop_height_max);
    std::uniform_real_distribution<double> dist(0.0, config.translate_max);

    // rotate the flat garment about its centroid
    double a = angle(rng);
    double ca = std::cos(a), sa = std::sin(a);
    Vec3 centroid{};
    for (const auto& p : scene.state.positions) centroid += p;
    centroid = centroid * (1.0 / scene.state.particle_count());
    for (auto& p : scene.state.positions) {
        double x = p.x - centroid.x, y = p.y - centroid.y;
        p.x = ca * x - sa * y + centroid.x;
        p.y = sa * x + ca * y + centroid.y;
    }

    int grasp_idx = particle(rng);
    double drop_h = height(rng);
    double move_d = dist(rng);
    double move_a = angle(rng);

    auto pickers = std::span<sim::Picker>(scene.pickers.data(), scene.pickers.size());
    sim::picker_grab(scene.state, scene.pickers[0], scene.state.positions[grasp_idx]);
    Vec3 top = scene.pickers[0].position;
    top.z = drop_h;
    sim::move_picker_through(scene.state, scene.springs, scene.params, scene.pickers[0], {top},
                             config.lift_speed);
    sim::picker_release(scene.state, scene.pickers[0]);
    sim::settle(scene.state, scene.springs, scene.params, pickers, sim::kSettleSpeedThreshold,
                config.settle_steps);

    Vec3 shift{move_d * std::cos(move_a), move_d * std::sin(move_a), 0.0};
    for (auto& p : scene.state.positions) p += shift;
    sim::settle(scene.state, scene.springs, scene.params, pickers, sim::kSettleSpeedThreshold,
                config.settle_steps);

    if (coverage_out) {
        percept::Observation obs = percept::render(scene.state, tmpl.camera);
        *coverage_out = tmpl.c_max_pixels > 0
                            ? static_cast<double>(mask_count(obs.mask)) / tmpl.c_max_pixels
                            : 0.0;
    }
    return scene;
}

GoalTemplate goal_template(const GarmentTemplate& tmpl, const percept::CameraConfig& camera) {
    sim::ClothState state;
    state.positions = tmpl.canonical_positions;
    state.velocities.assign(state.positions.size(), Vec3{});
    state.inverse_masses.assign(state.positions.size(), 1.0);
    state.grid_rows = tmpl.grid_rows;
    state.grid_cols = tmpl.grid_cols;

    GoalTemplate goal;
    goal.mask = percept::render(state, camera).mask;
    goal.mask_pixels = mask_count(goal.mask);
    for (const auto& [name, idx] : tmpl.keypoint_indices) {
        Vec2 world = tmpl.canonical_positions[idx].xy();
        goal.keypoints_world[name] = world;
        goal.keypoints_px[name] = camera.world_to_pixel(world);
    }
    return goal;
}

}  // namespace garm::garment
