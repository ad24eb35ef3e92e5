#include "garm/fold_planner.hpp"

#include <cmath>
#include <stdexcept>

namespace garm::fold {

Vec2 reflect_across_line(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 d = b - a;
    double len2 = dot(d, d);
    if (len2 < 1e-18) return p;
    double t = dot(p - a, d) / len2;
    Vec2 foot = a + d * t;
    return foot + (foot - p);
}

namespace {

const std::vector<std::string>& required_keypoints(garment::Category category) {
    static const std::vector<std::string> long_sleeve{
        "shoulder_left", "shoulder_right", "sleeve_left",
        "sleeve_right",  "waist_left",     "waist_right"};
    static const std::vector<std::string> four_point{"waist_left", "waist_right", "bottom_left",
                                                     "bottom_right"};
    static const std::vector<std::string> square{"corner_nw", "corner_ne", "corner_sw",
                                                 "corner_se"};
    switch (category) {
        case garment::Category::long_sleeve: return long_sleeve;
        case garment::Category::pants:
        case garment::Category::skirt: return four_point;
        case garment::Category::square: return square;
    }
    return square;
}

}  // namespace

std::optional<FoldPlan> plan_fold(garment::Category category,
                                  const std::map<std::string, percept::Keypoint>& keypoints,
                                  double table_extent) {
    std::map<std::string, Vec2> kp;
    for (const auto& name : required_keypoints(category)) {
        auto it = keypoints.find(name);
        if (it == keypoints.end() || !it->second.visible) return std::nullopt;
        kp[name] = it->second.world;
    }

    FoldPlan plan;
    plan.category = category;
    switch (category) {
        case garment::Category::long_sleeve: {
            // cuffs fold across the shoulder->waist line on their own side
            Vec2 left_place =
                reflect_across_line(kp["sleeve_left"], kp["shoulder_left"], kp["waist_left"]);
            Vec2 right_place =
                reflect_across_line(kp["sleeve_right"], kp["shoulder_right"], kp["waist_right"]);
            plan.steps.push_back({{kp["sleeve_left"]}, {left_place}});
            plan.steps.push_back({{kp["sleeve_right"]}, {right_place}});
            plan.steps.push_back({{kp["shoulder_left"], kp["shoulder_right"]},
                                  {kp["waist_left"], kp["waist_right"]}});
            break;
        }
        case garment::Category::pants:
        case garment::Category::skirt: {
            plan.steps.push_back({{kp["bottom_left"], kp["bottom_right"]},
                                  {kp["waist_left"], kp["waist_right"]}});
            Vec2 left_place = kp["waist_left"] + (kp["bottom_left"] - kp["waist_left"]) * 0.75;
            Vec2 right_place = kp["waist_right"] + (kp["bottom_right"] - kp["waist_right"]) * 0.75;
            plan.steps.push_back({{kp["waist_left"], kp["waist_right"]},
                                  {left_place, right_place}});
            break;
        }
        case garment::Category::square: {
            plan.steps.push_back(
                {{kp["corner_nw"], kp["corner_ne"]}, {kp["corner_sw"], kp["corner_se"]}});
            break;
        }
    }

    double half = table_extent / 2.0;
    for (const auto& step : plan.steps) {
        for (const auto& pts : {step.picks, step.places})
            for (const auto& p : pts)
                if (std::abs(p.x) > half || std::abs(p.y) > half) return std::nullopt;
    }
    return plan;
}

FoldTarget fold_target(const garment::GarmentTemplate& tmpl, const FoldPlan& plan,
                       double cloth_thickness) {
    FoldTarget target;
    target.positions = tmpl.canonical_positions;
    std::vector<double> extra_z(target.positions.size(), 0.0);

    for (const auto& step : plan.steps) {
        if (step.picks.empty() || step.picks.size() != step.places.size())
            throw std::invalid_argument("fold step needs matching pick/place points");
        // fold line: perpendicular bisector of pick->place (both pairs agree
        // for the planner's parallel dual-arm steps)
        Vec2 mid0 = (step.picks[0] + step.places[0]) * 0.5;
        Vec2 axis;
        if (step.picks.size() == 2) {
            Vec2 mid1 = (step.picks[1] + step.places[1]) * 0.5;
            axis = mid1 - mid0;
            if (norm(axis) < 1e-12) {
                Vec2 d = step.places[0] - step.picks[0];
                axis = {-d.y, d.x};
            }
        } else {
            Vec2 d = step.places[0] - step.picks[0];
            axis = {-d.y, d.x};
        }
        Vec2 line_a = mid0;
        Vec2 line_b = mid0 + axis;

        // the side containing the picks moves
        Vec2 n{-(line_b - line_a).y, (line_b - line_a).x};
        double pick_side = dot(step.picks[0] - line_a, n);
        if (std::abs(pick_side) < 1e-12 && step.picks.size() == 2)
            pick_side = dot(step.picks[1] - line_a, n);

        for (size_t i = 0; i < target.positions.size(); ++i) {
            Vec2 p = target.positions[i].xy();
            double side = dot(p - line_a, n);
            if (side * pick_side <= 1e-12) continue;
            Vec2 moved = reflect_across_line(p, line_a, line_b);
            target.positions[i].x = moved.x;
            target.positions[i].y = moved.y;
            extra_z[i] += 2.0 * cloth_thickness;
        }
    }
    for (size_t i = 0; i < target.positions.size(); ++i) target.positions[i].z += extra_z[i];

    sim::ClothState state;
    state.positions = target.positions;
    state.velocities.assign(state.positions.size(), Vec3{});
    state.inverse_masses.assign(state.positions.size(), 1.0);
    target.mask = percept::render(state, tmpl.camera).mask;
    return target;
}

FoldScore fold_success(const sim::ClothState& final_state, const FoldTarget& target,
                       double threshold) {
    if (final_state.particle_count() != static_cast<int>(target.positions.size()))
        throw std::invalid_argument("fold_success: particle count mismatch");
    const size_t n = target.positions.size();

    Vec2 c_final{}, c_target{};
    for (size_t i = 0; i < n; ++i) {
        c_final += final_state.positions[i].xy();
        c_target += target.positions[i].xy();
    }
    c_final = c_final * (1.0 / n);
    c_target = c_target * (1.0 / n);
    Vec2 shift = c_target - c_final;

    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        Vec3 aligned = final_state.positions[i];
        aligned.x += shift.x;
        aligned.y += shift.y;
        sum += distance(aligned, target.positions[i]);
    }
    FoldScore score;
    score.mean_distance = sum / n;
    score.success = score.mean_distance < threshold;
    return score;
}

}  // namespace garm::fold
