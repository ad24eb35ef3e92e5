#include "garm/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace garm::prim {

namespace {

constexpr double kOrderTolerance = 1e-9;

double signed_theta(double theta_deg) {
    double t = std::fmod(theta_deg, 360.0);
    if (t > 180.0) t -= 360.0;
    if (t <= -180.0) t += 360.0;
    return t;
}

std::span<sim::Picker> pickers_of(sim::Scene& scene) {
    return {scene.pickers.data(), scene.pickers.size()};
}

void release_all(sim::Scene& scene) {
    for (auto& pk : scene.pickers) sim::picker_release(scene.state, pk);
}

void settle_scene(sim::Scene& scene) {
    sim::settle(scene.state, scene.springs, scene.params, pickers_of(scene));
}

Vec3 clamp_floor(const Vec3& p, const sim::SimParams& params) {
    Vec3 out = p;
    out.z = std::max(out.z, params.ground_height + params.contact_offset);
    return out;
}

bool segments_cross(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return cross(q - p, r - p);
    };
    double o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
    double o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

}  // namespace

void validate(const ActionParams& action, int image_dim) {
    if (action.w_px <= 0) throw std::invalid_argument("action width must be positive");
    auto in_frame = [&](double x, double y) {
        return x >= 0 && x < image_dim && y >= 0 && y < image_dim;
    };
    if (!in_frame(action.x, action.y))
        throw std::invalid_argument("action pixel outside the image");
    auto [a, b] = action_pixels(action);
    if (!in_frame(a.x, a.y) || !in_frame(b.x, b.y))
        throw std::invalid_argument("grasp point outside the image");
    if (action.primitive == Primitive::fling &&
        std::abs(signed_theta(action.theta_deg)) > 90.0 + kOrderTolerance)
        throw std::invalid_argument("fling rotation outside [-90, 90] degrees");
}

std::pair<Vec2, Vec2> action_pixels(const ActionParams& action) {
    double x = action.x, y = action.y, w = action.w_px;
    if (action.primitive == Primitive::fling) return {{x, y + w}, {x, y - w}};
    return {{x, y}, {x, y - w}};
}

WorldAction to_world_action(const ActionParams& action, const percept::PixelTransform& transform,
                            const percept::CameraConfig& camera) {
    auto [a, b] = action_pixels(action);
    Vec2 ao = transform.inverse(a);
    Vec2 bo = transform.inverse(b);
    if (!camera.pixel_in_frame(ao) || !camera.pixel_in_frame(bo))
        throw std::invalid_argument("grasp point outside the image after inverse transform");
    return {action.primitive, camera.pixel_to_world(ao), camera.pixel_to_world(bo)};
}

void execute_pnp(sim::Scene& scene, const Vec3& pick, const Vec3& place, const PnpParams& params) {
    sim::Picker& picker = scene.pickers[0];
    sim::picker_grab(scene.state, picker, pick);
    Vec3 up = pick;
    up.z = params.lift_height;
    Vec3 above = place;
    above.z = params.lift_height;
    Vec3 down = clamp_floor(place, scene.params);
    sim::move_picker_through(scene.state, scene.springs, scene.params, picker,
                             {up, above, down}, params.speed, scene.trace);
    sim::picker_release(scene.state, picker);
    settle_scene(scene);
}

double rest_geodesic(const sim::SpringNetwork& springs, int particle_count, int from, int to) {
    std::vector<std::vector<std::pair<int, double>>> adj(particle_count);
    for (const auto& s : springs.springs) {
        if (s.kind == sim::SpringKind::bend) continue;
        adj[s.i].emplace_back(s.j, s.rest_length);
        adj[s.j].emplace_back(s.i, s.rest_length);
    }
    std::vector<double> dist(particle_count, std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[from] = 0.0;
    heap.push({0.0, from});
    while (!heap.empty()) {
        auto [d, i] = heap.top();
        heap.pop();
        if (d > dist[i]) continue;
        if (i == to) return d;
        for (auto [j, w] : adj[i]) {
            double nd = d + w;
            if (nd < dist[j]) {
                dist[j] = nd;
                heap.push({nd, j});
            }
        }
    }
    return dist[to];
}

void stretch(sim::Scene& scene, double taut_fraction) {
    sim::Picker& left = scene.pickers[0];
    sim::Picker& right = scene.pickers[1];
    if (!left.attached || !right.attached)
        throw std::invalid_argument("stretch requires both pickers attached");

    double geodesic = rest_geodesic(scene.springs, scene.state.particle_count(), *left.attached,
                                    *right.attached);
    if (!std::isfinite(geodesic) || geodesic <= 0.0) return;

    auto separation = [&] { return distance(left.position, right.position); };
    Vec3 axis = right.position - left.position;
    double len = norm(axis);
    if (len < 1e-9) return;
    axis = axis * (1.0 / len);

    auto extent = [&] {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& p : scene.state.positions) {
            double proj = dot(p, axis);
            lo = std::min(lo, proj);
            hi = std::max(hi, proj);
        }
        return hi - lo;
    };

    const double step_increment = 0.005;  // m per side
    const double stretch_speed = 0.2;
    while (separation() < taut_fraction * geodesic) {
        double grow = std::min(2.0 * step_increment, geodesic - separation());
        if (grow <= 1e-6) break;
        double before_extent = extent();
        double before_sep = separation();
        std::vector<Vec3> lp{left.position - axis * (grow / 2.0)};
        std::vector<Vec3> rp{right.position + axis * (grow / 2.0)};
        std::array<std::vector<Vec3>, 2> paths{lp, rp};
        sim::move_pickers_through(scene.state, scene.springs, scene.params, pickers_of(scene),
                                  {paths.data(), paths.size()}, stretch_speed, scene.trace);
        if (extent() - before_extent < 0.2 * (separation() - before_sep)) break;
    }
}

void execute_fling(sim::Scene& scene, const Vec3& left_grasp, const Vec3& right_grasp,
                   const FlingParams& params) {
    if (left_grasp.x > right_grasp.x + kOrderTolerance)
        throw std::invalid_argument("fling grasps must satisfy left.x < right.x");
    if (params.lift_height <= params.place_height || params.place_height < 0.0 ||
        params.forward <= 0.0 || params.backward <= 0.0)
        throw std::invalid_argument("invalid fling parameters");

    sim::Picker& left = scene.pickers[0];
    sim::Picker& right = scene.pickers[1];
    sim::picker_grab(scene.state, left, left_grasp);
    try {
        sim::picker_grab(scene.state, right, right_grasp);
    } catch (const MissedGraspError&) {
        sim::picker_release(scene.state, left);
        throw;
    }

    Vec3 mid0 = (left.position + right.position) * 0.5;
    Vec2 along{right.position.x - left.position.x, right.position.y - left.position.y};
    double alen = norm(along);
    along = alen < 1e-9 ? Vec2{1.0, 0.0} : along * (1.0 / alen);
    Vec2 fwd{-along.y, along.x};
    // fling toward the table center so the cloth lands in frame
    if (dot(fwd, Vec2{-mid0.x, -mid0.y}) < 0.0) fwd = fwd * -1.0;

    const double h_l = params.lift_height, f_m = params.forward, b_m = params.backward,
                 h_p = params.place_height;

    auto run_phase = [&](const Vec2& mid, const Vec2& off_l, const Vec2& off_r, double forward_m,
                         double z, double speed, const char* label, const Vec3& frame_point) {
        Vec2 m = mid + fwd * forward_m;
        std::array<std::vector<Vec3>, 2> paths{
            std::vector<Vec3>{{m.x + off_l.x, m.y + off_l.y, z}},
            std::vector<Vec3>{{m.x + off_r.x, m.y + off_r.y, z}}};
        sim::move_pickers_through(scene.state, scene.springs, scene.params, pickers_of(scene),
                                  {paths.data(), paths.size()}, speed, scene.trace);
        if (scene.trace) scene.trace->waypoints.emplace_back(label, frame_point);
    };

    Vec2 off_l = left.position.xy() - mid0.xy();
    Vec2 off_r = right.position.xy() - mid0.xy();
    run_phase(mid0.xy(), off_l, off_r, 0.0, h_l, params.phase_speeds[0], "lift", {0, 0, h_l});
    if (params.stretch_enabled) stretch(scene);
    // the stretch widened the grasp; re-anchor the midpoint frame
    Vec2 mid{(left.position.x + right.position.x) / 2, (left.position.y + right.position.y) / 2};
    off_l = left.position.xy() - mid;
    off_r = right.position.xy() - mid;
    run_phase(mid, off_l, off_r, f_m, h_l, params.phase_speeds[1], "forward", {0, f_m, h_l});
    run_phase(mid, off_l, off_r, f_m - b_m, h_l, params.phase_speeds[2], "back",
              {0, f_m - b_m, h_l});
    run_phase(mid, off_l, off_r, f_m, h_p, params.phase_speeds[3], "place", {0, f_m, h_p});

    release_all(scene);
    settle_scene(scene);
}

void execute_fold_step(sim::Scene& scene, std::span<const Vec3> picks,
                       std::span<const Vec3> places, const FoldStepParams& params) {
    if (picks.size() != places.size() || picks.empty() || picks.size() > 2)
        throw std::invalid_argument("fold step needs 1-2 matching pick/place pairs");
    if (picks.size() == 2 &&
        segments_cross(picks[0].xy(), places[0].xy(), picks[1].xy(), places[1].xy()))
        throw std::invalid_argument("crossing dual-arm fold assignment");

    const size_t n = picks.size();
    for (size_t i = 0; i < n; ++i) {
        try {
            sim::picker_grab(scene.state, scene.pickers[i], picks[i]);
        } catch (const MissedGraspError&) {
            release_all(scene);
            throw;
        }
    }
    std::array<std::vector<Vec3>, 2> paths;
    for (size_t i = 0; i < n; ++i) {
        Vec3 up = picks[i];
        up.z = params.lift_height;
        Vec3 above = places[i];
        above.z = params.lift_height;
        paths[i] = {up, above, clamp_floor(places[i], scene.params)};
    }
    sim::move_pickers_through(scene.state, scene.springs, scene.params,
                              {scene.pickers.data(), n}, {paths.data(), n}, params.speed,
                              scene.trace);
    release_all(scene);
    settle_scene(scene);
}

}  // namespace garm::prim
