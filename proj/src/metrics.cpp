#include "garm/metrics.hpp"

#include <cmath>

namespace garm::percept {

namespace {
constexpr double kVisibilityToleranceM = 0.005;
}

double coverage(const Observation& obs, const garment::GarmentTemplate& tmpl) {
    if (tmpl.c_max_pixels <= 0) return 0.0;
    return static_cast<double>(mask_count(obs.mask)) / tmpl.c_max_pixels;
}

std::map<std::string, Keypoint> keypoints(const sim::ClothState& state,
                                          const garment::GarmentTemplate& tmpl,
                                          const CameraConfig& camera) {
    Observation obs = render(state, camera);
    std::map<std::string, Keypoint> out;
    for (const auto& [name, idx] : tmpl.keypoint_indices) {
        Keypoint kp;
        const Vec3& p = state.positions[idx];
        kp.world = p.xy();
        kp.pixel = camera.world_to_pixel(kp.world);
        int px = static_cast<int>(std::floor(kp.pixel.x));
        int py = static_cast<int>(std::floor(kp.pixel.y));
        double top = obs.height.get_or(px, py, 0.0);
        kp.visible = top - p.z <= kVisibilityToleranceM;
        out[name] = kp;
    }
    return out;
}

double keypoint_distance(const sim::ClothState& state, const garment::GarmentTemplate& tmpl,
                         const CameraConfig& camera) {
    (void)camera;
    if (tmpl.keypoint_indices.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [name, idx] : tmpl.keypoint_indices) {
        Vec2 current = state.positions[idx].xy();
        sum += distance(current, tmpl.goal_keypoints_world.at(name));
    }
    return sum / tmpl.keypoint_indices.size();
}

Metrics compute_metrics(const Observation& obs, const sim::ClothState& state,
                        const garment::GarmentTemplate& tmpl, const CameraConfig& camera) {
    Metrics m;
    m.coverage = coverage(obs, tmpl);
    m.iou = iou(obs.mask, tmpl.goal_mask);
    m.kd = keypoint_distance(state, tmpl, camera);
    return m;
}

Metrics compute_metrics(const sim::ClothState& state, const garment::GarmentTemplate& tmpl,
                        const CameraConfig& camera) {
    return compute_metrics(render(state, camera), state, tmpl, camera);
}

}  // namespace garm::percept
