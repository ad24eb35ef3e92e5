#pragma once

#include <map>
#include <string>

#include "garm/garments.hpp"
#include "garm/percept.hpp"

namespace garm::percept {

struct Metrics {
    double coverage = 0.0;  // mask pixels / C_max pixels
    double iou = 0.0;       // vs the goal mask
    double kd = 0.0;        // m, mean keypoint-to-goal distance in the table plane
};

struct Keypoint {
    Vec2 world{};   // m, table plane
    Vec2 pixel{};   // float pixel coordinates
    bool visible = false;
};

double coverage(const Observation& obs, const garment::GarmentTemplate& tmpl);

/// Tracked keypoint particles projected to pixels/meters. A keypoint is
/// visible when its particle is the topmost rendered surface at its pixel
/// (5 mm tolerance).
std::map<std::string, Keypoint> keypoints(const sim::ClothState& state,
                                          const garment::GarmentTemplate& tmpl,
                                          const CameraConfig& camera);

double keypoint_distance(const sim::ClothState& state, const garment::GarmentTemplate& tmpl,
                         const CameraConfig& camera);

Metrics compute_metrics(const Observation& obs, const sim::ClothState& state,
                        const garment::GarmentTemplate& tmpl, const CameraConfig& camera);

Metrics compute_metrics(const sim::ClothState& state, const garment::GarmentTemplate& tmpl,
                        const CameraConfig& camera);

}  // namespace garm::percept
