#pragma once

#include <span>
#include <utility>

#include "garm/cloth_sim.hpp"
#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::prim {

struct ActionParams {
    Primitive primitive = Primitive::pnp;
    int x = 0;  // pixel column in the transformed frame (fling midpoint / pick)
    int y = 0;  // pixel row
    double theta_deg = 0.0;  // layer rotation
    int w_px = 0;            // grasp half-width (fling) / pick-place offset (pnp)
    int transform_index = 0;
};

/// Enforce the action invariants: w > 0, pixels in frame after applying the
/// grasp offsets, fling rotation within [-90, 90].
void validate(const ActionParams& action, int image_dim);

/// Grasp pixels in the transformed frame: fling (x, y+w) and (x, y-w),
/// pnp pick (x, y) and place (x, y-w).
std::pair<Vec2, Vec2> action_pixels(const ActionParams& action);

struct WorldAction {
    Primitive primitive = Primitive::pnp;
    Vec2 first{};   // fling: grasp at (x, y+w); pnp: pick
    Vec2 second{};  // fling: grasp at (x, y-w); pnp: place
};

/// Map the transformed-frame grasp pixels through the layer's inverse
/// transform, then to world meters. Throws when a point leaves the frame.
WorldAction to_world_action(const ActionParams& action, const percept::PixelTransform& transform,
                            const percept::CameraConfig& camera);

struct PnpParams {
    double lift_height = 0.15;  // m, low enough to stay quasi-static
    double speed = 0.5;         // m/s
};

/// grab -> lift -> translate above the place point -> lower -> release -> settle
void execute_pnp(sim::Scene& scene, const Vec3& pick, const Vec3& place,
                 const PnpParams& params = {});

struct FlingParams {
    double lift_height = 0.45;    // h_l
    double forward = 0.35;        // f_m
    double backward = 0.60;       // b_m
    double place_height = 0.05;   // h_p
    bool stretch_enabled = true;
    double phase_speeds[4] = {0.5, 2.0, 2.0, 0.8};  // lift, forward, back, place
};

/// Dual-arm dynamic fling: grab both points, lift, optionally stretch taut,
/// then drive the grasp midpoint through
///   (0,0,h_l) -> (0,f_m,h_l) -> (0,f_m-b_m,h_l) -> (0,f_m,h_p)
/// in the grasp-midpoint frame (forward = toward the table center), release,
/// settle. A missed grasp on either arm aborts both.
void execute_fling(sim::Scene& scene, const Vec3& left_grasp, const Vec3& right_grasp,
                   const FlingParams& params = {});

/// Move both (attached) pickers apart along their connecting line until the
/// grasp separation reaches taut_fraction of the rest-mesh geodesic between
/// the grasped particles, or the cloth extent stops following. Never exceeds
/// the geodesic length.
void stretch(sim::Scene& scene, double taut_fraction = 0.98);

struct FoldStepParams {
    double lift_height = 0.10;
    double speed = 0.4;
};

/// Synchronized 1-2 arm pick-and-place with an arc trajectory. Dual picks must
/// not cross (pick->place segments may not intersect).
void execute_fold_step(sim::Scene& scene, std::span<const Vec3> picks,
                       std::span<const Vec3> places, const FoldStepParams& params = {});

/// Rest-mesh geodesic (shortest spring-path distance) between two particles.
double rest_geodesic(const sim::SpringNetwork& springs, int particle_count, int from, int to);

}  // namespace garm::prim
