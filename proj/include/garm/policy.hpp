#pragma once

#include <span>
#include <vector>

#include "garm/action_mask.hpp"
#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::policy {

inline constexpr int kDefaultRotations = 16;
inline constexpr double kDefaultScales[] = {0.75, 1.0, 1.5, 2.0, 2.5};
inline constexpr int kDefaultGraspHalfwidthPx = 16;

struct PyramidLayer {
    percept::PixelTransform transform;
    int rotation_index = 0;
    int scale_index = 0;
    percept::Observation obs;

    double theta_deg() const { return transform.theta_deg; }
    double scale() const { return transform.scale; }
    /// Rotation mapped to (-180, 180]; fling layers must stay in [-90, 90].
    double theta_signed_deg() const {
        double t = std::fmod(transform.theta_deg, 360.0);
        if (t > 180.0) t -= 360.0;
        if (t <= -180.0) t += 360.0;
        return t;
    }
    bool fling_allowed() const { return std::abs(theta_signed_deg()) <= 90.0 + 1e-9; }
};

struct TransformPyramid {
    std::vector<PyramidLayer> layers;
    int image_dim = 0;
};

/// rotations x |scales| layers, rotation-major: layer index = r * |scales| + s.
/// Rotation r covers r * 360/rotations degrees.
TransformPyramid build_pyramid(const percept::Observation& obs, int rotations,
                               std::span<const double> scales);

/// Exact inverse of the layer's forward transform, then pixel -> meters.
/// Throws when the point leaves the table.
Vec2 to_world(const Vec2& layer_pixel, const PyramidLayer& layer,
              const percept::CameraConfig& camera);

/// Per-layer, per-primitive, per-factor value grids plus the Eq-12 weighted
/// combination used for action selection.
struct ValueMapBatch {
    int layer_count = 0;
    int image_dim = 0;
    std::vector<ValueGrid> maps;      // [layer][primitive][factor], factor C/I/K
    std::vector<ValueGrid> combined;  // [layer][primitive]

    static constexpr int kFactors = 3;
    ValueGrid& factor(int layer, Primitive p, int f) {
        return maps[(static_cast<size_t>(layer) * 2 + (p == Primitive::pnp)) * kFactors + f];
    }
    const ValueGrid& factor(int layer, Primitive p, int f) const {
        return maps[(static_cast<size_t>(layer) * 2 + (p == Primitive::pnp)) * kFactors + f];
    }
    ValueGrid& combined_map(int layer, Primitive p) {
        return combined[static_cast<size_t>(layer) * 2 + (p == Primitive::pnp)];
    }
    const ValueGrid& combined_map(int layer, Primitive p) const {
        return combined[static_cast<size_t>(layer) * 2 + (p == Primitive::pnp)];
    }
    void allocate(int layers, int dim) {
        layer_count = layers;
        image_dim = dim;
        maps.assign(static_cast<size_t>(layers) * 2 * kFactors, ValueGrid(dim, dim, 0.0));
        combined.assign(static_cast<size_t>(layers) * 2, ValueGrid(dim, dim, 0.0));
    }
};

struct LayerMasks {
    MaskGrid fling;
    MaskGrid pnp;
};

/// Valid-action masks for every pyramid layer: transformed garment mask and
/// analytically transformed arm-reach disks, shifted by the grasp half-width.
/// Layers with out-of-range rotations get an empty fling mask.
std::vector<LayerMasks> build_masks(const TransformPyramid& pyramid,
                                    const percept::CameraConfig& camera,
                                    const mask::ArmConfig& arms,
                                    int grasp_halfwidth_px = kDefaultGraspHalfwidthPx);

struct SelectedAction {
    Primitive primitive = Primitive::pnp;
    int layer = 0;
    Pixel pixel{};
    double value = 0.0;
    double theta_deg = 0.0;
    double scale = 1.0;
    int w_px = 0;
    bool fallback = false;  // every mask empty; treat the step as a no-op
};

/// Global masked argmax over (layer, primitive, pixel). Fling wins only on a
/// strictly larger maximum; ties go to pnp. Pixel ties resolve to the lowest
/// layer index, then row-major order.
SelectedAction aggregate_and_select(const ValueMapBatch& batch,
                                    std::span<const LayerMasks> masks,
                                    int grasp_halfwidth_px = kDefaultGraspHalfwidthPx);

/// Same, but also looks up (theta, scale) from the winning layer.
SelectedAction aggregate_and_select(const ValueMapBatch& batch,
                                    std::span<const LayerMasks> masks,
                                    const TransformPyramid& pyramid,
                                    int grasp_halfwidth_px = kDefaultGraspHalfwidthPx);

struct AomConfig {
    double delta_px = 5.0;
};

struct AomResult {
    Vec2 p1{}, p2{};
    bool replaced = false;
};

/// Snap predicted fling grasp pixels onto the shoulder keypoints when the
/// best of the two pairings has both distances strictly below delta.
AomResult aom_refine(const Vec2& p1, const Vec2& p2, const Vec2& k1, const Vec2& k2,
                     const AomConfig& cfg = {});

}  // namespace garm::policy
