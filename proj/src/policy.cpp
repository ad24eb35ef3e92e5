#include "garm/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace garm::policy {

TransformPyramid build_pyramid(const percept::Observation& obs, int rotations,
                               std::span<const double> scales) {
    if (rotations < 1 || scales.empty())
        throw std::invalid_argument("pyramid needs at least one rotation and one scale");
    const int dim = obs.height.width();
    TransformPyramid pyr;
    pyr.image_dim = dim;
    pyr.layers.reserve(static_cast<size_t>(rotations) * scales.size());
    for (int r = 0; r < rotations; ++r) {
        double theta = 360.0 * r / rotations;
        for (size_t s = 0; s < scales.size(); ++s) {
            PyramidLayer layer;
            layer.rotation_index = r;
            layer.scale_index = static_cast<int>(s);
            layer.transform = {theta, scales[s], dim / 2.0};
            layer.obs = percept::transform_observation(obs, layer.transform);
            pyr.layers.push_back(std::move(layer));
        }
    }
    return pyr;
}

Vec2 to_world(const Vec2& layer_pixel, const PyramidLayer& layer,
              const percept::CameraConfig& camera) {
    Vec2 original = layer.transform.inverse(layer_pixel);
    Vec2 world = camera.pixel_to_world(original);
    double half = camera.world_extent / 2.0;
    if (std::abs(world.x) > half || std::abs(world.y) > half)
        throw std::invalid_argument("action maps outside the table");
    return world;
}

std::vector<LayerMasks> build_masks(const TransformPyramid& pyramid,
                                    const percept::CameraConfig& camera,
                                    const mask::ArmConfig& arms, int grasp_halfwidth_px) {
    std::vector<LayerMasks> out;
    out.reserve(pyramid.layers.size());
    const int dim = pyramid.image_dim;
    for (const auto& layer : pyramid.layers) {
        auto [left, right] = mask::arm_disk_specs(camera, arms, &layer.transform);
        MaskGrid left_disk = mask::rasterize_disk(dim, left);
        MaskGrid right_disk = mask::rasterize_disk(dim, right);
        const MaskGrid& garment = layer.obs.mask;

        LayerMasks lm;
        lm.pnp = mask::valid_action_mask(
            mask::garment_action_mask(garment, Primitive::pnp, grasp_halfwidth_px),
            mask::pnp_workspace_mask(left_disk, right_disk, grasp_halfwidth_px));
        if (layer.fling_allowed()) {
            lm.fling = mask::valid_action_mask(
                mask::garment_action_mask(garment, Primitive::fling, grasp_halfwidth_px),
                mask::fling_workspace_mask(left_disk, right_disk, grasp_halfwidth_px));
        } else {
            lm.fling = MaskGrid(dim, dim, 0);
        }
        out.push_back(std::move(lm));
    }
    return out;
}

namespace {

struct Best {
    double value = mask::kMaskedValue;
    int layer = -1;
    Pixel pixel{};
    bool found = false;
};

Best masked_max(const ValueMapBatch& batch, std::span<const LayerMasks> masks, Primitive p) {
    Best best;
    for (int layer = 0; layer < batch.layer_count; ++layer) {
        const ValueGrid& v = batch.combined_map(layer, p);
        const MaskGrid& m = p == Primitive::fling ? masks[layer].fling : masks[layer].pnp;
        for (int y = 0; y < v.height(); ++y) {
            for (int x = 0; x < v.width(); ++x) {
                if (!m.at(x, y)) continue;
                double val = v.at(x, y);
                if (!best.found || val > best.value) {
                    best = {val, layer, {x, y}, true};
                }
            }
        }
    }
    return best;
}

}  // namespace

SelectedAction aggregate_and_select(const ValueMapBatch& batch, std::span<const LayerMasks> masks,
                                    int grasp_halfwidth_px) {
    if (static_cast<int>(masks.size()) != batch.layer_count)
        throw std::invalid_argument("mask layer count does not match the batch");
    Best fling = masked_max(batch, masks, Primitive::fling);
    Best pnp = masked_max(batch, masks, Primitive::pnp);

    SelectedAction a;
    a.w_px = grasp_halfwidth_px;
    if (!fling.found && !pnp.found) {
        a.fallback = true;
        return a;
    }
    bool choose_fling = fling.found && (!pnp.found || fling.value > pnp.value);
    const Best& chosen = choose_fling ? fling : pnp;
    a.primitive = choose_fling ? Primitive::fling : Primitive::pnp;
    a.layer = chosen.layer;
    a.pixel = chosen.pixel;
    a.value = chosen.value;
    return a;
}

SelectedAction aggregate_and_select(const ValueMapBatch& batch, std::span<const LayerMasks> masks,
                                    const TransformPyramid& pyramid, int grasp_halfwidth_px) {
    SelectedAction a = aggregate_and_select(batch, masks, grasp_halfwidth_px);
    if (!a.fallback) {
        a.theta_deg = pyramid.layers[a.layer].theta_deg();
        a.scale = pyramid.layers[a.layer].scale();
    }
    return a;
}

AomResult aom_refine(const Vec2& p1, const Vec2& p2, const Vec2& k1, const Vec2& k2,
                     const AomConfig& cfg) {
    double d11 = distance(p1, k1), d22 = distance(p2, k2);
    double d12 = distance(p1, k2), d21 = distance(p2, k1);
    double total1 = d11 + d22, total2 = d12 + d21;

    AomResult r{p1, p2, false};
    if (total1 <= total2) {
        if (d11 < cfg.delta_px && d22 < cfg.delta_px) r = {k1, k2, true};
    } else {
        if (d12 < cfg.delta_px && d21 < cfg.delta_px) r = {k2, k1, true};
    }
    return r;
}

}  // namespace garm::policy
