#pragma once

#include "garm/cloth_sim.hpp"
#include "garm/common.hpp"

namespace garm::percept {

/// Orthographic top-down camera over the table. World x runs down the image
/// (the left arm base at x=-w/2 projects to the top edge), world y runs right.
struct CameraConfig {
    int image_dim = 128;         // D
    double world_extent = 1.53;  // m covered by the image (table width)
    double splat_radius_px = 2.0;

    double pixel_size() const { return world_extent / image_dim; }

    Vec2 world_to_pixel(const Vec2& w) const {
        double px = pixel_size();
        return {(w.y + world_extent / 2.0) / px, (w.x + world_extent / 2.0) / px};
    }
    Vec2 pixel_to_world(const Vec2& p) const {
        double px = pixel_size();
        return {p.y * px - world_extent / 2.0, p.x * px - world_extent / 2.0};
    }
    bool pixel_in_frame(const Vec2& p) const {
        return p.x >= 0.0 && p.x <= image_dim && p.y >= 0.0 && p.y <= image_dim;
    }
};

struct Observation {
    ValueGrid height;  // m above the table, 0 where empty
    MaskGrid mask;     // (height > 0) exactly
    int clipped_particles = 0;

    bool operator==(const Observation& o) const { return height == o.height && mask == o.mask; }
};

/// Each particle splats a disk of splat_radius pixels; height keeps the max z.
Observation render(const sim::ClothState& state, const CameraConfig& camera);

/// |a n b| / |a u b|; 0 when both masks are empty. Throws on dim mismatch.
double iou(const MaskGrid& a, const MaskGrid& b);

/// Rotate-then-scale about the image center, in pixel coordinates.
struct PixelTransform {
    double theta_deg = 0.0;
    double scale = 1.0;
    double center = 0.0;  // D/2

    Vec2 forward(const Vec2& q) const {
        double rad = theta_deg * M_PI / 180.0;
        double c = std::cos(rad), s = std::sin(rad);
        double x = q.x - center, y = q.y - center;
        return {scale * (c * x - s * y) + center, scale * (s * x + c * y) + center};
    }
    Vec2 inverse(const Vec2& p) const {
        double rad = theta_deg * M_PI / 180.0;
        double c = std::cos(rad), s = std::sin(rad);
        double x = (p.x - center) / scale, y = (p.y - center) / scale;
        return {c * x + s * y + center, -s * x + c * y + center};
    }
    bool identity() const { return theta_deg == 0.0 && scale == 1.0; }
};

/// Resample through the transform: nearest-neighbor for the mask channel,
/// bilinear for height, zero fill out of frame. The identity transform is a
/// bit-exact copy.
Observation transform_observation(const Observation& obs, const PixelTransform& t);

MaskGrid transform_mask(const MaskGrid& mask, const PixelTransform& t);

}  // namespace garm::percept
