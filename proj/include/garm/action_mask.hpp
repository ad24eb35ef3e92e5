#pragma once

#include <limits>
#include <utility>

#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::mask {

struct ArmConfig {
    double table_width = 1.53;       // m
    Vec2 left_base{-0.765, 0.0};     // projects to the top image edge
    Vec2 right_base{0.765, 0.0};     // projects to the bottom image edge
    double reach = 0.85;             // m, r_d
};

/// floor(D * r_d / w_table)
int pixel_radius(int image_dim, double reach, double table_width);

struct DiskSpec {
    Vec2 center_px{};
    double radius_px = 0.0;
    bool contains(double px, double py) const {
        double dx = px - center_px.x, dy = py - center_px.y;
        return dx * dx + dy * dy <= radius_px * radius_px;
    }
};

/// Arm disks in a transformed layer frame: centers mapped through the layer
/// transform, radius scaled by the layer scale (rotation+scaling maps disks
/// to disks exactly). Pass nullptr for the identity frame.
std::pair<DiskSpec, DiskSpec> arm_disk_specs(const percept::CameraConfig& camera,
                                             const ArmConfig& arms,
                                             const percept::PixelTransform* transform = nullptr);

MaskGrid rasterize_disk(int image_dim, const DiskSpec& disk);

std::pair<MaskGrid, MaskGrid> arm_reach_masks(const percept::CameraConfig& camera,
                                              const ArmConfig& arms);

/// Shift mask content by dy pixels along +y ("down"); vacated pixels are 0.
MaskGrid shift_y(const MaskGrid& m, int dy);

/// Union of both disks shifted down by w (the arm must reach the place point).
MaskGrid pnp_workspace_mask(const MaskGrid& left_disk, const MaskGrid& right_disk, int w);

/// Union over the two grasp-to-arm assignments of the per-assignment
/// intersections of oppositely shifted disks.
MaskGrid fling_workspace_mask(const MaskGrid& left_disk, const MaskGrid& right_disk, int w);

/// pnp: the garment mask itself. fling: m_g n shift_up(m_g, w) n shift_down(m_g, w)
/// so both grasp points stay on the garment.
MaskGrid garment_action_mask(const MaskGrid& garment, Primitive primitive, int w);

/// Pixel-wise AND of the garment and workspace layers.
MaskGrid valid_action_mask(const MaskGrid& garment_layer, const MaskGrid& workspace_layer);

/// Invalid pixels become -infinity, ordered below every finite value.
void apply_mask(ValueGrid& values, const MaskGrid& valid);

constexpr double kMaskedValue = -std::numeric_limits<double>::infinity();

}  // namespace garm::mask
