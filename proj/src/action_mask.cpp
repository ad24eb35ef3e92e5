#include "garm/action_mask.hpp"

#include <cmath>
#include <stdexcept>

namespace garm::mask {

int pixel_radius(int image_dim, double reach, double table_width) {
    if (image_dim <= 0 || reach <= 0.0 || table_width <= 0.0)
        throw std::invalid_argument("pixel_radius: arguments must be positive");
    return static_cast<int>(std::floor(image_dim * reach / table_width));
}

std::pair<DiskSpec, DiskSpec> arm_disk_specs(const percept::CameraConfig& camera,
                                             const ArmConfig& arms,
                                             const percept::PixelTransform* transform) {
    double r = static_cast<double>(pixel_radius(camera.image_dim, arms.reach, arms.table_width));
    DiskSpec left{camera.world_to_pixel(arms.left_base), r};
    DiskSpec right{camera.world_to_pixel(arms.right_base), r};
    if (transform && !transform->identity()) {
        left.center_px = transform->forward(left.center_px);
        right.center_px = transform->forward(right.center_px);
        left.radius_px *= transform->scale;
        right.radius_px *= transform->scale;
    }
    return {left, right};
}

MaskGrid rasterize_disk(int image_dim, const DiskSpec& disk) {
    MaskGrid m(image_dim, image_dim, 0);
    for (int y = 0; y < image_dim; ++y)
        for (int x = 0; x < image_dim; ++x)
            if (disk.contains(x + 0.5, y + 0.5)) m.at(x, y) = 1;
    return m;
}

std::pair<MaskGrid, MaskGrid> arm_reach_masks(const percept::CameraConfig& camera,
                                              const ArmConfig& arms) {
    auto [left, right] = arm_disk_specs(camera, arms);
    return {rasterize_disk(camera.image_dim, left), rasterize_disk(camera.image_dim, right)};
}

MaskGrid shift_y(const MaskGrid& m, int dy) {
    MaskGrid out(m.width(), m.height(), 0);
    for (int y = 0; y < m.height(); ++y) {
        int sy = y - dy;
        if (sy < 0 || sy >= m.height()) continue;
        for (int x = 0; x < m.width(); ++x) out.at(x, y) = m.at(x, sy);
    }
    return out;
}

namespace {

MaskGrid combine(const MaskGrid& a, const MaskGrid& b, bool intersect) {
    if (!a.same_dims(b)) throw std::invalid_argument("mask dimensions differ");
    MaskGrid out(a.width(), a.height(), 0);
    for (size_t i = 0; i < a.data().size(); ++i) {
        bool pa = a.data()[i] != 0, pb = b.data()[i] != 0;
        out.data()[i] = (intersect ? (pa && pb) : (pa || pb)) ? 1 : 0;
    }
    return out;
}

}  // namespace

MaskGrid pnp_workspace_mask(const MaskGrid& left_disk, const MaskGrid& right_disk, int w) {
    if (w < 0) throw std::invalid_argument("shift must be non-negative");
    return combine(shift_y(left_disk, w), shift_y(right_disk, w), /*intersect=*/false);
}

MaskGrid fling_workspace_mask(const MaskGrid& left_disk, const MaskGrid& right_disk, int w) {
    if (w < 0) throw std::invalid_argument("shift must be non-negative");
    // case A: the lower grasp point (y + w) goes to the left arm
    MaskGrid a = combine(shift_y(left_disk, -w), shift_y(right_disk, w), /*intersect=*/true);
    // case B: the lower grasp point goes to the right arm
    MaskGrid b = combine(shift_y(left_disk, w), shift_y(right_disk, -w), /*intersect=*/true);
    return combine(a, b, /*intersect=*/false);
}

MaskGrid garment_action_mask(const MaskGrid& garment, Primitive primitive, int w) {
    if (w < 0) throw std::invalid_argument("shift must be non-negative");
    if (primitive == Primitive::pnp) return garment;
    MaskGrid both = combine(shift_y(garment, -w), shift_y(garment, w), /*intersect=*/true);
    return combine(garment, both, /*intersect=*/true);
}

MaskGrid valid_action_mask(const MaskGrid& garment_layer, const MaskGrid& workspace_layer) {
    return combine(garment_layer, workspace_layer, /*intersect=*/true);
}

void apply_mask(ValueGrid& values, const MaskGrid& valid) {
    if (values.width() != valid.width() || values.height() != valid.height())
        throw std::invalid_argument("mask dimensions differ");
    for (size_t i = 0; i < values.data().size(); ++i)
        if (!valid.data()[i]) values.data()[i] = kMaskedValue;
}

}  // namespace garm::mask
