#include "garm/percept.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace garm::percept {

Observation render(const sim::ClothState& state, const CameraConfig& camera) {
    const int d = camera.image_dim;
    Observation obs;
    obs.height = ValueGrid(d, d, 0.0);
    obs.mask = MaskGrid(d, d, 0);

    const double r = camera.splat_radius_px;
    const double r2 = r * r;
    for (int i = 0; i < state.particle_count(); ++i) {
        const Vec3& p = state.positions[i];
        double z = p.z;  // height above the table plane at z=0
        if (z <= 0.0) z = 1e-6;
        Vec2 c = camera.world_to_pixel(p.xy());
        if (c.x < -r || c.x > d + r || c.y < -r || c.y > d + r) {
            ++obs.clipped_particles;
            continue;
        }
        int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
        int x1 = std::min(d - 1, static_cast<int>(std::ceil(c.x + r)));
        int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
        int y1 = std::min(d - 1, static_cast<int>(std::ceil(c.y + r)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double dx = x + 0.5 - c.x;
                double dy = y + 0.5 - c.y;
                if (dx * dx + dy * dy > r2) continue;
                obs.height.at(x, y) = std::max(obs.height.at(x, y), z);
            }
        }
    }
    for (int y = 0; y < d; ++y)
        for (int x = 0; x < d; ++x) obs.mask.at(x, y) = obs.height.at(x, y) > 0.0 ? 1 : 0;
    return obs;
}

double iou(const MaskGrid& a, const MaskGrid& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("iou: mask dimensions differ");
    int inter = 0, uni = 0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (size_t i = 0; i < da.size(); ++i) {
        bool pa = da[i] != 0, pb = db[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

Observation transform_observation(const Observation& obs, const PixelTransform& t) {
    const int d = obs.height.width();
    Observation out;
    out.height = ValueGrid(d, d, 0.0);
    out.mask = MaskGrid(d, d, 0);
    out.clipped_particles = obs.clipped_particles;
    if (t.identity()) {
        out.height = obs.height;
        out.mask = obs.mask;
        return out;
    }
    for (int y = 0; y < d; ++y) {
        for (int x = 0; x < d; ++x) {
            Vec2 src = t.inverse({x + 0.5, y + 0.5});
            int nx = static_cast<int>(std::floor(src.x));
            int ny = static_cast<int>(std::floor(src.y));
            out.mask.at(x, y) = obs.mask.get_or(nx, ny, 0);

            double u = src.x - 0.5, v = src.y - 0.5;
            int x0 = static_cast<int>(std::floor(u));
            int y0 = static_cast<int>(std::floor(v));
            double fx = u - x0, fy = v - y0;
            double h00 = obs.height.get_or(x0, y0, 0.0);
            double h10 = obs.height.get_or(x0 + 1, y0, 0.0);
            double h01 = obs.height.get_or(x0, y0 + 1, 0.0);
            double h11 = obs.height.get_or(x0 + 1, y0 + 1, 0.0);
            out.height.at(x, y) =
                (h00 * (1 - fx) + h10 * fx) * (1 - fy) + (h01 * (1 - fx) + h11 * fx) * fy;
        }
    }
    return out;
}

MaskGrid transform_mask(const MaskGrid& mask, const PixelTransform& t) {
    const int d = mask.width();
    if (t.identity()) return mask;
    MaskGrid out(d, mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < d; ++x) {
            Vec2 src = t.inverse({x + 0.5, y + 0.5});
            out.at(x, y) = mask.get_or(static_cast<int>(std::floor(src.x)),
                                       static_cast<int>(std::floor(src.y)), 0);
        }
    }
    return out;
}

}  // namespace garm::percept
