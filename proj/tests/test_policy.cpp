#include <cmath>
#include <random>

#include "doctest.h"
#include "garm/garments.hpp"
#include "garm/metrics.hpp"
#include "garm/policy.hpp"
#include "garm/primitives.hpp"

using namespace garm;
using namespace garm::policy;

namespace {

percept::Observation blob_observation(int dim) {
    percept::Observation obs;
    obs.height = ValueGrid(dim, dim, 0.0);
    obs.mask = MaskGrid(dim, dim, 0);
    // an asymmetric L-shaped blob
    for (int y = dim / 4; y < dim / 2; ++y)
        for (int x = dim / 4; x < 3 * dim / 4; ++x) {
            obs.mask.at(x, y) = 1;
            obs.height.at(x, y) = 0.01 + 0.001 * x;
        }
    for (int y = dim / 2; y < 3 * dim / 4; ++y)
        for (int x = dim / 4; x < dim / 2 - 2; ++x) {
            obs.mask.at(x, y) = 1;
            obs.height.at(x, y) = 0.015;
        }
    return obs;
}

std::vector<double> default_scales() {
    return {std::begin(kDefaultScales), std::end(kDefaultScales)};
}

}  // namespace

TEST_CASE("build_pyramid: default is 16 x 5 = 80 layers, identity layer bit-exact") {
    percept::Observation obs = blob_observation(64);
    auto scales = default_scales();
    TransformPyramid pyr = build_pyramid(obs, 16, scales);
    CHECK(pyr.layers.size() == 80);

    // rotation 0 / scale 1.0 is layer index 1 (scales are {0.75, 1.0, ...})
    const PyramidLayer& identity = pyr.layers[1];
    CHECK(identity.theta_deg() == 0.0);
    CHECK(identity.scale() == 1.0);
    CHECK(identity.obs.mask == obs.mask);
    CHECK(identity.obs.height == obs.height);

    CHECK_THROWS_AS(build_pyramid(obs, 0, scales), std::invalid_argument);
}

TEST_CASE("build_pyramid: 180-degree double application recovers the mask") {
    percept::Observation obs = blob_observation(64);
    std::vector<double> scales{1.0};
    TransformPyramid pyr = build_pyramid(obs, 2, scales);
    const PyramidLayer& half = pyr.layers[1];
    CHECK(half.theta_deg() == doctest::Approx(180.0));
    percept::Observation twice = percept::transform_observation(half.obs, half.transform);
    CHECK(percept::iou(twice.mask, obs.mask) > 0.98);
}

TEST_CASE("fling_allowed: only rotations within [-90, 90]") {
    percept::Observation obs = blob_observation(32);
    std::vector<double> scales{1.0};
    TransformPyramid pyr = build_pyramid(obs, 16, scales);
    int allowed = 0;
    for (const auto& layer : pyr.layers) {
        double t = layer.theta_signed_deg();
        CHECK(layer.fling_allowed() == (std::abs(t) <= 90.0 + 1e-9));
        allowed += layer.fling_allowed();
    }
    // 0, 22.5, 45, 67.5, 90 and the mirrored -90..-22.5: 9 of 16
    CHECK(allowed == 9);
}

TEST_CASE("to_world: identity center, round trips, scale algebra") {
    percept::CameraConfig camera;
    percept::Observation obs;
    obs.height = ValueGrid(camera.image_dim, camera.image_dim, 0.0);
    obs.mask = MaskGrid(camera.image_dim, camera.image_dim, 0);
    auto scales = default_scales();
    TransformPyramid pyr = build_pyramid(obs, 16, scales);

    const PyramidLayer& identity = pyr.layers[1];
    Vec2 world = to_world({64.0, 64.0}, identity, camera);
    CHECK(world.x == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(world.y == doctest::Approx(0.0).epsilon(1e-9));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(20.0, 100.0);
    for (const auto& layer : pyr.layers) {
        for (int i = 0; i < 50; ++i) {
            Vec2 p{c(rng), c(rng)};
            Vec2 fwd = layer.transform.forward(p);
            Vec2 back = layer.transform.inverse(fwd);
            CHECK(distance(p, back) < 0.5);
        }
    }

    // s = 2: two layer pixels 10 apart map 5 original pixels apart
    const PyramidLayer* s2 = nullptr;
    const PyramidLayer* s075 = nullptr;
    for (const auto& layer : pyr.layers) {
        if (layer.theta_deg() == 0.0 && layer.scale() == 2.0) s2 = &layer;
        if (layer.theta_deg() == 0.0 && layer.scale() == 0.75) s075 = &layer;
    }
    REQUIRE(s2 != nullptr);
    REQUIRE(s075 != nullptr);
    Vec2 a = s2->transform.inverse({60.0, 64.0});
    Vec2 b = s2->transform.inverse({70.0, 64.0});
    CHECK(distance(a, b) == doctest::Approx(5.0).epsilon(1e-9));

    // a zoomed-out layer maps frame corners beyond the table
    CHECK_THROWS_AS(to_world({2.0, 2.0}, *s075, camera), std::invalid_argument);
}

TEST_CASE("aggregate_and_select: brute force, ties, fallback") {
    std::mt19937_64 rng(77);
    const int dim = 16, layers = 6;
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::bernoulli_distribution bit(0.5);

    for (int iter = 0; iter < 40; ++iter) {
        ValueMapBatch batch;
        batch.allocate(layers, dim);
        std::vector<LayerMasks> masks(layers);
        for (int l = 0; l < layers; ++l) {
            masks[l].fling = MaskGrid(dim, dim, 0);
            masks[l].pnp = MaskGrid(dim, dim, 0);
            for (int y = 0; y < dim; ++y)
                for (int x = 0; x < dim; ++x) {
                    masks[l].fling.at(x, y) = bit(rng);
                    masks[l].pnp.at(x, y) = bit(rng);
                }
            for (Primitive p : {Primitive::fling, Primitive::pnp})
                for (auto& v : batch.combined_map(l, p).data()) v = val(rng);
        }

        double best_f = -1e300, best_p = -1e300;
        bool any_f = false, any_p = false;
        for (int l = 0; l < layers; ++l)
            for (int y = 0; y < dim; ++y)
                for (int x = 0; x < dim; ++x) {
                    if (masks[l].fling.at(x, y)) {
                        best_f = std::max(best_f, batch.combined_map(l, Primitive::fling).at(x, y));
                        any_f = true;
                    }
                    if (masks[l].pnp.at(x, y)) {
                        best_p = std::max(best_p, batch.combined_map(l, Primitive::pnp).at(x, y));
                        any_p = true;
                    }
                }

        SelectedAction got = aggregate_and_select(batch, masks);
        REQUIRE(!got.fallback);
        bool expect_fling = any_f && (!any_p || best_f > best_p);
        CHECK(got.primitive == (expect_fling ? Primitive::fling : Primitive::pnp));
        CHECK(got.value == (expect_fling ? best_f : best_p));
        const MaskGrid& m = got.primitive == Primitive::fling ? masks[got.layer].fling
                                                              : masks[got.layer].pnp;
        CHECK(m.at(got.pixel.x, got.pixel.y) == 1);
    }

    SUBCASE("equal maxima choose pnp") {
        ValueMapBatch batch;
        batch.allocate(2, 8);
        std::vector<LayerMasks> masks(2);
        for (auto& lm : masks) {
            lm.fling = MaskGrid(8, 8, 1);
            lm.pnp = MaskGrid(8, 8, 1);
        }
        batch.combined_map(0, Primitive::fling).at(2, 2) = 0.8;
        batch.combined_map(1, Primitive::pnp).at(5, 5) = 0.8;
        SelectedAction a = aggregate_and_select(batch, masks);
        CHECK(a.primitive == Primitive::pnp);
        CHECK(a.layer == 1);
    }

    SUBCASE("fling strictly larger wins at its pixel") {
        ValueMapBatch batch;
        batch.allocate(1, 8);
        std::vector<LayerMasks> masks(1);
        masks[0].fling = MaskGrid(8, 8, 1);
        masks[0].pnp = MaskGrid(8, 8, 1);
        for (auto& v : batch.combined_map(0, Primitive::fling).data()) v = 0.8;
        for (auto& v : batch.combined_map(0, Primitive::pnp).data()) v = 0.5;
        SelectedAction a = aggregate_and_select(batch, masks);
        CHECK(a.primitive == Primitive::fling);
        CHECK(a.value == 0.8);
        CHECK(a.pixel.x == 0);  // row-major tie-break within equal values
        CHECK(a.pixel.y == 0);
    }

    SUBCASE("all masks empty falls back") {
        ValueMapBatch batch;
        batch.allocate(1, 8);
        std::vector<LayerMasks> masks(1);
        masks[0].fling = MaskGrid(8, 8, 0);
        masks[0].pnp = MaskGrid(8, 8, 0);
        SelectedAction a = aggregate_and_select(batch, masks);
        CHECK(a.fallback);
    }

    SUBCASE("single valid pixel wins regardless of other values") {
        ValueMapBatch batch;
        batch.allocate(1, 8);
        std::vector<LayerMasks> masks(1);
        masks[0].fling = MaskGrid(8, 8, 0);
        masks[0].pnp = MaskGrid(8, 8, 0);
        masks[0].pnp.at(6, 1) = 1;
        for (auto& v : batch.combined_map(0, Primitive::pnp).data()) v = 0.9;
        batch.combined_map(0, Primitive::pnp).at(6, 1) = -5.0;
        SelectedAction a = aggregate_and_select(batch, masks);
        CHECK(a.pixel.x == 6);
        CHECK(a.pixel.y == 1);
        CHECK(a.value == -5.0);
    }
}

TEST_CASE("aom_refine: worked example, threshold, idempotence") {
    AomConfig cfg;  // delta = 5

    SUBCASE("exact match replaces") {
        AomResult r = aom_refine({3, 4}, {8, 9}, {3, 4}, {8, 9}, cfg);
        CHECK(r.replaced);
        CHECK(r.p1.x == 3);
        CHECK(r.p2.x == 8);
    }

    SUBCASE("worked example: pairing 1 wins, both under delta") {
        // D1 = 2 + 3 = 5, D2 = sqrt(244) + sqrt(269) > 5
        AomResult r = aom_refine({10, 10}, {20, 20}, {12, 10}, {20, 23}, cfg);
        CHECK(r.replaced);
        CHECK(r.p1.x == 12);
        CHECK(r.p1.y == 10);
        CHECK(r.p2.x == 20);
        CHECK(r.p2.y == 23);
    }

    SUBCASE("one distance over delta: retained") {
        AomResult r = aom_refine({0, 0}, {20, 0}, {0, 6}, {20, 1}, cfg);
        CHECK(!r.replaced);
        CHECK(r.p1.x == 0);
        CHECK(r.p2.x == 20);
    }

    SUBCASE("crossed pairing selected when closer") {
        AomResult r = aom_refine({0, 0}, {10, 0}, {10, 1}, {0, 1}, cfg);
        CHECK(r.replaced);
        // p1 pairs with k2 = (0, 1)
        CHECK(r.p1.x == 0);
        CHECK(r.p1.y == 1);
        CHECK(r.p2.x == 10);
    }

    SUBCASE("idempotent") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> c(0.0, 30.0);
        for (int i = 0; i < 200; ++i) {
            Vec2 p1{c(rng), c(rng)}, p2{c(rng), c(rng)}, k1{c(rng), c(rng)}, k2{c(rng), c(rng)};
            AomResult once = aom_refine(p1, p2, k1, k2, cfg);
            AomResult twice = aom_refine(once.p1, once.p2, k1, k2, cfg);
            CHECK(twice.p1.x == once.p1.x);
            CHECK(twice.p1.y == once.p1.y);
            CHECK(twice.p2.x == once.p2.x);
            CHECK(twice.p2.y == once.p2.y);
        }
    }
}

TEST_CASE("build_masks: valid pixels yield reachable on-garment grasps") {
    percept::CameraConfig camera{64, 1.53, 1.5};
    garment::GarmentTemplate tmpl =
        garment::make_template(garment::Category::square, 0.55, 30, camera);
    sim::ClothState state;
    state.positions = tmpl.canonical_positions;
    state.velocities.assign(state.positions.size(), Vec3{});
    state.inverse_masses.assign(state.positions.size(), 1.0);
    percept::Observation obs = percept::render(state, camera);

    mask::ArmConfig arms;
    const int w = 4;
    std::vector<double> scales{0.75, 1.0, 1.5};
    TransformPyramid pyr = build_pyramid(obs, 4, scales);
    std::vector<LayerMasks> masks = build_masks(pyr, camera, arms, w);

    std::mt19937_64 rng(31);
    for (size_t l = 0; l < masks.size(); ++l) {
        const auto& layer = pyr.layers[l];
        auto [left_disk, right_disk] = mask::arm_disk_specs(camera, arms, &layer.transform);

        for (Primitive p : {Primitive::fling, Primitive::pnp}) {
            const MaskGrid& m = p == Primitive::fling ? masks[l].fling : masks[l].pnp;
            std::vector<Pixel> valid;
            for (int y = 0; y < m.height(); ++y)
                for (int x = 0; x < m.width(); ++x)
                    if (m.at(x, y)) valid.push_back({x, y});
            if (valid.empty()) continue;
            std::uniform_int_distribution<size_t> pick(0, valid.size() - 1);
            for (int s = 0; s < 1000; ++s) {
                Pixel px = valid[pick(rng)];
                prim::ActionParams action{p, px.x, px.y, layer.theta_deg(), w,
                                          static_cast<int>(l)};
                auto [pa, pb] = prim::action_pixels(action);
                // disks are rasterized at pixel centers
                auto in_disk = [](const mask::DiskSpec& d, const Vec2& px) {
                    return d.contains(px.x + 0.5, px.y + 0.5);
                };
                if (p == Primitive::fling) {
                    // both grasps on the transformed garment mask
                    REQUIRE(layer.obs.mask.get_or(static_cast<int>(pa.x),
                                                  static_cast<int>(pa.y), 0) == 1);
                    REQUIRE(layer.obs.mask.get_or(static_cast<int>(pb.x),
                                                  static_cast<int>(pb.y), 0) == 1);
                    // one assignment covers both grasps with matching arms
                    bool case_a = in_disk(left_disk, pa) && in_disk(right_disk, pb);
                    bool case_b = in_disk(left_disk, pb) && in_disk(right_disk, pa);
                    REQUIRE((case_a || case_b));
                } else {
                    REQUIRE(layer.obs.mask.get_or(static_cast<int>(pa.x),
                                                  static_cast<int>(pa.y), 0) == 1);
                    // some arm reaches the place point
                    REQUIRE((in_disk(left_disk, pb) || in_disk(right_disk, pb)));
                }
            }
        }
    }
}

TEST_CASE("selection invariance under a one-bin rotation (pnp, garment-relative scorer)") {
    const int dim = 64;
    const int rotations = 8;
    std::vector<double> scales{1.0};

    // a disk with a thin tail: the scorer peak is unique and well separated
    percept::Observation obs;
    obs.height = ValueGrid(dim, dim, 0.0);
    obs.mask = MaskGrid(dim, dim, 0);
    for (int y = 0; y < dim; ++y)
        for (int x = 0; x < dim; ++x) {
            double dx = x + 0.5 - 26.0, dy = y + 0.5 - 22.0;
            bool in_disk = dx * dx + dy * dy <= 10.0 * 10.0;
            bool in_tail = x >= 33 && x < 48 && y >= 20 && y < 24;
            if (in_disk || in_tail) {
                obs.mask.at(x, y) = 1;
                obs.height.at(x, y) = 0.02;
            }
        }

    // garment-relative scorer: negative squared distance to the mask centroid
    auto score = [](const percept::Observation& o) {
        double cx = 0.0, cy = 0.0;
        int n = 0;
        for (int y = 0; y < o.mask.height(); ++y)
            for (int x = 0; x < o.mask.width(); ++x)
                if (o.mask.at(x, y)) {
                    cx += x + 0.5;
                    cy += y + 0.5;
                    ++n;
                }
        cx /= std::max(1, n);
        cy /= std::max(1, n);
        ValueGrid v(o.mask.width(), o.mask.height(), 0.0);
        for (int y = 0; y < v.height(); ++y)
            for (int x = 0; x < v.width(); ++x) {
                double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                v.at(x, y) = -(dx * dx + dy * dy);
            }
        return v;
    };

    auto select_world = [&](const percept::Observation& input) {
        TransformPyramid pyr = build_pyramid(input, rotations, scales);
        ValueMapBatch batch;
        batch.allocate(static_cast<int>(pyr.layers.size()), dim);
        std::vector<LayerMasks> masks(pyr.layers.size());
        for (size_t l = 0; l < pyr.layers.size(); ++l) {
            batch.combined_map(static_cast<int>(l), Primitive::pnp) = score(pyr.layers[l].obs);
            masks[l].pnp = pyr.layers[l].obs.mask;
            masks[l].fling = MaskGrid(dim, dim, 0);
        }
        SelectedAction a = aggregate_and_select(batch, masks, pyr);
        percept::PixelTransform t{a.theta_deg, a.scale, dim / 2.0};
        return t.inverse({static_cast<double>(a.pixel.x) + 0.5,
                          static_cast<double>(a.pixel.y) + 0.5});
    };

    Vec2 base = select_world(obs);

    double bin = 360.0 / rotations;
    percept::PixelTransform rot{bin, 1.0, dim / 2.0};
    percept::Observation rotated = percept::transform_observation(obs, rot);
    Vec2 from_rotated = select_world(rotated);
    // map back into the original frame
    Vec2 unrotated = rot.inverse(from_rotated);

    CHECK(distance(base, unrotated) <= 1.01);
}
