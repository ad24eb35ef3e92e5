#include "garm/cloth_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace garm::sim {

double SpringNetwork::max_stiffness() const {
    double k = 0.0;
    for (const auto& s : springs) k = std::max(k, s.stiffness);
    return k;
}

std::pair<ClothState, SpringNetwork> build_cloth(int rows, int cols, double spacing,
                                                 double total_mass, double stiffness,
                                                 double stiffness_scale) {
    std::vector<std::uint8_t> layout(static_cast<size_t>(rows) * cols, 1);
    return build_cloth_masked(rows, cols, spacing, total_mass, stiffness, layout, stiffness_scale);
}

std::pair<ClothState, SpringNetwork> build_cloth_masked(int rows, int cols, double spacing,
                                                        double total_mass, double stiffness,
                                                        const std::vector<std::uint8_t>& layout,
                                                        double stiffness_scale,
                                                        std::vector<int>* particle_of_cell) {
    if (rows < 2 || cols < 2) throw std::invalid_argument("cloth grid needs at least 2x2 cells");
    if (spacing <= 0.0) throw std::invalid_argument("cloth spacing must be positive");
    if (total_mass <= 0.0) throw std::invalid_argument("cloth mass must be positive");
    if (stiffness <= 0.0) throw std::invalid_argument("cloth stiffness must be positive");
    if (layout.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("layout size does not match grid dims");

    std::vector<int> index(layout.size(), -1);
    int count = 0;
    for (size_t i = 0; i < layout.size(); ++i)
        if (layout[i]) index[i] = count++;
    if (count < 2) throw std::invalid_argument("layout selects fewer than 2 particles");

    ClothState state;
    state.grid_rows = rows;
    state.grid_cols = cols;
    state.positions.resize(count);
    state.velocities.assign(count, Vec3{});
    state.unpinned_inverse_mass = count / total_mass;
    state.inverse_masses.assign(count, state.unpinned_inverse_mass);

    const double cx = (cols - 1) * 0.5;
    const double cy = (rows - 1) * 0.5;
    SimParams defaults;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int p = index[static_cast<size_t>(r) * cols + c];
            if (p < 0) continue;
            // row 0 at +y so the grid's top row faces "up" on the table
            state.positions[p] = {(c - cx) * spacing, (cy - r) * spacing, defaults.contact_offset};
        }
    }

    // weak bending lets the sheet drape and crumple instead of acting like a plate
    const double k = stiffness * stiffness_scale;
    const double k_by_kind[3] = {k, 0.5 * k, 0.05 * k};  // structural, shear, bend
    auto cell = [&](int r, int c) -> int {
        if (r < 0 || r >= rows || c < 0 || c >= cols) return -1;
        return index[static_cast<size_t>(r) * cols + c];
    };
    SpringNetwork net;
    auto add = [&](int a, int b, double rest, SpringKind kind) {
        if (a >= 0 && b >= 0)
            net.springs.push_back({a, b, rest, k_by_kind[static_cast<int>(kind)], kind});
    };
    const double diag = spacing * std::sqrt(2.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int p = cell(r, c);
            if (p < 0) continue;
            add(p, cell(r, c + 1), spacing, SpringKind::structural);
            add(p, cell(r + 1, c), spacing, SpringKind::structural);
            // shear springs only inside fully present quads
            if (cell(r, c + 1) >= 0 && cell(r + 1, c) >= 0 && cell(r + 1, c + 1) >= 0) {
                add(p, cell(r + 1, c + 1), diag, SpringKind::shear);
                add(cell(r, c + 1), cell(r + 1, c), diag, SpringKind::shear);
            }
            // bend springs require the middle cell so they never cross gaps
            if (cell(r, c + 1) >= 0) add(p, cell(r, c + 2), 2 * spacing, SpringKind::bend);
            if (cell(r + 1, c) >= 0) add(p, cell(r + 2, c), 2 * spacing, SpringKind::bend);
        }
    }

    if (particle_of_cell) *particle_of_cell = std::move(index);
    return {std::move(state), std::move(net)};
}

namespace {

struct RepulsionPairs {
    std::vector<std::pair<int, int>> pairs;
};

std::uint64_t cell_key(const Vec3& p, double cell) {
    auto q = [cell](double v) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / cell)) + (1 << 20)) &
               0x1fffff;
    };
    return (q(p.x) << 42) | (q(p.y) << 21) | q(p.z);
}

// Candidate pairs within radius + margin, rebuilt once per control step.
RepulsionPairs gather_pairs(const ClothState& state, double radius, double margin) {
    RepulsionPairs out;
    const double cell = radius + margin;
    const int n = state.particle_count();
    std::vector<std::pair<std::uint64_t, int>> entries;
    entries.reserve(n);
    for (int i = 0; i < n; ++i) entries.emplace_back(cell_key(state.positions[i], cell), i);
    std::sort(entries.begin(), entries.end());

    auto bucket = [&](std::uint64_t key, auto&& fn) {
        auto lo = std::lower_bound(entries.begin(), entries.end(),
                                   std::make_pair(key, std::numeric_limits<int>::min()));
        for (auto it = lo; it != entries.end() && it->first == key; ++it) fn(it->second);
    };

    const double r2 = cell * cell;
    for (int i = 0; i < n; ++i) {
        const Vec3& pi = state.positions[i];
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    Vec3 probe{pi.x + dx * cell, pi.y + dy * cell, pi.z + dz * cell};
                    bucket(cell_key(probe, cell), [&](int j) {
                        if (j <= i) return;
                        Vec3 d = state.positions[j] - pi;
                        if (dot(d, d) <= r2) out.pairs.emplace_back(i, j);
                    });
                }
    }
    return out;
}

}  // namespace

void step(ClothState& state, const SpringNetwork& springs, const SimParams& params,
          std::span<Picker> pickers) {
    const int n = state.particle_count();
    const int substeps = std::max(1, params.substeps);
    const double h = params.dt / substeps;
    const double damp = std::pow(params.damping, 1.0 / substeps);
    const double floor_z = params.ground_height + params.contact_offset;

    RepulsionPairs repulsion;
    const bool use_repulsion = params.repulsion_radius > 0.0 && params.repulsion_stiffness > 0.0;
    if (use_repulsion) {
        double margin = 2.0 * max_speed(state) * params.dt;
        repulsion = gather_pairs(state, params.repulsion_radius, margin);
    }

    std::vector<Vec3> forces(n);
    for (int s = 1; s <= substeps; ++s) {
        for (auto& f : forces) f = Vec3{};

        for (const auto& sp : springs.springs) {
            Vec3 d = state.positions[sp.j] - state.positions[sp.i];
            double len = norm(d);
            if (len < 1e-12) continue;
            double mag = sp.stiffness * (len - sp.rest_length) / len;
            Vec3 f = d * mag;
            forces[sp.i] += f;
            forces[sp.j] -= f;
        }

        if (use_repulsion) {
            const double r = params.repulsion_radius;
            for (auto [i, j] : repulsion.pairs) {
                Vec3 d = state.positions[j] - state.positions[i];
                double len = norm(d);
                if (len >= r || len < 1e-12) continue;
                double mag = params.repulsion_stiffness * (r - len) / len;
                Vec3 f = d * mag;
                forces[i] -= f;
                forces[j] += f;
            }
        }

        for (int i = 0; i < n; ++i) {
            if (state.inverse_masses[i] == 0.0) continue;
            Vec3 v = state.velocities[i];
            v += (forces[i] * state.inverse_masses[i] + Vec3{0, 0, params.gravity}) * h;
            v = v * damp;
            Vec3 p = state.positions[i] + v * h;
            if (p.z < floor_z) {
                double removed = v.z < 0.0 ? -v.z : 0.0;
                p.z = floor_z;
                if (v.z < 0.0) v.z = 0.0;
                double vt = std::sqrt(v.x * v.x + v.y * v.y);
                if (vt > 1e-12 && removed > 0.0) {
                    double scale = std::max(0.0, 1.0 - params.ground_friction * removed / vt);
                    v.x *= scale;
                    v.y *= scale;
                }
            }
            state.velocities[i] = v;
            state.positions[i] = p;
        }

        // pinned particles interpolate toward the picker position, landing on
        // it exactly at the step boundary
        for (const auto& pk : pickers) {
            if (!pk.attached) continue;
            int i = *pk.attached;
            double remaining = params.dt * (1.0 - static_cast<double>(s) / substeps);
            state.positions[i] = pk.position - pk.velocity * remaining;
            state.velocities[i] = pk.velocity;
        }
    }

    for (int i = 0; i < n; ++i) {
        if (!finite(state.positions[i]) || !finite(state.velocities[i]))
            throw SimulationError("simulation instability: non-finite particle state");
    }
}

void picker_grab(ClothState& state, Picker& picker, const Vec3& target, double max_grasp_distance) {
    if (picker.attached) throw std::invalid_argument("picker already attached");
    picker.position = target;
    picker.velocity = Vec3{};
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < state.particle_count(); ++i) {
        Vec3 d = state.positions[i] - target;
        double d2 = dot(d, d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    if (best < 0 || std::sqrt(best_d2) > max_grasp_distance)
        throw MissedGraspError("no particle within grasp distance");
    picker.attached = best;
    state.pinned[best] = picker.id;
    state.inverse_masses[best] = 0.0;
    state.positions[best] = picker.position;
    state.velocities[best] = Vec3{};
}

void picker_release(ClothState& state, Picker& picker) {
    if (!picker.attached) return;
    int i = *picker.attached;
    auto it = state.pinned.find(i);
    if (it != state.pinned.end() && it->second == picker.id) state.pinned.erase(it);
    state.inverse_masses[i] = state.unpinned_inverse_mass;
    state.velocities[i] = picker.velocity;
    picker.attached.reset();
    picker.velocity = Vec3{};
}

void move_pickers_through(ClothState& state, const SpringNetwork& springs, const SimParams& params,
                          std::span<Picker> pickers, std::span<const std::vector<Vec3>> paths,
                          double speed, TrajectoryTrace* trace) {
    if (speed <= 0.0) throw std::invalid_argument("picker speed must be positive");
    if (paths.size() != pickers.size())
        throw std::invalid_argument("one waypoint list per picker required");
    size_t phases = 0;
    for (const auto& p : paths) phases = std::max(phases, p.size());

    std::vector<Vec3> from(pickers.size());
    for (size_t k = 0; k < pickers.size(); ++k) from[k] = pickers[k].position;

    for (size_t ph = 0; ph < phases; ++ph) {
        double longest = 0.0;
        std::vector<Vec3> to(pickers.size());
        for (size_t k = 0; k < pickers.size(); ++k) {
            to[k] = ph < paths[k].size() ? paths[k][ph] : from[k];
            longest = std::max(longest, distance(from[k], to[k]));
        }
        int steps = static_cast<int>(std::ceil(longest / (speed * params.dt) - 1e-9));
        for (int sstep = 1; sstep <= steps; ++sstep) {
            double t = static_cast<double>(sstep) / steps;
            for (size_t k = 0; k < pickers.size(); ++k) {
                Vec3 target = sstep == steps ? to[k] : from[k] + (to[k] - from[k]) * t;
                pickers[k].velocity = (target - pickers[k].position) * (1.0 / params.dt);
                pickers[k].position = target;
            }
            step(state, springs, params, pickers);
            if (trace) {
                trace->clock += params.dt;
                for (const auto& pk : pickers)
                    trace->rows.push_back({trace->clock, pk.id, pk.position});
            }
        }
        for (size_t k = 0; k < pickers.size(); ++k) {
            pickers[k].position = to[k];
            pickers[k].velocity = Vec3{};
            from[k] = to[k];
        }
    }
}

void move_picker_through(ClothState& state, const SpringNetwork& springs, const SimParams& params,
                         Picker& picker, const std::vector<Vec3>& waypoints, double speed,
                         TrajectoryTrace* trace) {
    std::array<std::vector<Vec3>, 1> paths{waypoints};
    move_pickers_through(state, springs, params, std::span<Picker>(&picker, 1),
                         std::span<const std::vector<Vec3>>(paths.data(), 1), speed, trace);
}

int settle(ClothState& state, const SpringNetwork& springs, const SimParams& params,
           std::span<Picker> pickers, double speed_threshold, int step_cap) {
    int taken = 0;
    while (taken < step_cap && max_speed(state) >= speed_threshold) {
        step(state, springs, params, pickers);
        ++taken;
    }
    return taken;
}

double max_speed(const ClothState& state) {
    double best = 0.0;
    for (const auto& v : state.velocities) best = std::max(best, dot(v, v));
    return std::sqrt(best);
}

double kinetic_energy(const ClothState& state) {
    double e = 0.0;
    for (size_t i = 0; i < state.velocities.size(); ++i) {
        double inv = state.inverse_masses[i];
        if (inv > 0.0) e += 0.5 * dot(state.velocities[i], state.velocities[i]) / inv;
    }
    return e;
}

double total_mass(const ClothState& state) {
    double m = 0.0;
    for (double inv : state.inverse_masses)
        if (inv > 0.0) m += 1.0 / inv;
    return m;
}

int stable_substeps(double dt, double max_stiffness, double min_mass, int at_least) {
    if (max_stiffness <= 0.0 || min_mass <= 0.0) return std::max(1, at_least);
    // worst-case network mode ~ 4x the single-spring frequency
    double omega = 4.0 * std::sqrt(max_stiffness / min_mass);
    int needed = static_cast<int>(std::ceil(dt * omega / 1.2));
    return std::max({1, at_least, needed});
}

}  // namespace garm::sim
