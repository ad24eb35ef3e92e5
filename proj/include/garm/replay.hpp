#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::learn {

struct ReplayItem {
    percept::Observation obs;  // untransformed snapshot at selection time
    double theta_deg = 0.0;    // layer transform that produced the action
    double scale = 1.0;
    int layer_index = 0;
    Pixel pixel{};
    Primitive primitive = Primitive::pnp;
    double delta_c = 0.0;
    double delta_i = 0.0;
    double delta_k = 0.0;
    int episode = 0;
    int step = 0;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(ReplayItem item) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(item));
        } else {
            items_[next_] = std::move(item);
            next_ = (next_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const ReplayItem& operator[](std::size_t i) const { return items_[i]; }

    /// Uniform sample with replacement.
    std::vector<ReplayItem> sample(int n, std::mt19937_64& rng) const {
        std::vector<ReplayItem> out;
        if (items_.empty()) return out;
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        out.reserve(n);
        for (int i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<ReplayItem> items_;
};

}  // namespace garm::learn
