#pragma once

#include <cstdint>
#include <string>

#include "garm/value_model.hpp"

namespace garm::harness {

/// Versioned binary container of named f64 tensors: model parameters plus the
/// optimizer moments and step counter, stamped with the config fingerprint.
void save_checkpoint(const std::string& path, const learn::ValueModel& model,
                     const learn::AdamState& adam, std::int64_t step,
                     std::uint64_t config_fingerprint);

struct CheckpointInfo {
    std::int64_t step = 0;
    std::uint64_t config_fingerprint = 0;
};

/// Restores into an initialized model of matching architecture. Throws
/// std::runtime_error on malformed files or shape mismatches.
CheckpointInfo load_checkpoint(const std::string& path, learn::ValueModel& model,
                               learn::AdamState& adam);

}  // namespace garm::harness
