#pragma once

#include "garm/common.hpp"
#include "garm/metrics.hpp"

namespace garm::learn {

struct RewardWeights {
    double alpha = 0.2;
    double beta = 0.4;
    double keypoint_weight() const { return 1.0 - alpha - beta; }
};

struct RewardBreakdown {
    double r_c = 0.0;    // coverage term, [0, 1+eps]
    double r_i = 0.0;    // IoU term, [0, 1]
    double r_k = 0.0;    // keypoint term, [-1, 0]
    double r_cik = 0.0;  // alpha*r_c + beta*r_i + (1-alpha-beta)*r_k
};

struct RewardDelta {
    double d_c = 0.0;
    double d_i = 0.0;
    double d_k = 0.0;
    double d_cik = 0.0;
};

/// R_K is the negated mean keypoint distance normalized by the table diagonal
/// so that Eq-12 weights stay meaningful across garment sizes.
RewardBreakdown reward_from_metrics(const percept::Metrics& m, const RewardWeights& w,
                                    double table_extent);

struct RewardPair {
    RewardBreakdown before;
    RewardBreakdown after;
    RewardDelta delta;
};

RewardPair reward_breakdown(const percept::Metrics& before, const percept::Metrics& after,
                            const RewardWeights& w, double table_extent);

}  // namespace garm::learn
