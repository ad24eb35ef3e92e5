#include "garm/reward.hpp"

#include <cmath>

namespace garm::learn {

RewardBreakdown reward_from_metrics(const percept::Metrics& m, const RewardWeights& w,
                                    double table_extent) {
    RewardBreakdown r;
    r.r_c = m.coverage;
    r.r_i = m.iou;
    double diagonal = table_extent * std::sqrt(2.0);
    r.r_k = diagonal > 0.0 ? -(m.kd / diagonal) : 0.0;
    r.r_cik = w.alpha * r.r_c + w.beta * r.r_i + w.keypoint_weight() * r.r_k;
    return r;
}

RewardPair reward_breakdown(const percept::Metrics& before, const percept::Metrics& after,
                            const RewardWeights& w, double table_extent) {
    RewardPair pair;
    pair.before = reward_from_metrics(before, w, table_extent);
    pair.after = reward_from_metrics(after, w, table_extent);
    pair.delta = {pair.after.r_c - pair.before.r_c, pair.after.r_i - pair.before.r_i,
                  pair.after.r_k - pair.before.r_k, pair.after.r_cik - pair.before.r_cik};
    return pair;
}

}  // namespace garm::learn
