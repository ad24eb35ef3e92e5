#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "garm/percept.hpp"
#include "garm/policy.hpp"
#include "garm/reward.hpp"

namespace garm::learn {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_) {}
    double& at(int ci, int yi, int xi) {
        return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
    }
    double at(int ci, int yi, int xi) const {
        return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
    }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

/// 3x3 convolution, zero padding 1.
struct Conv {
    int in_c = 0, out_c = 0, stride = 1;
    std::vector<double> w;  // out_c * in_c * 9
    std::vector<double> b;  // out_c
};

/// Three factor encoders (coverage / IoU / keypoint), each feeding a fling
/// and a pnp decoder head. Encoders downsample x16, decoders upsample back
/// with two nearest(x4)+conv stages; the final convs start zeroed so the
/// untrained model emits all-zero value maps.
class ValueModel {
public:
    static constexpr int kFactors = 3;
    static constexpr int kHeads = 2;  // fling, pnp
    static constexpr std::array<int, 4> kEncoderChannels{8, 16, 32, 32};
    static constexpr int kDecoderMid = 8;

    struct Encoder {
        std::array<Conv, 4> convs;
    };
    struct Decoder {
        std::array<Conv, 2> convs;  // after x4 nearest upsampling each
    };

    int input_channels = 2;
    std::array<Encoder, kFactors> encoders;
    std::array<std::array<Decoder, kHeads>, kFactors> decoders;  // [factor][head]

    void init(std::uint64_t seed);
    void zero();

    using ParamVisitor = std::function<void(const std::string&, std::vector<double>&)>;
    using ConstParamVisitor = std::function<void(const std::string&, const std::vector<double>&)>;
    void visit_params(const ParamVisitor& fn);
    void visit_params(const ConstParamVisitor& fn) const;
    std::size_t parameter_count() const;

    struct Cache {
        Tensor3 input;
        std::array<std::array<Tensor3, 4>, kFactors> enc_acts;  // post-ReLU
        std::array<std::array<std::array<Tensor3, 3>, kHeads>, kFactors>
            dec_acts;  // up1, post-ReLU conv1 (after up2 in slot 2? see cpp)
        std::array<std::array<Tensor3, kHeads>, kFactors> outputs;
    };

    /// Maps for all factor/head combinations. Throws DivergenceError on
    /// non-finite activations.
    void forward(const Tensor3& input, Cache& cache) const;

    /// Accumulate parameter gradients for d(loss)/d(output[factor][head]).
    /// `grads` is a zero-initialized model of identical shape.
    void backward(const Cache& cache, int factor, int head, const Tensor3& d_output,
                  ValueModel& grads) const;
};

Tensor3 observation_tensor(const percept::Observation& obs);

/// Evaluate all six maps per pyramid layer and the Eq-12 combination.
policy::ValueMapBatch model_forward(const ValueModel& model, const policy::TransformPyramid& pyr,
                                    const RewardWeights& weights);

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;

    void apply(ValueModel& params, const ValueModel& grads);
};

}  // namespace garm::learn
