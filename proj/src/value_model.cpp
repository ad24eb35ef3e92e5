#include "garm/value_model.hpp"

#include <cmath>
#include <random>

namespace garm::learn {

namespace {

constexpr int kUp = 4;  // nearest-neighbor upsampling factor per decoder stage

void conv_forward(const Conv& conv, const Tensor3& in, Tensor3& out) {
    const int oh = (in.h + conv.stride - 1) / conv.stride;
    const int ow = (in.w + conv.stride - 1) / conv.stride;
    out = Tensor3(conv.out_c, oh, ow);
    for (int oc = 0; oc < conv.out_c; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = conv.b[oc];
                for (int ic = 0; ic < conv.in_c; ++ic) {
                    const double* wp = &conv.w[(static_cast<size_t>(oc) * conv.in_c + ic) * 9];
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = oy * conv.stride + ky - 1;
                        if (iy < 0 || iy >= in.h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = ox * conv.stride + kx - 1;
                            if (ix < 0 || ix >= in.w) continue;
                            acc += wp[ky * 3 + kx] * in.at(ic, iy, ix);
                        }
                    }
                }
                out.at(oc, oy, ox) = acc;
            }
        }
    }
}

void conv_backward(const Conv& conv, const Tensor3& in, const Tensor3& d_out, Conv& d_conv,
                   Tensor3& d_in) {
    d_in = Tensor3(in.c, in.h, in.w);
    for (int oc = 0; oc < conv.out_c; ++oc) {
        for (int oy = 0; oy < d_out.h; ++oy) {
            for (int ox = 0; ox < d_out.w; ++ox) {
                double g = d_out.at(oc, oy, ox);
                if (g == 0.0) continue;
                d_conv.b[oc] += g;
                for (int ic = 0; ic < conv.in_c; ++ic) {
                    const double* wp = &conv.w[(static_cast<size_t>(oc) * conv.in_c + ic) * 9];
                    double* dwp = &d_conv.w[(static_cast<size_t>(oc) * conv.in_c + ic) * 9];
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = oy * conv.stride + ky - 1;
                        if (iy < 0 || iy >= in.h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = ox * conv.stride + kx - 1;
                            if (ix < 0 || ix >= in.w) continue;
                            dwp[ky * 3 + kx] += g * in.at(ic, iy, ix);
                            d_in.at(ic, iy, ix) += g * wp[ky * 3 + kx];
                        }
                    }
                }
            }
        }
    }
}

void relu_inplace(Tensor3& t) {
    for (auto& v : t.v) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor3& post_act, Tensor3& grad) {
    for (size_t i = 0; i < grad.v.size(); ++i)
        if (post_act.v[i] <= 0.0) grad.v[i] = 0.0;
}

void upsample_forward(const Tensor3& in, Tensor3& out) {
    out = Tensor3(in.c, in.h * kUp, in.w * kUp);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(c, y, x) = in.at(c, y / kUp, x / kUp);
}

void upsample_backward(const Tensor3& d_out, Tensor3& d_in, int in_h, int in_w) {
    d_in = Tensor3(d_out.c, in_h, in_w);
    for (int c = 0; c < d_out.c; ++c)
        for (int y = 0; y < d_out.h; ++y)
            for (int x = 0; x < d_out.w; ++x)
                d_in.at(c, y / kUp, x / kUp) += d_out.at(c, y, x);
}

Conv make_conv(int in_c, int out_c, int stride) {
    Conv c;
    c.in_c = in_c;
    c.out_c = out_c;
    c.stride = stride;
    c.w.assign(static_cast<size_t>(out_c) * in_c * 9, 0.0);
    c.b.assign(out_c, 0.0);
    return c;
}

void he_init(Conv& conv, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (conv.in_c * 9.0)));
    for (auto& w : conv.w) w = dist(rng);
}

bool all_finite(const Tensor3& t) {
    for (double v : t.v)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

void ValueModel::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int f = 0; f < kFactors; ++f) {
        int in_c = input_channels;
        for (int i = 0; i < 4; ++i) {
            encoders[f].convs[i] = make_conv(in_c, kEncoderChannels[i], 2);
            he_init(encoders[f].convs[i], rng);
            in_c = kEncoderChannels[i];
        }
        for (int h = 0; h < kHeads; ++h) {
            decoders[f][h].convs[0] = make_conv(kEncoderChannels[3], kDecoderMid, 1);
            he_init(decoders[f][h].convs[0], rng);
            // final layer stays zero: a fresh model predicts zero everywhere
            decoders[f][h].convs[1] = make_conv(kDecoderMid, 1, 1);
        }
    }
}

void ValueModel::zero() {
    visit_params([](const std::string&, std::vector<double>& v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
}

void ValueModel::visit_params(const ParamVisitor& fn) {
    static const char* head_names[kHeads] = {"fling", "pnp"};
    for (int f = 0; f < kFactors; ++f) {
        for (int i = 0; i < 4; ++i) {
            std::string base = "enc" + std::to_string(f) + ".conv" + std::to_string(i);
            fn(base + ".w", encoders[f].convs[i].w);
            fn(base + ".b", encoders[f].convs[i].b);
        }
        for (int h = 0; h < kHeads; ++h) {
            for (int i = 0; i < 2; ++i) {
                std::string base = "dec" + std::to_string(f) + "." + head_names[h] + ".conv" +
                                   std::to_string(i);
                fn(base + ".w", decoders[f][h].convs[i].w);
                fn(base + ".b", decoders[f][h].convs[i].b);
            }
        }
    }
}

void ValueModel::visit_params(const ConstParamVisitor& fn) const {
    const_cast<ValueModel*>(this)->visit_params(
        [&](const std::string& name, std::vector<double>& v) { fn(name, v); });
}

std::size_t ValueModel::parameter_count() const {
    std::size_t n = 0;
    visit_params([&](const std::string&, const std::vector<double>& v) { n += v.size(); });
    return n;
}

void ValueModel::forward(const Tensor3& input, Cache& cache) const {
    cache.input = input;
    for (int f = 0; f < kFactors; ++f) {
        const Tensor3* cur = &input;
        for (int i = 0; i < 4; ++i) {
            conv_forward(encoders[f].convs[i], *cur, cache.enc_acts[f][i]);
            relu_inplace(cache.enc_acts[f][i]);
            cur = &cache.enc_acts[f][i];
        }
        for (int h = 0; h < kHeads; ++h) {
            auto& acts = cache.dec_acts[f][h];
            upsample_forward(*cur, acts[0]);
            conv_forward(decoders[f][h].convs[0], acts[0], acts[1]);
            relu_inplace(acts[1]);
            upsample_forward(acts[1], acts[2]);
            conv_forward(decoders[f][h].convs[1], acts[2], cache.outputs[f][h]);
            if (!all_finite(cache.outputs[f][h]))
                throw DivergenceError("non-finite activations in value-model forward pass");
        }
    }
}

void ValueModel::backward(const Cache& cache, int factor, int head, const Tensor3& d_output,
                          ValueModel& grads) const {
    const auto& dec = decoders[factor][head];
    auto& d_dec = grads.decoders[factor][head];
    const auto& acts = cache.dec_acts[factor][head];

    Tensor3 d_up2, d_conv1, d_up1, d_enc;
    conv_backward(dec.convs[1], acts[2], d_output, d_dec.convs[1], d_up2);
    upsample_backward(d_up2, d_conv1, acts[1].h, acts[1].w);
    relu_backward_inplace(acts[1], d_conv1);
    conv_backward(dec.convs[0], acts[0], d_conv1, d_dec.convs[0], d_up1);
    upsample_backward(d_up1, d_enc, cache.enc_acts[factor][3].h, cache.enc_acts[factor][3].w);

    Tensor3 d_cur = std::move(d_enc);
    for (int i = 3; i >= 0; --i) {
        relu_backward_inplace(cache.enc_acts[factor][i], d_cur);
        const Tensor3& in = i == 0 ? cache.input : cache.enc_acts[factor][i - 1];
        Tensor3 d_in;
        conv_backward(encoders[factor].convs[i], in, d_cur, grads.encoders[factor].convs[i], d_in);
        d_cur = std::move(d_in);
    }
}

Tensor3 observation_tensor(const percept::Observation& obs) {
    const int d = obs.height.width();
    Tensor3 t(2, obs.height.height(), d);
    for (int y = 0; y < obs.height.height(); ++y) {
        for (int x = 0; x < d; ++x) {
            t.at(0, y, x) = obs.height.at(x, y);
            t.at(1, y, x) = obs.mask.at(x, y) ? 1.0 : 0.0;
        }
    }
    return t;
}

policy::ValueMapBatch model_forward(const ValueModel& model, const policy::TransformPyramid& pyr,
                                    const RewardWeights& weights) {
    policy::ValueMapBatch batch;
    const int layers = static_cast<int>(pyr.layers.size());
    batch.allocate(layers, pyr.image_dim);

    ValueModel::Cache cache;
    const double wk = weights.keypoint_weight();
    for (int l = 0; l < layers; ++l) {
        model.forward(observation_tensor(pyr.layers[l].obs), cache);
        for (int h = 0; h < ValueModel::kHeads; ++h) {
            Primitive p = h == 0 ? Primitive::fling : Primitive::pnp;
            ValueGrid& combined = batch.combined_map(l, p);
            for (int f = 0; f < ValueModel::kFactors; ++f) {
                ValueGrid& grid = batch.factor(l, p, f);
                const Tensor3& out = cache.outputs[f][h];
                for (int y = 0; y < out.h; ++y)
                    for (int x = 0; x < out.w; ++x) grid.at(x, y) = out.at(0, y, x);
            }
            for (int y = 0; y < pyr.image_dim; ++y) {
                for (int x = 0; x < pyr.image_dim; ++x) {
                    combined.at(x, y) = weights.alpha * batch.factor(l, p, 0).at(x, y) +
                                        weights.beta * batch.factor(l, p, 1).at(x, y) +
                                        wk * batch.factor(l, p, 2).at(x, y);
                }
            }
        }
    }
    return batch;
}

void AdamState::apply(ValueModel& params, const ValueModel& grads) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));

    std::map<std::string, const std::vector<double>*> grad_map;
    grads.visit_params([&](const std::string& name, const std::vector<double>& v) {
        grad_map[name] = &v;
    });
    params.visit_params([&](const std::string& name, std::vector<double>& v) {
        auto& [m, vel] = moments[name];
        if (m.size() != v.size()) {
            m.assign(v.size(), 0.0);
            vel.assign(v.size(), 0.0);
        }
        const std::vector<double>& g = *grad_map.at(name);
        for (size_t i = 0; i < v.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            vel[i] = beta2 * vel[i] + (1.0 - beta2) * g[i] * g[i];
            double mh = m[i] / bc1;
            double vh = vel[i] / bc2;
            v[i] -= learning_rate * mh / (std::sqrt(vh) + eps);
        }
    });
}

}  // namespace garm::learn
