#include "mstnet/transformer.hpp"

#include <cmath>
#include <string>

namespace mstnet {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

Tensor positional_encoding(int t, int c) {
    if (t < 1 || c < 1) throw DimensionError("positional_encoding: non-positive size");
    Tensor pe = Tensor::zeros({t, c});
    auto& d = pe.data();
    for (int pos = 0; pos < t; ++pos) {
        for (int i = 0; i < c; ++i) {
            double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / c);
            d[static_cast<size_t>(pos) * c + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

TransformerEncoder::TransformerEncoder(const ModelConfig& cfg, Rng& init_rng)
    : c2_(cfg.c2), heads_(cfg.heads) {
    double scl = 1.0 / std::sqrt(static_cast<double>(c2_));
    for (int l = 0; l < cfg.encoder_layers; ++l) {
        Layer layer;
        layer.wq = Tensor::randn({c2_, c2_}, init_rng, scl, true);
        layer.bq = Tensor::zeros({c2_}, true);
        layer.wk = Tensor::randn({c2_, c2_}, init_rng, scl, true);
        layer.bk = Tensor::zeros({c2_}, true);
        layer.wv = Tensor::randn({c2_, c2_}, init_rng, scl, true);
        layer.bv = Tensor::zeros({c2_}, true);
        layer.wo = Tensor::randn({c2_, c2_}, init_rng, scl, true);
        layer.bo = Tensor::zeros({c2_}, true);
        int ff = cfg.ff_mult * c2_;
        layer.ff1_w = Tensor::randn({c2_, ff}, init_rng, scl, true);
        layer.ff1_b = Tensor::zeros({ff}, true);
        layer.ff2_w = Tensor::randn({ff, c2_}, init_rng, 1.0 / std::sqrt(static_cast<double>(ff)), true);
        layer.ff2_b = Tensor::zeros({c2_}, true);
        layer.norm1_g = Tensor::full({c2_}, 1.0, true);
        layer.norm1_b = Tensor::zeros({c2_}, true);
        layer.norm2_g = Tensor::full({c2_}, 1.0, true);
        layer.norm2_b = Tensor::zeros({c2_}, true);
        layers_.push_back(std::move(layer));
    }
}

Tensor TransformerEncoder::mhsa(const Tensor& input, int layer) const {
    const Layer& p = layers_.at(static_cast<size_t>(layer));
    int dh = c2_ / heads_;
    Tensor q = linear(input, p.wq, p.bq);
    Tensor k = linear(input, p.wk, p.bk);
    Tensor v = linear(input, p.wv, p.bv);
    std::vector<Tensor> head_outs;
    double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < heads_; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        Tensor vh = slice_cols(v, h * dh, dh);
        Tensor scores = scale(matmul(qh, transpose(kh)), att_scale);
        Tensor attn = softmax_rows(scores);
        head_outs.push_back(matmul(attn, vh));
    }
    return linear(concat_cols(head_outs), p.wo, p.bo);
}

Tensor TransformerEncoder::forward(const Tensor& input) const {
    if (input.shape().size() != 2 || input.dim(1) != c2_)
        throw DimensionError("transformer: expected [T2 x " + std::to_string(c2_) + "]");
    if (layers_.empty()) return input;  // no enhancement coding
    Tensor x = input;
    if (use_pe_) x = add(x, positional_encoding(input.dim(0), c2_));
    for (size_t l = 0; l < layers_.size(); ++l) {
        const Layer& p = layers_[l];
        Tensor att = mhsa(x, static_cast<int>(l));
        x = layer_norm(add(x, att), p.norm1_g, p.norm1_b, kLayerNormEps);
        Tensor ff = linear(relu(linear(x, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b);
        x = layer_norm(add(x, ff), p.norm2_g, p.norm2_b, kLayerNormEps);
    }
    return x;
}

std::vector<NamedParam> TransformerEncoder::parameters() const {
    std::vector<NamedParam> out;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const Layer& p = layers_[l];
        std::string pre = "layer" + std::to_string(l) + ".";
        out.push_back({pre + "wq", p.wq});
        out.push_back({pre + "bq", p.bq});
        out.push_back({pre + "wk", p.wk});
        out.push_back({pre + "bk", p.bk});
        out.push_back({pre + "wv", p.wv});
        out.push_back({pre + "bv", p.bv});
        out.push_back({pre + "wo", p.wo});
        out.push_back({pre + "bo", p.bo});
        out.push_back({pre + "ff1.w", p.ff1_w});
        out.push_back({pre + "ff1.b", p.ff1_b});
        out.push_back({pre + "ff2.w", p.ff2_w});
        out.push_back({pre + "ff2.b", p.ff2_b});
        out.push_back({pre + "norm1.g", p.norm1_g});
        out.push_back({pre + "norm1.b", p.norm1_b});
        out.push_back({pre + "norm2.g", p.norm2_g});
        out.push_back({pre + "norm2.b", p.norm2_b});
    }
    return out;
}

}  // namespace mstnet
