#pragma once

#include <vector>

#include "mstnet/config.hpp"
#include "mstnet/frame_encoder.hpp"
#include "mstnet/tensor.hpp"

namespace mstnet {

// Sinusoidal table [t x c]: even dims sin(pos/10000^{2i/c}), odd dims cos.
Tensor positional_encoding(int t, int c);

// Post-layer-norm transformer encoder. Positional encoding is added once
// before the first layer; attention is unmasked and dropout-free.
class TransformerEncoder {
 public:
    TransformerEncoder(const ModelConfig& cfg, Rng& init_rng);

    Tensor forward(const Tensor& input) const;  // [T2 x c2] -> [T2 x c2]

    // Multi-head self-attention sublayer of one layer (exposed for tests).
    Tensor mhsa(const Tensor& input, int layer) const;

    std::vector<NamedParam> parameters() const;

    // Test hook: disable the positional-encoding addition.
    void set_use_pe(bool on) { use_pe_ = on; }

 private:
    struct Layer {
        Tensor wq, bq, wk, bk, wv, bv, wo, bo;
        Tensor ff1_w, ff1_b, ff2_w, ff2_b;
        Tensor norm1_g, norm1_b, norm2_g, norm2_b;
    };
    int c2_;
    int heads_;
    bool use_pe_ = true;
    std::vector<Layer> layers_;
};

}  // namespace mstnet
