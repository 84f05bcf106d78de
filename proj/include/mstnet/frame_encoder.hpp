#pragma once

#include <string>
#include <vector>

#include "mstnet/config.hpp"
#include "mstnet/tensor.hpp"

namespace mstnet {

// Per-video frame feature matrix, time-major. Frames are padded with
// zero rows to a multiple of 4; valid_len is the pre-padding length.
struct FeatureSequence {
    Tensor frames;  // [T x D_in], T multiple of 4
    int valid_len = 0;
    std::string sample_id;
};

// Pads trailing zero frames so the row count is a multiple of 4.
Tensor pad_to_multiple_of_4(const Tensor& frames);

struct NamedParam {
    std::string name;
    Tensor tensor;
};

// First-level gloss features: a small trainable frame embedder (linear +
// ReLU) standing in for the image backbone, then fc_layers fully
// connected layers ending at width c2. Stochastic gradient stopping sits
// between the embedder and the FC stack.
class FrameEncoder {
 public:
    FrameEncoder(const ModelConfig& cfg, Rng& init_rng);

    // rng is consumed only when training && grad_stop_p > 0.
    Tensor forward(const FeatureSequence& seq, bool training, Rng* rng) const;

    std::vector<NamedParam> parameters() const;

 private:
    int d_in_;
    int c1_;
    int c2_;
    double grad_stop_p_;
    Tensor embed_w_, embed_b_;
    std::vector<Tensor> fc_w_, fc_b_;
};

}  // namespace mstnet
