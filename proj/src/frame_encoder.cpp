#include "mstnet/frame_encoder.hpp"

#include <cmath>

namespace mstnet {

Tensor pad_to_multiple_of_4(const Tensor& frames) {
    int t = frames.dim(0), d = frames.dim(1);
    int padded = (t + 3) / 4 * 4;
    if (padded == t) return frames;
    std::vector<double> data(static_cast<size_t>(padded) * d, 0.0);
    std::copy(frames.data().begin(), frames.data().end(), data.begin());
    return Tensor::from({padded, d}, std::move(data), frames.requires_grad());
}

FrameEncoder::FrameEncoder(const ModelConfig& cfg, Rng& init_rng)
    : d_in_(cfg.d_in), c1_(cfg.c1), c2_(cfg.c2), grad_stop_p_(cfg.grad_stop_p) {
    embed_w_ = Tensor::randn({d_in_, c1_}, init_rng, 1.0 / std::sqrt(d_in_), true);
    embed_b_ = Tensor::zeros({c1_}, true);
    // FC widths: c1 -> c2 for the first layer, c2 -> c2 after.
    for (int i = 0; i < cfg.fc_layers; ++i) {
        int in = i == 0 ? c1_ : c2_;
        fc_w_.push_back(Tensor::randn({in, c2_}, init_rng, 1.0 / std::sqrt(in), true));
        fc_b_.push_back(Tensor::zeros({c2_}, true));
    }
}

Tensor FrameEncoder::forward(const FeatureSequence& seq, bool training, Rng* rng) const {
    if (seq.frames.dim(1) != d_in_)
        throw DimensionError("frame encoder: input width " + std::to_string(seq.frames.dim(1)) +
                             " vs configured d_in " + std::to_string(d_in_));
    Tensor x = relu(linear(seq.frames, embed_w_, embed_b_));
    if (training && grad_stop_p_ > 0.0) {
        // Per-frame gradient stop: forward unchanged, backward flow into
        // the embedder zeroed independently per frame.
        int t = x.dim(0);
        std::vector<double> mask(static_cast<size_t>(t), 1.0);
        if (rng) {
            for (double& m : mask) m = rng->uniform() < grad_stop_p_ ? 0.0 : 1.0;
        } else if (grad_stop_p_ >= 1.0) {
            std::fill(mask.begin(), mask.end(), 0.0);
        }
        x = grad_mask_rows(x, std::move(mask));
    }
    for (size_t i = 0; i < fc_w_.size(); ++i) {
        if (i > 0) x = relu(x);
        x = linear(x, fc_w_[i], fc_b_[i]);
    }
    return x;
}

std::vector<NamedParam> FrameEncoder::parameters() const {
    std::vector<NamedParam> out;
    out.push_back({"embed.w", embed_w_});
    out.push_back({"embed.b", embed_b_});
    for (size_t i = 0; i < fc_w_.size(); ++i) {
        out.push_back({"fc" + std::to_string(i) + ".w", fc_w_[i]});
        out.push_back({"fc" + std::to_string(i) + ".b", fc_b_[i]});
    }
    return out;
}

}  // namespace mstnet
