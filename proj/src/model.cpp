#include "mstnet/model.hpp"

#include <cmath>
#include <string>

namespace mstnet {

MstNet::MstNet(const ModelConfig& cfg, Rng& init_rng)
    : cfg_(cfg), frame_encoder_(cfg, init_rng), encoder_(cfg, init_rng) {
    cfg_.validate();
    for (int b = 0; b < cfg.num_mst_blocks; ++b) mst_blocks_.emplace_back(cfg, init_rng);
    int classes = cfg.vocab_size + 1;
    int num_heads = cfg.shared_head ? 1 : cfg.num_mst_blocks + 2;
    double scl = 1.0 / std::sqrt(static_cast<double>(cfg.c2));
    for (int i = 0; i < num_heads; ++i) {
        head_w_.push_back(Tensor::randn({cfg.c2, classes}, init_rng, scl, true));
        head_b_.push_back(Tensor::zeros({classes}, true));
    }
}

std::vector<LevelLogits> MstNet::forward(const FeatureSequence& seq, bool training,
                                         Rng* rng) const {
    if (seq.frames.dim(0) % 4 != 0)
        throw DataError("model: frame count must be padded to a multiple of 4");
    Tensor level1 = frame_encoder_.forward(seq, training, rng);
    std::vector<Tensor> features = {level1};
    Tensor x = level1;
    for (const auto& block : mst_blocks_) {
        x = block.forward(x);
        features.push_back(x);
    }
    features.push_back(encoder_.forward(x));

    // Valid (unpadded) frame counts per level: halved at each MST block,
    // preserved by the transformer.
    std::vector<int> valid = {seq.valid_len};
    int v = seq.valid_len;
    for (size_t b = 0; b < mst_blocks_.size(); ++b) {
        v = (v + 1) / 2;
        valid.push_back(v);
    }
    valid.push_back(v);

    std::vector<LevelLogits> levels;
    for (size_t i = 0; i < features.size(); ++i) {
        size_t h = cfg_.shared_head ? 0 : i;
        LevelLogits ll;
        ll.scores = linear(features[i], head_w_[h], head_b_[h]);
        ll.valid_len = std::min(valid[i], ll.scores.dim(0));
        levels.push_back(std::move(ll));
    }
    return levels;
}

std::vector<NamedParam> MstNet::parameters() const {
    std::vector<NamedParam> out;
    for (auto& p : frame_encoder_.parameters()) out.push_back(p);
    for (size_t b = 0; b < mst_blocks_.size(); ++b) {
        for (auto& p : mst_blocks_[b].parameters())
            out.push_back({"mst" + std::to_string(b) + "." + p.name, p.tensor});
    }
    for (auto& p : encoder_.parameters()) out.push_back({"enc." + p.name, p.tensor});
    for (size_t i = 0; i < head_w_.size(); ++i) {
        out.push_back({"head" + std::to_string(i) + ".w", head_w_[i]});
        out.push_back({"head" + std::to_string(i) + ".b", head_b_[i]});
    }
    return out;
}

}  // namespace mstnet
