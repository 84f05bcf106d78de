#pragma once

#include <vector>

#include "mstnet/config.hpp"
#include "mstnet/ctc.hpp"
#include "mstnet/data_synth.hpp"
#include "mstnet/frame_encoder.hpp"
#include "mstnet/mst_block.hpp"
#include "mstnet/transformer.hpp"

namespace mstnet {

// The full pipeline: frame encoder -> MST blocks -> transformer encoder,
// with a linear classifier per gloss level feeding CTC.
class MstNet {
 public:
    MstNet(const ModelConfig& cfg, Rng& init_rng);

    // Returns one LevelLogits per gloss level (shallow to deep, 4 levels
    // with the standard two MST blocks). rng is consumed only when
    // training for the stochastic gradient stop.
    std::vector<LevelLogits> forward(const FeatureSequence& seq, bool training, Rng* rng) const;

    const ModelConfig& config() const { return cfg_; }
    std::vector<NamedParam> parameters() const;

    TransformerEncoder& encoder() { return encoder_; }
    std::vector<MstBlock>& mst_blocks() { return mst_blocks_; }

 private:
    ModelConfig cfg_;
    FrameEncoder frame_encoder_;
    std::vector<MstBlock> mst_blocks_;
    TransformerEncoder encoder_;
    std::vector<Tensor> head_w_, head_b_;  // per-level classifiers (or one shared)
};

}  // namespace mstnet
