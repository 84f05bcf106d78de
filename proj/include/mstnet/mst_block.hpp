#pragma once

#include <vector>

#include "mstnet/config.hpp"
#include "mstnet/frame_encoder.hpp"
#include "mstnet/tensor.hpp"

namespace mstnet {

// Multi-scale temporal block: n parallel same-padded 1D convolutions with
// kernel sizes 3,5,...,3+2(n-1), stacked along a scale axis and fused by a
// 2D convolution with kernel (n,2) and temporal stride 2. Halves the
// temporal length.
class MstBlock {
 public:
    MstBlock(const ModelConfig& cfg, Rng& init_rng);

    // input [T x c2], T even -> [T/2 x c2]
    Tensor forward(const Tensor& input) const;

    std::vector<NamedParam> parameters() const;

    int num_scales() const { return static_cast<int>(branch_w_.size()); }

    // Test hook: overwrite branch/fusion weights directly.
    Tensor& branch_weight(int i) { return branch_w_[static_cast<size_t>(i)]; }
    Tensor& branch_bias(int i) { return branch_b_[static_cast<size_t>(i)]; }
    Tensor& fusion_weight() { return fusion_w_; }
    Tensor& fusion_bias() { return fusion_b_; }

 private:
    int channels_;
    bool fusion_relu_;
    std::vector<Tensor> branch_w_, branch_b_;  // [c2 x c2 x k], [c2]
    Tensor fusion_w_, fusion_b_;               // [c2 x c2 x n x 2], [c2]
};

struct LevelFeatures {
    Tensor level2;  // [T/2 x c2]
    Tensor level3;  // [T/4 x c2]
};

// Applies the stacked blocks in order; with the standard two blocks the
// total temporal downsampling factor is exactly 4.
LevelFeatures mst_stack(const Tensor& level1, const std::vector<MstBlock>& blocks);

}  // namespace mstnet
