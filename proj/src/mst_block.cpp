#include "mstnet/mst_block.hpp"

#include <cmath>
#include <string>

namespace mstnet {

MstBlock::MstBlock(const ModelConfig& cfg, Rng& init_rng)
    : channels_(cfg.c2), fusion_relu_(cfg.fusion_relu) {
    for (int i = 0; i < cfg.num_scales; ++i) {
        int k = cfg.branch_kernel(i);
        double scl = 1.0 / std::sqrt(static_cast<double>(channels_) * k);
        branch_w_.push_back(Tensor::randn({channels_, channels_, k}, init_rng, scl, true));
        branch_b_.push_back(Tensor::zeros({channels_}, true));
    }
    int n = cfg.num_scales;
    double scl = 1.0 / std::sqrt(static_cast<double>(channels_) * n * 2);
    fusion_w_ = Tensor::randn({channels_, channels_, n, 2}, init_rng, scl, true);
    fusion_b_ = Tensor::zeros({channels_}, true);
}

Tensor MstBlock::forward(const Tensor& input) const {
    if (input.shape().size() != 2 || input.dim(1) != channels_)
        throw DimensionError("mst block: expected [T x " + std::to_string(channels_) +
                             "], got other shape");
    int t = input.dim(0);
    if (t < 2 || t % 2 != 0)
        throw DataError("mst block: T=" + std::to_string(t) +
                        " must be even; pad the sequence before the stack");
    Tensor x = transpose(input);  // [c2 x T]
    std::vector<Tensor> branches;
    for (size_t i = 0; i < branch_w_.size(); ++i) {
        int k = branch_w_[i].dim(2);
        branches.push_back(conv1d(x, branch_w_[i], branch_b_[i], (k - 1) / 2, 1));
    }
    Tensor stacked = stack_planes(branches);              // [c2 x n x T]
    Tensor fused = conv2d(stacked, fusion_w_, fusion_b_, 1, 2);  // [c2 x 1 x T/2]
    if (fusion_relu_) fused = relu(fused);
    return transpose(reshape(fused, {channels_, t / 2}));  // [T/2 x c2]
}

std::vector<NamedParam> MstBlock::parameters() const {
    std::vector<NamedParam> out;
    for (size_t i = 0; i < branch_w_.size(); ++i) {
        out.push_back({"branch" + std::to_string(i) + ".w", branch_w_[i]});
        out.push_back({"branch" + std::to_string(i) + ".b", branch_b_[i]});
    }
    out.push_back({"fusion.w", fusion_w_});
    out.push_back({"fusion.b", fusion_b_});
    return out;
}

LevelFeatures mst_stack(const Tensor& level1, const std::vector<MstBlock>& blocks) {
    if (level1.dim(0) % 4 != 0)
        throw DataError("mst stack: T=" + std::to_string(level1.dim(0)) +
                        " must be a multiple of 4");
    LevelFeatures out;
    Tensor x = level1;
    for (size_t i = 0; i < blocks.size(); ++i) {
        x = blocks[i].forward(x);
        if (i == 0) out.level2 = x;
    }
    out.level3 = x;
    return out;
}

}  // namespace mstnet
