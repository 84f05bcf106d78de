#pragma once

#include <vector>

#include "mstnet/tensor.hpp"

namespace mstnet {

// Ground-truth label sequence over the gloss vocabulary. Ids live in
// [0, vocab); the blank id is vocab itself and never appears here.
struct GlossSequence {
    std::vector<int> labels;

    bool operator==(const GlossSequence& other) const { return labels == other.labels; }
    int length() const { return static_cast<int>(labels.size()); }
};

// Per-level class-score matrix [T_level x (vocab+1)], plus the number of
// leading rows that correspond to real (unpadded) frames.
struct LevelLogits {
    Tensor scores;
    int valid_len = 0;

    int num_classes() const { return scores.dim(1); }  // vocab + 1
    int blank() const { return scores.dim(1) - 1; }
};

// Collapse mapping B: merge consecutive repeats, then drop blanks.
GlossSequence collapse(const std::vector<int>& path, int blank);

// Minimum number of frames any alignment of `target` needs
// (length plus one extra frame per adjacent equal pair).
int min_alignment_len(const GlossSequence& target);

// Negative log-likelihood of the target under the logits, via the
// log-space forward recursion over the blank-augmented label sequence.
// Differentiable. Throws InfeasibleTargetError when valid_len is too
// short for any alignment.
Tensor ctc_loss(const LevelLogits& logits, const GlossSequence& target);

// Sum of per-level CTC losses. Levels are ordered shallow to deep
// (level 1 first); active_levels counts from the DEEP end, so
// active_levels=1 keeps only the last level. Summation order is
// level 1 -> 4 for determinism.
Tensor multi_level_ctc(const std::vector<LevelLogits>& levels, const GlossSequence& target,
                       int active_levels);

// Argmax per frame, then collapse.
GlossSequence greedy_decode(const LevelLogits& logits);

// CTC prefix beam search in log space with separate blank-/non-blank-ending
// probabilities per prefix. Ties break lexicographically.
GlossSequence beam_decode(const LevelLogits& logits, int beam_width);

}  // namespace mstnet
