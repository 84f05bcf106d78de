#pragma once

#include <string>
#include <vector>

#include "mstnet/ctc.hpp"
#include "mstnet/frame_encoder.hpp"
#include "mstnet/rng.hpp"

namespace mstnet {

// Deterministic toy sign-language grammar: each gloss has a fixed random
// prototype clip whose realizations vary in duration and noise.
struct ToyGrammar {
    int vocab_size = 10;
    int d_in = 16;
    int len_min = 4;          // prototype duration range (frames)
    int len_max = 12;
    double noise_sigma = 0.05;
    int sentence_min = 2;
    int sentence_max = 5;
    uint64_t seed = 1;
};

struct Sample {
    FeatureSequence features;
    GlossSequence target;
};

enum class Split { kTrain, kTest };

// Per-gloss prototype clips, fixed per seed.
std::vector<Tensor> gloss_prototypes(const ToyGrammar& grammar);

// (seed, split, index) fully determines every sample. Both splits share
// prototypes; the test split uses disjoint warp and noise draws.
Sample generate_sample(const ToyGrammar& grammar, Split split, int index);
std::vector<Sample> generate(const ToyGrammar& grammar, int count, Split split);

// Random +/- max_frac length change by uniformly spaced frame
// duplication or deletion; surviving frames keep their relative order.
// Result is re-padded to a multiple of 4. The target is never altered.
FeatureSequence temporal_augment(const FeatureSequence& seq, Rng& rng, double max_frac);

// Corpus files: magic "MSTD", version byte, u32 record count, then per
// record u32 T, L, D_in + T*D_in float32 frames + L u32 gloss ids, all
// little-endian. T here is the unpadded length.
void save_corpus(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> load_corpus(const std::string& path);

}  // namespace mstnet
