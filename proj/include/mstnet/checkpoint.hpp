#pragma once

#include <string>
#include <vector>

#include "mstnet/config.hpp"
#include "mstnet/frame_encoder.hpp"
#include "mstnet/tensor.hpp"

namespace mstnet {

// Training snapshot. File layout: magic "MSTN", version byte,
// length-prefixed config text, named length-prefixed f64 arrays for
// parameters and Adam moments, then counters and the rng state, all
// little-endian. save(load(f)) is byte-identical.
struct Checkpoint {
    ModelConfig config;
    std::vector<NamedParam> params;
    AdamState adam;
    int epoch = 0;
    uint64_t rng_state = 0;
    double best_dev_wer = -1.0;  // negative = no evaluation recorded
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mstnet
