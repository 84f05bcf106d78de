#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mstnet/checkpoint.hpp"
#include "mstnet/data_synth.hpp"
#include "mstnet/metrics.hpp"
#include "mstnet/model.hpp"

namespace mstnet {

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_wer = 0.0;
    double lr = 0.0;

    std::string tsv() const;  // "epoch\ttrain_loss\tdev_wer\tlr"
};

struct TrainResult {
    Checkpoint final_ckpt;
    Checkpoint best_ckpt;   // lowest dev WER (greedy decode)
    std::vector<EpochLog> logs;
    int skipped_samples = 0;
};

// Rebuilds a model and overwrites its parameters from the checkpoint.
MstNet model_from_checkpoint(const Checkpoint& ckpt);
Checkpoint snapshot(const MstNet& model, const AdamState& adam, int epoch,
                    uint64_t rng_state, double best_dev_wer);

// Runs the training loop: seeded shuffling, per-sample forward passes
// summed into batches of batch_size, multi-level CTC, Adam with the
// configured lr drops. Dev WER per epoch uses greedy decoding. Infeasible
// samples are skipped and counted. `resume` continues bitwise from a
// snapshot; `until_epoch` (1-based, inclusive) stops early when positive.
TrainResult train(const ModelConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& dev_set,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  int until_epoch = -1, bool verbose = false);

struct SampleDecode {
    std::string sample_id;
    GlossSequence reference;
    GlossSequence hypothesis;
    EditBreakdown breakdown;
};

struct EvalReport {
    EditBreakdown corpus;
    std::vector<SampleDecode> samples;
};

// Decodes the deepest level only. beam_width 1 is exactly greedy.
EvalReport evaluate(const MstNet& model, const std::vector<Sample>& corpus, int beam_width,
                    bool use_beam = true);

struct GradCheckGroup {
    std::string name;
    double max_rel_err = 0.0;
    bool exempt = false;  // analytic grads structurally zero (gradient stop)
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    bool all_pass = true;
};

// Central finite differences (h = 1e-5) through the entire network
// including the CTC loss, per parameter group.
GradCheckReport gradcheck(const ModelConfig& cfg, double tolerance);

struct AblationCell {
    int value = 0;
    double dev_wer = 0.0;
    double test_wer = 0.0;
    bool failed = false;
    std::string error;
};

enum class AblationAxis { kScales, kFcLayers, kEncoder, kCtcLevels };
AblationAxis parse_axis(const std::string& name);

// Trains one model per value with a shared seed and reports beam-decoded
// dev/test WER per cell; a failing cell does not abort the others.
// kEncoder values: 0 = no enhancement encoder, 1 = transformer.
std::vector<AblationCell> ablate(const ModelConfig& base, AblationAxis axis,
                                 const std::vector<int>& values,
                                 const std::vector<Sample>& train_set,
                                 const std::vector<Sample>& dev_set,
                                 const std::vector<Sample>& test_set, bool verbose = false);

}  // namespace mstnet
