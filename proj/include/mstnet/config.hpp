#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mstnet {

// Every architectural and training hyperparameter, including the four
// ablation knobs (num_scales, fc_layers, encoder choice, ctc_levels).
struct ModelConfig {
    // architecture
    int d_in = 16;
    int c1 = 32;   // reference model uses 512
    int c2 = 64;   // reference model uses 1024
    int fc_layers = 2;        // 0..3
    int num_scales = 4;       // n; branch kernels 3,5,...,3+2(n-1)
    int num_mst_blocks = 2;
    int encoder_layers = 2;
    int heads = 8;
    int ff_mult = 4;
    int ctc_levels = 4;       // retained in reverse order, deep end first
    int vocab_size = 10;
    bool fusion_relu = true;
    bool shared_head = false; // one classifier for all levels instead of per-level
    double grad_stop_p = 0.5;

    // training
    double lr = 1e-4;
    double weight_decay = 1e-4;
    std::vector<std::pair<int, double>> lr_drops = {{40, 0.2}, {50, 0.2}};
    int epochs = 60;
    int batch_size = 2;
    int beam_width = 10;
    double augment_frac = 0.0;  // temporal augmentation, up to +/-20% when 0.2
    uint64_t seed = 1;

    void validate() const;  // throws ConfigError
    int branch_kernel(int i) const { return 3 + 2 * i; }
    int max_kernel() const { return branch_kernel(num_scales - 1); }
    double lr_at_epoch(int epoch) const;  // epoch is 0-based
};

// Line-based `key = value` config file; '#' starts a comment.
ModelConfig parse_config_file(const std::string& path, ModelConfig base = {});
void apply_config_line(ModelConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const ModelConfig& cfg);
ModelConfig parse_config_text(const std::string& text, ModelConfig base = {});

}  // namespace mstnet
