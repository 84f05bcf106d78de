#include "mstnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace mstnet {

namespace {

constexpr uint64_t kTrainStreamSalt = 0x7261696e65724d53ULL;

std::vector<Tensor> raw_params(const MstNet& model) {
    std::vector<Tensor> out;
    for (auto& p : model.parameters()) out.push_back(p.tensor);
    return out;
}

void zero_grads(const MstNet& model) {
    for (auto& p : model.parameters()) p.tensor.zero_grad();
}

double greedy_dev_wer(const MstNet& model, const std::vector<Sample>& dev_set) {
    return evaluate(model, dev_set, 1, false).corpus.wer;
}

}  // namespace

std::string EpochLog::tsv() const {
    std::ostringstream os;
    os.precision(17);
    os << epoch << "\t" << train_loss << "\t" << dev_wer << "\t" << lr;
    return os.str();
}

MstNet model_from_checkpoint(const Checkpoint& ckpt) {
    Rng init_rng(ckpt.config.seed);
    MstNet model(ckpt.config, init_rng);
    auto params = model.parameters();
    if (params.size() != ckpt.params.size())
        throw DataError("checkpoint: parameter count mismatch (config/checkpoint skew)");
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != ckpt.params[i].name ||
            params[i].tensor.shape() != ckpt.params[i].tensor.shape())
            throw DataError("checkpoint: parameter '" + ckpt.params[i].name +
                            "' does not match the model built from its config");
        params[i].tensor.data() = ckpt.params[i].tensor.data();
    }
    return model;
}

Checkpoint snapshot(const MstNet& model, const AdamState& adam, int epoch,
                    uint64_t rng_state, double best_dev_wer) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    for (auto& p : model.parameters()) {
        NamedParam copy;
        copy.name = p.name;
        copy.tensor = Tensor::from(p.tensor.shape(), p.tensor.data(), true);
        ckpt.params.push_back(std::move(copy));
    }
    ckpt.adam = adam;
    ckpt.epoch = epoch;
    ckpt.rng_state = rng_state;
    ckpt.best_dev_wer = best_dev_wer;
    return ckpt;
}

TrainResult train(const ModelConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& dev_set, const std::optional<Checkpoint>& resume,
                  int until_epoch, bool verbose) {
    cfg.validate();
    if (train_set.empty()) throw DataError("train: empty corpus");
    const std::vector<Sample>& dev = dev_set.empty() ? train_set : dev_set;

    TrainResult result;
    Rng init_rng(cfg.seed);
    MstNet model = resume ? model_from_checkpoint(*resume) : MstNet(cfg, init_rng);
    std::vector<Tensor> params = raw_params(model);

    AdamState adam;
    Rng rng(cfg.seed ^ kTrainStreamSalt);
    int start_epoch = 0;
    double best_wer = -1.0;
    if (resume) {
        adam = resume->adam;
        rng.set_state(resume->rng_state);
        start_epoch = resume->epoch;
        best_wer = resume->best_dev_wer;
        result.best_ckpt = *resume;
    } else {
        adam_init(adam, params);
    }

    int stop_epoch = until_epoch > 0 ? std::min(until_epoch, cfg.epochs) : cfg.epochs;
    AdamConfig adam_cfg;
    adam_cfg.weight_decay = cfg.weight_decay;

    for (int epoch = start_epoch; epoch < stop_epoch; ++epoch) {
        adam_cfg.lr = cfg.lr_at_epoch(epoch);

        std::vector<size_t> order(train_set.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);

        double loss_sum = 0.0;
        int loss_count = 0;
        for (size_t b = 0; b < order.size(); b += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(order.size(), b + static_cast<size_t>(cfg.batch_size));
            Tensor batch_loss;
            int batch_count = 0;
            for (size_t i = b; i < end; ++i) {
                const Sample& sample = train_set[order[i]];
                FeatureSequence seq = sample.features;
                if (cfg.augment_frac > 0.0)
                    seq = temporal_augment(seq, rng, cfg.augment_frac);
                Tensor loss;
                try {
                    auto levels = model.forward(seq, true, &rng);
                    loss = multi_level_ctc(levels, sample.target, cfg.ctc_levels);
                } catch (const InfeasibleTargetError& e) {
                    ++result.skipped_samples;
                    if (verbose)
                        std::cerr << "skipping " << seq.sample_id << ": " << e.what() << "\n";
                    continue;
                }
                if (!std::isfinite(loss.value()))
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch + 1) + ", sample " + seq.sample_id);
                batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
                ++batch_count;
            }
            if (batch_count == 0) continue;
            Tensor mean_loss = scale(batch_loss, 1.0 / batch_count);
            loss_sum += mean_loss.value() * batch_count;
            loss_count += batch_count;
            zero_grads(model);
            backward(mean_loss);
            adam_step(params, adam, adam_cfg);
        }

        EpochLog log;
        log.epoch = epoch + 1;
        log.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        log.dev_wer = greedy_dev_wer(model, dev);
        log.lr = adam_cfg.lr;
        result.logs.push_back(log);
        if (verbose) std::cerr << log.tsv() << "\n";

        if (best_wer < 0.0 || log.dev_wer < best_wer) {
            best_wer = log.dev_wer;
            result.best_ckpt = snapshot(model, adam, epoch + 1, rng.state(), best_wer);
        }
    }

    result.final_ckpt = snapshot(model, adam, stop_epoch, rng.state(), best_wer);
    if (!result.best_ckpt.params.empty()) return result;
    result.best_ckpt = result.final_ckpt;
    return result;
}

EvalReport evaluate(const MstNet& model, const std::vector<Sample>& corpus, int beam_width,
                    bool use_beam) {
    if (corpus.empty()) throw DataError("evaluate: empty corpus");
    EvalReport report;
    std::vector<std::pair<GlossSequence, GlossSequence>> pairs;
    for (const auto& sample : corpus) {
        auto levels = model.forward(sample.features, false, nullptr);
        const LevelLogits& deepest = levels.back();
        GlossSequence hyp =
            use_beam ? beam_decode(deepest, beam_width) : greedy_decode(deepest);
        SampleDecode d;
        d.sample_id = sample.features.sample_id;
        d.reference = sample.target;
        d.hypothesis = hyp;
        d.breakdown = wer(sample.target, hyp);
        pairs.emplace_back(sample.target, hyp);
        report.samples.push_back(std::move(d));
    }
    report.corpus = corpus_wer(pairs);
    return report;
}

GradCheckReport gradcheck(const ModelConfig& cfg, double tolerance) {
    cfg.validate();
    ToyGrammar grammar;
    grammar.vocab_size = cfg.vocab_size;
    grammar.d_in = cfg.d_in;
    grammar.len_min = 2;
    grammar.len_max = 4;
    grammar.sentence_min = 1;
    grammar.sentence_max = 2;
    grammar.noise_sigma = 0.1;
    grammar.seed = cfg.seed;
    // Take the first sample that is feasible at the deepest (most
    // downsampled) level and needs no padding. Padded all-zero frames sit
    // exactly on the ReLU kink with fresh zero biases, where central
    // differences and the one-sided analytic derivative disagree.
    Sample sample;
    for (int index = 0;; ++index) {
        sample = generate_sample(grammar, Split::kTrain, index);
        if (sample.features.valid_len % 4 != 0) continue;
        int v = sample.features.valid_len;
        for (int b = 0; b < cfg.num_mst_blocks; ++b) v = (v + 1) / 2;
        if (v >= min_alignment_len(sample.target)) break;
    }

    Rng init_rng(cfg.seed);
    MstNet model(cfg, init_rng);

    // No rng: gradient stopping is forward-identity, so random masks would
    // make the analytic gradient differ from the true gradient by design.
    // With p < 1 the null rng keeps every frame; with p >= 1 all frames are
    // stopped and the embedder is checked for exact zeros instead.
    auto loss_value = [&]() {
        auto levels = model.forward(sample.features, true, nullptr);
        return multi_level_ctc(levels, sample.target, cfg.ctc_levels);
    };

    zero_grads(model);
    backward(loss_value());

    GradCheckReport report;
    const double h = 1e-5;
    bool stop_all = cfg.grad_stop_p >= 1.0;
    for (auto& p : model.parameters()) {
        GradCheckGroup group;
        group.name = p.name;
        bool embedder = p.name.rfind("embed.", 0) == 0;
        if (stop_all && embedder) {
            // With p=1 every frame's gradient is stopped; analytic grads
            // must be exactly zero and FD comparison is meaningless.
            group.exempt = true;
            group.pass = true;
            for (double g : p.tensor.grad()) {
                if (g != 0.0) group.pass = false;
            }
            report.all_pass = report.all_pass && group.pass;
            report.groups.push_back(std::move(group));
            continue;
        }
        auto& data = p.tensor.data();
        const auto& grad = p.tensor.grad();
        for (size_t i = 0; i < data.size(); ++i) {
            double saved = data[i];
            data[i] = saved + h;
            double up = loss_value().value();
            data[i] = saved - h;
            double down = loss_value().value();
            data[i] = saved;
            double fd = (up - down) / (2.0 * h);
            double a = grad[i];
            double denom = std::max(std::abs(a), std::abs(fd));
            double rel = denom > 1e-6 ? std::abs(a - fd) / denom : std::abs(a - fd);
            group.max_rel_err = std::max(group.max_rel_err, rel);
        }
        group.pass = group.max_rel_err < tolerance;
        report.all_pass = report.all_pass && group.pass;
        report.groups.push_back(std::move(group));
    }
    return report;
}

AblationAxis parse_axis(const std::string& name) {
    if (name == "scales") return AblationAxis::kScales;
    if (name == "fc_layers") return AblationAxis::kFcLayers;
    if (name == "encoder") return AblationAxis::kEncoder;
    if (name == "ctc_levels") return AblationAxis::kCtcLevels;
    throw ConfigError("ablate: unknown axis '" + name +
                      "' (expected scales|fc_layers|encoder|ctc_levels)");
}

std::vector<AblationCell> ablate(const ModelConfig& base, AblationAxis axis,
                                 const std::vector<int>& values,
                                 const std::vector<Sample>& train_set,
                                 const std::vector<Sample>& dev_set,
                                 const std::vector<Sample>& test_set, bool verbose) {
    std::vector<AblationCell> table;
    for (int value : values) {
        AblationCell cell;
        cell.value = value;
        ModelConfig cfg = base;
        switch (axis) {
            case AblationAxis::kScales: cfg.num_scales = value; break;
            case AblationAxis::kFcLayers:
                cfg.fc_layers = value;
                if (value == 0) cfg.c1 = cfg.c2;
                break;
            case AblationAxis::kEncoder: cfg.encoder_layers = value == 0 ? 0 : base.encoder_layers; break;
            case AblationAxis::kCtcLevels: cfg.ctc_levels = value; break;
        }
        try {
            TrainResult r = train(cfg, train_set, dev_set, std::nullopt, -1, verbose);
            MstNet model = model_from_checkpoint(r.best_ckpt);
            cell.dev_wer = evaluate(model, dev_set.empty() ? train_set : dev_set,
                                    cfg.beam_width).corpus.wer;
            cell.test_wer = evaluate(model, test_set.empty() ? train_set : test_set,
                                     cfg.beam_width).corpus.wer;
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
        table.push_back(std::move(cell));
    }
    return table;
}

}  // namespace mstnet
