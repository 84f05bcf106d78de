#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mstnet/checkpoint.hpp"
#include "mstnet/config.hpp"
#include "mstnet/data_synth.hpp"
#include "mstnet/trainer.hpp"

namespace {

using namespace mstnet;

// Config flags are collected as raw key/value strings so file values and
// CLI overrides flow through the same parser.
struct ConfigArgs {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key = value config file");
        static const char* keys[] = {
            "d_in", "c1", "c2", "fc_layers", "num_scales", "num_mst_blocks",
            "encoder_layers", "heads", "ff_mult", "ctc_levels", "vocab_size",
            "fusion_relu", "shared_head", "grad_stop_p", "lr", "weight_decay",
            "lr_drops", "epochs", "batch_size", "beam_width", "augment_frac", "seed"};
        for (const char* key : keys) {
            cmd->add_option_function<std::string>(
                "--" + std::string(key),
                [this, key](const std::string& v) { overrides.emplace_back(key, v); },
                "model config field");
        }
    }

    ModelConfig build() const {
        ModelConfig cfg;
        if (!config_file.empty()) cfg = parse_config_file(config_file, cfg);
        for (const auto& [k, v] : overrides) apply_config_line(cfg, k, v);
        cfg.validate();
        return cfg;
    }
};

std::string format_gloss(const GlossSequence& g) {
    std::ostringstream os;
    for (size_t i = 0; i < g.labels.size(); ++i) os << (i ? " " : "") << g.labels[i];
    return os.str();
}

int cmd_synth(const std::string& out, int count, const std::string& split, ToyGrammar grammar) {
    Split s;
    if (split == "train") s = Split::kTrain;
    else if (split == "test") s = Split::kTest;
    else throw ConfigError("synth: split must be train or test");
    save_corpus(out, generate(grammar, count, s));
    std::cout << "wrote " << count << " samples to " << out << "\n";
    return 0;
}

int cmd_train(const ConfigArgs& cargs, const std::string& data, const std::string& dev,
              const std::string& out, const std::string& log_path, const std::string& resume,
              int until_epoch) {
    ModelConfig cfg = cargs.build();
    auto train_set = load_corpus(data);
    std::vector<Sample> dev_set;
    if (!dev.empty()) dev_set = load_corpus(dev);
    std::optional<Checkpoint> resume_ckpt;
    if (!resume.empty()) {
        resume_ckpt = load_checkpoint(resume);
        cfg = resume_ckpt->config;
    }
    TrainResult r = train(cfg, train_set, dev_set, resume_ckpt, until_epoch, true);
    save_checkpoint(out, r.final_ckpt);
    save_checkpoint(out + ".best", r.best_ckpt);
    std::ostream* log = &std::cout;
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw DataError("train: cannot open log file '" + log_path + "'");
        log = &log_file;
    }
    for (const auto& l : r.logs) *log << l.tsv() << "\n";
    if (r.skipped_samples > 0)
        std::cerr << "skipped " << r.skipped_samples << " infeasible samples\n";
    std::cout << "checkpoint: " << out << " (best: " << out << ".best)\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data, int beam_width) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    MstNet model = model_from_checkpoint(ckpt);
    auto corpus = load_corpus(data);
    int width = beam_width > 0 ? beam_width : model.config().beam_width;
    EvalReport report = evaluate(model, corpus, width);
    for (const auto& s : report.samples) {
        std::cout << s.sample_id << "\n  ref: " << format_gloss(s.reference)
                  << "\n  hyp: " << format_gloss(s.hypothesis) << "\n  ins=" << s.breakdown.ins
                  << " del=" << s.breakdown.del << " sub=" << s.breakdown.sub << "\n";
    }
    std::cout << "corpus WER: " << report.corpus.wer << "% (ins=" << report.corpus.ins
              << " del=" << report.corpus.del << " sub=" << report.corpus.sub << " / "
              << report.corpus.total_ref << " words)\n";
    return 0;
}

int cmd_decode(const std::string& ckpt_path, const std::string& data, int index, int beam_width) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    MstNet model = model_from_checkpoint(ckpt);
    auto corpus = load_corpus(data);
    if (index < 0 || index >= static_cast<int>(corpus.size()))
        throw DataError("decode: sample index out of range");
    const Sample& sample = corpus[static_cast<size_t>(index)];
    auto levels = model.forward(sample.features, false, nullptr);
    int width = beam_width > 0 ? beam_width : model.config().beam_width;
    GlossSequence hyp = beam_decode(levels.back(), width);
    std::cout << format_gloss(hyp) << "\n";
    return 0;
}

int cmd_gradcheck(const ConfigArgs& cargs, double tolerance) {
    ModelConfig cfg = cargs.build();
    GradCheckReport report = gradcheck(cfg, tolerance);
    for (const auto& g : report.groups) {
        std::cout << (g.pass ? "pass" : "FAIL") << "  " << g.name;
        if (g.exempt) std::cout << "  (exempt: gradient stop, analytic zero verified)";
        else std::cout << "  max_rel_err=" << g.max_rel_err;
        std::cout << "\n";
    }
    std::cout << (report.all_pass ? "all groups pass" : "gradcheck FAILED") << "\n";
    return report.all_pass ? 0 : 4;
}

int cmd_ablate(const ConfigArgs& cargs, const std::string& axis_name, const std::string& values,
               const std::string& data, const std::string& dev, const std::string& test) {
    ModelConfig cfg = cargs.build();
    AblationAxis axis = parse_axis(axis_name);
    std::vector<int> vals;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stoi(item));
    if (vals.empty()) throw ConfigError("ablate: no values given");
    auto train_set = load_corpus(data);
    std::vector<Sample> dev_set, test_set;
    if (!dev.empty()) dev_set = load_corpus(dev);
    if (!test.empty()) test_set = load_corpus(test);
    auto table = ablate(cfg, axis, vals, train_set, dev_set, test_set, true);
    std::cout << axis_name << "\tdev WER(%)\ttest WER(%)\n";
    for (const auto& cell : table) {
        if (cell.failed)
            std::cout << cell.value << "\tfailed: " << cell.error << "\n";
        else
            std::cout << cell.value << "\t" << cell.dev_wer << "\t" << cell.test_wer << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MSTNet continuous sign-language recognition pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a toy corpus file");
    std::string synth_out = "corpus.mstd", synth_split = "train";
    int synth_count = 100;
    ToyGrammar grammar;
    synth->add_option("--out", synth_out, "output corpus file");
    synth->add_option("--count", synth_count, "number of samples");
    synth->add_option("--split", synth_split, "train|test");
    synth->add_option("--vocab-size", grammar.vocab_size);
    synth->add_option("--d-in", grammar.d_in);
    synth->add_option("--len-min", grammar.len_min);
    synth->add_option("--len-max", grammar.len_max);
    synth->add_option("--sigma", grammar.noise_sigma);
    synth->add_option("--sentence-min", grammar.sentence_min);
    synth->add_option("--sentence-max", grammar.sentence_max);
    synth->add_option("--seed", grammar.seed);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    ConfigArgs train_cfg;
    train_cfg.attach(train_cmd);
    std::string train_data, train_dev, train_out = "model.ckpt", train_log, train_resume;
    int until_epoch = -1;
    train_cmd->add_option("--data", train_data, "training corpus")->required();
    train_cmd->add_option("--dev", train_dev, "dev corpus for per-epoch WER");
    train_cmd->add_option("--out", train_out, "output checkpoint");
    train_cmd->add_option("--log", train_log, "metrics log file (tsv)");
    train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
    train_cmd->add_option("--until-epoch", until_epoch, "stop after this epoch (1-based)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_data;
    int eval_beam = -1;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--beam-width", eval_beam);

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "decode one sample");
    std::string dec_ckpt, dec_data;
    int dec_index = 0, dec_beam = -1;
    decode_cmd->add_option("--checkpoint", dec_ckpt)->required();
    decode_cmd->add_option("--data", dec_data)->required();
    decode_cmd->add_option("--index", dec_index);
    decode_cmd->add_option("--beam-width", dec_beam);

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    ConfigArgs gc_cfg;
    gc_cfg.attach(gc_cmd);
    double gc_tol = 1e-4;
    gc_cmd->add_option("--tolerance", gc_tol);

    // ablate
    auto* ab_cmd = app.add_subcommand("ablate", "run one ablation axis");
    ConfigArgs ab_cfg;
    ab_cfg.attach(ab_cmd);
    std::string ab_axis, ab_values, ab_data, ab_dev, ab_test;
    ab_cmd->add_option("--axis", ab_axis, "scales|fc_layers|encoder|ctc_levels")->required();
    ab_cmd->add_option("--values", ab_values, "comma-separated values")->required();
    ab_cmd->add_option("--data", ab_data, "training corpus")->required();
    ab_cmd->add_option("--dev", ab_dev);
    ab_cmd->add_option("--test", ab_test);

    try {
        app.parse(argc, argv);
        if (*synth) return cmd_synth(synth_out, synth_count, synth_split, grammar);
        if (*train_cmd)
            return cmd_train(train_cfg, train_data, train_dev, train_out, train_log,
                             train_resume, until_epoch);
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_beam);
        if (*decode_cmd) return cmd_decode(dec_ckpt, dec_data, dec_index, dec_beam);
        if (*gc_cmd) return cmd_gradcheck(gc_cfg, gc_tol);
        if (*ab_cmd) return cmd_ablate(ab_cfg, ab_axis, ab_values, ab_data, ab_dev, ab_test);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const mstnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mstnet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const mstnet::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const mstnet::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
