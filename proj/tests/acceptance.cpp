// Acceptance suite: one printed PASS/FAIL line per criterion, exit 0 only
// if every criterion passes. Oracles are implemented independently of the
// library code they check (path enumeration, edit-script recursion, finite
// differences).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "mstnet/checkpoint.hpp"
#include "mstnet/trainer.hpp"

using namespace mstnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

// ---- shared oracle helpers ----

std::vector<std::vector<double>> softmax_probs(const LevelLogits& ll) {
    int t = ll.valid_len, c = ll.num_classes();
    std::vector<std::vector<double>> p(static_cast<size_t>(t),
                                       std::vector<double>(static_cast<size_t>(c)));
    for (int i = 0; i < t; ++i) {
        double mx = ll.scores.data()[static_cast<size_t>(i) * c];
        for (int j = 1; j < c; ++j)
            mx = std::max(mx, ll.scores.data()[static_cast<size_t>(i) * c + j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j)
            z += std::exp(ll.scores.data()[static_cast<size_t>(i) * c + j] - mx);
        for (int j = 0; j < c; ++j)
            p[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                std::exp(ll.scores.data()[static_cast<size_t>(i) * c + j] - mx) / z;
    }
    return p;
}

// Sum path probabilities per collapsed sequence over all (vocab+1)^T paths.
std::map<std::vector<int>, double> enumerate_sequences(const LevelLogits& ll) {
    int t = ll.valid_len, c = ll.num_classes(), blank = ll.blank();
    auto p = softmax_probs(ll);
    std::map<std::vector<int>, double> mass;
    std::vector<int> path(static_cast<size_t>(t), 0);
    while (true) {
        double prob = 1.0;
        for (int i = 0; i < t; ++i)
            prob *= p[static_cast<size_t>(i)][static_cast<size_t>(path[static_cast<size_t>(i)])];
        mass[collapse(path, blank).labels] += prob;
        int pos = t - 1;
        while (pos >= 0 && path[static_cast<size_t>(pos)] == c - 1) path[static_cast<size_t>(pos--)] = 0;
        if (pos < 0) break;
        ++path[static_cast<size_t>(pos)];
    }
    return mass;
}

LevelLogits random_logits(int t, int vocab, Rng& rng, double spread) {
    LevelLogits ll;
    ll.scores = Tensor::randn({t, vocab + 1}, rng, spread);
    ll.valid_len = t;
    return ll;
}

// ---- criterion 1: CTC loss vs exhaustive enumeration ----

void criterion1() {
    auto start = Clock::now();
    int checked = 0;
    double worst = 0.0;
    for (int t = 1; t <= 6; ++t) {
        for (int vocab = 1; vocab <= 3; ++vocab) {
            for (int l = 0; l <= 3; ++l) {
                for (uint64_t s = 1; s <= 3; ++s) {
                    Rng rng(static_cast<uint64_t>(t * 1000 + vocab * 100 + l * 10) + s);
                    LevelLogits ll = random_logits(t, vocab, rng, 1.5);
                    GlossSequence target;
                    for (int i = 0; i < l; ++i)
                        target.labels.push_back(static_cast<int>(rng.uniform_int(vocab)));
                    if (t < min_alignment_len(target)) {
                        bool threw = false;
                        try {
                            ctc_loss(ll, target);
                        } catch (const InfeasibleTargetError&) {
                            threw = true;
                        }
                        if (!threw) {
                            report(1, false, "infeasible target did not raise");
                            return;
                        }
                        continue;
                    }
                    auto mass = enumerate_sequences(ll);
                    auto it = mass.find(target.labels);
                    double oracle = -std::log(it == mass.end() ? 0.0 : it->second);
                    double got = ctc_loss(ll, target).value();
                    worst = std::max(worst, std::abs(got - oracle));
                    ++checked;
                }
            }
        }
    }
    double secs = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "ctc loss equals path enumeration on %d instances, worst |diff| %.2e "
                  "(limit 1e-9), %.1fs (limit 30s)",
                  checked, worst, secs);
    report(1, worst < 1e-9 && secs < 30.0, buf);
}

// ---- criterion 2: full-network finite differences ----

void criterion2() {
    auto start = Clock::now();
    ModelConfig cfg;
    cfg.d_in = 6;
    cfg.c1 = 8;
    cfg.c2 = 16;
    cfg.fc_layers = 2;
    cfg.num_scales = 2;
    cfg.num_mst_blocks = 2;
    cfg.encoder_layers = 1;
    cfg.heads = 2;
    cfg.ff_mult = 2;
    cfg.ctc_levels = 4;
    cfg.vocab_size = 5;
    cfg.grad_stop_p = 0.0;
    cfg.seed = 3;
    Rng init_rng(cfg.seed);
    MstNet model(cfg, init_rng);

    Rng data_rng(11);
    FeatureSequence seq;
    seq.frames = Tensor::randn({8, cfg.d_in}, data_rng, 1.0);
    seq.valid_len = 8;  // levels 8, 4, 2, 2
    GlossSequence target{{1, 4}};

    auto loss_value = [&] {
        auto levels = model.forward(seq, true, nullptr);
        return multi_level_ctc(levels, target, cfg.ctc_levels);
    };
    for (auto& p : model.parameters()) p.tensor.zero_grad();
    backward(loss_value());

    const double h = 1e-5;
    double worst = 0.0;
    std::string worst_group;
    for (auto& p : model.parameters()) {
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
            double denom = std::max(std::abs(grad[i]), std::abs(fd));
            double rel = denom > 1e-6 ? std::abs(grad[i] - fd) / denom : std::abs(grad[i] - fd);
            if (rel > worst) {
                worst = rel;
                worst_group = p.name;
            }
        }
    }
    double secs = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "finite differences across all groups, worst rel err %.2e in %s "
                  "(limit 1e-4), %.1fs (limit 120s)",
                  worst, worst_group.c_str(), secs);
    report(2, worst < 1e-4 && secs < 120.0, buf);
}

// ---- criterion 3: decoder oracle and beam monotonicity ----

void criterion3() {
    bool ok = true;
    std::string detail;
    for (uint64_t seed = 1; seed <= 50 && ok; ++seed) {
        Rng rng(seed);
        int t = 1 + static_cast<int>(rng.uniform_int(5));
        int vocab = 1 + static_cast<int>(rng.uniform_int(3));
        LevelLogits ll = random_logits(t, vocab, rng, 3.0);
        auto mass = enumerate_sequences(ll);
        std::vector<int> best;
        double best_p = -1.0;
        for (const auto& [s, p] : mass) {
            if (p > best_p) {
                best_p = p;
                best = s;
            }
        }
        if (beam_decode(ll, 1 << 20).labels != best) {
            ok = false;
            detail = "exhaustive-width beam missed the argmax at seed " + std::to_string(seed);
            break;
        }
        double prev = -1.0;
        for (int w = 1; w <= 10; ++w) {
            GlossSequence hyp = beam_decode(ll, w);
            double p = mass.count(hyp.labels) ? mass[hyp.labels] : 0.0;
            if (p < prev - 1e-12) {
                ok = false;
                detail = "monotonicity broke at seed " + std::to_string(seed) + ", width " +
                         std::to_string(w);
                break;
            }
            prev = std::max(prev, p);
        }
    }
    if (ok)
        detail = "exhaustive-width beam equals brute-force argmax and widths 1..10 are "
                 "monotone on 50 seeded instances";
    report(3, ok, detail);
}

// ---- criterion 4: level length ladder ----

void criterion4() {
    bool ok = true;
    std::string detail;
    Rng rng(2);
    for (int n = 1; n <= 5 && ok; ++n) {
        ModelConfig cfg;
        cfg.d_in = 4;
        cfg.c1 = 8;
        cfg.c2 = 8;
        cfg.num_scales = n;
        cfg.heads = 2;
        cfg.ff_mult = 2;
        cfg.encoder_layers = 1;
        cfg.vocab_size = 4;
        Rng init_rng(7);
        MstNet model(cfg, init_rng);
        for (int t = 4; t <= 64 && ok; t += 4) {
            FeatureSequence seq;
            seq.frames = Tensor::randn({t, cfg.d_in}, rng, 1.0);
            seq.valid_len = t;
            auto levels = model.forward(seq, false, nullptr);
            int want[4] = {t, t / 2, t / 4, t / 4};
            for (int i = 0; i < 4; ++i) {
                if (levels[static_cast<size_t>(i)].scores.dim(0) != want[i] ||
                    levels[static_cast<size_t>(i)].valid_len != want[i]) {
                    ok = false;
                    detail = "wrong level length at T=" + std::to_string(t) +
                             ", n=" + std::to_string(n) + ", level " + std::to_string(i + 1);
                }
            }
        }
    }
    if (ok) detail = "level lengths are (T, T/2, T/4, T/4) for T in {4,8,...,64}, n in 1..5";
    report(4, ok, detail);
}

// ---- criterion 5: WER vs brute-force edit scripts ----

// Plain recursion over match/substitute/insert/delete, no DP table.
int brute_min_edits(const std::vector<int>& ref, const std::vector<int>& hyp, size_t i, size_t j) {
    if (i == ref.size()) return static_cast<int>(hyp.size() - j);
    if (j == hyp.size()) return static_cast<int>(ref.size() - i);
    int best = (ref[i] == hyp[j] ? 0 : 1) + brute_min_edits(ref, hyp, i + 1, j + 1);
    best = std::min(best, 1 + brute_min_edits(ref, hyp, i + 1, j));  // delete ref[i]
    best = std::min(best, 1 + brute_min_edits(ref, hyp, i, j + 1));  // insert hyp[j]
    return best;
}

void criterion5() {
    bool ok = true;
    std::string detail;
    Rng rng(13);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        GlossSequence ref, hyp;
        int rl = 1 + static_cast<int>(rng.uniform_int(6));
        int hl = static_cast<int>(rng.uniform_int(7));
        for (int i = 0; i < rl; ++i) ref.labels.push_back(static_cast<int>(rng.uniform_int(4)));
        for (int i = 0; i < hl; ++i) hyp.labels.push_back(static_cast<int>(rng.uniform_int(4)));
        EditBreakdown b = wer(ref, hyp);
        int oracle = brute_min_edits(ref.labels, hyp.labels, 0, 0);
        if (b.edits() != oracle) {
            ok = false;
            detail = "edit count mismatch at trial " + std::to_string(trial);
        }
        if (ref.length() - b.del + b.ins != hyp.length()) {
            ok = false;
            detail = "inconsistent edit script at trial " + std::to_string(trial);
        }
    }
    EditBreakdown over = wer(GlossSequence{{0}}, GlossSequence{{1, 2}});
    if (over.wer != 200.0 || over.sub != 1 || over.ins != 1) {
        ok = false;
        detail = "disjoint 1-vs-2 case did not yield exactly 200%";
    }
    if (ok)
        detail = "breakdown matches brute-force edit scripts on 1000 pairs; "
                 "1-vs-2 disjoint case is exactly 200%";
    report(5, ok, detail);
}

// ---- criterion 6: end-to-end toy convergence ----

void criterion6() {
    auto start = Clock::now();
    ToyGrammar grammar;  // vocab 10, d_in 16, sentences 2..5, sigma 0.05
    grammar.seed = 1;
    auto train_set = generate(grammar, 200, Split::kTrain);
    auto test_set = generate(grammar, 50, Split::kTest);

    ModelConfig cfg;  // c1=32, c2=64, n=4, heads=8, ctc_levels=4, 60 epochs, drops 40/50
    cfg.seed = 1;
    TrainResult r = train(cfg, train_set, test_set);

    MstNet model = model_from_checkpoint(r.best_ckpt);
    double train_wer = evaluate(model, train_set, 1, false).corpus.wer;
    double test_wer = evaluate(model, test_set, cfg.beam_width, true).corpus.wer;
    double secs = seconds_since(start);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "train greedy WER %.2f%% (limit 2%%), test beam WER %.2f%% (limit 10%%), "
                  "%d skipped, %.0fs (limit 1800s)",
                  train_wer, test_wer, r.skipped_samples, secs);
    report(6, train_wer <= 2.0 && test_wer <= 10.0 && secs <= 1800.0, buf);
}

// ---- criterion 7: multi-level loss decomposition ----

void criterion7() {
    ModelConfig cfg;
    cfg.d_in = 6;
    cfg.c1 = 8;
    cfg.c2 = 16;
    cfg.num_scales = 3;
    cfg.heads = 4;
    cfg.ff_mult = 2;
    cfg.vocab_size = 5;
    Rng init_rng(9);
    MstNet model(cfg, init_rng);
    Rng rng(21);
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
        FeatureSequence seq;
        int t = 16 + 4 * static_cast<int>(rng.uniform_int(5));
        seq.frames = Tensor::randn({t, cfg.d_in}, rng, 1.0);
        seq.valid_len = t;
        GlossSequence target{{0, 3}};
        auto levels = model.forward(seq, false, nullptr);
        double sum = ctc_loss(levels[0], target).value();
        sum += ctc_loss(levels[1], target).value();
        sum += ctc_loss(levels[2], target).value();
        sum += ctc_loss(levels[3], target).value();
        if (multi_level_ctc(levels, target, 4).value() != sum) ok = false;
    }
    report(7, ok,
           ok ? "4-level loss equals the sum of the four per-level losses bitwise"
              : "4-level loss differs from the per-level sum");
}

// ---- criterion 8: determinism, checkpoint round trip, resume ----

void criterion8() {
    ToyGrammar grammar;
    grammar.seed = 4;
    auto train_set = generate(grammar, 20, Split::kTrain);

    ModelConfig cfg;
    cfg.epochs = 10;
    cfg.lr_drops = {{5, 0.2}};
    cfg.seed = 4;

    TrainResult a = train(cfg, train_set, {});
    TrainResult b = train(cfg, train_set, {});
    bool ok = a.logs.size() == b.logs.size();
    for (size_t i = 0; ok && i < a.logs.size(); ++i) ok = a.logs[i].tsv() == b.logs[i].tsv();
    std::string detail = ok ? "" : "identical seeds diverged";

    if (ok) {
        TrainResult half = train(cfg, train_set, {}, std::nullopt, 5);
        std::string path = "acceptance_ckpt.bin";
        save_checkpoint(path, half.final_ckpt);
        Checkpoint loaded = load_checkpoint(path);
        std::remove(path.c_str());
        TrainResult resumed = train(cfg, train_set, {}, loaded);
        ok = resumed.final_ckpt.rng_state == a.final_ckpt.rng_state &&
             resumed.final_ckpt.adam.step == a.final_ckpt.adam.step &&
             resumed.final_ckpt.params.size() == a.final_ckpt.params.size();
        for (size_t i = 0; ok && i < a.final_ckpt.params.size(); ++i)
            ok = resumed.final_ckpt.params[i].tensor.data() ==
                 a.final_ckpt.params[i].tensor.data();
        for (size_t i = 0; ok && i < resumed.logs.size(); ++i)
            ok = resumed.logs[i].tsv() == a.logs[i + 5].tsv();
        if (!ok) detail = "5+5 save/load/resume differs from 10 straight epochs";
    }
    if (ok)
        detail = "identical seeds reproduce logs bitwise; 5+5 save/load/resume equals 10 "
                 "straight epochs bitwise";
    report(8, ok, detail);
}

// ---- criterion 9: ablation row structure ----

void criterion9() {
    ToyGrammar grammar;
    grammar.vocab_size = 4;
    grammar.d_in = 6;
    grammar.len_min = 6;
    grammar.len_max = 10;
    grammar.sentence_min = 1;
    grammar.sentence_max = 2;
    grammar.seed = 6;
    auto train_set = generate(grammar, 16, Split::kTrain);
    auto test_set = generate(grammar, 8, Split::kTest);

    ModelConfig base;
    base.d_in = grammar.d_in;
    base.c1 = 8;
    base.c2 = 16;
    base.num_scales = 2;
    base.encoder_layers = 1;
    base.heads = 2;
    base.ff_mult = 2;
    base.vocab_size = grammar.vocab_size;
    base.epochs = 3;
    base.lr = 1e-3;
    base.lr_drops.clear();
    base.seed = 6;

    struct AxisSpec {
        const char* name;
        std::vector<int> values;
    };
    // same axes and value ranges as the reference ablation tables
    std::vector<AxisSpec> axes = {{"scales", {1, 2, 3, 4, 5}},
                                  {"fc_layers", {0, 1, 2, 3}},
                                  {"encoder", {0, 1}},
                                  {"ctc_levels", {1, 2, 3, 4}}};
    bool ok = true;
    std::string detail;
    for (const auto& axis : axes) {
        auto table = ablate(base, parse_axis(axis.name), axis.values, train_set, {}, test_set);
        if (table.size() != axis.values.size()) {
            ok = false;
            detail = std::string("axis ") + axis.name + " produced the wrong number of rows";
            break;
        }
        for (size_t i = 0; i < table.size(); ++i) {
            if (table[i].value != axis.values[i] || table[i].failed ||
                table[i].dev_wer < 0.0 || table[i].test_wer < 0.0) {
                ok = false;
                detail = std::string("axis ") + axis.name + " row " +
                         std::to_string(axis.values[i]) +
                         (table[i].failed ? (" failed: " + table[i].error) : " malformed");
                break;
            }
        }
        if (!ok) break;
        // directional observations are recorded, not asserted
        std::printf("  ablation %s:", axis.name);
        for (const auto& cell : table)
            std::printf(" %d->%.1f%%/%.1f%%", cell.value, cell.dev_wer, cell.test_wer);
        std::printf("\n");
    }
    if (ok) detail = "all four ablation axes produce one well-formed row per value";
    report(9, ok, detail);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (g_failures == 0) {
        std::printf("all 9 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
