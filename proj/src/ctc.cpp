#include "mstnet/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace mstnet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double lse3(double a, double b, double c) { return lse2(lse2(a, b), c); }

}  // namespace

GlossSequence collapse(const std::vector<int>& path, int blank) {
    GlossSequence out;
    int prev = -1;
    for (int id : path) {
        if (id != prev && id != blank) out.labels.push_back(id);
        prev = id;
    }
    return out;
}

int min_alignment_len(const GlossSequence& target) {
    int repeats = 0;
    for (size_t i = 1; i < target.labels.size(); ++i) {
        if (target.labels[i] == target.labels[i - 1]) ++repeats;
    }
    return target.length() + repeats;
}

Tensor ctc_loss(const LevelLogits& logits, const GlossSequence& target) {
    const int t_len = logits.valid_len;
    const int num_classes = logits.num_classes();
    const int blank = logits.blank();
    const int label_count = target.length();

    if (t_len < 0 || t_len > logits.scores.dim(0))
        throw DimensionError("ctc_loss: valid_len " + std::to_string(t_len) + " out of range");
    for (int id : target.labels) {
        if (id < 0 || id >= blank)
            throw DataError("ctc_loss: label id " + std::to_string(id) + " outside vocabulary");
    }
    if (t_len < min_alignment_len(target)) {
        throw InfeasibleTargetError("ctc_loss: target needs at least " +
                                    std::to_string(min_alignment_len(target)) +
                                    " frames, have " + std::to_string(t_len));
    }

    Tensor logp = log_softmax_rows(logits.scores);
    const auto& lp = logp.data();
    const int stride = num_classes;

    // Blank-augmented state sequence: blank, s1, blank, s2, ..., blank.
    const int num_states = 2 * label_count + 1;
    auto state_label = [&](int u) {
        return (u % 2 == 0) ? blank : target.labels[static_cast<size_t>(u / 2)];
    };

    std::vector<double> alpha(static_cast<size_t>(t_len) * num_states, kNegInf);
    auto a = [&](int t, int u) -> double& {
        return alpha[static_cast<size_t>(t) * num_states + u];
    };
    if (t_len > 0) {
        a(0, 0) = lp[static_cast<size_t>(0) * stride + blank];
        if (num_states > 1) a(0, 1) = lp[static_cast<size_t>(0) * stride + state_label(1)];
    }
    for (int t = 1; t < t_len; ++t) {
        for (int u = 0; u < num_states; ++u) {
            double from_self = a(t - 1, u);
            double from_prev = u >= 1 ? a(t - 1, u - 1) : kNegInf;
            double from_skip =
                (u >= 2 && state_label(u) != blank && state_label(u) != state_label(u - 2))
                    ? a(t - 1, u - 2)
                    : kNegInf;
            a(t, u) = lp[static_cast<size_t>(t) * stride + state_label(u)] +
                      lse3(from_self, from_prev, from_skip);
        }
    }
    double log_prob;
    if (t_len == 0) {
        // Only the empty target is feasible (checked above); probability 1.
        log_prob = 0.0;
    } else {
        log_prob = a(t_len - 1, num_states - 1);
        if (num_states > 1) log_prob = lse2(log_prob, a(t_len - 1, num_states - 2));
    }
    if (!std::isfinite(log_prob))
        throw NumericError("ctc_loss: zero total path probability");

    auto li = logp.impl();
    auto out = std::make_shared<TensorImpl>();
    out->shape = {1};
    out->data = {-log_prob};
    if (li->requires_grad) {
        out->requires_grad = true;
        out->parents = {li};
        TensorImpl* oi = out.get();
        std::vector<int> labels = target.labels;
        out->backprop = [li, oi, alpha = std::move(alpha), labels = std::move(labels), t_len,
                         num_states, stride, blank, log_prob] {
            li->ensure_grad();
            if (t_len == 0) return;
            auto state_lab = [&](int u) {
                return (u % 2 == 0) ? blank : labels[static_cast<size_t>(u / 2)];
            };
            auto lp_at = [&](int t, int k) {
                return li->data[static_cast<size_t>(t) * stride + k];
            };
            // Beta pass: suffix path probability excluding the emission at t.
            std::vector<double> beta_next(static_cast<size_t>(num_states), kNegInf);
            std::vector<double> beta_cur(static_cast<size_t>(num_states), kNegInf);
            beta_next[static_cast<size_t>(num_states - 1)] = 0.0;
            if (num_states > 1) beta_next[static_cast<size_t>(num_states - 2)] = 0.0;
            double upstream = oi->grad[0];
            auto accumulate = [&](int t, const std::vector<double>& beta_t) {
                // gamma_{t,k} = sum over states with label k of alpha*beta / P
                std::vector<double> row(static_cast<size_t>(stride), kNegInf);
                for (int u = 0; u < num_states; ++u) {
                    int k = state_lab(u);
                    row[static_cast<size_t>(k)] =
                        lse2(row[static_cast<size_t>(k)],
                             alpha[static_cast<size_t>(t) * num_states + u] +
                                 beta_t[static_cast<size_t>(u)]);
                }
                for (int k = 0; k < stride; ++k) {
                    if (row[static_cast<size_t>(k)] == kNegInf) continue;
                    li->grad[static_cast<size_t>(t) * stride + k] -=
                        upstream * std::exp(row[static_cast<size_t>(k)] - log_prob);
                }
            };
            accumulate(t_len - 1, beta_next);
            for (int t = t_len - 2; t >= 0; --t) {
                for (int u = 0; u < num_states; ++u) {
                    double acc = lp_at(t + 1, state_lab(u)) +
                                 beta_next[static_cast<size_t>(u)];
                    if (u + 1 < num_states)
                        acc = lse2(acc, lp_at(t + 1, state_lab(u + 1)) +
                                            beta_next[static_cast<size_t>(u + 1)]);
                    if (u + 2 < num_states && state_lab(u + 2) != blank &&
                        state_lab(u + 2) != state_lab(u))
                        acc = lse2(acc, lp_at(t + 1, state_lab(u + 2)) +
                                            beta_next[static_cast<size_t>(u + 2)]);
                    beta_cur[static_cast<size_t>(u)] = acc;
                }
                std::swap(beta_cur, beta_next);
                accumulate(t, beta_next);
            }
        };
    }
    return Tensor(out);
}

Tensor multi_level_ctc(const std::vector<LevelLogits>& levels, const GlossSequence& target,
                       int active_levels) {
    const int n = static_cast<int>(levels.size());
    if (active_levels < 1 || active_levels > n)
        throw ConfigError("multi_level_ctc: active_levels " + std::to_string(active_levels) +
                          " outside [1," + std::to_string(n) + "]");
    Tensor total;
    for (int i = n - active_levels; i < n; ++i) {
        Tensor li;
        try {
            li = ctc_loss(levels[static_cast<size_t>(i)], target);
        } catch (const InfeasibleTargetError& e) {
            throw InfeasibleTargetError("level " + std::to_string(i + 1) + ": " + e.what());
        }
        total = total.defined() ? add(total, li) : li;
    }
    return total;
}

GlossSequence greedy_decode(const LevelLogits& logits) {
    const int stride = logits.num_classes();
    const auto& s = logits.scores.data();
    std::vector<int> path(static_cast<size_t>(logits.valid_len));
    for (int t = 0; t < logits.valid_len; ++t) {
        const double* row = &s[static_cast<size_t>(t) * stride];
        int best = 0;
        for (int k = 1; k < stride; ++k) {
            if (row[k] > row[best]) best = k;
        }
        path[static_cast<size_t>(t)] = best;
    }
    return collapse(path, logits.blank());
}

GlossSequence beam_decode(const LevelLogits& logits, int beam_width) {
    if (beam_width < 1) throw ConfigError("beam_decode: beam width must be >= 1");
    const int stride = logits.num_classes();
    const int blank = logits.blank();

    Tensor logp_t = log_softmax_rows(logits.scores);
    const auto& lp = logp_t.data();

    // prefix -> (log p ending in blank, log p ending in non-blank)
    using Probs = std::pair<double, double>;
    std::map<std::vector<int>, Probs> beams;
    beams[{}] = {0.0, kNegInf};

    for (int t = 0; t < logits.valid_len; ++t) {
        const double* row = &lp[static_cast<size_t>(t) * stride];
        std::map<std::vector<int>, Probs> next;
        auto entry = [&next](const std::vector<int>& prefix) -> Probs& {
            auto it = next.find(prefix);
            if (it == next.end())
                it = next.emplace(prefix, Probs{kNegInf, kNegInf}).first;
            return it->second;
        };
        for (const auto& [prefix, pr] : beams) {
            auto [pb, pnb] = pr;
            double ptot = lse2(pb, pnb);
            // stay on blank
            {
                Probs& e = entry(prefix);
                e.first = lse2(e.first, ptot + row[blank]);
            }
            for (int c = 0; c < blank; ++c) {
                double plab = row[c];
                if (!prefix.empty() && prefix.back() == c) {
                    // repeat of last symbol: collapses unless a blank intervened
                    Probs& same = entry(prefix);
                    same.second = lse2(same.second, pnb + plab);
                    std::vector<int> ext = prefix;
                    ext.push_back(c);
                    Probs& e = entry(ext);
                    e.second = lse2(e.second, pb + plab);
                } else {
                    std::vector<int> ext = prefix;
                    ext.push_back(c);
                    Probs& e = entry(ext);
                    e.second = lse2(e.second, ptot + plab);
                }
            }
        }
        // Prune to beam_width; std::map iteration is lexicographic, and
        // stable_sort keeps that order among equal scores.
        std::vector<std::pair<std::vector<int>, Probs>> items(next.begin(), next.end());
        std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            return lse2(a.second.first, a.second.second) > lse2(b.second.first, b.second.second);
        });
        if (static_cast<int>(items.size()) > beam_width)
            items.resize(static_cast<size_t>(beam_width));
        beams.clear();
        beams.insert(items.begin(), items.end());
    }

    const std::vector<int>* best = nullptr;
    double best_score = kNegInf;
    for (const auto& [prefix, pr] : beams) {
        double s = lse2(pr.first, pr.second);
        if (s > best_score) {  // first (lexicographically smallest) wins ties
            best_score = s;
            best = &prefix;
        }
    }
    GlossSequence out;
    if (best) out.labels = *best;
    return out;
}

}  // namespace mstnet
