#include "mstnet/metrics.hpp"

#include <algorithm>

#include "mstnet/errors.hpp"

namespace mstnet {

EditBreakdown wer(const GlossSequence& reference, const GlossSequence& hypothesis) {
    const int n = reference.length();
    const int m = hypothesis.length();
    if (n == 0) throw DataError("wer: empty reference");

    // d[i][j] = distance between ref[0..i) and hyp[0..j)
    std::vector<std::vector<int>> d(static_cast<size_t>(n + 1),
                                    std::vector<int>(static_cast<size_t>(m + 1), 0));
    for (int i = 0; i <= n; ++i) d[static_cast<size_t>(i)][0] = i;
    for (int j = 0; j <= m; ++j) d[0][static_cast<size_t>(j)] = j;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= m; ++j) {
            int match = d[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)] +
                        (reference.labels[static_cast<size_t>(i - 1)] !=
                                 hypothesis.labels[static_cast<size_t>(j - 1)]
                             ? 1
                             : 0);
            int insert = d[static_cast<size_t>(i)][static_cast<size_t>(j - 1)] + 1;
            int erase = d[static_cast<size_t>(i - 1)][static_cast<size_t>(j)] + 1;
            d[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::min({match, insert, erase});
        }
    }

    EditBreakdown out;
    out.total_ref = n;
    // Backtrace, tie priority: match/substitution, then insertion, then deletion.
    int i = n, j = m;
    while (i > 0 || j > 0) {
        int cur = d[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (i > 0 && j > 0) {
            bool same = reference.labels[static_cast<size_t>(i - 1)] ==
                        hypothesis.labels[static_cast<size_t>(j - 1)];
            int diag = d[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)];
            if (cur == diag + (same ? 0 : 1)) {
                if (!same) ++out.sub;
                --i;
                --j;
                continue;
            }
        }
        if (j > 0 && cur == d[static_cast<size_t>(i)][static_cast<size_t>(j - 1)] + 1) {
            ++out.ins;
            --j;
            continue;
        }
        ++out.del;
        --i;
    }
    out.wer = 100.0 * out.edits() / out.total_ref;
    return out;
}

EditBreakdown corpus_wer(const std::vector<std::pair<GlossSequence, GlossSequence>>& pairs) {
    if (pairs.empty()) throw DataError("corpus_wer: no pairs");
    EditBreakdown total;
    for (const auto& [ref, hyp] : pairs) {
        EditBreakdown b = wer(ref, hyp);
        total.ins += b.ins;
        total.del += b.del;
        total.sub += b.sub;
        total.total_ref += b.total_ref;
    }
    total.wer = 100.0 * total.edits() / total.total_ref;
    return total;
}

}  // namespace mstnet
