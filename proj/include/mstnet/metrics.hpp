#pragma once

#include <vector>

#include "mstnet/ctc.hpp"

namespace mstnet {

struct EditBreakdown {
    int ins = 0;
    int del = 0;
    int sub = 0;
    int total_ref = 0;
    double wer = 0.0;  // percent; may exceed 100

    int edits() const { return ins + del + sub; }
};

// Levenshtein distance with unit costs, breakdown recovered by backtrace.
// Ties break preferring substitution over insertion over deletion.
// ins counts hypothesis words absent from the reference.
EditBreakdown wer(const GlossSequence& reference, const GlossSequence& hypothesis);

// Corpus-level aggregation: summed edits over summed reference lengths.
EditBreakdown corpus_wer(const std::vector<std::pair<GlossSequence, GlossSequence>>& pairs);

}  // namespace mstnet
