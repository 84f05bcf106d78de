#include <cmath>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "mstnet/data_synth.hpp"

using namespace mstnet;

TEST_CASE("same seed reproduces the corpus bit for bit") {
    ToyGrammar g;
    g.vocab_size = 4;
    g.seed = 42;
    auto a = generate(g, 10, Split::kTrain);
    auto b = generate(g, 10, Split::kTrain);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].target == b[i].target);
        CHECK(a[i].features.valid_len == b[i].features.valid_len);
        CHECK(a[i].features.frames.data() == b[i].features.frames.data());
    }
}

TEST_CASE("different seeds and splits give different data") {
    ToyGrammar g;
    g.vocab_size = 4;
    auto train = generate(g, 5, Split::kTrain);
    auto test = generate(g, 5, Split::kTest);
    bool any_diff = false;
    for (size_t i = 0; i < 5; ++i) {
        if (!(train[i].target == test[i].target) ||
            train[i].features.frames.data() != test[i].features.frames.data())
            any_diff = true;
    }
    CHECK(any_diff);
    CHECK(train[0].features.sample_id == "train/0");
    CHECK(test[3].features.sample_id == "test/3");

    ToyGrammar g2 = g;
    g2.seed = 777;
    auto other = generate(g2, 5, Split::kTrain);
    CHECK(other[0].features.frames.data() != train[0].features.frames.data());
}

TEST_CASE("sample structure: lengths, padding, label ranges") {
    ToyGrammar g;
    auto samples = generate(g, 50, Split::kTrain);
    std::set<int> durations;
    for (const auto& s : samples) {
        CHECK(s.target.length() >= g.sentence_min);
        CHECK(s.target.length() <= g.sentence_max);
        for (int id : s.target.labels) {
            CHECK(id >= 0);
            CHECK(id < g.vocab_size);
        }
        CHECK(s.features.frames.dim(0) % 4 == 0);
        CHECK(s.features.frames.dim(1) == g.d_in);
        CHECK(s.features.valid_len <= s.features.frames.dim(0));
        CHECK(s.features.valid_len > s.features.frames.dim(0) - 4);
        durations.insert(s.features.valid_len);
    }
    // the time warp must actually vary realization lengths
    CHECK(durations.size() > 1);
}

TEST_CASE("prototypes are fixed per seed and distinct per gloss") {
    ToyGrammar g;
    g.vocab_size = 5;
    auto p1 = gloss_prototypes(g);
    auto p2 = gloss_prototypes(g);
    REQUIRE(p1.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(p1[i].data() == p2[i].data());
        CHECK(p1[i].dim(0) >= g.len_min);
        CHECK(p1[i].dim(0) <= g.len_max);
    }
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = i + 1; j < 5; ++j) {
            if (p1[i].shape() != p1[j].shape()) continue;
            CHECK(p1[i].data() != p1[j].data());
        }
}

TEST_CASE("single gloss, zero noise: frames are exact prototype resamples") {
    ToyGrammar g;
    g.vocab_size = 1;
    g.noise_sigma = 0.0;
    g.sentence_min = g.sentence_max = 1;
    Tensor proto = gloss_prototypes(g)[0];
    Sample s = generate_sample(g, Split::kTrain, 0);
    CHECK(s.target.labels == std::vector<int>{0});
    // every realized frame must equal some prototype row exactly
    for (int t = 0; t < s.features.valid_len; ++t) {
        bool found = false;
        for (int p = 0; p < proto.dim(0) && !found; ++p) {
            bool eq = true;
            for (int d = 0; d < g.d_in; ++d) {
                if (s.features.frames.data()[static_cast<size_t>(t) * g.d_in + d] !=
                    proto.data()[static_cast<size_t>(p) * g.d_in + d]) {
                    eq = false;
                    break;
                }
            }
            found = eq;
        }
        CHECK(found);
    }
}

TEST_CASE("temporal_augment: zero fraction is the identity on valid frames") {
    ToyGrammar g;
    Sample s = generate_sample(g, Split::kTrain, 3);
    Rng rng(5);
    FeatureSequence out = temporal_augment(s.features, rng, 0.0);
    CHECK(out.valid_len == s.features.valid_len);
    CHECK(out.frames.data() == s.features.frames.data());
    CHECK(out.sample_id == s.features.sample_id);
}

TEST_CASE("temporal_augment: length bounds and order preservation") {
    int t = 100, d = 2;
    std::vector<double> data(static_cast<size_t>(t) * d);
    for (int i = 0; i < t; ++i) {
        data[static_cast<size_t>(i) * d] = i;  // frame index as a feature
        data[static_cast<size_t>(i) * d + 1] = 1.0;
    }
    FeatureSequence seq;
    seq.frames = Tensor::from({t, d}, std::move(data));
    seq.valid_len = t;
    Rng rng(7);
    std::set<int> lengths;
    for (int trial = 0; trial < 200; ++trial) {
        FeatureSequence out = temporal_augment(seq, rng, 0.2);
        CHECK(out.valid_len >= 80);
        CHECK(out.valid_len <= 120);
        CHECK(out.frames.dim(0) % 4 == 0);
        lengths.insert(out.valid_len);
        double prev = -1.0;
        for (int i = 0; i < out.valid_len; ++i) {
            double src = out.frames.data()[static_cast<size_t>(i) * d];
            CHECK(src >= prev);
            prev = src;
        }
    }
    CHECK(lengths.size() > 10);
    CHECK_THROWS_AS(temporal_augment(seq, rng, -0.1), ConfigError);
    CHECK_THROWS_AS(temporal_augment(seq, rng, 1.0), ConfigError);
}

TEST_CASE("corpus file round trip") {
    ToyGrammar g;
    g.vocab_size = 3;
    auto samples = generate(g, 7, Split::kTrain);
    std::string path = "round_trip_corpus.bin";
    save_corpus(path, samples);
    auto loaded = load_corpus(path);
    REQUIRE(loaded.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].target == samples[i].target);
        CHECK(loaded[i].features.valid_len == samples[i].features.valid_len);
        REQUIRE(loaded[i].features.frames.shape() == samples[i].features.frames.shape());
        // frames pass through float32 storage
        for (size_t j = 0; j < samples[i].features.frames.size(); ++j) {
            float f = static_cast<float>(samples[i].features.frames.data()[j]);
            CHECK(loaded[i].features.frames.data()[j] == static_cast<double>(f));
        }
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_corpus("no_such_file.bin"), DataError);
}
