#include "mstnet/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mstnet/errors.hpp"

namespace mstnet {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'T', 'D'};
constexpr uint8_t kVersion = 1;

// Stream ids for derived rng streams.
constexpr uint64_t kStreamPrototypes = 0;
constexpr uint64_t kStreamTrain = 1;
constexpr uint64_t kStreamTest = 2;

// Resample `src` rows to `target_len` rows at uniformly spaced source
// positions (nearest index), duplicating or dropping frames as needed.
std::vector<int> resample_indices(int src_len, int target_len) {
    std::vector<int> idx(static_cast<size_t>(target_len));
    for (int i = 0; i < target_len; ++i) {
        int j = static_cast<int>((static_cast<double>(i) + 0.5) * src_len / target_len);
        idx[static_cast<size_t>(i)] = std::min(j, src_len - 1);
    }
    return idx;
}

}  // namespace

std::vector<Tensor> gloss_prototypes(const ToyGrammar& grammar) {
    Rng rng = Rng::derive(grammar.seed, kStreamPrototypes, 0);
    std::vector<Tensor> protos;
    for (int g = 0; g < grammar.vocab_size; ++g) {
        int dur = grammar.len_min +
                  static_cast<int>(rng.uniform_int(
                      static_cast<uint64_t>(grammar.len_max - grammar.len_min + 1)));
        protos.push_back(Tensor::randn({dur, grammar.d_in}, rng, 1.0));
    }
    return protos;
}

Sample generate_sample(const ToyGrammar& grammar, Split split, int index) {
    std::vector<Tensor> protos = gloss_prototypes(grammar);
    uint64_t stream = split == Split::kTrain ? kStreamTrain : kStreamTest;
    Rng rng = Rng::derive(grammar.seed, stream, static_cast<uint64_t>(index));

    Sample sample;
    int len = grammar.sentence_min +
              static_cast<int>(rng.uniform_int(
                  static_cast<uint64_t>(grammar.sentence_max - grammar.sentence_min + 1)));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < len; ++i) {
        int gloss = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(grammar.vocab_size)));
        sample.target.labels.push_back(gloss);
        const Tensor& proto = protos[static_cast<size_t>(gloss)];
        int dur = proto.dim(0);
        // Per-occurrence time warp, symmetric in log scale around 1.
        double warp = rng.uniform(0.8, 1.25);
        int realized = std::max(1, static_cast<int>(std::lround(dur * warp)));
        for (int src : resample_indices(dur, realized)) {
            std::vector<double> row(static_cast<size_t>(grammar.d_in));
            for (int d = 0; d < grammar.d_in; ++d) {
                row[static_cast<size_t>(d)] =
                    proto.data()[static_cast<size_t>(src) * grammar.d_in + d] +
                    grammar.noise_sigma * rng.normal();
            }
            rows.push_back(std::move(row));
        }
    }
    int t = static_cast<int>(rows.size());
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(t) * grammar.d_in);
    for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
    Tensor frames = Tensor::from({t, grammar.d_in}, std::move(flat));
    sample.features.frames = pad_to_multiple_of_4(frames);
    sample.features.valid_len = t;
    sample.features.sample_id =
        (split == Split::kTrain ? "train/" : "test/") + std::to_string(index);
    return sample;
}

std::vector<Sample> generate(const ToyGrammar& grammar, int count, Split split) {
    if (count < 1) throw DataError("generate: count must be >= 1");
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_sample(grammar, split, i));
    return out;
}

FeatureSequence temporal_augment(const FeatureSequence& seq, Rng& rng, double max_frac) {
    if (max_frac < 0.0 || max_frac >= 1.0)
        throw ConfigError("temporal_augment: max_frac must be in [0,1)");
    int t = seq.valid_len;
    int d = seq.frames.dim(1);
    int lo = static_cast<int>(std::ceil(t * (1.0 - max_frac)));
    int hi = static_cast<int>(std::floor(t * (1.0 + max_frac)));
    lo = std::max(1, lo);
    int new_t = lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(hi - lo + 1)));

    std::vector<double> data(static_cast<size_t>(new_t) * d);
    const auto& src = seq.frames.data();
    std::vector<int> idx = resample_indices(t, new_t);
    for (int i = 0; i < new_t; ++i) {
        std::copy_n(&src[static_cast<size_t>(idx[static_cast<size_t>(i)]) * d], d,
                    &data[static_cast<size_t>(i) * d]);
    }
    FeatureSequence out;
    out.frames = pad_to_multiple_of_4(Tensor::from({new_t, d}, std::move(data)));
    out.valid_len = new_t;
    out.sample_id = seq.sample_id;
    return out;
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_le(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_corpus(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_corpus: cannot open '" + path + "'");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    write_le<uint32_t>(out, static_cast<uint32_t>(samples.size()));
    for (const auto& s : samples) {
        uint32_t t = static_cast<uint32_t>(s.features.valid_len);
        uint32_t l = static_cast<uint32_t>(s.target.labels.size());
        uint32_t d = static_cast<uint32_t>(s.features.frames.dim(1));
        write_le(out, t);
        write_le(out, l);
        write_le(out, d);
        for (uint32_t i = 0; i < t; ++i) {
            for (uint32_t j = 0; j < d; ++j) {
                write_le<float>(out, static_cast<float>(
                                         s.features.frames.data()[static_cast<size_t>(i) * d + j]));
            }
        }
        for (int id : s.target.labels) write_le<uint32_t>(out, static_cast<uint32_t>(id));
    }
    if (!out) throw DataError("save_corpus: write failure on '" + path + "'");
}

std::vector<Sample> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_corpus: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("load_corpus: '" + path + "' is not a corpus file");
    uint8_t version = static_cast<uint8_t>(in.get());
    if (version != kVersion)
        throw DataError("load_corpus: unsupported version " + std::to_string(version));
    uint32_t count = read_le<uint32_t>(in);
    std::vector<Sample> samples;
    samples.reserve(count);
    for (uint32_t r = 0; r < count; ++r) {
        uint32_t t = read_le<uint32_t>(in);
        uint32_t l = read_le<uint32_t>(in);
        uint32_t d = read_le<uint32_t>(in);
        if (!in || t == 0 || d == 0) throw DataError("load_corpus: corrupt record header");
        std::vector<double> data(static_cast<size_t>(t) * d);
        for (double& v : data) v = static_cast<double>(read_le<float>(in));
        Sample s;
        s.features.frames = pad_to_multiple_of_4(Tensor::from({static_cast<int>(t), static_cast<int>(d)}, std::move(data)));
        s.features.valid_len = static_cast<int>(t);
        s.features.sample_id = path + "#" + std::to_string(r);
        for (uint32_t i = 0; i < l; ++i)
            s.target.labels.push_back(static_cast<int>(read_le<uint32_t>(in)));
        if (!in) throw DataError("load_corpus: truncated record");
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace mstnet
