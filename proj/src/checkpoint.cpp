#include "mstnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mstnet/errors.hpp"

namespace mstnet {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'T', 'N'};
constexpr uint8_t kVersion = 1;

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

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    write_le<uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& in) {
    uint64_t n = read_le<uint64_t>(in);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_le<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
    uint32_t n = read_le<uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open '" + path + "'");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    write_string(out, serialize_config(ckpt.config));
    write_le<uint32_t>(out, static_cast<uint32_t>(ckpt.params.size()));
    for (const auto& p : ckpt.params) {
        write_string(out, p.name);
        write_le<uint32_t>(out, static_cast<uint32_t>(p.tensor.shape().size()));
        for (int d : p.tensor.shape()) write_le<uint32_t>(out, static_cast<uint32_t>(d));
        write_doubles(out, p.tensor.data());
    }
    write_le<uint64_t>(out, ckpt.adam.step);
    write_le<uint32_t>(out, static_cast<uint32_t>(ckpt.adam.m.size()));
    for (const auto& m : ckpt.adam.m) write_doubles(out, m);
    for (const auto& v : ckpt.adam.v) write_doubles(out, v);
    write_le<uint32_t>(out, static_cast<uint32_t>(ckpt.epoch));
    write_le<uint64_t>(out, ckpt.rng_state);
    write_le<double>(out, ckpt.best_dev_wer);
    if (!out) throw DataError("save_checkpoint: write failure on '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("load_checkpoint: '" + path + "' is not a checkpoint");
    uint8_t version = static_cast<uint8_t>(in.get());
    if (version != kVersion)
        throw DataError("load_checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.config = parse_config_text(read_string(in));
    uint32_t nparams = read_le<uint32_t>(in);
    for (uint32_t i = 0; i < nparams; ++i) {
        NamedParam p;
        p.name = read_string(in);
        uint32_t ndim = read_le<uint32_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_le<uint32_t>(in));
        p.tensor = Tensor::from(shape, read_doubles(in), true);
        ckpt.params.push_back(std::move(p));
    }
    ckpt.adam.step = read_le<uint64_t>(in);
    uint32_t nstate = read_le<uint32_t>(in);
    for (uint32_t i = 0; i < nstate; ++i) ckpt.adam.m.push_back(read_doubles(in));
    for (uint32_t i = 0; i < nstate; ++i) ckpt.adam.v.push_back(read_doubles(in));
    ckpt.epoch = static_cast<int>(read_le<uint32_t>(in));
    ckpt.rng_state = read_le<uint64_t>(in);
    ckpt.best_dev_wer = read_le<double>(in);
    if (!in) throw DataError("load_checkpoint: truncated file '" + path + "'");
    return ckpt;
}

}  // namespace mstnet
