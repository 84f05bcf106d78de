#include "mstnet/config.hpp"

#include <fstream>
#include <sstream>

#include "mstnet/errors.hpp"

namespace mstnet {

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (d_in < 1) fail("d_in must be positive");
    if (c1 < 1 || c2 < 2) fail("c1/c2 must be positive (c2 >= 2)");
    if (fc_layers < 0 || fc_layers > 3) fail("fc_layers must be in 0..3");
    if (fc_layers == 0 && c1 != c2) fail("with 0 FC layers c1 must equal c2");
    if (num_scales < 1 || num_scales > 5) fail("num_scales must be in 1..5");
    if (num_mst_blocks < 1) fail("num_mst_blocks must be >= 1");
    if (encoder_layers < 0) fail("encoder_layers must be >= 0");
    if (heads < 1 || c2 % heads != 0) fail("c2 must be divisible by heads");
    if (ff_mult < 1) fail("ff_mult must be >= 1");
    if (ctc_levels < 1 || ctc_levels > 4) fail("ctc_levels must be in 1..4");
    if (vocab_size < 1) fail("vocab_size must be >= 1");
    if (grad_stop_p < 0.0 || grad_stop_p > 1.0) fail("grad_stop_p must be in [0,1]");
    if (lr <= 0.0) fail("lr must be positive");
    if (weight_decay < 0.0) fail("weight_decay must be >= 0");
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (beam_width < 1) fail("beam_width must be >= 1");
    if (augment_frac < 0.0 || augment_frac >= 1.0) fail("augment_frac must be in [0,1)");
}

double ModelConfig::lr_at_epoch(int epoch) const {
    double cur = lr;
    for (const auto& [at, factor] : lr_drops) {
        if (epoch >= at) cur *= factor;
    }
    return cur;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config: bad real for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::pair<int, double>> to_drops(const std::string& key, const std::string& v) {
    std::vector<std::pair<int, double>> drops;
    if (trim(v).empty() || v == "none") return drops;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("config: " + key + " entries must be epoch:factor, got '" + item + "'");
        drops.emplace_back(to_int(key, trim(item.substr(0, colon))),
                           to_double(key, trim(item.substr(colon + 1))));
    }
    return drops;
}

}  // namespace

void apply_config_line(ModelConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "d_in") cfg.d_in = to_int(key, value);
    else if (key == "c1") cfg.c1 = to_int(key, value);
    else if (key == "c2") cfg.c2 = to_int(key, value);
    else if (key == "fc_layers") cfg.fc_layers = to_int(key, value);
    else if (key == "num_scales") cfg.num_scales = to_int(key, value);
    else if (key == "num_mst_blocks") cfg.num_mst_blocks = to_int(key, value);
    else if (key == "encoder_layers") cfg.encoder_layers = to_int(key, value);
    else if (key == "heads") cfg.heads = to_int(key, value);
    else if (key == "ff_mult") cfg.ff_mult = to_int(key, value);
    else if (key == "ctc_levels") cfg.ctc_levels = to_int(key, value);
    else if (key == "vocab_size") cfg.vocab_size = to_int(key, value);
    else if (key == "fusion_relu") cfg.fusion_relu = to_bool(key, value);
    else if (key == "shared_head") cfg.shared_head = to_bool(key, value);
    else if (key == "grad_stop_p") cfg.grad_stop_p = to_double(key, value);
    else if (key == "lr") cfg.lr = to_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = to_double(key, value);
    else if (key == "lr_drops") cfg.lr_drops = to_drops(key, value);
    else if (key == "epochs") cfg.epochs = to_int(key, value);
    else if (key == "batch_size") cfg.batch_size = to_int(key, value);
    else if (key == "beam_width") cfg.beam_width = to_int(key, value);
    else if (key == "augment_frac") cfg.augment_frac = to_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(std::stoull(value));
    else throw ConfigError("config: unknown key '" + key + "'");
}

ModelConfig parse_config_text(const std::string& text, ModelConfig base) {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value', got '" + line + "'");
        apply_config_line(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

ModelConfig parse_config_file(const std::string& path, ModelConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), std::move(base));
}

std::string serialize_config(const ModelConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "d_in = " << cfg.d_in << "\n";
    os << "c1 = " << cfg.c1 << "\n";
    os << "c2 = " << cfg.c2 << "\n";
    os << "fc_layers = " << cfg.fc_layers << "\n";
    os << "num_scales = " << cfg.num_scales << "\n";
    os << "num_mst_blocks = " << cfg.num_mst_blocks << "\n";
    os << "encoder_layers = " << cfg.encoder_layers << "\n";
    os << "heads = " << cfg.heads << "\n";
    os << "ff_mult = " << cfg.ff_mult << "\n";
    os << "ctc_levels = " << cfg.ctc_levels << "\n";
    os << "vocab_size = " << cfg.vocab_size << "\n";
    os << "fusion_relu = " << (cfg.fusion_relu ? "true" : "false") << "\n";
    os << "shared_head = " << (cfg.shared_head ? "true" : "false") << "\n";
    os << "grad_stop_p = " << cfg.grad_stop_p << "\n";
    os << "lr = " << cfg.lr << "\n";
    os << "weight_decay = " << cfg.weight_decay << "\n";
    os << "lr_drops = ";
    for (size_t i = 0; i < cfg.lr_drops.size(); ++i) {
        if (i) os << ",";
        os << cfg.lr_drops[i].first << ":" << cfg.lr_drops[i].second;
    }
    if (cfg.lr_drops.empty()) os << "none";
    os << "\n";
    os << "epochs = " << cfg.epochs << "\n";
    os << "batch_size = " << cfg.batch_size << "\n";
    os << "beam_width = " << cfg.beam_width << "\n";
    os << "augment_frac = " << cfg.augment_frac << "\n";
    os << "seed = " << cfg.seed << "\n";
    return os.str();
}

}  // namespace mstnet
