#include "synid/config.hpp"

#include <fstream>

#include "synid/error.hpp"
#include "synid/numio.hpp"

namespace synid {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        if (kv.count(key))
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        kv[key] = value;
    }
    return kv;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

double ConfigReader::get_double(const std::string& key, double fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const double v = parse_double(it->second);
    kv_.erase(it);
    return v;
}

std::size_t ConfigReader::get_size(const std::string& key, std::size_t fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::int64_t v = parse_int(it->second);
    if (v < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
    kv_.erase(it);
    return static_cast<std::size_t>(v);
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::uint64_t v = parse_u64(it->second);
    kv_.erase(it);
    return v;
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string v = it->second;
    kv_.erase(it);
    return v;
}

std::vector<std::size_t> ConfigReader::get_size_list(const std::string& key,
                                                     std::vector<std::size_t> fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::size_t> out;
    for (const std::string& tok : split_list(it->second)) {
        const std::int64_t v = parse_int(tok);
        if (v < 0) throw ConfigError("config key '" + key + "' must list nonnegative values");
        out.push_back(static_cast<std::size_t>(v));
    }
    kv_.erase(it);
    return out;
}

std::vector<double> ConfigReader::get_double_list(const std::string& key,
                                                  std::vector<double> fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& tok : split_list(it->second)) out.push_back(parse_double(tok));
    kv_.erase(it);
    return out;
}

void ConfigReader::finish(const std::string& what) const {
    if (!kv_.empty())
        throw ConfigError(what + ": unknown key '" + kv_.begin()->first + "'");
}

OptimizerConfig optimizer_from_reader(ConfigReader& reader, const std::string& prefix,
                                      const OptimizerConfig& defaults) {
    OptimizerConfig opt = defaults;
    opt.learning_rate = reader.get_double(prefix + "learning_rate", defaults.learning_rate);
    opt.momentum = reader.get_double(prefix + "momentum", defaults.momentum);
    opt.weight_decay = reader.get_double(prefix + "weight_decay", defaults.weight_decay);
    opt.batch_size = reader.get_size(prefix + "batch_size", defaults.batch_size);
    opt.epochs = reader.get_size(prefix + "epochs", defaults.epochs);
    opt.milestones = reader.get_size_list(prefix + "milestones", defaults.milestones);
    opt.seed = reader.get_u64(prefix + "seed", defaults.seed);
    opt.augment_sigma = reader.get_double(prefix + "augment_sigma", defaults.augment_sigma);
    opt.validate();
    return opt;
}

} // namespace synid
