#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synid/model.hpp"
#include "synid/trainer.hpp"

namespace synid {

// Flat `key = value` text; '#' starts a comment. Every key has a default and
// unknown keys are errors, so typos in config files fail loudly.
std::map<std::string, std::string> read_kv_file(const std::string& path);

// Consumes recognized keys from `kv` (erasing them); call finish_config()
// afterwards to reject leftovers.
class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    double get_double(const std::string& key, double fallback);
    std::size_t get_size(const std::string& key, std::size_t fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    std::string get_string(const std::string& key, const std::string& fallback);
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback);
    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback);

    // Throws ConfigError naming the first unknown key, if any remain.
    void finish(const std::string& what) const;

private:
    std::map<std::string, std::string> kv_;
};

std::vector<std::string> split_list(const std::string& s);

// Optimizer keys with an optional prefix ("teacher_", "student_", "").
OptimizerConfig optimizer_from_reader(ConfigReader& reader, const std::string& prefix,
                                      const OptimizerConfig& defaults);

} // namespace synid
