#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "darwinize/model.hpp"
#include "darwinize/nonmarkov.hpp"

namespace darwinize {

enum class KindSelection { subenv, pseudo, both };

struct RunConfig {
    PhysicalParams params;
    Index n_modes = 150;
    EnsembleScheme scheme = EnsembleScheme::grid;
    double cutoff = 20.0;
    double t_max = 50.0;
    Index n_steps = 2000;
    std::uint64_t seed = 42;

    Index n_samples = 200;
    Index exhaustive_limit = 512;
    KindSelection kind = KindSelection::subenv;
    std::vector<double> t_eval{50.0};  // t_max when not given
    bool with_split = false;
    Index n_series = 64;
    double max_gamma_ratio_ii = 0.01;
    StatePair witness;

    [[nodiscard]] std::vector<FragmentKind> kinds() const;
};

// key → raw value, in the `key = value` text form.
using ConfigEntries = std::map<std::string, std::string>;

// Parses `key = value` lines; `#` starts a comment. Repeated keys throw
// ConfigError. `source` names the input in diagnostics.
ConfigEntries parse_config(const std::string& text, const std::string& source = "config");
ConfigEntries read_config_file(const std::filesystem::path& path);

// Splits `key=value`; throws ConfigError when there is no '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);

bool is_config_key(const std::string& key);

// Sets one entry, replacing any earlier value. Setting gamma_w drops
// gamma_plus and the reverse. Throws ConfigError on an unknown key.
void set_entry(ConfigEntries& entries, const std::string& key, const std::string& value);

// Builds and validates a configuration. gamma_w and gamma_plus are
// alternatives (gamma_w = gamma_plus − gamma); giving both is an error.
RunConfig resolve_config(const ConfigEntries& entries);

// Canonical `key = value` echo of every setting, one per line.
std::string echo_config(const RunConfig& config);

}  // namespace darwinize
