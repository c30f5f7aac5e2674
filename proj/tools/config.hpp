#pragma once

#include "deeptrend/dataio.hpp"
#include "deeptrend/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend::cli {

/// Invalid configuration text: syntax errors, unknown keys, bad values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. Keys before the first `[section]` header belong
/// to the global section (""). `#` and `;` start comment lines.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    bool has_section(const std::string& name) const { return sections.count(name) != 0; }
    /// Canonical `[section] key=value` rendering, sorted; used for the config hash.
    std::string canonical() const;
};

/// Levenshtein distance, for "did you mean" suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);

/// Everything a train/evaluate/compare run needs.
struct ExperimentConfig {
    std::optional<std::filesystem::path> data_path; // CSV input, or
    std::optional<SyntheticSpec> synthetic;         // generated data
    std::vector<std::string> stations;              // empty = every station
    ExperimentSettings settings;
    std::filesystem::path output_dir = "deeptrend-out";
    std::string config_hash;

    /// Rejects unknown sections and keys, naming the closest known key.
    static ExperimentConfig from_file(const ConfigFile& file);

    std::uint64_t seed() const noexcept { return settings.seed; }
    /// Comment lines embedded at the top of every output file.
    std::vector<std::string> provenance() const;

    FlowTable load_table() const;
    /// Stations to model; checks each against the table.
    std::vector<std::string> resolve_stations(const FlowTable& table) const;
};

/// Reads only the [synthetic] section (plus the global seed, if present).
SyntheticSpec synthetic_from_file(const ConfigFile& file);

} // namespace deeptrend::cli
