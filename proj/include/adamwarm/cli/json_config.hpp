#pragma once

// JSON config files for CLI11.
//
// Nested objects select subcommands: {"simulate": {"seed": 7}} applies
// --seed 7 to `simulate`. A run manifest ({"command": ..., "config": {...}})
// is read as {command: config}. Scalars become single values, arrays become
// repeated values, booleans drive flags.

#include <CLI11.hpp>

namespace adamwarm::cli {

class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                          std::string prefix) const override;
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

} // namespace adamwarm::cli
