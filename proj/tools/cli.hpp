// SPDX-License-Identifier: MIT
//
// Experiment front end. Every subcommand reads a flat `key = value` config
// (file and/or command line, command line wins) and writes a table headed by
// `# key = value` metadata lines.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace wrate::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kBudgetError = 3, kNumericalAbort = 4 };

using Config = std::map<std::string, std::string>;

/// Flat TOML-like text: `key = value` lines, `#` comments, optional
/// `[section]` lines (ignored), quoted strings and `[a, b]` arrays.
Config parse_config(std::string_view text, const std::string& source_name);
/// Canonical `key = value` lines in key order.
std::string serialize_config(const Config& cfg);
/// Recovers the config block (`# config.key = value`) of a produced output.
Config extract_config(std::string_view output);
/// FNV-1a over serialize_config.
std::uint64_t config_hash(const Config& cfg);

/// Runs the CLI with `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wrate::cli
