#pragma once

// Subcommand bodies. Each writes its artifacts plus resolved_config.json into
// `out` and returns the process exit code; library errors propagate.

#include <cstdint>
#include <filesystem>
#include <string>

#include "config.hpp"

namespace potfield::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

int cmd_lyapunov(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_analyze(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_coherence(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_synth(const std::filesystem::path& spec_file, std::uint64_t seed, const std::filesystem::path& out);

}  // namespace potfield::app
