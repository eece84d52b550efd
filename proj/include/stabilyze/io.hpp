#pragma once

// Reproducible artifact plumbing: 17-significant-digit JSON dumps, FNV-1a
// content hashes, atomic file writes, the binary sample format with its JSON
// sidecar, and run manifests.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stabilyze/sde.hpp"

namespace stabilyze {

inline constexpr const char* kVersion = "1.0.0";

std::string fmt17(double x);

// JSON text with every floating-point number at 17 significant digits; object
// keys are sorted, so equal reports serialize byte-identically.
std::string dump17(const nlohmann::json& j, int indent = 2);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);  // throws std::runtime_error
// write to path + ".tmp", then rename over path
void atomic_write(const std::string& path, std::string_view content);

// little-endian f64 (re, im) pairs at `path`, metadata sidecar at path + ".json"
void write_samples(const std::string& path, const SampleSet& set,
                   const nlohmann::json& sidecar_extra = nlohmann::json::object());
SampleSet read_samples(const std::string& path, nlohmann::json* sidecar = nullptr);

nlohmann::json make_manifest(const std::string& subcommand,
                             const std::vector<std::string>& args,
                             const std::map<std::string, std::string>& input_hashes,
                             std::uint64_t seed);

}  // namespace stabilyze
