#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "allelo/config.hpp"

namespace allelo {

struct RunReport {
  std::filesystem::path dir;
  /// Output files, manifest excluded, in write order.
  std::vector<std::string> files;
  std::filesystem::path manifest;
  /// Short human-readable digest of the results.
  std::string summary;
};

/// Runs the configured mode and writes its outputs, config.resolved and
/// manifest.txt to the output directory. Nothing written depends on
/// `threads` or on wall-clock time.
RunReport execute(const RunConfig& cfg, unsigned threads = 1);

}  // namespace allelo
