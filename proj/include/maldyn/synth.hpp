#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "maldyn/behavior_log.hpp"

namespace maldyn {

/// Planted-signal corpus: benign samples draw from a benign API pool, each
/// malware family repeats its own motif over a shared malicious pool, and
/// malware years span 2009-2018 with 70% of them before 2016.
struct SynthConfig {
  std::size_t n_benign = 100;
  std::size_t n_malware = 100;
  std::size_t families = 4;
  std::uint64_t seed = 42;
};

struct SynthCorpus {
  std::vector<BehaviorLog> logs;
  Manifest manifest;  // paths are logs/<sample_id>.xml
};

/// Throws InvalidArgument when families is 0 or exceeds the built-in motif table.
SynthCorpus make_synthetic_corpus(const SynthConfig& config = {});

/// Writes manifest.csv and logs/*.xml under out_dir; returns the manifest path.
std::filesystem::path write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& out_dir);

}  // namespace maldyn
