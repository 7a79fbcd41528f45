#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maldyn/transform.hpp"

namespace maldyn {

/// Source of synthetic token sequences for the coverage framework. A learned
/// generator can implement this interface in place of the Markov baseline.
class Generator {
 public:
  virtual ~Generator() = default;

  /// Deterministic for a fixed model; sample i depends only on (seed, i).
  virtual std::vector<TokenText> generate(std::size_t n_samples, std::pair<std::size_t, std::size_t> length_range) const = 0;
  virtual std::string serialize() const = 0;
};

/// Order-k Markov chain over tokens with uniform-vocabulary mutation.
class MarkovGenerator final : public Generator {
 public:
  using Context = std::vector<std::string>;
  using Counts = std::map<std::string, std::size_t>;

  int order = 2;
  double mutation_rate = 0.05;
  std::uint64_t seed = 0;
  std::map<Context, Counts> transitions;
  std::map<Context, std::size_t> start_contexts;
  std::vector<std::string> vocab;  // sorted
  std::size_t median_length = 0;

  /// [0.5, 1.5] x the training median length, at least order + 1 tokens wide.
  std::pair<std::size_t, std::size_t> default_length_range() const;

  std::vector<TokenText> generate(std::size_t n_samples, std::pair<std::size_t, std::size_t> length_range) const override;
  TokenText sample(std::size_t index, std::pair<std::size_t, std::size_t> length_range) const;
  std::string serialize() const override;

  friend bool operator==(const MarkovGenerator& a, const MarkovGenerator& b) {
    return a.order == b.order && a.mutation_rate == b.mutation_rate && a.seed == b.seed &&
           a.transitions == b.transitions && a.start_contexts == b.start_contexts && a.vocab == b.vocab &&
           a.median_length == b.median_length;
  }
};

/// Counts every context -> next transition inside each sentence of every text.
/// Throws CorpusTooShort when the corpus is empty or any text is shorter than
/// order; InvalidArgument for order < 1 or mutation_rate outside [0, 1).
MarkovGenerator fit_generator(std::span<const TokenText> texts, int order, double mutation_rate, std::uint64_t seed);

MarkovGenerator parse_generator(std::string_view text);

/// Every (n)-gram that occurs inside one sentence of the texts.
std::vector<std::vector<std::string>> sentence_ngrams(const TokenText& text, std::size_t n);

}  // namespace maldyn
