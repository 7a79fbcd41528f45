#include "maldyn/generate.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/rng.hpp"

namespace maldyn {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(const TokenText& text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  for (std::size_t b : text.sentence_breaks) {
    if (b > start && b <= text.tokens.size()) spans.emplace_back(start, b);
    start = std::max(start, b);
  }
  if (start < text.tokens.size()) spans.emplace_back(start, text.tokens.size());
  return spans;
}

template <class Map>
std::size_t weighted_pick(const Map& table, Rng& rng, typename Map::const_iterator& out) {
  std::size_t total = 0;
  for (const auto& [key, count] : table) total += count;
  std::size_t r = rng.below(total);
  for (auto it = table.begin(); it != table.end(); ++it) {
    if (r < it->second) {
      out = it;
      return total;
    }
    r -= it->second;
  }
  out = std::prev(table.end());
  return total;
}

}  // namespace

std::vector<std::vector<std::string>> sentence_ngrams(const TokenText& text, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  if (n == 0) return out;
  for (auto [a, b] : sentence_spans(text))
    for (std::size_t i = a; i + n <= b; ++i) out.emplace_back(text.tokens.begin() + i, text.tokens.begin() + i + n);
  return out;
}

MarkovGenerator fit_generator(std::span<const TokenText> texts, int order, double mutation_rate, std::uint64_t seed) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "order must be >= 1");
  if (!(mutation_rate >= 0.0 && mutation_rate < 1.0))
    throw Error(ErrorCode::InvalidArgument, "mutation_rate must lie in [0, 1)");
  if (texts.empty()) throw Error(ErrorCode::CorpusTooShort, "empty training corpus");
  const auto k = static_cast<std::size_t>(order);
  MarkovGenerator g;
  g.order = order;
  g.mutation_rate = mutation_rate;
  g.seed = seed;
  std::set<std::string> vocab;
  std::vector<std::size_t> lengths;
  for (const auto& text : texts) {
    if (text.tokens.size() < k)
      throw Error(ErrorCode::CorpusTooShort, "text '" + text.sample_id + "' has " + std::to_string(text.tokens.size()) +
                                                 " tokens, fewer than order " + std::to_string(order));
    lengths.push_back(text.tokens.size());
    vocab.insert(text.tokens.begin(), text.tokens.end());
    for (auto [a, b] : sentence_spans(text)) {
      if (b - a < k) continue;
      ++g.start_contexts[MarkovGenerator::Context(text.tokens.begin() + a, text.tokens.begin() + a + k)];
      for (std::size_t i = a; i + k < b; ++i)
        ++g.transitions[MarkovGenerator::Context(text.tokens.begin() + i, text.tokens.begin() + i + k)][text.tokens[i + k]];
    }
  }
  if (g.start_contexts.empty())
    throw Error(ErrorCode::CorpusTooShort, "no sentence is at least " + std::to_string(order) + " tokens long");
  g.vocab.assign(vocab.begin(), vocab.end());
  std::sort(lengths.begin(), lengths.end());
  g.median_length = lengths[lengths.size() / 2];
  return g;
}

std::pair<std::size_t, std::size_t> MarkovGenerator::default_length_range() const {
  const auto floor_len = static_cast<std::size_t>(order) + 1;
  const std::size_t lo = std::max(floor_len, median_length / 2);
  const std::size_t hi = std::max(lo, median_length + median_length / 2);
  return {lo, hi};
}

TokenText MarkovGenerator::sample(std::size_t index, std::pair<std::size_t, std::size_t> length_range) const {
  auto [lo, hi] = length_range;
  if (lo < 1 || hi < lo) throw Error(ErrorCode::InvalidArgument, "length range must satisfy 1 <= lo <= hi");
  Rng rng(seed + index);
  const std::size_t length = lo + rng.below(hi - lo + 1);
  const auto k = static_cast<std::size_t>(order);

  char id[32];
  std::snprintf(id, sizeof id, "gen-%05zu", index);
  TokenText out;
  out.sample_id = id;
  std::size_t segment_start = 0;

  auto restart = [&]() {
    if (!out.tokens.empty()) out.sentence_breaks.push_back(out.tokens.size());
    segment_start = out.tokens.size();
    std::map<Context, std::size_t>::const_iterator it;
    weighted_pick(start_contexts, rng, it);
    for (const auto& tok : it->first) {
      if (out.tokens.size() == length) break;
      out.tokens.push_back(tok);
    }
  };

  restart();
  while (out.tokens.size() < length) {
    const bool mutate = rng.uniform() < mutation_rate;
    if (mutate) {
      out.tokens.push_back(vocab[rng.below(vocab.size())]);
      continue;
    }
    const auto end = out.tokens.end();
    const Context ctx(end - static_cast<std::ptrdiff_t>(k), end);
    const auto found = out.tokens.size() - segment_start >= k ? transitions.find(ctx) : transitions.end();
    if (found == transitions.end()) {
      restart();
      continue;
    }
    Counts::const_iterator next;
    weighted_pick(found->second, rng, next);
    out.tokens.push_back(next->first);
  }
  return out;
}

std::vector<TokenText> MarkovGenerator::generate(std::size_t n_samples,
                                                 std::pair<std::size_t, std::size_t> length_range) const {
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  std::vector<TokenText> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) out.push_back(sample(i, length_range));
  return out;
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

std::string MarkovGenerator::serialize() const {
  std::ostringstream out;
  out << "MALDYN-GEN-v1\n";
  out << "order " << order << "\nmutation_rate " << io::format_real(mutation_rate) << "\nseed " << seed
      << "\nmedian_length " << median_length << "\nvocab " << join(vocab) << '\n';
  for (const auto& [ctx, count] : start_contexts) out << "S\t" << join(ctx) << '\t' << count << '\n';
  for (const auto& [ctx, table] : transitions)
    for (const auto& [next, count] : table) out << "T\t" << join(ctx) << '\t' << next << '\t' << count << '\n';
  out << "end\n";
  return out.str();
}

MarkovGenerator parse_generator(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!io::next_line(in, line) || line != "MALDYN-GEN-v1") throw Error(ErrorCode::FormatError, "not a MALDYN-GEN-v1 file");
  MarkovGenerator g;
  auto field = [&](const char* key) {
    if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "generator truncated");
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0 && line != key) throw Error(ErrorCode::FormatError, std::string("expected ") + key);
    return line.size() > prefix.size() ? line.substr(prefix.size()) : std::string();
  };
  g.order = static_cast<int>(io::parse_int(field("order")));
  g.mutation_rate = io::parse_real(field("mutation_rate"));
  g.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
  g.median_length = static_cast<std::size_t>(io::parse_int(field("median_length")));
  g.vocab = split_ws(field("vocab"));
  bool ended = false;
  while (io::next_line(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::vector<std::string> parts;
    std::istringstream ls(line);
    std::string part;
    while (std::getline(ls, part, '\t')) parts.push_back(part);
    if (parts.size() == 3 && parts[0] == "S") {
      g.start_contexts[split_ws(parts[1])] = static_cast<std::size_t>(io::parse_int(parts[2]));
    } else if (parts.size() == 4 && parts[0] == "T") {
      g.transitions[split_ws(parts[1])][parts[2]] = static_cast<std::size_t>(io::parse_int(parts[3]));
    } else {
      throw Error(ErrorCode::FormatError, "bad generator record: " + line);
    }
  }
  if (!ended) throw Error(ErrorCode::FormatError, "generator truncated");
  if (g.order < 1 || g.start_contexts.empty() || g.vocab.empty())
    throw Error(ErrorCode::FormatError, "generator has no start contexts");
  return g;
}

}  // namespace maldyn
