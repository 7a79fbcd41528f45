#include <doctest.h>

#include <cmath>
#include <set>

#include "maldyn/error.hpp"
#include "maldyn/generate.hpp"
#include "maldyn/synth.hpp"

using namespace maldyn;

namespace {

std::vector<TokenText> texts_of(std::initializer_list<const char*> lines) {
  std::vector<TokenText> out;
  for (const char* l : lines) out.push_back(parse_tokens(l, "t"));
  return out;
}

std::vector<TokenText> synthetic_texts() {
  const auto corpus = make_synthetic_corpus({0, 40, 4, 21});
  std::vector<TokenText> out;
  for (const auto& log : corpus.logs) out.push_back(to_token_text(log));
  return out;
}

std::set<std::vector<std::string>> gram_set(std::span<const TokenText> texts, std::size_t n) {
  std::set<std::vector<std::string>> out;
  for (const auto& t : texts)
    for (auto& g : sentence_ngrams(t, n)) out.insert(std::move(g));
  return out;
}

}  // namespace

TEST_CASE("hand-counted first-order transitions") {
  const auto g = fit_generator(texts_of({"A B A B A\n"}), 1, 0.0, 1);
  using C = MarkovGenerator::Context;
  CHECK(g.transitions.size() == 2);
  CHECK(g.transitions.at(C{"A"}) == MarkovGenerator::Counts{{"B", 2}});
  CHECK(g.transitions.at(C{"B"}) == MarkovGenerator::Counts{{"A", 2}});
  CHECK(g.vocab == std::vector<std::string>{"A", "B"});
}

TEST_CASE("alternating chain without mutation alternates") {
  const auto g = fit_generator(texts_of({"A B A B\n"}), 1, 0.0, 3);
  for (const auto& t : g.generate(20, {4, 4})) {
    REQUIRE(t.tokens.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) CHECK(t.tokens[i] != t.tokens[i - 1]);
  }
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit_generator(texts_of({"A B\n"}), 3, 0.0, 1), Error);
  CHECK_THROWS_AS(fit_generator(std::span<const TokenText>{}, 1, 0.0, 1), Error);
  CHECK_THROWS_AS(fit_generator(texts_of({"A B\n"}), 0, 0.0, 1), Error);
  CHECK_THROWS_AS(fit_generator(texts_of({"A B\n"}), 1, 1.0, 1), Error);
}

TEST_CASE("without mutation every emitted window was observed") {
  const auto texts = synthetic_texts();
  for (int order : {1, 2, 3}) {
    const auto g = fit_generator(texts, order, 0.0, 5);
    const auto seen = gram_set(texts, static_cast<std::size_t>(order) + 1);
    for (const auto& t : g.generate(50, g.default_length_range()))
      for (const auto& gram : sentence_ngrams(t, static_cast<std::size_t>(order) + 1)) CHECK(seen.count(gram));
  }
}

TEST_CASE("lengths stay in range and seeds reproduce") {
  const auto texts = synthetic_texts();
  const auto g = fit_generator(texts, 2, 0.05, 9);
  const auto range = g.default_length_range();
  CHECK(range.first >= 3);
  CHECK(range.first <= range.second);
  const auto a = g.generate(30, range);
  CHECK(a == g.generate(30, range));
  for (const auto& t : a) {
    CHECK(t.tokens.size() >= range.first);
    CHECK(t.tokens.size() <= range.second);
  }
  CHECK(g.sample(7, range) == a[7]);
  for (const auto& t : g.generate(10, {5, 9})) {
    CHECK(t.tokens.size() >= 5);
    CHECK(t.tokens.size() <= 9);
  }
}

TEST_CASE("novel windows grow with the mutation rate") {
  const auto texts = synthetic_texts();
  const auto seen = gram_set(texts, 3);
  double previous = -1.0;
  for (double rate : {0.0, 0.1, 0.3, 0.6}) {
    const auto g = fit_generator(texts, 2, rate, 13);
    std::size_t novel = 0, total = 0;
    for (const auto& t : g.generate(1000, {20, 20}))
      for (const auto& gram : sentence_ngrams(t, 3)) {
        ++total;
        novel += !seen.count(gram);
      }
    const double frac = static_cast<double>(novel) / static_cast<double>(total);
    const double sigma = std::sqrt(std::max(frac * (1.0 - frac), 1e-12) / static_cast<double>(total));
    CAPTURE(rate);
    CHECK(frac > previous + 3.0 * sigma);
    previous = frac;
  }
}

TEST_CASE("serialization round trip") {
  const auto g = fit_generator(synthetic_texts(), 2, 0.05, 17);
  const auto back = parse_generator(g.serialize());
  CHECK(back == g);
  CHECK(back.generate(5, {10, 30}) == g.generate(5, {10, 30}));
  CHECK_THROWS_AS(parse_generator("MALDYN-GEN-v0\n"), Error);
}
