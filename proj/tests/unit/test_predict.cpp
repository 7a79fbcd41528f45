#include <doctest.h>

#include <algorithm>

#include "maldyn/error.hpp"
#include "maldyn/generate.hpp"
#include "maldyn/predict.hpp"
#include "maldyn/synth.hpp"
#include "oracles.hpp"

using namespace maldyn;

namespace {

const std::array<int, 10> kYearCounts = {362, 62, 1481, 4892, 4465, 8282, 5859, 6406, 6219, 5804};

Manifest timeline_manifest() {
  Manifest m;
  for (std::size_t y = 0; y < kYearCounts.size(); ++y)
    for (int i = 0; i < kYearCounts[y]; ++i) {
      ManifestEntry e;
      e.sample_id = "m" + std::to_string(2009 + y) + "-" + std::to_string(i);
      e.path = e.sample_id + ".xml";
      e.label = Label::Malware;
      e.year = static_cast<int>(2009 + y);
      m.entries.push_back(std::move(e));
    }
  return m;
}

std::vector<SampleProfile> profiles(std::size_t n_malware, std::uint64_t seed, const SimilarityConfig& cfg) {
  const auto corpus = make_synthetic_corpus({0, n_malware, 4, seed});
  std::vector<SampleProfile> out;
  for (const auto& log : corpus.logs) out.push_back(make_profile(to_token_text(log), cfg));
  return out;
}

}  // namespace

TEST_CASE("timeline partitions") {
  const auto m = timeline_manifest();
  const auto c1 = partition_by_year(m, "7:1:1:1");
  CHECK(c1.t(1).size() == 6406);
  CHECK(c1.t(2).size() == 6219);
  CHECK(c1.t(3).size() == 5804);
  const auto c2 = partition_by_year(m, "4:2:2:2");
  CHECK(c2.t(0).size() == 362 + 62 + 1481 + 4892);
  CHECK(c2.t(0).size() == 6797);
  CHECK_THROWS_AS(partition_by_year(m, "5:5"), Error);
}

TEST_CASE("undated and out-of-range samples are rejected") {
  Manifest m;
  m.entries.push_back({"late", "late.xml", Label::Malware, std::nullopt, 2020, false});
  m.entries.push_back({"ok", "ok.xml", Label::Malware, std::nullopt, 2010, false});
  try {
    partition_by_year(m, "7:1:1:1");
    FAIL("expected UndatedSample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndatedSample);
    CHECK(std::string(e.what()).find("late") != std::string::npos);
  }
  m.entries[0].label = Label::Benign;
  CHECK(partition_by_year(m, "7:1:1:1").t(0).size() == 1);
}

TEST_CASE("max similarity ties go to the lowest index") {
  SimilarityConfig cfg;
  const auto t = make_profile(parse_tokens("A B C D E F\n"), cfg);
  const std::vector<SampleProfile> g = {make_profile(parse_tokens("Q R S\n"), cfg),
                                        make_profile(parse_tokens("A B C D E G\n"), cfg),
                                        make_profile(parse_tokens("A B C D E G\n"), cfg)};
  const auto best = max_similarity(t, g, SimilarityMode::Text, cfg);
  CHECK(best.index == 1);
  CHECK(best.value == text_similarity(t, g[1], cfg));
  CHECK(best.value > text_similarity(t, g[0], cfg));
  const std::vector<SampleProfile> self = {g[0], t};
  CHECK(max_similarity(t, self, SimilarityMode::Hybrid, cfg).index == 1);
  CHECK(max_similarity(t, self, SimilarityMode::Hybrid, cfg).value == 1.0);
  CHECK_THROWS_AS(max_similarity(t, std::span<const SampleProfile>{}, SimilarityMode::Text, cfg), Error);
}

TEST_CASE("coverage equals the brute-force pairwise count") {
  SimilarityConfig cfg;
  const auto t = profiles(50, 1, cfg);
  const auto g = profiles(50, 2, cfg);
  const auto thresholds = default_thresholds();
  for (auto mode : {SimilarityMode::Text, SimilarityMode::Image, SimilarityMode::Hybrid}) {
    const std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts = {{"T1", t}};
    const auto report = coverage(parts, g, thresholds, mode, cfg, 2);
    const auto expected = oracle::coverage(t.size(), g.size(), thresholds,
                                           [&](std::size_t i, std::size_t j) { return similarity(t[i], g[j], mode, cfg); });
    CHECK(report.rates("T1") == expected);
    const auto rates = report.rates("T1");
    for (std::size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] <= rates[i - 1]);
  }
}

TEST_CASE("self coverage and endpoints") {
  SimilarityConfig cfg;
  const auto t = profiles(20, 3, cfg);
  const std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts = {{"T1", t}};
  const std::vector<double> th = {0.0, 0.5, 1.0, 1.01};
  const auto report = coverage(parts, t, th, SimilarityMode::Hybrid, cfg);
  CHECK(report.rates("T1") == std::vector<double>{1.0, 1.0, 1.0, 0.0});
  const std::vector<double> unsorted = {0.5, 0.2};
  CHECK_THROWS_AS(coverage(parts, t, unsorted, SimilarityMode::Text, cfg), Error);
}

TEST_CASE("a larger generated set never lowers coverage") {
  SimilarityConfig cfg;
  const auto t = profiles(30, 4, cfg);
  auto g = profiles(10, 5, cfg);
  const auto extra = profiles(10, 6, cfg);
  const std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts = {{"T1", t}};
  const auto th = default_thresholds();
  const auto before = coverage(parts, g, th, SimilarityMode::Hybrid, cfg).rates("T1");
  g.insert(g.end(), extra.begin(), extra.end());
  const auto after = coverage(parts, g, th, SimilarityMode::Hybrid, cfg).rates("T1");
  for (std::size_t i = 0; i < th.size(); ++i) CHECK(after[i] >= before[i]);
}

TEST_CASE("hybrid lies between text and image when both maxima share a match") {
  SimilarityConfig cfg;
  const auto all_t = profiles(40, 7, cfg);
  const auto g = profiles(25, 8, cfg);
  // keep the targets whose text and image maxima are attained by the same generated sample
  std::vector<SampleProfile> t;
  for (const auto& ti : all_t)
    if (max_similarity(ti, g, SimilarityMode::Text, cfg).index == max_similarity(ti, g, SimilarityMode::Image, cfg).index)
      t.push_back(ti);
  REQUIRE(t.size() >= 5);
  const std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts = {{"T1", t}};
  const auto th = default_thresholds();
  const auto text = coverage(parts, g, th, SimilarityMode::Text, cfg).rates("T1");
  const auto image = coverage(parts, g, th, SimilarityMode::Image, cfg).rates("T1");
  const auto hybrid = coverage(parts, g, th, SimilarityMode::Hybrid, cfg).rates("T1");
  for (std::size_t i = 0; i < th.size(); ++i) {
    CHECK(hybrid[i] >= std::min(text[i], image[i]));
    CHECK(hybrid[i] <= std::max(text[i], image[i]));
  }
}

TEST_CASE("coverage files") {
  SimilarityConfig cfg;
  const auto t = profiles(10, 9, cfg);
  const std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts = {{"T1", t}, {"T2", t}, {"T3", t}};
  const auto report = coverage(parts, t, default_thresholds(), SimilarityMode::Text, cfg);
  const auto wide = coverage_wide_csv(report);
  CHECK(wide.rfind("threshold,P(T1),P(T2),P(T3)\n", 0) == 0);
  CHECK(std::count(wide.begin(), wide.end(), '\n') == 9);
  const std::vector<CoverageReport> reports = {report};
  CHECK(coverage_long_csv(reports).rfind("mode,threshold,partition,covered,total,rate\n", 0) == 0);
  const std::string svg = coverage_svg(report);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 0);
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  CHECK(polylines == 3);
}
