#include "maldyn/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "maldyn/error.hpp"
#include "maldyn/featurize.hpp"
#include "maldyn/io.hpp"
#include "maldyn/parallel.hpp"

namespace maldyn {

std::string_view to_string(SimilarityMode mode) noexcept {
  switch (mode) {
    case SimilarityMode::Text: return "text";
    case SimilarityMode::Image: return "image";
    case SimilarityMode::Hybrid: return "hybrid";
  }
  return "?";
}

SimilarityMode parse_similarity_mode(std::string_view text) {
  if (text == "text") return SimilarityMode::Text;
  if (text == "image") return SimilarityMode::Image;
  if (text == "hybrid") return SimilarityMode::Hybrid;
  throw Error(ErrorCode::InvalidArgument, "unknown similarity mode '" + std::string(text) + "'");
}

std::string_view to_string(DistanceMap map) noexcept {
  return map == DistanceMap::ExpNeg ? "exp_neg" : "inverse_one_plus";
}

DistanceMap parse_distance_map(std::string_view text) {
  if (text == "exp_neg") return DistanceMap::ExpNeg;
  if (text == "inverse_one_plus") return DistanceMap::InverseOnePlus;
  throw Error(ErrorCode::InvalidArgument, "unknown distance map '" + std::string(text) + "'");
}

void SimilarityConfig::validate() const {
  auto group = [](std::initializer_list<double> ws, const char* name) {
    double sum = 0.0;
    for (double w : ws) {
      if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " weights must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, std::string(name) + " weights must sum to 1");
  };
  group({a1, a2}, "text");
  group({b1, b2, b3}, "image");
  group({w1, w2}, "hybrid");
  if (bleu_order < 1) throw Error(ErrorCode::InvalidArgument, "bleu_order must be >= 1");
  if (histogram_bins != 256) throw Error(ErrorCode::InvalidArgument, "histogram_bins must be 256");
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "vectors differ in length");
  const double uu = dot(u, u), vv = dot(v, v);
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  // sqrt(x * x) == x in IEEE arithmetic, so cosine(u, u) is exactly 1
  const double norm = std::isfinite(uu * vv) ? std::sqrt(uu * vv) : std::sqrt(uu) * std::sqrt(vv);
  return std::clamp(dot(u, v) / norm, -1.0, 1.0);
}

namespace {

using NgramCounts = std::vector<std::map<std::string, std::size_t>>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int order) {
  NgramCounts counts(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n)
    for (auto& g : ngrams(tokens, n)) ++counts[static_cast<std::size_t>(n - 1)][std::move(g)];
  return counts;
}

double bleu_from_counts(const NgramCounts& cand, std::size_t cand_len, const NgramCounts& ref, std::size_t ref_len,
                        int order) {
  if (cand_len == 0) throw Error(ErrorCode::EmptyCandidate, "BLEU candidate is empty");
  double log_sum = 0.0;
  int used = 0;
  for (int n = 1; n <= order; ++n) {
    if (cand_len < static_cast<std::size_t>(n)) break;
    const auto& c = cand[static_cast<std::size_t>(n - 1)];
    const auto& r = ref[static_cast<std::size_t>(n - 1)];
    const double total = static_cast<double>(cand_len + 1 - static_cast<std::size_t>(n));
    double match = 0.0;
    // walk the smaller map, look up in the larger
    const bool c_small = c.size() <= r.size();
    const auto& small = c_small ? c : r;
    const auto& large = c_small ? r : c;
    for (const auto& [gram, count] : small)
      if (auto it = large.find(gram); it != large.end()) match += static_cast<double>(std::min(count, it->second));
    double p;
    if (match > 0.0) p = match / total;
    else if (n == 1) return 0.0;
    else p = 1.0 / (total + 1.0);
    log_sum += std::log(p);
    ++used;
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
  return bp * std::exp(log_sum / used);
}

void check_histogram(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw Error(ErrorCode::DimensionMismatch, "histograms differ in length");
  for (auto h : {p, q}) {
    double sum = 0.0;
    for (double x : h) {
      if (!(x >= 0.0)) throw Error(ErrorCode::UnnormalizedHistogram, "negative or NaN bin");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::UnnormalizedHistogram, "histogram sums to " + io::format_real(sum));
  }
}

double kl_raw(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, kl);
}

}  // namespace

double bleu(const TokenText& candidate, const TokenText& reference, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "BLEU order must be >= 1");
  if (candidate.tokens.empty()) throw Error(ErrorCode::EmptyCandidate, "BLEU candidate is empty");
  return bleu_from_counts(count_ngrams(candidate.tokens, order), candidate.tokens.size(),
                          count_ngrams(reference.tokens, order), reference.tokens.size(), order);
}

double wasserstein_1d(std::span<const double> p, std::span<const double> q) {
  check_histogram(p, q);
  if (p.size() == 1) return 0.0;
  double cp = 0.0, cq = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cp += p[i];
    cq += q[i];
    total += std::abs(cp - cq);
  }
  return total / static_cast<double>(p.size() - 1);
}

double kl_div(std::span<const double> p, std::span<const double> q) {
  check_histogram(p, q);
  constexpr double eps = 1e-9;
  std::vector<double> ps(p.begin(), p.end()), qs(q.begin(), q.end());
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    sp += ps[i] += eps;
    sq += qs[i] += eps;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i] /= sp;
    qs[i] /= sq;
  }
  return kl_raw(ps, qs);
}

double js_div(std::span<const double> p, std::span<const double> q) {
  check_histogram(p, q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return std::min(std::log(2.0), 0.5 * kl_raw(p, m) + 0.5 * kl_raw(q, m));
}

std::array<double, 256> histogram(const MalImage& image) {
  if (image.pixels.empty()) throw Error(ErrorCode::EmptyData, "empty image");
  std::array<double, 256> h{};
  for (std::uint8_t px : image.pixels) h[px] += 1.0;
  for (double& x : h) x /= static_cast<double>(image.pixels.size());
  return h;
}

double distance_to_similarity(double distance, DistanceMap map) {
  return map == DistanceMap::ExpNeg ? std::exp(-distance) : 1.0 / (1.0 + distance);
}

SampleProfile make_profile(const TokenText& text, const SimilarityConfig& config) {
  if (text.tokens.empty()) throw Error(ErrorCode::EmptyData, "sample '" + text.sample_id + "' has no tokens");
  SampleProfile p;
  p.sample_id = text.sample_id;
  p.text = text;
  p.ngram_counts = count_ngrams(text.tokens, config.bleu_order);
  for (const auto& [tok, count] : p.ngram_counts[0]) p.unigrams.emplace_back(tok, static_cast<double>(count));
  p.ngram_total_1 = text.tokens.size();
  p.hist = histogram(text_to_image(text, config.image));
  return p;
}

double text_similarity(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config) {
  static const double idf_shared = 1.0;                 // ln(3/3) + 1
  static const double idf_single = std::log(1.5) + 1.0;  // ln(3/2) + 1
  double ab = 0.0, aa = 0.0, bb = 0.0;
  auto ia = a.unigrams.begin(), ib = b.unigrams.begin();
  while (ia != a.unigrams.end() || ib != b.unigrams.end()) {
    if (ib == b.unigrams.end() || (ia != a.unigrams.end() && ia->first < ib->first)) {
      aa += (ia->second * idf_single) * (ia->second * idf_single);
      ++ia;
    } else if (ia == a.unigrams.end() || ib->first < ia->first) {
      bb += (ib->second * idf_single) * (ib->second * idf_single);
      ++ib;
    } else {
      const double x = ia->second * idf_shared, y = ib->second * idf_shared;
      ab += x * y;
      aa += x * x;
      bb += y * y;
      ++ia;
      ++ib;
    }
  }
  const double cos = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
  const int order = config.bleu_order;
  if (a.ngram_counts.size() < static_cast<std::size_t>(order) || b.ngram_counts.size() < static_cast<std::size_t>(order))
    throw Error(ErrorCode::InvalidArgument, "profile built with a smaller BLEU order");
  const double y2 = 0.5 * (bleu_from_counts(a.ngram_counts, a.ngram_total_1, b.ngram_counts, b.ngram_total_1, order) +
                           bleu_from_counts(b.ngram_counts, b.ngram_total_1, a.ngram_counts, a.ngram_total_1, order));
  return std::clamp(config.a1 * std::max(0.0, cos) + config.a2 * y2, 0.0, 1.0);
}

double text_similarity(const TokenText& a, const TokenText& b, const SimilarityConfig& config) {
  if (a.tokens.empty() || b.tokens.empty()) throw Error(ErrorCode::EmptyCandidate, "text similarity of an empty text");
  return text_similarity(make_profile(a, config), make_profile(b, config), config);
}

double image_similarity(const std::array<double, 256>& a, const std::array<double, 256>& b,
                        const SimilarityConfig& config) {
  if (a == b) return 1.0;
  const double w = wasserstein_1d(a, b);
  const double kl = 0.5 * (kl_div(a, b) + kl_div(b, a));
  const double js = js_div(a, b);
  const auto map = config.distance_to_similarity;
  return std::clamp(config.b1 * distance_to_similarity(w, map) + config.b2 * distance_to_similarity(kl, map) +
                        config.b3 * distance_to_similarity(js, map),
                    0.0, 1.0);
}

double image_similarity(const MalImage& a, const MalImage& b, const SimilarityConfig& config) {
  return image_similarity(histogram(a), histogram(b), config);
}

double hybrid_similarity(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config) {
  return std::clamp(config.w1 * text_similarity(a, b, config) + config.w2 * image_similarity(a.hist, b.hist, config),
                    0.0, 1.0);
}

double hybrid_similarity(const TokenText& a, const TokenText& b, const SimilarityConfig& config) {
  return hybrid_similarity(make_profile(a, config), make_profile(b, config), config);
}

double similarity(const SampleProfile& a, const SampleProfile& b, SimilarityMode mode, const SimilarityConfig& config) {
  switch (mode) {
    case SimilarityMode::Text: return text_similarity(a, b, config);
    case SimilarityMode::Image: return image_similarity(a.hist, b.hist, config);
    case SimilarityMode::Hybrid: return hybrid_similarity(a, b, config);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown similarity mode");
}

PairScores pair_scores(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config) {
  PairScores s;
  s.st = text_similarity(a, b, config);
  s.si = image_similarity(a.hist, b.hist, config);
  s.s = std::clamp(config.w1 * s.st + config.w2 * s.si, 0.0, 1.0);
  return s;
}

std::string similarity_matrix_csv(std::span<const SampleProfile> profiles, const SimilarityConfig& config,
                                  unsigned jobs) {
  const std::size_t n = profiles.size();
  std::vector<std::string> rows(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const PairScores s = pair_scores(profiles[i], profiles[j], config);
      rows[i] += io::csv_cell(profiles[i].sample_id) + "," + io::csv_cell(profiles[j].sample_id) + "," +
                 io::format_real(s.st) + "," + io::format_real(s.si) + "," + io::format_real(s.s) + "\n";
    }
  });
  std::string out = "id_a,id_b,st,si,s\n";
  for (const auto& r : rows) out += r;
  return out;
}

}  // namespace maldyn
