#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maldyn/transform.hpp"

namespace maldyn {

enum class DistanceMap { ExpNeg, InverseOnePlus };
enum class SimilarityMode { Text, Image, Hybrid };

std::string_view to_string(SimilarityMode mode) noexcept;
SimilarityMode parse_similarity_mode(std::string_view text);
std::string_view to_string(DistanceMap map) noexcept;
DistanceMap parse_distance_map(std::string_view text);

struct SimilarityConfig {
  double a1 = 0.5, a2 = 0.5;                        // St: cosine, BLEU
  double b1 = 1.0 / 3, b2 = 1.0 / 3, b3 = 1.0 / 3;  // Si: Wasserstein, KL, JS
  double w1 = 0.5, w2 = 0.5;                        // S: St, Si
  int bleu_order = 4;
  DistanceMap distance_to_similarity = DistanceMap::ExpNeg;
  std::size_t histogram_bins = 256;
  ImageConfig image;

  /// Throws InvalidArgument unless each weight group is non-negative and sums
  /// to 1 (± 1e-9), bleu_order >= 1 and histogram_bins == 256.
  void validate() const;
};

/// Clamped to [-1, 1]. Throws ZeroVector, DimensionMismatch.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// Clipped n-gram precisions for n = 1..order, geometric mean, times the
/// brevity penalty min(1, e^{1-r/c}). A zero match count at n >= 2 is smoothed
/// to 1 / (candidate n-grams + 1); unigram precision is not smoothed, so
/// token-disjoint texts score 0. Orders longer than the candidate are skipped.
/// Throws EmptyCandidate.
double bleu(const TokenText& candidate, const TokenText& reference, int order = 4);

/// Σ_i |CDF_p(i) - CDF_q(i)| / (bins - 1); support normalized to [0, 1].
double wasserstein_1d(std::span<const double> p, std::span<const double> q);

/// KL(p‖q) in nats after adding 1e-9 to every bin of both and renormalizing.
double kl_div(std::span<const double> p, std::span<const double> q);

/// Jensen-Shannon divergence in nats, unsmoothed; lies in [0, ln 2].
double js_div(std::span<const double> p, std::span<const double> q);

/// Normalized 256-bin pixel histogram. Throws EmptyData for an empty image.
std::array<double, 256> histogram(const MalImage& image);

double distance_to_similarity(double distance, DistanceMap map);

/// Preprocessed form of one sample so that pairwise scores avoid recounting.
struct SampleProfile {
  std::string sample_id;
  TokenText text;
  std::vector<std::pair<std::string, double>> unigrams;  // sorted token counts
  std::vector<std::map<std::string, std::size_t>> ngram_counts;  // [n-1] for n = 1..order
  std::size_t ngram_total_1 = 0;
  std::array<double, 256> hist{};
};

/// Throws EmptyData for an empty text.
SampleProfile make_profile(const TokenText& text, const SimilarityConfig& config);

/// a1 · max(0, cos(tfidf1, tfidf2)) + a2 · mean of both BLEU directions. The
/// TF-IDF space is the pair's union vocabulary with idf ln(3 / (1 + df)) + 1.
double text_similarity(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config);
double text_similarity(const TokenText& a, const TokenText& b, const SimilarityConfig& config);

/// b1 · σ(W) + b2 · σ(KL_sym) + b3 · σ(JS) on pixel histograms, where KL_sym is
/// the mean of both KL directions so that the score is symmetric.
double image_similarity(const std::array<double, 256>& a, const std::array<double, 256>& b, const SimilarityConfig& config);
double image_similarity(const MalImage& a, const MalImage& b, const SimilarityConfig& config);

/// w1 · St + w2 · Si, the image of a text being text_to_image(text, config.image).
double hybrid_similarity(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config);
double hybrid_similarity(const TokenText& a, const TokenText& b, const SimilarityConfig& config);

double similarity(const SampleProfile& a, const SampleProfile& b, SimilarityMode mode, const SimilarityConfig& config);

struct PairScores {
  double st = 0.0, si = 0.0, s = 0.0;
};
PairScores pair_scores(const SampleProfile& a, const SampleProfile& b, const SimilarityConfig& config);

/// `id_a,id_b,st,si,s` over every unordered pair (i < j) of the profiles.
std::string similarity_matrix_csv(std::span<const SampleProfile> profiles, const SimilarityConfig& config,
                                  unsigned jobs = 1);

}  // namespace maldyn
