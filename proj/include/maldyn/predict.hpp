#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maldyn/behavior_log.hpp"
#include "maldyn/similarity.hpp"

namespace maldyn {

/// T0 is the training era the generator is fitted on; T1..T3 are the later
/// eras it tries to anticipate.
struct TimePartition {
  std::string scheme;                                // "7:1:1:1" or "4:2:2:2"
  std::array<std::vector<std::string>, 4> parts;      // sample ids, manifest order
  std::array<std::pair<int, int>, 4> year_boundaries;  // inclusive

  const std::vector<std::string>& t(std::size_t i) const { return parts.at(i); }
};

/// Year ranges of a scheme. Throws UnknownScheme.
std::array<std::pair<int, int>, 4> scheme_boundaries(std::string_view scheme);

/// Partitions the real (non-generated), non-benign entries. Every such entry
/// must carry a year in [2009, 2018]; otherwise UndatedSample lists the ids.
TimePartition partition_by_year(const Manifest& manifest, std::string_view scheme);

struct BestMatch {
  std::size_t index = 0;
  double value = 0.0;
};

/// argmax_j s(ti, g_j), lowest j on ties. Throws EmptyGeneratedSet.
BestMatch max_similarity(const SampleProfile& ti, std::span<const SampleProfile> g, SimilarityMode mode,
                         const SimilarityConfig& config);

/// Default threshold grid.
std::vector<double> default_thresholds();

struct CoverageRow {
  std::string partition;
  double threshold = 0.0;
  std::size_t covered = 0;
  std::size_t total = 0;
  double rate = 0.0;
};

struct SampleMatch {
  std::string sample_id;
  std::string partition;
  BestMatch best;
};

struct CoverageReport {
  SimilarityMode mode = SimilarityMode::Hybrid;
  std::vector<double> thresholds;
  std::vector<std::string> partitions;  // in report order
  std::vector<CoverageRow> rows;        // partition-major, thresholds ascending
  std::vector<SampleMatch> matches;

  /// Rates of one partition, one per threshold.
  std::vector<double> rates(std::string_view partition) const;
};

/// Best matches of every t sample against g (parallel over t, `jobs` workers).
std::vector<BestMatch> best_matches(std::span<const SampleProfile> t, std::span<const SampleProfile> g,
                                    SimilarityMode mode, const SimilarityConfig& config, unsigned jobs = 1);

/// M / N per threshold from precomputed best matches. Thresholds must ascend.
std::vector<CoverageRow> coverage_rows(std::span<const BestMatch> best, std::span<const double> thresholds,
                                       std::string_view partition);

/// Coverage of each named partition by g. Throws EmptyData for an empty
/// partition, EmptyGeneratedSet, InvalidArgument for unsorted thresholds.
/// The rates of every partition are checked to be non-increasing in the threshold.
CoverageReport coverage(std::span<const std::pair<std::string, std::vector<SampleProfile>>> partitions,
                        std::span<const SampleProfile> g, std::span<const double> thresholds, SimilarityMode mode,
                        const SimilarityConfig& config, unsigned jobs = 1);

/// `mode,threshold,partition,covered,total,rate` for every report.
std::string coverage_long_csv(std::span<const CoverageReport> reports);
/// `threshold,P(T1),P(T2),P(T3)` for one report.
std::string coverage_wide_csv(const CoverageReport& report);
/// Line plot of rate against threshold, one polyline per partition.
std::string coverage_svg(const CoverageReport& report);

/// Writes coverage.csv plus coverage_<mode>.csv and coverage_<mode>.svg per report;
/// returns the paths written.
std::vector<std::filesystem::path> coverage_curve_report(std::span<const CoverageReport> reports,
                                                         const std::filesystem::path& out_dir);

}  // namespace maldyn
