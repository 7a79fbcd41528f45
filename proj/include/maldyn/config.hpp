#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "maldyn/featurize.hpp"
#include "maldyn/gbdt.hpp"
#include "maldyn/similarity.hpp"

namespace maldyn {

/// Every tunable of the pipeline. Stage seeds derive from `seed`: profile A
/// uses seed, profile B seed + 1, and every other stochastic stage seed.
struct PipelineConfig {
  std::uint64_t seed = 42;
  std::string data_dir = ".";
  std::string out_dir = "out";

  int ngram = 1;
  std::set<FeatureGroup> groups = FeaturizeConfig{}.groups;
  std::vector<std::string> reboot_markers = FeaturizeConfig{}.reboot_markers;
  std::string api_categories, pid_categories, ret_categories, call_categories, exinfo_categories;

  gbdt::Params gbdt_a = gbdt::Params::profile_a();
  gbdt::Params gbdt_b = gbdt::Params::profile_b();
  double blend = 0.5;
  double holdout = 0.3;  // fraction held out by `train`

  std::string reduce_method = "svd";  // svd | autoencoder
  std::size_t svd_k = 16;
  std::size_t ae_hidden = 128;
  std::size_t ae_bottleneck = 32;
  int ae_epochs = 200;
  double ae_learning_rate = 0.01;
  std::size_t ae_batch = 32;

  std::string cluster_algorithm = "kmeans";  // kmeans | dbscan
  std::size_t cluster_k = 4;
  double dbscan_eps = 0.5;
  std::size_t dbscan_min_pts = 5;
  int kmeans_max_iter = 300;
  std::vector<std::size_t> k_list = {2, 3, 4, 5, 6, 8};

  int generator_order = 2;
  double mutation_rate = 0.05;
  std::size_t generator_samples = 5000;
  std::size_t min_length = 0;  // 0: derived from the training median
  std::size_t max_length = 0;

  SimilarityConfig similarity;
  std::vector<double> thresholds = {0.15, 0.2, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95};
  std::string scheme = "7:1:1:1";
  std::vector<std::string> modes = {"text", "image", "hybrid"};

  FeaturizeConfig featurize_config() const;
  /// Throws InvalidArgument on any out-of-range value.
  void validate() const;
};

/// Flat `section.key=value` lines; '#' starts a comment. Unknown keys and
/// malformed values throw UsageError naming the line.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` assignment.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Every key with its current value, in a fixed order.
std::string to_text(const PipelineConfig& config);

}  // namespace maldyn
