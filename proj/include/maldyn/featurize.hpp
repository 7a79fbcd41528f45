#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "maldyn/behavior_log.hpp"
#include "maldyn/error.hpp"
#include "maldyn/matrix.hpp"

namespace maldyn {

enum class FeatureGroup { Api, Pid, Ret, ExInfo, Reboot, Time };

std::string_view to_string(FeatureGroup group) noexcept;
FeatureGroup parse_feature_group(std::string_view text);

/// Joins a window of tokens with single spaces; the n-gram key format used everywhere.
std::vector<std::string> ngrams(std::span<const std::string> tokens, int n);

/// api_name stream of a log, in call order.
std::vector<std::string> api_sequence(const BehaviorLog& log);

/// Shared n-gram token space plus the corpus-level inventories that fix the
/// column layout of the categorical feature families.
struct Vocabulary {
  int n = 1;
  std::vector<std::string> tokens;  // dense index -> n-gram, sorted
  std::unordered_map<std::string, std::size_t> token_to_index;
  std::vector<std::size_t> doc_freq;
  std::size_t corpus_size = 0;

  std::vector<std::string> api_names;
  std::vector<std::string> call_names;
  std::vector<std::string> pid_values;
  std::vector<std::string> ret_values;
  std::vector<std::string> exinfo_values;
  std::size_t max_pids = 0;  // most distinct pids observed in one log

  std::size_t size() const noexcept { return tokens.size(); }
  const std::size_t* find(std::string_view token) const;

  /// Smoothed inverse document frequency ln((1+|D|)/(1+df)) + 1.
  double idf(std::size_t index) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.n == b.n && a.tokens == b.tokens && a.doc_freq == b.doc_freq && a.corpus_size == b.corpus_size &&
           a.api_names == b.api_names && a.call_names == b.call_names && a.pid_values == b.pid_values &&
           a.ret_values == b.ret_values && a.exinfo_values == b.exinfo_values && a.max_pids == b.max_pids;
  }
};

/// Builds the n-gram space over api_name sequences. Throws EmptyCorpus, or
/// InvalidArgument when n is outside [1, 5].
Vocabulary build_vocabulary(std::span<const BehaviorLog> logs, int n);

/// Token-stream variant (no categorical inventories).
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, int n);

std::string serialize(const Vocabulary& vocab);
Vocabulary parse_vocabulary(std::string_view text);

/// token -> category lookup; tokens absent from the map are their own category.
class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::unordered_map<std::string, std::string> map) : map_(std::move(map)) {}

  /// CSV `token,category` with header.
  static CategoryMap load(const std::filesystem::path& path);

  const std::string& category_of(const std::string& token) const;
  bool empty() const noexcept { return map_.empty(); }

 private:
  std::unordered_map<std::string, std::string> map_;
};

struct FeaturizeConfig {
  int ngram = 1;
  std::set<FeatureGroup> groups = {FeatureGroup::Api, FeatureGroup::Ret, FeatureGroup::ExInfo, FeatureGroup::Reboot};
  /// Case-insensitive substrings matched against api names and exinfo values.
  std::vector<std::string> reboot_markers = {"ExitWindowsEx", "InitiateSystemShutdown", "reboot"};
  CategoryMap api_categories;
  CategoryMap pid_categories;
  CategoryMap ret_categories;
  CategoryMap call_categories;
  CategoryMap exinfo_categories;
};

struct FeatureColumn {
  std::string name;
  FeatureGroup group;

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

struct FeatureVector {
  std::string sample_id;
  std::map<std::size_t, double> entries;  // no explicit zeros
  std::map<std::size_t, FeatureGroup> group_tags;

  double get(std::size_t index) const;
};

/// Fixed column layout for one (vocabulary, config) pair. Column names follow
/// `<family>=<token>` for per-token features, e.g. `api_ratio=NtCreateFile`,
/// `bow=NtOpenFile NtReadFile`, `pid_ratio[0]`. Tokens outside the vocabulary
/// inventories fold into the family's `__other__` column so ratio families still
/// sum to one.
///
/// Count semantics: api_count is the total number of calls, pid_count /
/// call_count / ret_count the number of distinct values, exinfo_count the total
/// number of exinfo entries. pid_ratio is keyed by rank (most frequent pid first,
/// ties by pid value) because pid values are not comparable across runs.
class Featurizer {
 public:
  Featurizer(const Vocabulary& vocab, FeaturizeConfig config);

  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }
  const FeaturizeConfig& config() const noexcept { return config_; }

  FeatureVector extract(const BehaviorLog& log) const;

 private:
  std::size_t add(std::string name, FeatureGroup group);
  std::size_t column(const std::string& name) const;
  void put(FeatureVector& fv, std::size_t index, double value) const;
  void put_family(FeatureVector& fv, std::string_view family, const std::map<std::string, double>& values) const;

  const Vocabulary* vocab_;
  FeaturizeConfig config_;
  std::vector<FeatureColumn> columns_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws VocabularyMismatch when config.ngram != vocab.n.
FeatureVector extract_features(const BehaviorLog& log, const Vocabulary& vocab, const FeaturizeConfig& config);

struct SampleFailure {
  std::string sample_id;
  ErrorCode code;
  std::string message;
};

struct LoadedCorpus {
  std::vector<BehaviorLog> logs;  // manifest order, failures skipped
  std::vector<SampleFailure> failures;
};

/// Parses every log named by the manifest; per-sample errors are collected, not thrown.
LoadedCorpus load_corpus(const Manifest& manifest, const std::filesystem::path& manifest_path);

struct FeatureMatrix {
  std::vector<FeatureColumn> columns;
  std::vector<FeatureVector> rows;
  std::vector<SampleFailure> failures;

  DenseMatrix to_dense() const;
};

FeatureMatrix featurize_corpus(const Manifest& manifest, const std::filesystem::path& manifest_path,
                               const Vocabulary& vocab, const FeaturizeConfig& config);
FeatureMatrix featurize_logs(std::span<const BehaviorLog> logs, const Vocabulary& vocab,
                             const FeaturizeConfig& config);

/// `sample_id,feature_index,value` triplets.
std::string to_triplet_csv(const FeatureMatrix& matrix);
/// `feature_index,group,name`.
std::string to_feature_name_csv(std::span<const FeatureColumn> columns);

/// Reads the two files above back into a matrix (rows in first-appearance order).
FeatureMatrix parse_feature_matrix(std::string_view triplets_csv, std::string_view names_csv);

}  // namespace maldyn
