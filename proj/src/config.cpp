#include "maldyn/config.hpp"

#include <functional>
#include <sstream>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/predict.hpp"

namespace maldyn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in{std::string(s)};
  while (std::getline(in, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

template <class T>
std::string join_list(const T& values, const std::function<std::string(const typename T::value_type&)>& fmt) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : ",") + fmt(v);
  return out;
}

std::size_t to_size(std::string_view v) {
  const auto x = io::parse_int(v);
  if (x < 0) throw Error(ErrorCode::InvalidArgument, "expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(x);
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::InvalidArgument, "expected a boolean, got '" + std::string(v) + "'");
}

struct Key {
  std::string name;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

std::vector<Key> keys(PipelineConfig& c) {
  std::vector<Key> k;
  auto str = [&](std::string name, std::string& field) {
    k.push_back({std::move(name), [&field](std::string_view v) { field = std::string(v); }, [&field] { return field; }});
  };
  auto real = [&](std::string name, double& field) {
    k.push_back({std::move(name), [&field](std::string_view v) { field = io::parse_real(v); },
                 [&field] { return io::format_real(field); }});
  };
  auto integer = [&](std::string name, int& field) {
    k.push_back({std::move(name), [&field](std::string_view v) { field = static_cast<int>(io::parse_int(v)); },
                 [&field] { return std::to_string(field); }});
  };
  auto size = [&](std::string name, std::size_t& field) {
    k.push_back({std::move(name), [&field](std::string_view v) { field = to_size(v); },
                 [&field] { return std::to_string(field); }});
  };

  k.push_back({"seed", [&c](std::string_view v) { c.seed = static_cast<std::uint64_t>(io::parse_int(v)); },
               [&c] { return std::to_string(c.seed); }});
  str("paths.data_dir", c.data_dir);
  str("paths.out_dir", c.out_dir);

  integer("featurize.ngram", c.ngram);
  k.push_back({"featurize.groups",
               [&c](std::string_view v) {
                 c.groups.clear();
                 for (const auto& g : split_list(v)) c.groups.insert(parse_feature_group(g));
               },
               [&c] {
                 return join_list<std::set<FeatureGroup>>(c.groups,
                                                          [](const FeatureGroup& g) { return std::string(to_string(g)); });
               }});
  k.push_back({"featurize.reboot_markers", [&c](std::string_view v) { c.reboot_markers = split_list(v); },
               [&c] { return join_list<std::vector<std::string>>(c.reboot_markers, [](const std::string& s) { return s; }); }});
  str("featurize.api_categories", c.api_categories);
  str("featurize.pid_categories", c.pid_categories);
  str("featurize.ret_categories", c.ret_categories);
  str("featurize.call_categories", c.call_categories);
  str("featurize.exinfo_categories", c.exinfo_categories);

  for (auto [prefix, params] : {std::pair<std::string, gbdt::Params*>{"gbdt.a.", &c.gbdt_a}, {"gbdt.b.", &c.gbdt_b}}) {
    integer(prefix + "n_trees", params->n_trees);
    integer(prefix + "max_depth", params->max_depth);
    real(prefix + "learning_rate", params->learning_rate);
    integer(prefix + "min_leaf", params->min_leaf);
    real(prefix + "subsample", params->subsample);
    real(prefix + "colsample", params->colsample);
    real(prefix + "lambda", params->lambda);
  }
  real("gbdt.blend", c.blend);
  real("gbdt.holdout", c.holdout);

  str("reduce.method", c.reduce_method);
  size("reduce.svd_k", c.svd_k);
  size("reduce.ae_hidden", c.ae_hidden);
  size("reduce.ae_bottleneck", c.ae_bottleneck);
  integer("reduce.ae_epochs", c.ae_epochs);
  real("reduce.ae_learning_rate", c.ae_learning_rate);
  size("reduce.ae_batch", c.ae_batch);

  str("cluster.algorithm", c.cluster_algorithm);
  size("cluster.k", c.cluster_k);
  real("cluster.eps", c.dbscan_eps);
  size("cluster.min_pts", c.dbscan_min_pts);
  integer("cluster.max_iter", c.kmeans_max_iter);
  k.push_back({"cluster.k_list",
               [&c](std::string_view v) {
                 c.k_list.clear();
                 for (const auto& x : split_list(v)) c.k_list.push_back(to_size(x));
               },
               [&c] { return join_list<std::vector<std::size_t>>(c.k_list, [](const std::size_t& x) { return std::to_string(x); }); }});

  integer("generator.order", c.generator_order);
  real("generator.mutation_rate", c.mutation_rate);
  size("generator.n_samples", c.generator_samples);
  size("generator.min_length", c.min_length);
  size("generator.max_length", c.max_length);

  auto& s = c.similarity;
  real("similarity.a1", s.a1);
  real("similarity.a2", s.a2);
  real("similarity.b1", s.b1);
  real("similarity.b2", s.b2);
  real("similarity.b3", s.b3);
  real("similarity.w1", s.w1);
  real("similarity.w2", s.w2);
  integer("similarity.bleu_order", s.bleu_order);
  k.push_back({"similarity.distance_map", [&s](std::string_view v) { s.distance_to_similarity = parse_distance_map(v); },
               [&s] { return std::string(to_string(s.distance_to_similarity)); }});

  size("image.line_width", s.image.line_width);
  size("image.width", s.image.target_width);
  size("image.height", s.image.target_height);
  k.push_back({"image.resize", [&s](std::string_view v) { s.image.resize = to_bool(v); },
               [&s] { return std::string(s.image.resize ? "true" : "false"); }});

  k.push_back({"coverage.thresholds",
               [&c](std::string_view v) {
                 c.thresholds.clear();
                 for (const auto& x : split_list(v)) c.thresholds.push_back(io::parse_real(x));
               },
               [&c] { return join_list<std::vector<double>>(c.thresholds, [](const double& x) { return io::format_real(x); }); }});
  str("coverage.scheme", c.scheme);
  k.push_back({"coverage.modes", [&c](std::string_view v) { c.modes = split_list(v); },
               [&c] { return join_list<std::vector<std::string>>(c.modes, [](const std::string& x) { return x; }); }});
  return k;
}

}  // namespace

FeaturizeConfig PipelineConfig::featurize_config() const {
  FeaturizeConfig f;
  f.ngram = ngram;
  f.groups = groups;
  f.reboot_markers = reboot_markers;
  const std::filesystem::path base(data_dir);
  auto load = [&](const std::string& p) {
    if (p.empty()) return CategoryMap{};
    const std::filesystem::path path(p);
    return CategoryMap::load(path.is_absolute() ? path : base / path);
  };
  f.api_categories = load(api_categories);
  f.pid_categories = load(pid_categories);
  f.ret_categories = load(ret_categories);
  f.call_categories = load(call_categories);
  f.exinfo_categories = load(exinfo_categories);
  return f;
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "config: " + what); };
  if (ngram < 1 || ngram > 5) bad("featurize.ngram must lie in [1, 5]");
  gbdt_a.validate();
  gbdt_b.validate();
  if (!(blend >= 0.0 && blend <= 1.0)) bad("gbdt.blend must lie in [0, 1]");
  if (!(holdout > 0.0 && holdout < 1.0)) bad("gbdt.holdout must lie in (0, 1)");
  if (reduce_method != "svd" && reduce_method != "autoencoder") bad("reduce.method must be svd or autoencoder");
  if (svd_k < 1) bad("reduce.svd_k must be >= 1");
  if (ae_hidden < 1 || ae_bottleneck < 1) bad("autoencoder widths must be >= 1");
  if (ae_epochs < 0) bad("reduce.ae_epochs must be >= 0");
  if (!(ae_learning_rate > 0.0)) bad("reduce.ae_learning_rate must be > 0");
  if (cluster_algorithm != "kmeans" && cluster_algorithm != "dbscan") bad("cluster.algorithm must be kmeans or dbscan");
  if (cluster_k < 1) bad("cluster.k must be >= 1");
  if (!(dbscan_eps > 0.0)) bad("cluster.eps must be > 0");
  if (kmeans_max_iter < 1) bad("cluster.max_iter must be >= 1");
  if (k_list.empty()) bad("cluster.k_list is empty");
  if (generator_order < 1) bad("generator.order must be >= 1");
  if (!(mutation_rate >= 0.0 && mutation_rate < 1.0)) bad("generator.mutation_rate must lie in [0, 1)");
  if (generator_samples < 1) bad("generator.n_samples must be >= 1");
  if ((min_length == 0) != (max_length == 0) || min_length > max_length)
    bad("generator.min_length and max_length must both be 0 or satisfy min <= max");
  similarity.validate();
  if (similarity.image.line_width == 0) bad("image.line_width must be >= 1");
  if (similarity.image.resize && (similarity.image.target_width == 0 || similarity.image.target_height == 0))
    bad("image target size must be >= 1");
  if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()))
    bad("coverage.thresholds must be non-empty and ascending");
  scheme_boundaries(scheme);
  for (const auto& m : modes) parse_similarity_mode(m);
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  for (auto& k : keys(config)) {
    if (k.name != key) continue;
    k.set(trim(value));
    return;
  }
  throw Error(ErrorCode::UsageError, "unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::UsageError, "config line " + std::to_string(number) + ": expected key=value");
    try {
      set_config_value(config, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::UsageError, "config line " + std::to_string(number) + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::UsageError, e.what());
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

std::string to_text(const PipelineConfig& config) {
  PipelineConfig copy = config;
  std::string out;
  for (const auto& k : keys(copy)) out += k.name + "=" + k.get() + "\n";
  return out;
}

}  // namespace maldyn
