#include "maldyn/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "maldyn/io.hpp"

namespace maldyn {

std::string_view to_string(FeatureGroup group) noexcept {
  switch (group) {
    case FeatureGroup::Api: return "API";
    case FeatureGroup::Pid: return "PID";
    case FeatureGroup::Ret: return "RET";
    case FeatureGroup::ExInfo: return "EXINFO";
    case FeatureGroup::Reboot: return "REBOOT";
    case FeatureGroup::Time: return "TIME";
  }
  return "API";
}

FeatureGroup parse_feature_group(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "API") return FeatureGroup::Api;
  if (upper == "PID") return FeatureGroup::Pid;
  if (upper == "RET") return FeatureGroup::Ret;
  if (upper == "EXINFO") return FeatureGroup::ExInfo;
  if (upper == "REBOOT") return FeatureGroup::Reboot;
  if (upper == "TIME") return FeatureGroup::Time;
  throw Error(ErrorCode::InvalidArgument, "unknown feature group '" + std::string(text) + "'");
}

std::vector<std::string> ngrams(std::span<const std::string> tokens, int n) {
  std::vector<std::string> out;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (int k = 1; k < n; ++k) {
      g.push_back(' ');
      g += tokens[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::string> api_sequence(const BehaviorLog& log) {
  std::vector<std::string> seq;
  seq.reserve(log.actions.size());
  for (const auto& a : log.actions) seq.push_back(a.api_name);
  return seq;
}

const std::size_t* Vocabulary::find(std::string_view token) const {
  auto it = token_to_index.find(std::string(token));
  return it == token_to_index.end() ? nullptr : &it->second;
}

double Vocabulary::idf(std::size_t index) const {
  return std::log((1.0 + static_cast<double>(corpus_size)) / (1.0 + static_cast<double>(doc_freq.at(index)))) + 1.0;
}

namespace {

void check_order(int n) {
  if (n < 1 || n > 5) throw Error(ErrorCode::InvalidArgument, "n-gram order must be in [1, 5], got " + std::to_string(n));
}

void index_tokens(Vocabulary& v, const std::map<std::string, std::size_t>& df) {
  v.tokens.clear();
  v.doc_freq.clear();
  v.token_to_index.clear();
  for (const auto& [tok, count] : df) {
    v.token_to_index.emplace(tok, v.tokens.size());
    v.tokens.push_back(tok);
    v.doc_freq.push_back(count);
  }
}

std::vector<std::string> sorted(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

}  // namespace

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, int n) {
  check_order(n);
  if (documents.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    auto grams = ngrams(doc, n);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }
  Vocabulary v;
  v.n = n;
  v.corpus_size = documents.size();
  index_tokens(v, df);
  return v;
}

Vocabulary build_vocabulary(std::span<const BehaviorLog> logs, int n) {
  check_order(n);
  if (logs.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build a vocabulary from an empty corpus");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(logs.size());
  std::set<std::string> apis, callers, pids, rets, exinfos;
  std::size_t max_pids = 0;
  for (const auto& log : logs) {
    docs.push_back(api_sequence(log));
    std::set<std::uint64_t> log_pids;
    for (const auto& a : log.actions) {
      apis.insert(a.api_name);
      callers.insert(a.call_name);
      pids.insert(std::to_string(a.call_pid));
      rets.insert(std::to_string(a.ret_value));
      exinfos.insert(a.ex_info.begin(), a.ex_info.end());
      log_pids.insert(a.call_pid);
    }
    max_pids = std::max(max_pids, log_pids.size());
  }
  Vocabulary v = build_vocabulary(std::span<const std::vector<std::string>>(docs), n);
  v.api_names = sorted(apis);
  v.call_names = sorted(callers);
  v.pid_values = sorted(pids);
  v.ret_values = sorted(rets);
  v.exinfo_values = sorted(exinfos);
  v.max_pids = max_pids;
  return v;
}

namespace {

void write_list(std::ostringstream& out, std::string_view name, const std::vector<std::string>& items) {
  out << name << ' ' << items.size() << '\n';
  for (const auto& s : items) out << s << '\n';
}

std::vector<std::string> read_list(std::istream& in, std::string_view name) {
  std::string line;
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "vocabulary truncated before " + std::string(name));
  std::istringstream head(line);
  std::string key;
  std::size_t count = 0;
  head >> key >> count;
  if (key != name) throw Error(ErrorCode::FormatError, "expected '" + std::string(name) + "' section");
  std::vector<std::string> items;
  items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "vocabulary truncated in " + std::string(name));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    items.push_back(line);
  }
  return items;
}

}  // namespace

std::string serialize(const Vocabulary& v) {
  std::ostringstream out;
  out << "MALDYN-VOCAB-v1\n";
  out << "n " << v.n << '\n';
  out << "corpus_size " << v.corpus_size << '\n';
  out << "max_pids " << v.max_pids << '\n';
  out << "ngrams " << v.tokens.size() << '\n';
  for (std::size_t i = 0; i < v.tokens.size(); ++i) out << v.doc_freq[i] << '\t' << v.tokens[i] << '\n';
  write_list(out, "api_names", v.api_names);
  write_list(out, "call_names", v.call_names);
  write_list(out, "pid_values", v.pid_values);
  write_list(out, "ret_values", v.ret_values);
  write_list(out, "exinfo_values", v.exinfo_values);
  return out.str();
}

Vocabulary parse_vocabulary(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!io::next_line(in, line) || line != "MALDYN-VOCAB-v1")
    throw Error(ErrorCode::FormatError, "not a MALDYN-VOCAB-v1 file");
  Vocabulary v;
  auto read_scalar = [&](std::string_view key) -> std::size_t {
    if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "vocabulary truncated");
    std::istringstream s(line);
    std::string k;
    long long value = -1;
    s >> k >> value;
    if (k != key || value < 0) throw Error(ErrorCode::FormatError, "expected '" + std::string(key) + "'");
    return static_cast<std::size_t>(value);
  };
  v.n = static_cast<int>(read_scalar("n"));
  v.corpus_size = read_scalar("corpus_size");
  v.max_pids = read_scalar("max_pids");
  const std::size_t count = read_scalar("ngrams");
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "vocabulary truncated in ngrams");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::FormatError, "bad ngram line");
    df[line.substr(tab + 1)] = static_cast<std::size_t>(io::parse_int(line.substr(0, tab)));
  }
  index_tokens(v, df);
  v.api_names = read_list(in, "api_names");
  v.call_names = read_list(in, "call_names");
  v.pid_values = read_list(in, "pid_values");
  v.ret_values = read_list(in, "ret_values");
  v.exinfo_values = read_list(in, "exinfo_values");
  return v;
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
  const auto rows = io::parse_csv(io::read_file(path));
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "token" || rows[0][1] != "category")
    throw Error(ErrorCode::MissingField, "category map needs header token,category: " + path.string());
  std::unordered_map<std::string, std::string> map;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) throw Error(ErrorCode::MissingField, "category map row " + std::to_string(r + 1));
    map[rows[r][0]] = rows[r][1];
  }
  return CategoryMap(std::move(map));
}

const std::string& CategoryMap::category_of(const std::string& token) const {
  auto it = map_.find(token);
  return it == map_.end() ? token : it->second;
}

double FeatureVector::get(std::size_t index) const {
  auto it = entries.find(index);
  return it == entries.end() ? 0.0 : it->second;
}

namespace {

constexpr std::string_view kOther = "__other__";

std::vector<std::string> categories_of(const std::vector<std::string>& inventory, const CategoryMap& map) {
  std::set<std::string> cats;
  for (const auto& t : inventory) cats.insert(map.category_of(t));
  return {cats.begin(), cats.end()};
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  auto lower = [](unsigned char c) { return static_cast<char>(std::tolower(c)); };
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) match = lower(haystack[i + k]) == lower(needle[k]);
    if (match) return true;
  }
  return false;
}

}  // namespace

Featurizer::Featurizer(const Vocabulary& vocab, FeaturizeConfig config) : vocab_(&vocab), config_(std::move(config)) {
  if (config_.ngram != vocab.n)
    throw Error(ErrorCode::VocabularyMismatch, "config n-gram order " + std::to_string(config_.ngram) +
                                                   " differs from vocabulary order " + std::to_string(vocab.n));
  auto family = [&](std::string_view prefix, const std::vector<std::string>& items, FeatureGroup g) {
    for (const auto& t : items) add(std::string(prefix) + "=" + t, g);
    add(std::string(prefix) + "=" + std::string(kOther), g);
  };
  const auto& groups = config_.groups;
  if (groups.contains(FeatureGroup::Api)) {
    add("api_count", FeatureGroup::Api);
    family("api_name", vocab.api_names, FeatureGroup::Api);
    family("api_ratio", vocab.api_names, FeatureGroup::Api);
    family("api_category", categories_of(vocab.api_names, config_.api_categories), FeatureGroup::Api);
    for (const auto& t : vocab.tokens) add("bow=" + t, FeatureGroup::Api);
    for (const auto& t : vocab.tokens) add("tfidf=" + t, FeatureGroup::Api);
  }
  if (groups.contains(FeatureGroup::Pid)) {
    add("pid_count", FeatureGroup::Pid);
    family("pid_value", vocab.pid_values, FeatureGroup::Pid);
    for (std::size_t r = 0; r < std::max<std::size_t>(vocab.max_pids, 1); ++r)
      add("pid_ratio[" + std::to_string(r) + "]", FeatureGroup::Pid);
    family("pid_category", categories_of(vocab.pid_values, config_.pid_categories), FeatureGroup::Pid);
  }
  if (groups.contains(FeatureGroup::Ret)) {
    add("ret_count", FeatureGroup::Ret);
    family("ret_value", vocab.ret_values, FeatureGroup::Ret);
    family("ret_category", categories_of(vocab.ret_values, config_.ret_categories), FeatureGroup::Ret);
    add("call_count", FeatureGroup::Ret);
    family("call_name", vocab.call_names, FeatureGroup::Ret);
    family("call_ratio", vocab.call_names, FeatureGroup::Ret);
    family("call_category", categories_of(vocab.call_names, config_.call_categories), FeatureGroup::Ret);
  }
  if (groups.contains(FeatureGroup::ExInfo)) {
    add("exinfo_count", FeatureGroup::ExInfo);
    family("exinfo_name", vocab.exinfo_values, FeatureGroup::ExInfo);
    family("exinfo_category", categories_of(vocab.exinfo_values, config_.exinfo_categories), FeatureGroup::ExInfo);
  }
  if (groups.contains(FeatureGroup::Reboot)) add("has_reboot", FeatureGroup::Reboot);
  if (groups.contains(FeatureGroup::Time)) family("api_time_ratio", vocab.api_names, FeatureGroup::Time);
}

std::size_t Featurizer::add(std::string name, FeatureGroup group) {
  const auto [it, inserted] = index_.emplace(name, columns_.size());
  if (inserted) columns_.push_back({std::move(name), group});
  return it->second;
}

std::size_t Featurizer::column(const std::string& name) const { return index_.at(name); }

void Featurizer::put(FeatureVector& fv, std::size_t index, double value) const {
  if (value == 0.0) return;
  fv.entries[index] += value;
  fv.group_tags[index] = columns_[index].group;
}

void Featurizer::put_family(FeatureVector& fv, std::string_view family, const std::map<std::string, double>& values) const {
  const std::string prefix = std::string(family) + "=";
  const std::string other = prefix + std::string(kOther);
  for (const auto& [token, value] : values) {
    auto it = index_.find(prefix + token);
    put(fv, it == index_.end() ? column(other) : it->second, value);
  }
}

FeatureVector Featurizer::extract(const BehaviorLog& log) const {
  FeatureVector fv;
  fv.sample_id = log.sample_id;
  const auto& groups = config_.groups;
  const auto& acts = log.actions;
  const double total = static_cast<double>(acts.size());
  if (acts.empty()) return fv;

  if (groups.contains(FeatureGroup::Api)) {
    put(fv, column("api_count"), total);
    std::map<std::string, double> counts, cats;
    for (const auto& a : acts) {
      counts[a.api_name] += 1.0;
      cats[config_.api_categories.category_of(a.api_name)] += 1.0;
    }
    put_family(fv, "api_name", counts);
    std::map<std::string, double> ratios;
    for (const auto& [api, c] : counts) ratios[api] = c / total;
    put_family(fv, "api_ratio", ratios);
    put_family(fv, "api_category", cats);

    std::map<std::size_t, double> tf;
    for (const auto& g : ngrams(api_sequence(log), vocab_->n))
      if (const std::size_t* idx = vocab_->find(g)) tf[*idx] += 1.0;
    for (const auto& [idx, count] : tf) {
      put(fv, column("bow=" + vocab_->tokens[idx]), count);
      put(fv, column("tfidf=" + vocab_->tokens[idx]), count * vocab_->idf(idx));
    }
  }

  if (groups.contains(FeatureGroup::Pid)) {
    std::map<std::string, double> values, cats;
    std::map<std::uint64_t, double> per_pid;
    for (const auto& a : acts) {
      const std::string pid = std::to_string(a.call_pid);
      values[pid] += 1.0;
      cats[config_.pid_categories.category_of(pid)] += 1.0;
      per_pid[a.call_pid] += 1.0;
    }
    put(fv, column("pid_count"), static_cast<double>(per_pid.size()));
    put_family(fv, "pid_value", values);
    put_family(fv, "pid_category", cats);
    std::vector<std::pair<double, std::uint64_t>> ranked;
    for (const auto& [pid, c] : per_pid) ranked.emplace_back(c, pid);
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    const std::size_t slots = std::max<std::size_t>(vocab_->max_pids, 1);
    for (std::size_t r = 0; r < ranked.size(); ++r)
      put(fv, column("pid_ratio[" + std::to_string(std::min(r, slots - 1)) + "]"), ranked[r].first / total);
  }

  if (groups.contains(FeatureGroup::Ret)) {
    std::map<std::string, double> rets, ret_cats, callers, caller_cats;
    for (const auto& a : acts) {
      const std::string rv = std::to_string(a.ret_value);
      rets[rv] += 1.0;
      ret_cats[config_.ret_categories.category_of(rv)] += 1.0;
      callers[a.call_name] += 1.0;
      caller_cats[config_.call_categories.category_of(a.call_name)] += 1.0;
    }
    put(fv, column("ret_count"), static_cast<double>(rets.size()));
    put_family(fv, "ret_value", rets);
    put_family(fv, "ret_category", ret_cats);
    put(fv, column("call_count"), static_cast<double>(callers.size()));
    put_family(fv, "call_name", callers);
    std::map<std::string, double> ratios;
    for (const auto& [c, n] : callers) ratios[c] = n / total;
    put_family(fv, "call_ratio", ratios);
    put_family(fv, "call_category", caller_cats);
  }

  if (groups.contains(FeatureGroup::ExInfo)) {
    std::map<std::string, double> values, cats;
    double count = 0.0;
    for (const auto& a : acts) {
      for (const auto& e : a.ex_info) {
        values[e] += 1.0;
        cats[config_.exinfo_categories.category_of(e)] += 1.0;
        count += 1.0;
      }
    }
    put(fv, column("exinfo_count"), count);
    put_family(fv, "exinfo_name", values);
    put_family(fv, "exinfo_category", cats);
  }

  if (groups.contains(FeatureGroup::Reboot)) {
    bool reboot = false;
    for (const auto& a : acts) {
      for (const auto& marker : config_.reboot_markers) {
        if (contains_ci(a.api_name, marker)) reboot = true;
        for (const auto& e : a.ex_info)
          if (contains_ci(e, marker)) reboot = true;
      }
      if (reboot) break;
    }
    put(fv, column("has_reboot"), reboot ? 1.0 : 0.0);
  }

  if (groups.contains(FeatureGroup::Time)) {
    // gap to the next call is charged to the earlier api; the last call gets nothing
    std::map<std::string, double> elapsed;
    double total_time = 0.0;
    for (std::size_t i = 0; i + 1 < acts.size(); ++i) {
      const double gap = std::max<double>(0.0, static_cast<double>(acts[i + 1].call_time - acts[i].call_time));
      elapsed[acts[i].api_name] += gap;
      total_time += gap;
    }
    if (total_time > 0.0) {
      for (auto& [api, t] : elapsed) t /= total_time;
      put_family(fv, "api_time_ratio", elapsed);
    }
  }
  return fv;
}

FeatureVector extract_features(const BehaviorLog& log, const Vocabulary& vocab, const FeaturizeConfig& config) {
  return Featurizer(vocab, config).extract(log);
}

LoadedCorpus load_corpus(const Manifest& manifest, const std::filesystem::path& manifest_path) {
  LoadedCorpus out;
  for (const auto& e : manifest.entries) {
    try {
      BehaviorLog log = load_log(resolve_path(manifest_path, e), e.sample_id);
      log.sample_id = e.sample_id;
      out.logs.push_back(std::move(log));
    } catch (const Error& err) {
      out.failures.push_back({e.sample_id, err.code(), err.what()});
    }
  }
  return out;
}

DenseMatrix FeatureMatrix::to_dense() const {
  DenseMatrix m(rows.size(), columns.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [idx, v] : rows[r].entries) m(r, idx) = v;
  return m;
}

FeatureMatrix featurize_logs(std::span<const BehaviorLog> logs, const Vocabulary& vocab, const FeaturizeConfig& config) {
  const Featurizer f(vocab, config);
  FeatureMatrix out;
  out.columns = f.columns();
  for (const auto& log : logs) {
    if (log.actions.empty()) {
      out.failures.push_back({log.sample_id, ErrorCode::SchemaViolation, "log contains no actions"});
      continue;
    }
    out.rows.push_back(f.extract(log));
  }
  return out;
}

FeatureMatrix featurize_corpus(const Manifest& manifest, const std::filesystem::path& manifest_path,
                               const Vocabulary& vocab, const FeaturizeConfig& config) {
  LoadedCorpus corpus = load_corpus(manifest, manifest_path);
  FeatureMatrix out = featurize_logs(corpus.logs, vocab, config);
  out.failures.insert(out.failures.begin(), corpus.failures.begin(), corpus.failures.end());
  return out;
}

std::string to_triplet_csv(const FeatureMatrix& matrix) {
  std::string out = "sample_id,feature_index,value\n";
  for (const auto& row : matrix.rows)
    for (const auto& [idx, v] : row.entries)
      out += io::csv_cell(row.sample_id) + "," + std::to_string(idx) + "," + io::format_real(v) + "\n";
  return out;
}

std::string to_feature_name_csv(std::span<const FeatureColumn> columns) {
  std::string out = "feature_index,group,name\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    out += std::to_string(i) + "," + std::string(to_string(columns[i].group)) + "," + io::csv_cell(columns[i].name) + "\n";
  return out;
}

FeatureMatrix parse_feature_matrix(std::string_view triplets_csv, std::string_view names_csv) {
  FeatureMatrix m;
  const auto names = io::parse_csv(names_csv);
  if (names.empty() || names[0] != std::vector<std::string>{"feature_index", "group", "name"})
    throw Error(ErrorCode::FormatError, "feature name table needs header feature_index,group,name");
  for (std::size_t r = 1; r < names.size(); ++r) {
    if (names[r].size() != 3) throw Error(ErrorCode::FormatError, "bad feature name row");
    if (static_cast<std::size_t>(io::parse_int(names[r][0])) != m.columns.size())
      throw Error(ErrorCode::FormatError, "feature indices must be dense and ordered");
    m.columns.push_back({names[r][2], parse_feature_group(names[r][1])});
  }
  const auto rows = io::parse_csv(triplets_csv);
  if (rows.empty() || rows[0] != std::vector<std::string>{"sample_id", "feature_index", "value"})
    throw Error(ErrorCode::FormatError, "feature triplets need header sample_id,feature_index,value");
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw Error(ErrorCode::FormatError, "bad triplet row");
    const auto idx = static_cast<std::size_t>(io::parse_int(rows[r][1]));
    if (idx >= m.columns.size()) throw Error(ErrorCode::FormatError, "feature index out of range");
    auto [it, inserted] = row_of.emplace(rows[r][0], m.rows.size());
    if (inserted) m.rows.push_back(FeatureVector{rows[r][0], {}, {}});
    auto& fv = m.rows[it->second];
    fv.entries[idx] = io::parse_real(rows[r][2]);
    fv.group_tags[idx] = m.columns[idx].group;
  }
  return m;
}

}  // namespace maldyn
