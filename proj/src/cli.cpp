#include "maldyn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "maldyn/behavior_log.hpp"
#include "maldyn/cluster.hpp"
#include "maldyn/config.hpp"
#include "maldyn/digest.hpp"
#include "maldyn/error.hpp"
#include "maldyn/featurize.hpp"
#include "maldyn/gbdt.hpp"
#include "maldyn/generate.hpp"
#include "maldyn/io.hpp"
#include "maldyn/parallel.hpp"
#include "maldyn/predict.hpp"
#include "maldyn/reduce.hpp"
#include "maldyn/rng.hpp"
#include "maldyn/similarity.hpp"
#include "maldyn/synth.hpp"
#include "maldyn/transform.hpp"

namespace maldyn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Context {
  PipelineConfig config;
  std::uint64_t seed = 42;
  unsigned jobs = 0;
  fs::path out_dir;
  std::ostream* out = nullptr;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(config.data_dir) / path;
  }

  std::string read(const fs::path& path) {
    std::string bytes = io::read_file(path);
    inputs[path.string()] = sha256_hex(bytes);
    return bytes;
  }

  void note_input(const fs::path& path) { inputs[path.string()] = sha256_file(path); }

  void write(const fs::path& rel, const std::string& bytes) {
    const fs::path path = out_dir / rel;
    io::write_file(path, bytes);
    outputs[path.string()] = sha256_hex(bytes);
  }
};

// Inputs that are directories of files are summarized by one digest over
// (name, digest) pairs so the run log stays compact.
std::string digest_many(const std::map<std::string, std::string>& files) {
  std::string acc;
  for (const auto& [name, d] : files) acc += name + "\t" + d + "\n";
  return sha256_hex(acc);
}

Manifest read_manifest(Context& ctx, const fs::path& path) { return parse_manifest(ctx.read(path)); }

LoadedCorpus read_corpus(Context& ctx, const Manifest& manifest, const fs::path& manifest_path) {
  LoadedCorpus corpus = load_corpus(manifest, manifest_path);
  std::map<std::string, std::string> files;
  for (const auto& e : manifest.entries) {
    const fs::path p = resolve_path(manifest_path, e);
    if (fs::exists(p)) files[p.string()] = sha256_file(p);
  }
  ctx.inputs[(manifest_path.parent_path() / "<logs>").string()] = digest_many(files);
  return corpus;
}

std::vector<TokenText> token_texts(std::span<const BehaviorLog> logs) {
  std::vector<TokenText> out;
  for (const auto& log : logs) {
    TokenText t = to_token_text(log);
    t.sample_id = log.sample_id;
    out.push_back(std::move(t));
  }
  return out;
}

std::string failures_csv(std::span<const SampleFailure> failures) {
  std::string out = "sample_id,code,message\n";
  for (const auto& f : failures)
    out += io::csv_cell(f.sample_id) + "," + std::string(to_string(f.code)) + "," + io::csv_cell(f.message) + "\n";
  return out;
}

// ------------------------------------------------------------------ stages

int cmd_synth(Context& ctx, const SynthConfig& sc) {
  const SynthCorpus corpus = make_synthetic_corpus(sc);
  for (std::size_t i = 0; i < corpus.logs.size(); ++i) ctx.write(corpus.manifest.entries[i].path, to_xml(corpus.logs[i]));
  ctx.write("manifest.csv", to_csv(corpus.manifest));
  *ctx.out << "wrote " << corpus.logs.size() << " samples to " << ctx.out_dir.string() << "\n";
  return kOk;
}

int cmd_parse(Context& ctx, const fs::path& manifest_path) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const LoadedCorpus corpus = read_corpus(ctx, manifest, manifest_path);
  std::string report = "sample_id,status,actions,error\n";
  std::map<std::string, const BehaviorLog*> by_id;
  for (const auto& log : corpus.logs) by_id[log.sample_id] = &log;
  std::map<std::string, const SampleFailure*> failed;
  for (const auto& f : corpus.failures) failed[f.sample_id] = &f;
  for (const auto& e : manifest.entries) {
    if (auto it = by_id.find(e.sample_id); it != by_id.end()) {
      report += io::csv_cell(e.sample_id) + ",ok," + std::to_string(it->second->actions.size()) + ",\n";
      ctx.write(fs::path("parsed") / (e.sample_id + ".xml"), to_xml(*it->second));
    } else if (auto f = failed.find(e.sample_id); f != failed.end()) {
      report += io::csv_cell(e.sample_id) + ",error,0," + io::csv_cell(f->second->message) + "\n";
    }
  }
  ctx.write("parse_report.csv", report);
  *ctx.out << "parsed " << corpus.logs.size() << " of " << manifest.entries.size() << " logs\n";
  for (const auto& f : corpus.failures) *ctx.out << "  " << f.sample_id << ": " << f.message << "\n";
  return corpus.logs.empty() ? kDataError : kOk;
}

int cmd_featurize(Context& ctx, const fs::path& manifest_path) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const LoadedCorpus corpus = read_corpus(ctx, manifest, manifest_path);
  if (corpus.logs.empty()) throw Error(ErrorCode::EmptyCorpus, "no log could be parsed");
  const Vocabulary vocab = build_vocabulary(corpus.logs, ctx.config.ngram);
  FeatureMatrix m = featurize_logs(corpus.logs, vocab, ctx.config.featurize_config());
  m.failures.insert(m.failures.begin(), corpus.failures.begin(), corpus.failures.end());
  ctx.write("vocab.txt", serialize(vocab));
  ctx.write("features.csv", to_triplet_csv(m));
  ctx.write("feature_names.csv", to_feature_name_csv(m.columns));
  ctx.write("feature_failures.csv", failures_csv(m.failures));
  *ctx.out << "featurized " << m.rows.size() << " samples into " << m.columns.size() << " columns\n";
  return kOk;
}

struct LabeledData {
  std::vector<std::string> ids;
  DenseMatrix rows;
  std::vector<int> labels;
  std::vector<std::string> names;
};

FeatureMatrix read_features(Context& ctx, const fs::path& dir) {
  return parse_feature_matrix(ctx.read(dir / "features.csv"), ctx.read(dir / "feature_names.csv"));
}

// Rows of `m` whose manifest label is benign or malware, optionally restricted to `keep`.
LabeledData labeled_rows(const FeatureMatrix& m, const Manifest& manifest, const std::set<std::string>* keep) {
  LabeledData d;
  for (const auto& c : m.columns) d.names.push_back(c.name);
  std::vector<const FeatureVector*> picked;
  for (const auto& row : m.rows) {
    const ManifestEntry* e = manifest.find(row.sample_id);
    if (!e || e->label == Label::Unknown || e->generated) continue;
    if (keep && !keep->count(row.sample_id)) continue;
    picked.push_back(&row);
    d.ids.push_back(row.sample_id);
    d.labels.push_back(e->label == Label::Malware ? 1 : 0);
  }
  d.rows = DenseMatrix(picked.size(), m.columns.size());
  for (std::size_t r = 0; r < picked.size(); ++r)
    for (const auto& [idx, v] : picked[r]->entries) d.rows(r, idx) = v;
  return d;
}

std::map<std::string, std::string> read_split(Context& ctx, const fs::path& path) {
  std::map<std::string, std::string> split;
  const auto rows = io::parse_csv(ctx.read(path));
  if (rows.empty() || rows[0] != std::vector<std::string>{"sample_id", "set"})
    throw Error(ErrorCode::FormatError, "split file needs header sample_id,set");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw Error(ErrorCode::FormatError, "split row " + std::to_string(i) + " needs 2 cells");
    split[rows[i][0]] = rows[i][1];
  }
  return split;
}

int cmd_train(Context& ctx, const fs::path& manifest_path, const fs::path& features_dir) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const FeatureMatrix m = read_features(ctx, features_dir);
  const LabeledData all = labeled_rows(m, manifest, nullptr);

  // stratified holdout: each class shuffled on its own, ceil(holdout * n_c) held out
  std::set<std::string> test;
  Rng rng(ctx.seed);
  for (int cls : {0, 1}) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < all.ids.size(); ++i)
      if (all.labels[i] == cls) ids.push_back(all.ids[i]);
    rng.shuffle(ids.begin(), ids.end());
    const auto n_test = static_cast<std::size_t>(std::ceil(ctx.config.holdout * static_cast<double>(ids.size())));
    for (std::size_t i = 0; i < n_test && i + 1 < ids.size(); ++i) test.insert(ids[i]);
  }
  std::string split = "sample_id,set\n";
  std::set<std::string> train_ids;
  for (const auto& id : all.ids) {
    const bool is_test = test.count(id) > 0;
    split += io::csv_cell(id) + (is_test ? ",test\n" : ",train\n");
    if (!is_test) train_ids.insert(id);
  }
  const LabeledData train = labeled_rows(m, manifest, &train_ids);
  gbdt::Params a = ctx.config.gbdt_a, b = ctx.config.gbdt_b;
  a.seed = ctx.seed;
  b.seed = ctx.seed + 1;
  const gbdt::DualModel model = gbdt::train_dual(train.rows, train.labels, a, b, ctx.config.blend, train.names);
  ctx.write("split.csv", split);
  ctx.write("model.txt", gbdt::serialize(model));
  const gbdt::Metrics fit = gbdt::evaluate(model, train.rows, train.labels);
  *ctx.out << "trained on " << train.ids.size() << " samples (" << test.size() << " held out), train accuracy "
           << fit.accuracy << "\n";
  return kOk;
}

json metrics_json(const gbdt::Metrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision_undefined ? json(nullptr) : json(m.precision);
  j["recall"] = m.recall_undefined ? json(nullptr) : json(m.recall);
  j["f1"] = m.f1_undefined ? json(nullptr) : json(m.f1);
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  return j;
}

int cmd_eval(Context& ctx, const fs::path& manifest_path, const fs::path& features_dir, const fs::path& model_path,
             const std::string& split_path, const std::string& subset) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const FeatureMatrix m = read_features(ctx, features_dir);
  const gbdt::DualModel model = gbdt::parse_dual_model(ctx.read(model_path));
  std::set<std::string> keep;
  const bool restrict = !split_path.empty() && subset != "all";
  if (restrict) {
    for (const auto& [id, set] : read_split(ctx, ctx.resolve(split_path)))
      if (set == subset) keep.insert(id);
  }
  const LabeledData d = labeled_rows(m, manifest, restrict ? &keep : nullptr);
  if (d.ids.empty()) throw Error(ErrorCode::EmptyData, "no labeled samples to evaluate");
  if (d.rows.cols() != model.model_a.n_features)
    throw Error(ErrorCode::DimensionMismatch, "feature width differs from the model");
  json j;
  j["subset"] = restrict ? subset : "all";
  j["samples"] = d.ids.size();
  j["dual"] = metrics_json(gbdt::evaluate(model, d.rows, d.labels));
  j["model_a"] = metrics_json(gbdt::evaluate(model.model_a, d.rows, d.labels));
  j["model_b"] = metrics_json(gbdt::evaluate(model.model_b, d.rows, d.labels));
  std::string predictions = "sample_id,label,probability\n";
  for (std::size_t r = 0; r < d.ids.size(); ++r)
    predictions += io::csv_cell(d.ids[r]) + "," + std::to_string(d.labels[r]) + "," +
                   io::format_real(model.predict_proba(d.rows.row(r))) + "\n";
  ctx.write("metrics.json", j.dump(2) + "\n");
  ctx.write("predictions.csv", predictions);
  *ctx.out << "accuracy " << j["dual"]["accuracy"].get<double>() << " on " << d.ids.size() << " samples\n";
  return kOk;
}

int cmd_explain(Context& ctx, const fs::path& features_dir, const fs::path& model_path, const std::string& sample_id,
                std::size_t top) {
  const FeatureMatrix m = read_features(ctx, features_dir);
  const gbdt::DualModel model = gbdt::parse_dual_model(ctx.read(model_path));
  const auto it = std::find_if(m.rows.begin(), m.rows.end(), [&](const auto& r) { return r.sample_id == sample_id; });
  if (it == m.rows.end()) throw Error(ErrorCode::MissingField, "sample '" + sample_id + "' has no feature row");
  std::vector<double> row(m.columns.size(), 0.0);
  for (const auto& [idx, v] : it->entries) row[idx] = v;
  const gbdt::Explanation ea = gbdt::explain(model.model_a, row);
  const gbdt::Explanation eb = gbdt::explain(model.model_b, row);
  std::map<std::size_t, std::pair<double, double>> merged;
  for (const auto& [f, c] : ea.contributions) merged[f].first = c;
  for (const auto& [f, c] : eb.contributions) merged[f].second = c;
  std::vector<std::pair<std::size_t, std::pair<double, double>>> ordered(merged.begin(), merged.end());
  const double blend = model.blend;
  auto weight = [&](const auto& e) { return std::abs(blend * e.second.first + (1 - blend) * e.second.second); };
  std::stable_sort(ordered.begin(), ordered.end(), [&](const auto& x, const auto& y) { return weight(x) > weight(y); });
  std::string csv = "feature_index,name,value,contribution_a,contribution_b\n";
  csv += "-1,__bias__,," + io::format_real(ea.bias) + "," + io::format_real(eb.bias) + "\n";
  for (const auto& [f, c] : ordered)
    csv += std::to_string(f) + "," + io::csv_cell(m.columns[f].name) + "," + io::format_real(row[f]) + "," +
           io::format_real(c.first) + "," + io::format_real(c.second) + "\n";
  ctx.write("explain_" + sample_id + ".csv", csv);
  *ctx.out << sample_id << ": p(malware)=" << model.predict_proba(row) << "\n";
  for (std::size_t i = 0; i < ordered.size() && i < top; ++i)
    *ctx.out << "  " << m.columns[ordered[i].first].name << "  a=" << ordered[i].second.first
             << " b=" << ordered[i].second.second << "\n";
  return kOk;
}

int cmd_transform(Context& ctx, const fs::path& manifest_path) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const LoadedCorpus corpus = read_corpus(ctx, manifest, manifest_path);
  const ImageConfig& image = ctx.config.similarity.image;
  for (const auto& log : corpus.logs) {
    const TokenText text = to_token_text(log);
    const std::string bytes = serialize_tokens(text);
    ctx.write(fs::path("texts") / (log.sample_id + ".txt"), bytes);
    ctx.write(fs::path("images") / (log.sample_id + ".pgm"), to_pgm(text_to_image(text, image)));
    ctx.write(fs::path("raw") / (log.sample_id + ".bin"), bytes);
  }
  *ctx.out << "transformed " << corpus.logs.size() << " samples\n";
  return corpus.logs.empty() ? kDataError : kOk;
}

struct Embedding {
  std::vector<std::string> ids;
  std::vector<std::optional<std::string>> families;
  DenseMatrix points;
};

// Malware token texts -> TF-IDF -> truncated SVD [-> standardize -> autoencoder bottleneck].
Embedding embed_malware(Context& ctx, const fs::path& manifest_path) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  Manifest malware;
  for (const auto& e : manifest.entries)
    if (e.label == Label::Malware && !e.generated) malware.entries.push_back(e);
  const LoadedCorpus corpus = read_corpus(ctx, malware, manifest_path);
  if (corpus.logs.size() < 2) throw Error(ErrorCode::EmptyCorpus, "clustering needs at least two malware logs");
  const auto texts = token_texts(corpus.logs);
  std::vector<std::vector<std::string>> docs;
  for (const auto& t : texts) docs.push_back(t.tokens);
  const Vocabulary vocab = build_vocabulary(docs, ctx.config.ngram);
  const DenseMatrix tfidf = reduce::tfidf_matrix(texts, vocab);
  const std::size_t k = std::min({ctx.config.svd_k, tfidf.rows(), tfidf.cols()});
  reduce::SvdOptions opts;
  opts.seed = ctx.seed;
  const reduce::SvdReducer svd = reduce::fit_svd(tfidf, k, opts);
  ctx.write("svd.txt", reduce::serialize(svd));
  Embedding e;
  e.points = reduce::transform(svd, tfidf);
  if (ctx.config.reduce_method == "autoencoder") {
    const DenseMatrix z = reduce::normalize(e.points);
    const std::size_t d = z.cols();
    const std::size_t bottleneck = std::min(ctx.config.ae_bottleneck, d);
    const reduce::Autoencoder ae =
        reduce::train_autoencoder(z, {d, ctx.config.ae_hidden, bottleneck, ctx.config.ae_hidden, d},
                                  ctx.config.ae_epochs, ctx.config.ae_learning_rate, ctx.seed, ctx.config.ae_batch);
    ctx.write("autoencoder.txt", reduce::serialize(ae));
    e.points = reduce::encode(ae, z);
  }
  for (const auto& log : corpus.logs) {
    e.ids.push_back(log.sample_id);
    e.families.push_back(malware.find(log.sample_id)->family);
  }
  ctx.write("embedding.csv", reduce::embedding_csv(e.ids, e.points));
  return e;
}

int cmd_cluster(Context& ctx, const fs::path& manifest_path) {
  const Embedding e = embed_malware(ctx, manifest_path);
  cluster::ClusterModel model;
  double parameter;
  if (ctx.config.cluster_algorithm == "dbscan") {
    model = cluster::dbscan(e.points, ctx.config.dbscan_eps, ctx.config.dbscan_min_pts);
    parameter = ctx.config.dbscan_eps;
  } else {
    model = cluster::kmeans(e.points, std::min(ctx.config.cluster_k, e.points.rows()), ctx.seed,
                            ctx.config.kmeans_max_iter);
    parameter = static_cast<double>(model.k);
  }
  const auto metrics = cluster::cluster_metrics(model, e.points);
  const cluster::ClusterReport report{parameter, cluster::score_clusters(model.assignments, e.families),
                                      metrics.adjusted_cosine, metrics.mahalanobis};
  ctx.write("assignments.csv", cluster::assignments_csv(e.ids, model.assignments));
  std::string csv = cluster::reports_csv(std::span(&report, 1));
  if (ctx.config.cluster_algorithm == "dbscan") csv.replace(0, 1, "eps");
  ctx.write("cluster_report.csv", csv);
  *ctx.out << ctx.config.cluster_algorithm << ": " << model.k << " clusters, score " << report.score << "\n";
  return kOk;
}

int cmd_kscan(Context& ctx, const fs::path& manifest_path) {
  const Embedding e = embed_malware(ctx, manifest_path);
  std::vector<std::size_t> ks;
  for (std::size_t k : ctx.config.k_list)
    if (k >= 1 && k <= e.points.rows()) ks.push_back(k);
  const auto reports = cluster::k_scan(e.points, ks, e.families, ctx.seed, ctx.config.kmeans_max_iter);
  ctx.write("kscan.csv", cluster::reports_csv(reports));
  *ctx.out << "best k " << cluster::best_k(reports) << "\n";
  return kOk;
}

std::vector<TokenText> partition_texts(Context& ctx, const Manifest& manifest, const fs::path& manifest_path,
                                       const std::vector<std::string>& ids) {
  Manifest subset;
  for (const auto& id : ids) subset.entries.push_back(*manifest.find(id));
  const LoadedCorpus corpus = read_corpus(ctx, subset, manifest_path);
  for (const auto& f : corpus.failures) *ctx.out << "  skipped " << f.sample_id << ": " << f.message << "\n";
  return token_texts(corpus.logs);
}

int cmd_gen_fit(Context& ctx, const fs::path& manifest_path) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const TimePartition partition = partition_by_year(manifest, ctx.config.scheme);
  const auto texts = partition_texts(ctx, manifest, manifest_path, partition.t(0));
  const MarkovGenerator g = fit_generator(texts, ctx.config.generator_order, ctx.config.mutation_rate, ctx.seed);
  ctx.write("generator.txt", g.serialize());
  *ctx.out << "fitted order-" << g.order << " generator on " << texts.size() << " T0 samples, "
           << g.transitions.size() << " contexts\n";
  return kOk;
}

int cmd_gen_sample(Context& ctx, const fs::path& generator_path, std::size_t n) {
  const MarkovGenerator g = parse_generator(ctx.read(generator_path));
  const auto range = ctx.config.min_length ? std::pair{ctx.config.min_length, ctx.config.max_length}
                                           : g.default_length_range();
  std::vector<TokenText> samples(n);
  parallel_for(n, ctx.jobs, [&](std::size_t i) { samples[i] = g.sample(i, range); });
  Manifest out;
  for (const auto& s : samples) {
    const std::string rel = "generated/" + s.sample_id + ".txt";
    ctx.write(rel, serialize_tokens(s));
    out.entries.push_back({s.sample_id, s.sample_id + ".txt", Label::Malware, std::nullopt, std::nullopt, true});
  }
  ctx.write("generated/manifest.csv", to_csv(out));
  *ctx.out << "generated " << n << " samples, lengths in [" << range.first << ", " << range.second << "]\n";
  return kOk;
}

std::vector<TokenText> read_generated(Context& ctx, const fs::path& manifest_path) {
  const Manifest m = read_manifest(ctx, manifest_path);
  std::vector<TokenText> out;
  std::map<std::string, std::string> files;
  for (const auto& e : m.entries) {
    const fs::path p = resolve_path(manifest_path, e);
    const std::string bytes = io::read_file(p);
    files[p.string()] = sha256_hex(bytes);
    out.push_back(parse_tokens(bytes, e.sample_id));
  }
  ctx.inputs[(manifest_path.parent_path() / "<generated>").string()] = digest_many(files);
  if (out.empty()) throw Error(ErrorCode::EmptyGeneratedSet, "generated manifest lists no samples");
  return out;
}

std::vector<SampleProfile> profiles_of(const std::vector<TokenText>& texts, const SimilarityConfig& cfg, unsigned jobs) {
  std::vector<SampleProfile> out(texts.size());
  parallel_for(texts.size(), jobs, [&](std::size_t i) { out[i] = make_profile(texts[i], cfg); });
  return out;
}

int cmd_coverage(Context& ctx, const fs::path& manifest_path, const fs::path& generated_path,
                 const std::vector<std::string>& modes) {
  const Manifest manifest = read_manifest(ctx, manifest_path);
  const TimePartition partition = partition_by_year(manifest, ctx.config.scheme);
  const SimilarityConfig& cfg = ctx.config.similarity;
  std::vector<std::pair<std::string, std::vector<SampleProfile>>> parts;
  for (std::size_t i = 1; i < 4; ++i)
    parts.emplace_back("T" + std::to_string(i),
                       profiles_of(partition_texts(ctx, manifest, manifest_path, partition.t(i)), cfg, ctx.jobs));
  const auto g = profiles_of(read_generated(ctx, generated_path), cfg, ctx.jobs);
  std::vector<CoverageReport> reports;
  for (const auto& mode : modes)
    reports.push_back(coverage(parts, g, ctx.config.thresholds, parse_similarity_mode(mode), cfg, ctx.jobs));
  std::string matches = "mode,partition,sample_id,best_generated,similarity\n";
  for (const auto& rep : reports)
    for (const auto& m : rep.matches)
      matches += std::string(to_string(rep.mode)) + "," + m.partition + "," + io::csv_cell(m.sample_id) + "," +
                 io::csv_cell(g[m.best.index].sample_id) + "," + io::format_real(m.best.value) + "\n";
  ctx.write("coverage_matches.csv", matches);
  ctx.write("coverage.csv", coverage_long_csv(reports));
  for (const auto& rep : reports) {
    const std::string mode(to_string(rep.mode));
    ctx.write("coverage_" + mode + ".csv", coverage_wide_csv(rep));
    ctx.write("coverage_" + mode + ".svg", coverage_svg(rep));
    *ctx.out << mode << ":\n" << coverage_wide_csv(rep);
  }
  return kOk;
}

int cmd_report(Context& ctx) {
  std::string md = "# maldyn run report\n\n";
  const fs::path dir = ctx.out_dir;
  if (fs::exists(dir / "metrics.json")) {
    const json j = json::parse(ctx.read(dir / "metrics.json"));
    md += "## Classification (" + j["subset"].get<std::string>() + ", " + std::to_string(j["samples"].get<int>()) +
          " samples)\n\n| model | accuracy | precision | recall | f1 |\n|---|---|---|---|---|\n";
    for (const char* name : {"dual", "model_a", "model_b"}) {
      const auto& m = j[name];
      auto cell = [](const json& v) { return v.is_null() ? std::string("n/a") : io::format_real(v.get<double>()); };
      md += std::string("| ") + name + " | " + cell(m["accuracy"]) + " | " + cell(m["precision"]) + " | " +
            cell(m["recall"]) + " | " + cell(m["f1"]) + " |\n";
    }
    md += "\n";
  }
  auto table = [&](const fs::path& file, const std::string& title) {
    if (!fs::exists(dir / file)) return;
    const auto rows = io::parse_csv(ctx.read(dir / file));
    if (rows.empty()) return;
    md += "## " + title + "\n\n|";
    for (const auto& h : rows[0]) md += " " + h + " |";
    md += "\n|";
    for (std::size_t i = 0; i < rows[0].size(); ++i) md += "---|";
    md += "\n";
    for (std::size_t r = 1; r < rows.size(); ++r) {
      md += "|";
      for (const auto& c : rows[r]) md += " " + c + " |";
      md += "\n";
    }
    md += "\n";
  };
  table("cluster_report.csv", "Clustering");
  table("kscan.csv", "K scan");
  for (const char* mode : {"text", "image", "hybrid"})
    table(std::string("coverage_") + mode + ".csv", std::string("Coverage (") + mode + ")");
  ctx.write("report.md", md);
  *ctx.out << md;
  return kOk;
}

void append_run_log(const Context& ctx, const std::string& stage, double seconds, int status) {
  json entry;
  entry["stage"] = stage;
  entry["seed"] = ctx.seed;
  entry["duration_s"] = seconds;
  entry["status"] = status;
  entry["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  entry["inputs"] = ctx.inputs;
  entry["outputs"] = ctx.outputs;
  fs::create_directories(ctx.out_dir);
  std::ofstream log(ctx.out_dir / "runlog.jsonl", std::ios::app);
  log << entry.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"malware behavior-log analytics pipeline", "maldyn"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  app.add_option("--config", config_path, "key=value pipeline config file");
  app.add_option("--set", overrides, "override one config key (key=value), repeatable");
  app.add_option("--seed", seed, "global seed (fallback: MALDYN_SEED, then config)");
  app.add_option("--jobs", jobs, "worker threads, 0 = all cores");
  app.add_option("--out", out_dir, "output directory (default: config paths.out_dir)");

  std::string manifest = "manifest.csv", features = "", model = "model.txt", split, subset = "test", sample;
  std::string generator = "generator.txt", generated = "generated/manifest.csv";
  std::vector<std::string> modes;
  std::size_t n_samples = 0, top = 10;
  SynthConfig synth;

  auto* c_parse = app.add_subcommand("parse", "parse sandbox logs and report per-sample status");
  auto* c_feat = app.add_subcommand("featurize", "build the vocabulary and the sparse feature matrix");
  auto* c_train = app.add_subcommand("train", "train the dual boosted-tree classifier on a seeded split");
  auto* c_eval = app.add_subcommand("eval", "evaluate a trained model");
  auto* c_explain = app.add_subcommand("explain", "per-feature contributions for one sample");
  auto* c_transform = app.add_subcommand("transform", "write token texts and grayscale images");
  auto* c_cluster = app.add_subcommand("cluster", "cluster malware samples into families");
  auto* c_kscan = app.add_subcommand("kscan", "score k-means over a list of k values");
  auto* c_genfit = app.add_subcommand("gen-fit", "fit the sequence generator on the T0 partition");
  auto* c_gensample = app.add_subcommand("gen-sample", "draw generated samples");
  auto* c_cov = app.add_subcommand("coverage", "coverage of T1..T3 by the generated set");
  app.add_subcommand("report", "summarize the artifacts of an output directory");
  auto* c_synth = app.add_subcommand("synth", "write the bundled synthetic corpus");

  for (auto* c : {c_parse, c_feat, c_train, c_eval, c_transform, c_cluster, c_kscan, c_genfit, c_cov})
    c->add_option("--manifest", manifest, "dataset manifest CSV")->capture_default_str();
  for (auto* c : {c_train, c_eval, c_explain}) c->add_option("--features", features, "directory holding features.csv");
  for (auto* c : {c_eval, c_explain}) c->add_option("--model", model, "dual model file")->capture_default_str();
  c_eval->add_option("--split", split, "split.csv from train");
  c_eval->add_option("--subset", subset, "train, test or all")->capture_default_str();
  c_explain->add_option("--sample", sample, "sample id")->required();
  c_explain->add_option("--top", top, "contributions to print")->capture_default_str();
  c_gensample->add_option("--generator", generator, "generator model file")->capture_default_str();
  c_gensample->add_option("-n,--n-samples", n_samples, "samples to draw (default: config)");
  c_cov->add_option("--generated", generated, "generated-set manifest")->capture_default_str();
  c_cov->add_option("--mode", modes, "text, image, hybrid or all (repeatable)");
  std::string scheme;
  for (auto* c : {c_genfit, c_cov}) c->add_option("--scheme", scheme, "7:1:1:1 or 4:2:2:2");
  c_synth->add_option("--benign", synth.n_benign)->capture_default_str();
  c_synth->add_option("--malware", synth.n_malware)->capture_default_str();
  c_synth->add_option("--families", synth.families)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.get_subcommand_no_throw(args[0]))
      err << "unknown subcommand '" << args[0] << "'\n";
    err << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  const auto started = std::chrono::steady_clock::now();
  Context ctx;
  ctx.out = &out;
  int status = kOk;
  try {
    ctx.config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (!scheme.empty()) overrides.push_back("coverage.scheme=" + scheme);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::UsageError, "--set expects key=value, got '" + o + "'");
      try {
        set_config_value(ctx.config, o.substr(0, eq), o.substr(eq + 1));
      } catch (const Error& e) {
        throw Error(ErrorCode::UsageError, e.what());
      }
    }
    try {
      ctx.config.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::UsageError, e.what());
    }
    if (seed) {
      ctx.seed = *seed;
    } else if (const char* env = std::getenv("MALDYN_SEED"); env && *env) {
      try {
        ctx.seed = static_cast<std::uint64_t>(io::parse_int(env));
      } catch (const Error&) {
        throw Error(ErrorCode::UsageError, "MALDYN_SEED is not an integer");
      }
    } else {
      ctx.seed = ctx.config.seed;
    }
    ctx.config.seed = ctx.seed;
    ctx.jobs = jobs;
    ctx.out_dir = out_dir.empty() ? fs::path(ctx.config.out_dir) : fs::path(out_dir);
    if (!config_path.empty()) ctx.note_input(config_path);
    if (modes.empty() || std::find(modes.begin(), modes.end(), "all") != modes.end())
      modes = modes.empty() ? ctx.config.modes : std::vector<std::string>{"text", "image", "hybrid"};
    for (const auto& m : modes) {
      try {
        parse_similarity_mode(m);
      } catch (const Error& e) {
        throw Error(ErrorCode::UsageError, e.what());
      }
    }
    const fs::path manifest_path = ctx.resolve(manifest);
    const fs::path features_dir = features.empty() ? ctx.out_dir : ctx.resolve(features);
    auto in_out = [&](const std::string& p) {
      const fs::path path(p);
      return path.is_absolute() || fs::exists(path) ? path : ctx.out_dir / path;
    };

    if (stage == "synth") {
      synth.seed = ctx.seed;
      status = cmd_synth(ctx, synth);
    } else if (stage == "parse") {
      status = cmd_parse(ctx, manifest_path);
    } else if (stage == "featurize") {
      status = cmd_featurize(ctx, manifest_path);
    } else if (stage == "train") {
      status = cmd_train(ctx, manifest_path, features_dir);
    } else if (stage == "eval") {
      if (split.empty() && fs::exists(ctx.out_dir / "split.csv")) split = (ctx.out_dir / "split.csv").string();
      status = cmd_eval(ctx, manifest_path, features_dir, in_out(model), split, subset);
    } else if (stage == "explain") {
      status = cmd_explain(ctx, features_dir, in_out(model), sample, top);
    } else if (stage == "transform") {
      status = cmd_transform(ctx, manifest_path);
    } else if (stage == "cluster") {
      status = cmd_cluster(ctx, manifest_path);
    } else if (stage == "kscan") {
      status = cmd_kscan(ctx, manifest_path);
    } else if (stage == "gen-fit") {
      status = cmd_gen_fit(ctx, manifest_path);
    } else if (stage == "gen-sample") {
      status = cmd_gen_sample(ctx, in_out(generator), n_samples ? n_samples : ctx.config.generator_samples);
    } else if (stage == "coverage") {
      status = cmd_coverage(ctx, manifest_path, in_out(generated), modes);
    } else if (stage == "report") {
      status = cmd_report(ctx);
    }
  } catch (const Error& e) {
    err << "maldyn " << stage << ": " << e.what() << "\n";
    if (e.code() == ErrorCode::UsageError) {
      err << sub->help();
      return kUsage;
    }
    status = kDataError;
  } catch (const std::exception& e) {
    err << "maldyn " << stage << ": " << e.what() << "\n";
    status = kDataError;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!ctx.out_dir.empty()) {
    try {
      append_run_log(ctx, stage, seconds, status);
    } catch (const std::exception& e) {
      err << "maldyn: could not append run log: " << e.what() << "\n";
    }
  }
  return status;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace maldyn::cli
