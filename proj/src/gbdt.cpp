#include "maldyn/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/rng.hpp"

namespace maldyn::gbdt {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

constexpr double kMinHessian = 1e-16;
constexpr double kMinGain = 1e-12;

}  // namespace

void Params::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "gbdt params: " + what); };
  if (n_trees < 0) bad("n_trees must be >= 0");
  if (max_depth < 0) bad("max_depth must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
  if (min_leaf < 1) bad("min_leaf must be >= 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) bad("subsample must be in (0, 1]");
  if (!(colsample > 0.0 && colsample <= 1.0)) bad("colsample must be in (0, 1]");
  if (!(lambda >= 0.0)) bad("lambda must be >= 0");
}

Params Params::profile_a() { return Params{}; }

Params Params::profile_b() {
  Params p;
  p.max_depth = 4;
  p.learning_rate = 0.2;
  p.min_leaf = 2;
  p.subsample = 0.8;
  p.colsample = 0.8;
  p.seed = 1;
  return p;
}

int Tree::leaf_for(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes[i].feature);
    const double x = f < row.size() ? row[f] : 0.0;
    i = x < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return i;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double Model::raw_score(std::span<const double> row) const {
  double s = base_score;
  for (const auto& t : trees) s += t.predict(row);
  return s;
}

double Model::predict_proba(std::span<const double> row) const { return sigmoid(raw_score(row)); }

double Model::predict_proba(const FeatureVector& row) const {
  std::vector<double> dense(n_features, 0.0);
  for (const auto& [idx, v] : row.entries)
    if (idx < n_features) dense[idx] = v;
  return predict_proba(dense);
}

namespace {

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Per-node scan state while walking one presorted feature column.
struct ScanState {
  double gl = 0.0, hl = 0.0;
  std::size_t nl = 0;
  double last_value = 0.0;
  bool seen = false;
};

double node_weight(double g, double h, double lambda) { return -g / (h + lambda); }

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

class TreeBuilder {
 public:
  TreeBuilder(const DenseMatrix& x, const std::vector<std::vector<std::uint32_t>>& sorted, const Params& params)
      : x_(x), sorted_(sorted), params_(params) {}

  Tree build(std::span<const double> grad, std::span<const double> hess, std::span<const std::uint8_t> in_sample,
             std::span<const int> features) {
    const std::size_t n = x_.rows();
    Tree tree;
    std::vector<int> node_of(n, -1);
    NodeStats root;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      node_of[i] = 0;
      root.g += grad[i];
      root.h += hess[i];
      ++root.count;
    }
    tree.nodes.push_back(make_node(root));
    std::vector<NodeStats> stats = {root};
    std::vector<int> frontier = {0};

    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      // frontier node id -> slot
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot[frontier[s]] = static_cast<int>(s);
      std::vector<SplitCandidate> best(frontier.size());

      for (int f : features) {
        std::vector<ScanState> scan(frontier.size());
        for (std::uint32_t i : sorted_[f]) {
          const int node = node_of[i];
          if (node < 0 || slot[node] < 0) continue;
          const auto s = static_cast<std::size_t>(slot[node]);
          ScanState& st = scan[s];
          const double v = x_(i, f);
          if (st.seen && v > st.last_value) consider(best[s], stats[frontier[s]], st, f, v);
          st.gl += grad[i];
          st.hl += hess[i];
          ++st.nl;
          st.last_value = v;
          st.seen = true;
        }
      }

      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const SplitCandidate& c = best[s];
        if (c.feature < 0) continue;
        const int id = frontier[s];
        const int left = static_cast<int>(tree.nodes.size());
        const int right = left + 1;
        tree.nodes[id].feature = c.feature;
        tree.nodes[id].threshold = c.threshold;
        tree.nodes[id].gain = c.gain;
        tree.nodes[id].left = left;
        tree.nodes[id].right = right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        next.push_back(left);
        next.push_back(right);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        const int node = node_of[i];
        if (node < 0 || tree.nodes[node].is_leaf()) continue;
        const TreeNode& p = tree.nodes[node];
        const int child = x_(i, p.feature) < p.threshold ? p.left : p.right;
        node_of[i] = child;
        stats[child].g += grad[i];
        stats[child].h += hess[i];
        ++stats[child].count;
      }
      for (int id : next) tree.nodes[id] = make_node(stats[id]);
      frontier = std::move(next);
    }
    return tree;
  }

 private:
  TreeNode make_node(const NodeStats& s) const {
    TreeNode node;
    node.value = params_.learning_rate * node_weight(s.g, s.h, params_.lambda);
    node.cover = s.h;
    return node;
  }

  void consider(SplitCandidate& best, const NodeStats& parent, const ScanState& st, int feature, double v) const {
    const std::size_t nr = parent.count - st.nl;
    if (st.nl < static_cast<std::size_t>(params_.min_leaf) || nr < static_cast<std::size_t>(params_.min_leaf)) return;
    const double gr = parent.g - st.gl;
    const double hr = parent.h - st.hl;
    const double lambda = params_.lambda;
    const double gain = score(st.gl, st.hl, lambda) + score(gr, hr, lambda) - score(parent.g, parent.h, lambda);
    if (!(gain > kMinGain)) return;
    // ties keep the earlier (lower feature index, lower threshold) candidate
    if (best.feature >= 0 && !(gain > best.gain)) return;
    double threshold = st.last_value + (v - st.last_value) / 2.0;
    if (!(threshold > st.last_value)) threshold = v;
    best = {gain, feature, threshold};
  }

  const DenseMatrix& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const Params& params_;
};

}  // namespace

double mean_log_loss(const Model& model, const DenseMatrix& rows, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const double f = model.raw_score(rows.row(i));
    loss += softplus(f) - labels[i] * f;
  }
  return rows.rows() ? loss / static_cast<double>(rows.rows()) : 0.0;
}

Model train(const DenseMatrix& rows, std::span<const int> labels, const Params& params,
            std::vector<std::string> feature_names) {
  params.validate();
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  if (n == 0) throw Error(ErrorCode::EmptyData, "training requires at least one row");
  if (labels.size() != n) throw Error(ErrorCode::DimensionMismatch, "labels and rows differ in length");
  if (!feature_names.empty() && feature_names.size() != d)
    throw Error(ErrorCode::DimensionMismatch, "feature_names must match the column count");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (n < 2) throw Error(ErrorCode::EmptyData, "training requires at least two rows");
  if (positives == 0 || positives == n) throw Error(ErrorCode::SingleClass, "both classes must be present");
  if (!rows.all_finite()) throw Error(ErrorCode::InvalidArgument, "feature matrix contains non-finite values");

  Model model;
  model.params = params;
  model.n_features = d;
  model.feature_names = std::move(feature_names);
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<std::vector<std::uint32_t>> sorted(d, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < d; ++f) {
    auto& idx = sorted[f];
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return rows(a, f) < rows(b, f); });
  }

  Rng rng(params.seed);
  TreeBuilder builder(rows, sorted, params);
  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  std::vector<std::uint8_t> in_sample(n, 1);
  std::vector<std::size_t> row_order(n);
  std::vector<int> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);

  model.train_loss.reserve(static_cast<std::size_t>(params.n_trees));
  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - labels[i];
      hess[i] = std::max(p * (1.0 - p), kMinHessian);
    }
    if (params.subsample < 1.0) {
      std::iota(row_order.begin(), row_order.end(), 0);
      rng.shuffle(row_order.begin(), row_order.end());
      const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * n)));
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t k = 0; k < keep; ++k) in_sample[row_order[k]] = 1;
    }
    std::vector<int> features = all_features;
    if (params.colsample < 1.0 && d > 0) {
      rng.shuffle(features.begin(), features.end());
      const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(params.colsample * d)));
      features.resize(keep);
      std::sort(features.begin(), features.end());
    }
    Tree tree = builder.build(grad, hess, in_sample, features);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += tree.predict(rows.row(i));
      loss += softplus(margin[i]) - labels[i] * margin[i];
    }
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(loss / static_cast<double>(n));
  }
  return model;
}

double DualModel::predict_proba(std::span<const double> row) const {
  return blend * model_a.predict_proba(row) + (1.0 - blend) * model_b.predict_proba(row);
}

double DualModel::predict_proba(const FeatureVector& row) const {
  return blend * model_a.predict_proba(row) + (1.0 - blend) * model_b.predict_proba(row);
}

DualModel train_dual(const DenseMatrix& rows, std::span<const int> labels, const Params& params_a,
                     const Params& params_b, double blend, std::vector<std::string> feature_names) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw Error(ErrorCode::InvalidArgument, "blend must be in [0, 1]");
  DualModel dual;
  dual.model_a = train(rows, labels, params_a, feature_names);
  dual.model_b = train(rows, labels, params_b, std::move(feature_names));
  dual.blend = blend;
  return dual;
}

Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::DimensionMismatch, "prediction/label length mismatch");
  Metrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++m.tp;
    else if (predicted[i] == 1) ++m.fp;
    else if (truth[i] == 1) ++m.fn;
    else ++m.tn;
  }
  const double total = static_cast<double>(truth.size());
  m.accuracy = total > 0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
  if (m.tp + m.fp == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall == 0.0) m.f1_undefined = true;
  else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace {

template <class M>
Metrics evaluate_any(const M& model, const DenseMatrix& rows, std::span<const int> labels, double threshold) {
  if (labels.size() != rows.rows()) throw Error(ErrorCode::DimensionMismatch, "labels and rows differ in length");
  std::vector<int> predicted(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) predicted[i] = model.predict_proba(rows.row(i)) >= threshold ? 1 : 0;
  return evaluate_predictions(predicted, labels);
}

}  // namespace

Metrics evaluate(const Model& model, const DenseMatrix& rows, std::span<const int> labels, double threshold) {
  return evaluate_any(model, rows, labels, threshold);
}

Metrics evaluate(const DualModel& model, const DenseMatrix& rows, std::span<const int> labels, double threshold) {
  return evaluate_any(model, rows, labels, threshold);
}

std::map<std::size_t, double> feature_importance(const Model& model) {
  std::map<std::size_t, double> gain;
  double total = 0.0;
  for (const auto& t : model.trees)
    for (const auto& node : t.nodes)
      if (!node.is_leaf()) {
        gain[static_cast<std::size_t>(node.feature)] += node.gain;
        total += node.gain;
      }
  if (total > 0)
    for (auto& [f, g] : gain) g /= total;
  return gain;
}

double Explanation::raw_score() const {
  double s = bias;
  for (const auto& [f, c] : contributions) s += c;
  return s;
}

Explanation explain(const Model& model, std::span<const double> row) {
  Explanation ex;
  ex.bias = model.base_score;
  for (const auto& t : model.trees) {
    int i = 0;
    ex.bias += t.nodes[0].value;
    while (!t.nodes[i].is_leaf()) {
      const TreeNode& node = t.nodes[i];
      const auto f = static_cast<std::size_t>(node.feature);
      const double x = f < row.size() ? row[f] : 0.0;
      const int child = x < node.threshold ? node.left : node.right;
      ex.contributions[f] += t.nodes[child].value - node.value;
      i = child;
    }
  }
  return ex;
}

namespace {

void write_model(std::ostringstream& out, const Model& m) {
  const Params& p = m.params;
  out << "MALDYN-GBDT-v1\n";
  out << "base_score " << io::format_real(m.base_score) << '\n';
  out << "params n_trees=" << p.n_trees << " max_depth=" << p.max_depth
      << " learning_rate=" << io::format_real(p.learning_rate) << " min_leaf=" << p.min_leaf
      << " subsample=" << io::format_real(p.subsample) << " colsample=" << io::format_real(p.colsample)
      << " seed=" << p.seed << " lambda=" << io::format_real(p.lambda) << '\n';
  out << "n_features " << m.n_features << '\n';
  out << "feature_names " << m.feature_names.size() << '\n';
  for (const auto& name : m.feature_names) out << name << '\n';
  out << "trees " << m.trees.size() << '\n';
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const auto& nodes = m.trees[t].nodes;
    out << "tree " << t << ' ' << nodes.size() << '\n';
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& nd = nodes[i];
      out << i << ' ' << nd.feature << ' ' << io::format_real(nd.threshold) << ' ' << nd.left << ' ' << nd.right << ' '
          << io::format_real(nd.value) << ' ' << io::format_real(nd.gain) << ' ' << io::format_real(nd.cover) << '\n';
    }
  }
  out << "end\n";
}

std::string expect_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "model truncated before " + std::string(what));
  return line;
}

std::istringstream keyed(std::istream& in, std::string_view key) {
  std::string line = expect_line(in, key);
  std::istringstream s(line);
  std::string k;
  s >> k;
  if (k != key) throw Error(ErrorCode::FormatError, "expected '" + std::string(key) + "', found '" + k + "'");
  return s;
}

Model read_model(std::istream& in) {
  const std::string magic = expect_line(in, "header");
  if (magic != "MALDYN-GBDT-v1")
    throw Error(ErrorCode::FormatError, "unsupported model version '" + magic + "' (expected MALDYN-GBDT-v1)");
  Model m;
  {
    auto s = keyed(in, "base_score");
    std::string v;
    s >> v;
    m.base_score = io::parse_real(v);
  }
  {
    auto s = keyed(in, "params");
    std::string kv;
    while (s >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::FormatError, "bad params entry '" + kv + "'");
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      Params& p = m.params;
      if (key == "n_trees") p.n_trees = static_cast<int>(io::parse_int(val));
      else if (key == "max_depth") p.max_depth = static_cast<int>(io::parse_int(val));
      else if (key == "learning_rate") p.learning_rate = io::parse_real(val);
      else if (key == "min_leaf") p.min_leaf = static_cast<int>(io::parse_int(val));
      else if (key == "subsample") p.subsample = io::parse_real(val);
      else if (key == "colsample") p.colsample = io::parse_real(val);
      else if (key == "seed") p.seed = static_cast<std::uint64_t>(io::parse_int(val));
      else if (key == "lambda") p.lambda = io::parse_real(val);
      else throw Error(ErrorCode::FormatError, "unknown param '" + key + "'");
    }
  }
  {
    auto s = keyed(in, "n_features");
    s >> m.n_features;
  }
  std::size_t n_names = 0;
  keyed(in, "feature_names") >> n_names;
  for (std::size_t i = 0; i < n_names; ++i) {
    std::string name;
    if (!std::getline(in, name)) throw Error(ErrorCode::FormatError, "model truncated in feature names");
    if (!name.empty() && name.back() == '\r') name.pop_back();
    m.feature_names.push_back(name);
  }
  std::size_t n_trees = 0;
  keyed(in, "trees") >> n_trees;
  for (std::size_t t = 0; t < n_trees; ++t) {
    auto s = keyed(in, "tree");
    std::size_t index = 0, count = 0;
    s >> index >> count;
    if (index != t || count == 0) throw Error(ErrorCode::FormatError, "bad tree header");
    Tree tree;
    tree.nodes.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::istringstream ls(expect_line(in, "node"));
      std::size_t id;
      std::string thr, val, gain, cover;
      TreeNode& nd = tree.nodes[i];
      ls >> id >> nd.feature >> thr >> nd.left >> nd.right >> val >> gain >> cover;
      if (!ls || id != i) throw Error(ErrorCode::FormatError, "bad node record");
      nd.threshold = io::parse_real(thr);
      nd.value = io::parse_real(val);
      nd.gain = io::parse_real(gain);
      nd.cover = io::parse_real(cover);
      if (!nd.is_leaf()) {
        const auto bound = static_cast<int>(count);
        if (nd.left <= static_cast<int>(i) || nd.right <= static_cast<int>(i) || nd.left >= bound || nd.right >= bound ||
            static_cast<std::size_t>(nd.feature) >= m.n_features)
          throw Error(ErrorCode::FormatError, "node references out of range");
      }
    }
    m.trees.push_back(std::move(tree));
  }
  if (expect_line(in, "end") != "end") throw Error(ErrorCode::FormatError, "missing model terminator");
  return m;
}

}  // namespace

std::string serialize(const Model& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

Model parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_model(in);
}

std::string serialize(const DualModel& model) {
  std::ostringstream out;
  out << "MALDYN-DUAL-v1\nblend " << io::format_real(model.blend) << '\n';
  write_model(out, model.model_a);
  write_model(out, model.model_b);
  return out.str();
}

DualModel parse_dual_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  if (expect_line(in, "header") != "MALDYN-DUAL-v1") throw Error(ErrorCode::FormatError, "not a MALDYN-DUAL-v1 file");
  DualModel dual;
  std::string v;
  keyed(in, "blend") >> v;
  dual.blend = io::parse_real(v);
  dual.model_a = read_model(in);
  dual.model_b = read_model(in);
  return dual;
}

}  // namespace maldyn::gbdt
