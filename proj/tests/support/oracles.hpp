#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. Each one takes the slow, obvious route so that agreement with the
// library is meaningful.

#include <Eigen/Dense>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "maldyn/matrix.hpp"

namespace oracle {

inline std::filesystem::path fixture_dir() { return MALDYN_FIXTURE_DIR; }

struct XmlAction {
  std::map<std::string, std::string> attrs;
  std::vector<std::string> api_args;
  std::vector<std::string> ex_info;
};

struct XmlReport {
  std::string sample_id;
  std::vector<XmlAction> actions;
};

/// DOM read through boost::property_tree (rapidxml underneath).
inline XmlReport read_report(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  pt::read_xml(path.string(), tree);
  XmlReport out;
  const pt::ptree& root = tree.get_child("report");
  out.sample_id = root.get<std::string>("<xmlattr>.sample_id", "");
  for (const auto& [name, child] : root) {
    if (name != "action") continue;
    XmlAction a;
    if (auto attrs = child.get_child_optional("<xmlattr>"))
      for (const auto& [k, v] : *attrs) a.attrs[k] = v.data();
    for (const auto& [cname, c] : child) {
      if (cname == "apiArg") a.api_args.push_back(c.get<std::string>("<xmlattr>.value", ""));
      if (cname == "exInfo") a.ex_info.push_back(c.get<std::string>("<xmlattr>.value", ""));
    }
    out.actions.push_back(std::move(a));
  }
  return out;
}

/// Integer literal the way a person would read it: optional sign, 0x for hex.
inline long long read_integer(const std::string& s) {
  if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) return static_cast<long long>(std::stoull(s.substr(2), nullptr, 16));
  return std::stoll(s);
}

/// Sliding-window n-gram counts with tokens joined by one space.
inline std::map<std::string, double> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) key += " " + tokens[i + static_cast<std::size_t>(k)];
    out[key] += 1.0;
  }
  return out;
}

/// Number of documents containing each n-gram.
inline std::map<std::string, double> document_frequencies(const std::vector<std::vector<std::string>>& docs, int n) {
  std::map<std::string, double> df;
  for (const auto& d : docs)
    for (const auto& [gram, c] : ngram_counts(d, n)) df[gram] += 1.0;
  return df;
}

/// Smoothed idf ln((1 + D) / (1 + df)) + 1.
inline double idf(std::size_t n_docs, double df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + df)) + 1.0;
}

inline double idf(const std::vector<std::vector<std::string>>& docs, const std::string& gram, int n) {
  const auto df = document_frequencies(docs, n);
  return idf(docs.size(), df.count(gram) ? df.at(gram) : 0.0);
}

/// Singular values as square roots of the eigenvalues of AᵀA (Eigen), descending.
inline std::vector<double> gram_singular_values(const maldyn::DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.transpose() * m);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(std::sqrt(std::max(0.0, solver.eigenvalues()(i))));
  std::sort(out.rbegin(), out.rend());
  return out;
}

/// DBSCAN by connected components: core points are linked when within eps,
/// components are numbered by their smallest member index, and a border point
/// takes the smallest component number among its core neighbours.
inline std::vector<int> dbscan(const maldyn::DenseMatrix& x, double eps, std::size_t min_pts) {
  const std::size_t n = x.rows();
  auto near = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
    return std::sqrt(s) <= eps;
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) count += near(i, j);
    core[i] = count >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (core[i] && core[j] && near(i, j)) {
        const std::size_t a = find(i), b = find(j);
        parent[std::max(a, b)] = std::min(a, b);
      }
  std::map<std::size_t, int> label_of_root;
  std::vector<int> out(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = find(i);
    if (!label_of_root.count(r)) {
      const int next = static_cast<int>(label_of_root.size());
      label_of_root[r] = next;
    }
    out[i] = label_of_root[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (core[j] && near(i, j) && (out[i] < 0 || out[j] < out[i])) out[i] = out[j];
  }
  return out;
}

/// Coverage by the definition: for each target, the best similarity over all
/// generated samples, then the share meeting each threshold.
template <class Sim>
std::vector<double> coverage(std::size_t n_targets, std::size_t n_generated, const std::vector<double>& thresholds, Sim sim) {
  std::vector<double> best(n_targets, -1.0);
  for (std::size_t i = 0; i < n_targets; ++i)
    for (std::size_t j = 0; j < n_generated; ++j) best[i] = std::max(best[i], sim(i, j));
  std::vector<double> out;
  for (double t : thresholds) {
    std::size_t m = 0;
    for (double b : best) m += b >= t;
    out.push_back(static_cast<double>(m) / static_cast<double>(n_targets));
  }
  return out;
}

/// Gaussian blobs: `per` points around each center, labels by center index.
inline std::pair<maldyn::DenseMatrix, std::vector<int>> blobs(const std::vector<std::vector<double>>& centers,
                                                              std::size_t per, double sigma, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t d = centers[0].size();
  maldyn::DenseMatrix x(centers.size() * per, d);
  std::vector<int> labels;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t p = 0; p < per; ++p) {
      const std::size_t r = c * per + p;
      for (std::size_t j = 0; j < d; ++j) x(r, j) = centers[c][j] + noise(rng);
      labels.push_back(static_cast<int>(c));
    }
  return {x, labels};
}

}  // namespace oracle
