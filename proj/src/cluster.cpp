#include "maldyn/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/rng.hpp"

namespace maldyn::cluster {

double ClusterModel::inertia(const DenseMatrix& points) const {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    if (assignments[i] >= 0) total += squared_distance(points.row(i), centroids.row(assignments[i]));
  return total;
}

namespace {

std::size_t nearest(const DenseMatrix& centroids, std::span<const double> x, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = squared_distance(x, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

DenseMatrix plus_plus_seeds(const DenseMatrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  DenseMatrix centroids(k, points.cols());
  std::size_t first = rng.below(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    const std::size_t pick = total > 0.0 ? rng.weighted(d2) : rng.below(n);
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace

ClusterModel kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed, int max_iter) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k < 1 || k > n)
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  Rng rng(seed);
  ClusterModel model;
  model.algorithm = Algorithm::KMeans;
  model.k = k;
  model.seed = seed;
  model.centroids = plus_plus_seeds(points, k, rng);
  model.assignments.assign(n, 0);

  auto assign = [&]() {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest(model.centroids, points.row(i)));
      changed |= c != model.assignments[i];
      model.assignments[i] = c;
    }
    const double inertia = model.inertia(points);
    if (!model.inertia_history.empty()) {
      const double prev = model.inertia_history.back();
      if (inertia > prev + 1e-9 * std::max(1.0, prev)) throw std::logic_error("k-means inertia increased");
    }
    model.inertia_history.push_back(inertia);
    return changed;
  };

  assign();
  for (int it = 0; it < max_iter; ++it) {
    DenseMatrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(model.assignments[i]);
      ++counts[c];
      auto row = sums.row(c);
      const auto x = points.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) model.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // farthest point that is not the sole member of its own cluster
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(model.assignments[i]);
        if (counts[own] <= 1) continue;
        const double dist = squared_distance(points.row(i), model.centroids.row(own));
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      if (far == n) continue;
      --counts[static_cast<std::size_t>(model.assignments[far])];
      counts[c] = 1;
      model.assignments[far] = static_cast<int>(c);
      std::copy(points.row(far).begin(), points.row(far).end(), model.centroids.row(c).begin());
    }
    if (!assign()) break;
  }
  return model;
}

namespace {

// Neighbour lists (dist <= eps, self included), found through a sweep over the
// first coordinate.
std::vector<std::vector<std::size_t>> neighbourhoods(const DenseMatrix& points, double eps) {
  const std::size_t n = points.rows();
  std::vector<std::vector<std::size_t>> out(n);
  if (n == 0) return out;
  const double eps2 = eps * eps;
  if (points.cols() == 0) {
    for (auto& list : out) {
      list.resize(n);
      std::iota(list.begin(), list.end(), 0);
    }
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points(a, 0) < points(b, 0); });
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = order[a];
    for (std::size_t b = a; b < n; ++b) {
      const std::size_t j = order[b];
      if (points(j, 0) - points(i, 0) > eps) break;
      if (squared_distance(points.row(i), points.row(j)) <= eps2) {
        out[i].push_back(j);
        if (i != j) out[j].push_back(i);
      }
    }
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

DenseMatrix member_means(const DenseMatrix& points, std::span<const int> assignments, std::size_t k) {
  DenseMatrix means(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (assignments[i] < 0) continue;
    const auto c = static_cast<std::size_t>(assignments[i]);
    ++counts[c];
    for (std::size_t j = 0; j < points.cols(); ++j) means(c, j) += points(i, j);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < points.cols(); ++j) means(c, j) /= static_cast<double>(std::max<std::size_t>(1, counts[c]));
  return means;
}

}  // namespace

ClusterModel dbscan(const DenseMatrix& points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::NonPositiveEps, "eps must be > 0");
  if (min_pts < 1) throw Error(ErrorCode::InvalidArgument, "min_pts must be >= 1");
  const std::size_t n = points.rows();
  const auto nb = neighbourhoods(points, eps);
  ClusterModel model;
  model.algorithm = Algorithm::Dbscan;
  model.eps = eps;
  model.min_pts = min_pts;
  model.assignments.assign(n, -1);
  std::vector<bool> expanded(n, false);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.assignments[i] >= 0 || nb[i].size() < min_pts) continue;
    const int id = next++;
    std::deque<std::size_t> queue{i};
    model.assignments[i] = id;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      if (expanded[p] || nb[p].size() < min_pts) continue;
      expanded[p] = true;
      for (std::size_t q : nb[p]) {
        if (model.assignments[q] < 0) {
          model.assignments[q] = id;
          queue.push_back(q);
        }
      }
    }
  }
  model.k = static_cast<std::size_t>(next);
  model.centroids = member_means(points, model.assignments, model.k);
  return model;
}

double score_clusters(std::span<const int> assignments, std::span<const std::optional<std::string>> families) {
  if (assignments.size() != families.size()) throw Error(ErrorCode::DimensionMismatch, "one family per assignment");
  std::map<int, std::map<std::string, std::size_t>> table;
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (!families[i]) continue;
    ++labeled;
    if (assignments[i] >= 0) ++table[assignments[i]][*families[i]];
  }
  if (labeled == 0) return 0.0;
  std::size_t hit = 0;
  for (const auto& [cluster, counts] : table) {
    std::size_t best = 0;
    for (const auto& [family, count] : counts) best = std::max(best, count);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(labeled);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "partitions differ in length");
  const auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : joint) index += pairs(v);
  for (const auto& [key, v] : rows) sum_a += pairs(v);
  for (const auto& [key, v] : cols) sum_b += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

CentroidMetrics cluster_metrics(const ClusterModel& model, const DenseMatrix& points) {
  CentroidMetrics out;
  const std::size_t k = model.centroids.rows(), d = points.cols();
  if (points.rows() != model.assignments.size())
    throw Error(ErrorCode::DimensionMismatch, "one assignment per point");
  if (k < 2 || d == 0) return out;

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += points(i, j);
  for (double& m : mean) m /= static_cast<double>(std::max<std::size_t>(1, points.rows()));

  DenseMatrix cov(d, d);
  std::size_t members = 0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (model.assignments[i] < 0) continue;
    ++members;
    const auto c = model.centroids.row(static_cast<std::size_t>(model.assignments[i]));
    for (std::size_t r = 0; r < d; ++r) {
      const double dr = points(i, r) - c[r];
      for (std::size_t s = 0; s < d; ++s) cov(r, s) += dr * (points(i, s) - c[s]);
    }
  }
  double trace = 0.0;
  if (members > k) {
    for (double& v : cov.values()) v /= static_cast<double>(members - k);
    for (std::size_t r = 0; r < d; ++r) trace += cov(r, r);
  }
  if (trace > 0.0 && std::isfinite(trace)) {
    for (std::size_t r = 0; r < d; ++r) cov(r, r) += 1e-6 * trace / static_cast<double>(d);
  } else {
    cov = DenseMatrix(d, d);
    for (std::size_t r = 0; r < d; ++r) cov(r, r) = 1.0;
  }

  double cos_sum = 0.0, maha_sum = 0.0;
  std::size_t count = 0;
  std::vector<double> delta(d), u(d), v(d);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double uu = 0.0, vv = 0.0, uv = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        delta[j] = model.centroids(a, j) - model.centroids(b, j);
        u[j] = model.centroids(a, j) - mean[j];
        v[j] = model.centroids(b, j) - mean[j];
        uu += u[j] * u[j];
        vv += v[j] * v[j];
        uv += u[j] * v[j];
      }
      const double scale = 1e-12 * (1.0 + dot(mean, mean));
      const bool zero_u = uu <= scale, zero_v = vv <= scale;
      if (zero_u && zero_v) cos_sum += 1.0;
      else if (!zero_u && !zero_v) cos_sum += std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
      const auto solved = linalg::cholesky_solve(cov, delta);
      maha_sum += std::sqrt(std::max(0.0, dot(delta, solved)));
      ++count;
    }
  }
  out.adjusted_cosine = cos_sum / static_cast<double>(count);
  out.mahalanobis = maha_sum / static_cast<double>(count);
  return out;
}

std::vector<ClusterReport> k_scan(const DenseMatrix& points, std::vector<std::size_t> k_list,
                                  std::span<const std::optional<std::string>> families, std::uint64_t seed,
                                  int max_iter) {
  std::sort(k_list.begin(), k_list.end());
  k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
  std::vector<ClusterReport> reports;
  for (std::size_t k : k_list) {
    const ClusterModel model = kmeans(points, k, seed, max_iter);
    const CentroidMetrics m = cluster_metrics(model, points);
    reports.push_back({static_cast<double>(k), score_clusters(model.assignments, families), m.adjusted_cosine,
                       m.mahalanobis});
  }
  return reports;
}

std::size_t best_k(std::span<const ClusterReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyData, "no reports to choose from");
  const ClusterReport* best = &reports[0];
  for (const auto& r : reports)
    if (r.score > best->score || (r.score == best->score && r.parameter < best->parameter)) best = &r;
  return static_cast<std::size_t>(best->parameter);
}

std::string assignments_csv(std::span<const std::string> sample_ids, std::span<const int> assignments) {
  if (sample_ids.size() != assignments.size()) throw Error(ErrorCode::DimensionMismatch, "one id per assignment");
  std::string out = "sample_id,cluster\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i)
    out += io::csv_cell(sample_ids[i]) + "," + std::to_string(assignments[i]) + "\n";
  return out;
}

std::string reports_csv(std::span<const ClusterReport> reports) {
  std::string out = "k,score,adjusted_cosine,mahalanobis\n";
  for (const auto& r : reports)
    out += io::format_real(r.parameter) + "," + io::format_real(r.score) + "," + io::format_real(r.adjusted_cosine) +
           "," + io::format_real(r.mahalanobis) + "\n";
  return out;
}

}  // namespace maldyn::cluster
