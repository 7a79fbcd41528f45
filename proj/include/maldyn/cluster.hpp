#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maldyn/matrix.hpp"

namespace maldyn::cluster {

enum class Algorithm { KMeans, Dbscan };

struct ClusterModel {
  Algorithm algorithm = Algorithm::KMeans;
  DenseMatrix centroids;         // k x d; for dbscan, the mean of each cluster's members
  std::vector<int> assignments;  // one per point, -1 = noise
  std::size_t k = 0;             // number of clusters found
  double eps = 0.0;
  std::size_t min_pts = 0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_history;  // kmeans: after each assignment pass

  double inertia(const DenseMatrix& points) const;
};

/// k-means++ seeding then Lloyd iterations until the assignment is a fixpoint
/// or max_iter updates have run. Ties go to the lowest centroid index. An
/// emptied cluster is re-seeded at the point farthest from its centroid.
/// Throws KTooLarge unless 1 <= k <= rows, InvalidArgument if max_iter < 1.
ClusterModel kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed, int max_iter = 300);

/// Neighborhood: dist <= eps, the point itself included in the min_pts count.
/// Clusters are numbered by their lowest-index core point; a border point joins
/// the lowest-numbered cluster among its core neighbours. Throws NonPositiveEps.
ClusterModel dbscan(const DenseMatrix& points, double eps, std::size_t min_pts);

/// Σ_c max_f |c ∩ f| / N over samples with a family; noise never scores.
double score_clusters(std::span<const int> assignments, std::span<const std::optional<std::string>> families);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

struct CentroidMetrics {
  double adjusted_cosine = 1.0;  // mean over centroid pairs
  double mahalanobis = 0.0;      // mean over centroid pairs
};

/// Pooled within-cluster covariance (divisor N - K), regularized by
/// 1e-6 · trace / d on the diagonal; identity when it carries no variance.
/// Adjusted cosine centers the centroids on the global point mean; two zero
/// vectors count as 1 and one zero vector as 0.
CentroidMetrics cluster_metrics(const ClusterModel& model, const DenseMatrix& points);

struct ClusterReport {
  double parameter = 0.0;  // k for kmeans, eps for dbscan
  double score = 0.0;
  double adjusted_cosine = 0.0;
  double mahalanobis = 0.0;
};

/// kmeans per distinct k, reports in ascending k.
std::vector<ClusterReport> k_scan(const DenseMatrix& points, std::vector<std::size_t> k_list,
                                  std::span<const std::optional<std::string>> families, std::uint64_t seed,
                                  int max_iter = 300);

/// Smallest k reaching the maximal score. Throws EmptyData on an empty scan.
std::size_t best_k(std::span<const ClusterReport> reports);

/// `sample_id,cluster`
std::string assignments_csv(std::span<const std::string> sample_ids, std::span<const int> assignments);
/// `k,score,adjusted_cosine,mahalanobis`
std::string reports_csv(std::span<const ClusterReport> reports);

}  // namespace maldyn::cluster
