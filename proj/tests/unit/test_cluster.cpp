#include <doctest.h>

#include <cmath>

#include "maldyn/cluster.hpp"
#include "maldyn/error.hpp"
#include "maldyn/rng.hpp"
#include "oracles.hpp"

using namespace maldyn;
using namespace maldyn::cluster;

namespace {

std::vector<std::optional<std::string>> fams(std::initializer_list<const char*> names) {
  std::vector<std::optional<std::string>> out;
  for (const char* n : names) out.emplace_back(n ? std::optional<std::string>(n) : std::nullopt);
  return out;
}

const std::vector<std::vector<double>> kCenters = {{0, 0}, {1, 0}, {0, 1}};

}  // namespace

TEST_CASE("kmeans recovers separated blobs") {
  const auto [x, labels] = oracle::blobs(kCenters, 40, 0.05, 1);
  const auto m = kmeans(x, 3, 7);
  CHECK(m.k == 3);
  CHECK(adjusted_rand_index(m.assignments, labels) == doctest::Approx(1.0));
  for (std::size_t i = 1; i < m.inertia_history.size(); ++i)
    CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] + 1e-12);
}

TEST_CASE("kmeans with k equal to the row count has zero inertia") {
  const auto [x, labels] = oracle::blobs(kCenters, 3, 0.05, 2);
  const auto m = kmeans(x, x.rows(), 1);
  CHECK(m.inertia(x) == doctest::Approx(0.0));
  CHECK_THROWS_AS(kmeans(x, x.rows() + 1, 1), Error);
  CHECK_THROWS_AS(kmeans(x, 0, 1), Error);
}

TEST_CASE("kmeans is invariant under translation") {
  const auto [x, labels] = oracle::blobs(kCenters, 30, 0.1, 3);
  auto shifted = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    shifted(r, 0) += 5.0;
    shifted(r, 1) -= 2.0;
  }
  const auto a = kmeans(x, 3, 4);
  const auto b = kmeans(shifted, 3, 4);
  CHECK(a.assignments == b.assignments);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(b.centroids(c, 0) == doctest::Approx(a.centroids(c, 0) + 5.0).epsilon(1e-9));
    CHECK(b.centroids(c, 1) == doctest::Approx(a.centroids(c, 1) - 2.0).epsilon(1e-9));
  }
}

TEST_CASE("duplicating every point leaves the centroids unchanged") {
  const auto [x, labels] = oracle::blobs(kCenters, 20, 0.05, 5);
  DenseMatrix twice(2 * x.rows(), 2);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < 2; ++c) twice(2 * r, c) = twice(2 * r + 1, c) = x(r, c);
  const auto a = kmeans(x, 3, 6);
  const auto b = kmeans(twice, 3, 6);
  auto sorted_centroids = [](const DenseMatrix& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t r = 0; r < m.rows(); ++r) v.emplace_back(m(r, 0), m(r, 1));
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto ca = sorted_centroids(a.centroids), cb = sorted_centroids(b.centroids);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(ca[i].first - cb[i].first) < 1e-9);
    CHECK(std::abs(ca[i].second - cb[i].second) < 1e-9);
  }
}

TEST_CASE("dbscan matches the component oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    DenseMatrix x(200, 2);
    for (std::size_t r = 0; r < 200; ++r) {
      const double cx = static_cast<double>(r % 3), cy = static_cast<double>(r % 2);
      x(r, 0) = cx + 0.3 * rng.normal();
      x(r, 1) = cy + 0.3 * rng.normal();
    }
    for (double eps : {0.1, 0.2, 0.35}) {
      for (std::size_t min_pts : {1u, 3u, 6u}) {
        const auto m = dbscan(x, eps, min_pts);
        CHECK(m.assignments == oracle::dbscan(x, eps, min_pts));
      }
    }
  }
}

TEST_CASE("dbscan edge cases") {
  const auto [x, labels] = oracle::blobs({{0, 0}}, 30, 0.05, 9);
  CHECK(dbscan(x, 1.0, 3).k == 1);
  const auto noise = dbscan(x, 1e-9, 2);
  CHECK(noise.k == 0);
  for (int a : noise.assignments) CHECK(a == -1);
  CHECK_THROWS_AS(dbscan(x, 0.0, 3), Error);
}

TEST_CASE("dbscan separates two half moons") {
  DenseMatrix x(100, 2);
  std::vector<int> truth;
  for (std::size_t i = 0; i < 50; ++i) {
    const double t = M_PI * static_cast<double>(i) / 49.0;
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
    x(50 + i, 0) = 1.0 - std::cos(t);
    x(50 + i, 1) = 0.5 - std::sin(t);
  }
  for (std::size_t i = 0; i < 100; ++i) truth.push_back(i < 50 ? 0 : 1);
  const auto m = dbscan(x, 0.2, 3);
  CHECK(m.k == 2);
  CHECK(adjusted_rand_index(m.assignments, truth) == doctest::Approx(1.0));
}

TEST_CASE("purity score examples") {
  const std::vector<int> a = {0, 0, 0, 1};
  CHECK(score_clusters(a, fams({"a", "a", "b", "b"})) == doctest::Approx(0.75));
  const std::vector<int> one = {0, 0, 0, 0};
  CHECK(score_clusters(one, fams({"a", "a", "b", "b"})) == doctest::Approx(0.5));
  const std::vector<int> same = {1, 1, 0, 0};
  CHECK(score_clusters(same, fams({"a", "a", "b", "b"})) == 1.0);
  const std::vector<int> with_noise = {0, -1, 0, 5};
  CHECK(score_clusters(with_noise, fams({"a", "a", nullptr, "b"})) == doctest::Approx(2.0 / 3));
}

TEST_CASE("centroid metrics examples") {
  DenseMatrix same(4, 1, std::vector<double>{1, 1, 1, 1});
  ClusterModel m;
  m.assignments = {0, 0, 1, 1};
  m.k = 2;
  m.centroids = DenseMatrix(2, 1, std::vector<double>{1, 1});
  auto metrics = cluster_metrics(m, same);
  CHECK(metrics.mahalanobis == 0.0);
  CHECK(metrics.adjusted_cosine == 1.0);

  DenseMatrix sym(4, 1, std::vector<double>{-1.1, -0.9, 0.9, 1.1});
  m.centroids = DenseMatrix(2, 1, std::vector<double>{-1, 1});
  CHECK(cluster_metrics(m, sym).adjusted_cosine == doctest::Approx(-1.0));

  // within-cluster spread of one per axis gives identity covariance
  DenseMatrix pts(8, 2, std::vector<double>{-1, 0, 1, 0, 0, -1, 0, 1, 2, 0, 4, 0, 3, -1, 3, 1});
  m.assignments = {0, 0, 0, 0, 1, 1, 1, 1};
  m.centroids = DenseMatrix(2, 2, std::vector<double>{0, 0, 3, 0});
  // pooled: sum of squares 2 per axis per cluster, divisor N - K = 6
  const double var = 4.0 / 6.0 * (1.0 + 1e-6);
  CHECK(cluster_metrics(m, pts).mahalanobis == doctest::Approx(3.0 / std::sqrt(var)).epsilon(1e-9));
}

TEST_CASE("k_scan orders and deduplicates") {
  const auto [x, labels] = oracle::blobs(kCenters, 20, 0.05, 10);
  std::vector<std::optional<std::string>> families;
  for (int l : labels) families.emplace_back("f" + std::to_string(l));
  const auto reports = k_scan(x, {5, 3, 2, 3}, families, 1);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].parameter == 2);
  CHECK(reports[1].parameter == 3);
  CHECK(reports[2].parameter == 5);
  CHECK(reports[1].score == 1.0);
  CHECK(best_k(reports) == 3);
  const auto single = k_scan(x, {3}, families, 1);
  CHECK(single.size() == 1);
  CHECK(single[0].score == 1.0);
  CHECK(reports_csv(reports).rfind("k,score,adjusted_cosine,mahalanobis\n", 0) == 0);
}
