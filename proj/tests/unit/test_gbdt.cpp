#include <doctest.h>

#include <cmath>

#include "maldyn/error.hpp"
#include "maldyn/gbdt.hpp"
#include "maldyn/rng.hpp"

using namespace maldyn;
using namespace maldyn::gbdt;

namespace {

struct Data {
  DenseMatrix x;
  std::vector<int> y;
};

/// Two noisy features; label is x0 + x1 > 1 with 5% flips.
Data noisy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{DenseMatrix(n, 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) d.x(i, j) = rng.uniform();
    int y = d.x(i, 0) + d.x(i, 1) > 1.0;
    if (rng.uniform() < 0.05) y = 1 - y;
    d.y.push_back(y);
  }
  return d;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::UsageError;
}

}  // namespace

TEST_CASE("separable one-dimensional data") {
  DenseMatrix x(10, 1);
  std::vector<int> y;
  for (std::size_t i = 0; i < 10; ++i) {
    x(i, 0) = static_cast<double>(i);
    y.push_back(i >= 5);
  }
  Params p;
  p.n_trees = 20;
  const auto m = train(x, y, p);
  CHECK(evaluate(m, x, y).accuracy == 1.0);
  CHECK(m.trees[0].nodes[0].threshold == 4.5);
}

TEST_CASE("depth-one leaves are scaled Newton steps from the prior") {
  DenseMatrix x(4, 1, std::vector<double>{0, 1, 2, 3});
  const std::vector<int> y = {0, 0, 1, 1};
  Params p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.learning_rate = 0.3;
  p.lambda = 0.5;
  const auto m = train(x, y, p);
  CHECK(m.base_score == 0.0);
  // prior 0.5 gives g = p - y = -/+0.5 and h = 0.25 per row
  const double right = 0.3 * (1.0 / (0.5 + 0.5));
  REQUIRE(m.trees[0].nodes.size() == 3);
  const auto& root = m.trees[0].nodes[0];
  CHECK(m.trees[0].nodes[root.left].value == doctest::Approx(-right).epsilon(1e-15));
  CHECK(m.trees[0].nodes[root.right].value == doctest::Approx(right).epsilon(1e-15));
  CHECK(m.raw_score(std::vector<double>{3.0}) == doctest::Approx(right));
}

TEST_CASE("prior log-odds as base score") {
  DenseMatrix x(4, 1, std::vector<double>{0, 1, 2, 3});
  const std::vector<int> y = {0, 1, 1, 1};
  Params p;
  p.n_trees = 1;
  CHECK(train(x, y, p).base_score == doctest::Approx(std::log(3.0)));
}

TEST_CASE("training loss never increases without sampling") {
  const auto d = noisy(300, 1);
  Params p;
  p.n_trees = 40;
  p.max_depth = 4;
  const auto m = train(d.x, d.y, p);
  REQUIRE(m.train_loss.size() == 40);
  for (std::size_t i = 1; i < m.train_loss.size(); ++i) CHECK(m.train_loss[i] <= m.train_loss[i - 1] + 1e-12);
  CHECK(m.train_loss.back() == doctest::Approx(mean_log_loss(m, d.x, d.y)).epsilon(1e-12));
}

TEST_CASE("same seed gives the same model; different seeds differ under sampling") {
  const auto d = noisy(200, 2);
  auto p = Params::profile_b();
  p.n_trees = 15;
  p.seed = 7;
  const auto a = train(d.x, d.y, p);
  CHECK(a == train(d.x, d.y, p));
  p.seed = 8;
  CHECK(!(a == train(d.x, d.y, p)));
}

TEST_CASE("held-out accuracy on noisy data") {
  const auto tr = noisy(400, 3);
  const auto te = noisy(200, 4);
  Params p;
  p.n_trees = 50;
  p.max_depth = 3;
  CHECK(evaluate(train(tr.x, tr.y, p), te.x, te.y).accuracy > 0.85);
}

TEST_CASE("importance, explanation and depth") {
  const auto d = noisy(200, 5);
  Params p;
  p.n_trees = 10;
  p.max_depth = 3;
  const auto m = train(d.x, d.y, p);
  double total = 0.0;
  for (const auto& [f, share] : feature_importance(m)) total += share;
  CHECK(total == doctest::Approx(1.0));
  for (const auto& t : m.trees) CHECK(t.depth() <= 3);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto ex = explain(m, d.x.row(i));
    CHECK(ex.raw_score() == doctest::Approx(m.raw_score(d.x.row(i))).epsilon(1e-12));
  }
}

TEST_CASE("metrics with undefined ratios") {
  const std::vector<int> pred = {0, 0, 0};
  const std::vector<int> truth = {0, 0, 0};
  const auto m = evaluate_predictions(pred, truth);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision_undefined);
  CHECK(m.recall_undefined);
  const std::vector<int> p2 = {1, 1, 0, 0};
  const std::vector<int> t2 = {1, 0, 1, 0};
  const auto m2 = evaluate_predictions(p2, t2);
  CHECK(m2.precision == 0.5);
  CHECK(m2.recall == 0.5);
  CHECK(m2.f1 == 0.5);
  CHECK(m2.tp == 1);
}

TEST_CASE("serialization round trip") {
  const auto d = noisy(120, 6);
  auto pa = Params::profile_a();
  pa.n_trees = 5;
  auto pb = Params::profile_b();
  pb.n_trees = 5;
  const auto dual = train_dual(d.x, d.y, pa, pb, 0.4, {"a", "b", "c"});
  const auto back = parse_dual_model(serialize(dual));
  CHECK(back == dual);
  for (std::size_t i = 0; i < d.x.rows(); ++i)
    CHECK(back.predict_proba(d.x.row(i)) == dual.predict_proba(d.x.row(i)));
  CHECK(parse_model(serialize(dual.model_a)) == dual.model_a);
  CHECK(code_of([] { parse_model("garbage"); }) == ErrorCode::FormatError);
}

TEST_CASE("training errors") {
  DenseMatrix x(3, 1, std::vector<double>{0, 1, 2});
  const std::vector<int> same = {1, 1, 1};
  const std::vector<int> ok = {0, 1, 1};
  const std::vector<int> short_y = {0, 1};
  CHECK(code_of([&] { train(x, same, Params{}); }) == ErrorCode::SingleClass);
  CHECK(code_of([&] { train(DenseMatrix(), std::vector<int>{}, Params{}); }) == ErrorCode::EmptyData);
  CHECK(code_of([&] { train(x, short_y, Params{}); }) == ErrorCode::DimensionMismatch);
  Params bad;
  bad.learning_rate = 0.0;
  CHECK(code_of([&] { train(x, ok, bad); }) == ErrorCode::InvalidArgument);
  bad = Params{};
  bad.subsample = 1.5;
  CHECK(code_of([&] { train(x, ok, bad); }) == ErrorCode::InvalidArgument);
}
