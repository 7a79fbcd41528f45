#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maldyn/featurize.hpp"
#include "maldyn/matrix.hpp"

namespace maldyn::gbdt {

struct Params {
  int n_trees = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_leaf = 1;
  double subsample = 1.0;
  double colsample = 1.0;
  std::uint64_t seed = 0;
  double lambda = 0.0;  // L2 penalty on leaf weights

  /// Throws InvalidArgument when a bound is violated.
  void validate() const;

  /// Depth-wise profile: deeper trees, smaller steps, no sampling.
  static Params profile_a();
  /// Shallow profile: depth 4, larger steps, row and column sampling.
  static Params profile_b();

  friend bool operator==(const Params&, const Params&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // taken when x < threshold
  int right = -1;
  double value = 0.0;  // learning-rate-scaled Newton weight of the node
  double gain = 0.0;
  double cover = 0.0;  // hessian sum

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int leaf_for(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_for(row)].value; }
  int depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Model {
  std::vector<Tree> trees;
  double base_score = 0.0;
  Params params;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;  // empty or n_features long
  std::vector<double> train_loss;          // mean log loss after each round; not serialized

  /// Pre-sigmoid score. Features beyond n_features are ignored, missing ones read as 0.
  double raw_score(std::span<const double> row) const;
  double predict_proba(std::span<const double> row) const;
  double predict_proba(const FeatureVector& row) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.trees == b.trees && a.base_score == b.base_score && a.params == b.params &&
           a.n_features == b.n_features && a.feature_names == b.feature_names;
  }
};

/// Gradient boosting on logistic loss with second-order (Newton) leaf weights and
/// exact greedy splits. Throws EmptyData, SingleClass, DimensionMismatch, InvalidArgument.
Model train(const DenseMatrix& rows, std::span<const int> labels, const Params& params,
            std::vector<std::string> feature_names = {});

double mean_log_loss(const Model& model, const DenseMatrix& rows, std::span<const int> labels);

struct DualModel {
  Model model_a;
  Model model_b;
  double blend = 0.5;

  double predict_proba(std::span<const double> row) const;
  double predict_proba(const FeatureVector& row) const;
  friend bool operator==(const DualModel&, const DualModel&) = default;
};

DualModel train_dual(const DenseMatrix& rows, std::span<const int> labels, const Params& params_a,
                     const Params& params_b, double blend = 0.5, std::vector<std::string> feature_names = {});

struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool precision_undefined = false;  // no positive predictions
  bool recall_undefined = false;     // no positive labels
  bool f1_undefined = false;
};

/// Malware (label 1) is the positive class.
Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth);
Metrics evaluate(const Model& model, const DenseMatrix& rows, std::span<const int> labels, double threshold = 0.5);
Metrics evaluate(const DualModel& model, const DenseMatrix& rows, std::span<const int> labels, double threshold = 0.5);

/// Gain share per split feature; sums to 1 when the model has any split.
std::map<std::size_t, double> feature_importance(const Model& model);

struct Explanation {
  double bias = 0.0;  // base score plus every tree's root value
  std::map<std::size_t, double> contributions;
  double raw_score() const;
};

/// Path attribution: each split passes (child value - parent value) to its feature.
Explanation explain(const Model& model, std::span<const double> row);

std::string serialize(const Model& model);
Model parse_model(std::string_view text);
std::string serialize(const DualModel& model);
DualModel parse_dual_model(std::string_view text);

}  // namespace maldyn::gbdt
