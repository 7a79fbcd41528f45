#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maldyn/featurize.hpp"
#include "maldyn/matrix.hpp"
#include "maldyn/transform.hpp"

namespace maldyn::reduce {

/// One row per text, one column per vocabulary n-gram, weight = count · idf,
/// rows L2-normalized (all-zero rows stay zero). Throws EmptyCorpus.
DenseMatrix tfidf_matrix(std::span<const TokenText> texts, const Vocabulary& vocab);

/// Per-column standardization to mean 0 and (population) variance 1.
/// Zero-variance columns become all zeros.
DenseMatrix normalize(const DenseMatrix& matrix);

struct SvdReducer {
  DenseMatrix components;              // k x d, orthonormal rows
  std::vector<double> singular_values;  // non-increasing

  std::size_t k() const noexcept { return components.rows(); }
  friend bool operator==(const SvdReducer&, const SvdReducer&) = default;
};

struct SvdOptions {
  int min_iterations = 10;
  int max_iterations = 1000;
  double tolerance = 1e-13;  // relative change of the Ritz values between sweeps
  std::size_t oversample = 5;
  std::uint64_t seed = 0;
};

/// Top-k right singular vectors by block power iteration with per-step
/// re-orthonormalization and a Rayleigh-Ritz projection. No centering.
/// Throws KTooLarge unless 1 <= k <= min(rows, cols).
SvdReducer fit_svd(const DenseMatrix& matrix, std::size_t k, const SvdOptions& options = {});

/// Projects rows onto the components: matrix · componentsᵀ.
DenseMatrix transform(const SvdReducer& reducer, const DenseMatrix& matrix);

/// Mirrored tanh autoencoder with an identity output layer.
struct Autoencoder {
  std::vector<std::size_t> layer_sizes;   // e.g. {d, 128, 32, 128, d}
  std::vector<DenseMatrix> weights;        // layer l: sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> biases;  // layer l: sizes[l+1]
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // loss before training, then after each epoch

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t bottleneck_dim() const { return layer_sizes[layer_sizes.size() / 2]; }
  std::size_t parameter_count() const;

  friend bool operator==(const Autoencoder& a, const Autoencoder& b) {
    return a.layer_sizes == b.layer_sizes && a.weights == b.weights && a.biases == b.biases && a.seed == b.seed;
  }
};

/// Throws NonMirroredLayers unless sizes are odd in count (>= 3), mirror around
/// the middle, and the bottleneck does not exceed the input width.
void validate_layers(std::span<const std::size_t> layer_sizes);

/// Glorot-uniform weights, zero biases.
Autoencoder init_autoencoder(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
};

/// Mini-batch gradient descent on mean squared reconstruction error. An epoch
/// that raises the full-data loss is rolled back and the learning rate halved,
/// so loss_history never increases. Throws NaNLoss on divergence.
Autoencoder train_autoencoder(const DenseMatrix& data, std::vector<std::size_t> layer_sizes, int epochs,
                              double learning_rate, std::uint64_t seed, std::size_t batch_size = 32);

/// Continues training an initialized network.
void fit(Autoencoder& ae, const DenseMatrix& data, const TrainOptions& options);

DenseMatrix encode(const Autoencoder& ae, const DenseMatrix& data);
DenseMatrix reconstruct(const Autoencoder& ae, const DenseMatrix& data);

/// mean over rows and columns of (reconstruction - input)^2
double reconstruction_loss(const Autoencoder& ae, const DenseMatrix& data);

/// Flattened parameters: for each layer, weights row-major then biases.
std::vector<double> parameters(const Autoencoder& ae);
void set_parameters(Autoencoder& ae, std::span<const double> flat);

/// Backpropagated gradient of reconstruction_loss w.r.t. parameters().
std::vector<double> loss_gradient(const Autoencoder& ae, const DenseMatrix& data);

std::string serialize(const SvdReducer& reducer);
SvdReducer parse_svd(std::string_view text);
std::string serialize(const Autoencoder& ae);
Autoencoder parse_autoencoder(std::string_view text);

/// `sample_id,dim0,...,dimk`
std::string embedding_csv(std::span<const std::string> sample_ids, const DenseMatrix& embedding);

}  // namespace maldyn::reduce
