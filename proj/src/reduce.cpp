#include "maldyn/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/rng.hpp"

namespace maldyn::reduce {

DenseMatrix tfidf_matrix(std::span<const TokenText> texts, const Vocabulary& vocab) {
  if (texts.empty()) throw Error(ErrorCode::EmptyCorpus, "tfidf_matrix needs at least one text");
  DenseMatrix m(texts.size(), vocab.size());
  for (std::size_t r = 0; r < texts.size(); ++r) {
    for (const auto& g : ngrams(texts[r].tokens, vocab.n))
      if (const std::size_t* idx = vocab.find(g)) m(r, *idx) += 1.0;
    auto row = m.row(r);
    double norm = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] == 0.0) continue;
      row[c] *= vocab.idf(c);
      norm += row[c] * row[c];
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
  }
  return m;
}

DenseMatrix normalize(const DenseMatrix& matrix) {
  DenseMatrix out = matrix;
  const std::size_t n = matrix.rows();
  if (n == 0) return out;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += matrix(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (matrix(r, c) - mean) * (matrix(r, c) - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    // relative cutoff: a column of identical values may pick up rounding noise in the mean
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(mean));
    for (std::size_t r = 0; r < n; ++r) out(r, c) = constant ? 0.0 : (matrix(r, c) - mean) / sd;
  }
  return out;
}

namespace {

void fill_gaussian(DenseMatrix& m, std::size_t col, Rng& rng) {
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, col) = rng.normal();
}

// Orthonormal columns; any column lost to rank deficiency is refilled at random.
void orthonormal_basis(DenseMatrix& v, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    linalg::orthonormalize_columns(v);
    bool complete = true;
    for (std::size_t j = 0; j < v.cols(); ++j) {
      double norm = 0.0;
      for (std::size_t i = 0; i < v.rows(); ++i) norm += v(i, j) * v(i, j);
      if (norm < 0.5) {
        fill_gaussian(v, j, rng);
        complete = false;
      }
    }
    if (complete) return;
  }
  throw Error(ErrorCode::InvalidArgument, "could not complete an orthonormal basis");
}

}  // namespace

SvdReducer fit_svd(const DenseMatrix& a, std::size_t k, const SvdOptions& options) {
  const std::size_t d = a.cols();
  if (k < 1 || k > std::min(a.rows(), d))
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " must lie in [1, min(rows, cols)=" +
                                          std::to_string(std::min(a.rows(), d)) + "]");
  if (!a.all_finite()) throw Error(ErrorCode::InvalidArgument, "matrix contains non-finite values");
  const std::size_t block = std::min(d, k + options.oversample);
  Rng rng(options.seed);
  DenseMatrix v(d, block);
  for (std::size_t j = 0; j < block; ++j) fill_gaussian(v, j, rng);
  orthonormal_basis(v, rng);

  std::vector<double> previous(block, -1.0);
  linalg::SymmetricEigen ritz;
  for (int it = 0; it < options.max_iterations; ++it) {
    DenseMatrix av = matmul(a, v);       // n x b
    DenseMatrix w = matmul_tn(a, av);    // d x b  = AᵀA v
    ritz = linalg::jacobi_eigen(matmul_tn(av, av));
    orthonormal_basis(w, rng);
    v = std::move(w);

    const double top = std::max(std::abs(ritz.values.front()), 1e-300);
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) change = std::max(change, std::abs(ritz.values[j] - previous[j]));
    previous = ritz.values;
    if (it + 1 >= options.min_iterations && change <= options.tolerance * top) break;
  }
  // final Rayleigh-Ritz on the converged subspace
  const DenseMatrix av = matmul(a, v);
  ritz = linalg::jacobi_eigen(matmul_tn(av, av));
  const DenseMatrix rotated = matmul(v, ritz.vectors);  // d x b, columns are Ritz vectors

  SvdReducer out;
  out.components = DenseMatrix(k, d);
  out.singular_values.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.singular_values[j] = std::sqrt(std::max(ritz.values[j], 0.0));
    // sign convention: largest-magnitude coordinate positive
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::abs(rotated(i, j)) > std::abs(rotated(arg, j)) + 1e-12) arg = i;
    const double sign = rotated(arg, j) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) out.components(j, i) = sign * rotated(i, j);
  }
  return out;
}

DenseMatrix transform(const SvdReducer& reducer, const DenseMatrix& matrix) {
  if (matrix.cols() != reducer.components.cols())
    throw Error(ErrorCode::DimensionMismatch, "matrix width differs from the reducer input width");
  DenseMatrix out(matrix.rows(), reducer.k());
  for (std::size_t r = 0; r < matrix.rows(); ++r)
    for (std::size_t j = 0; j < reducer.k(); ++j) out(r, j) = dot(matrix.row(r), reducer.components.row(j));
  return out;
}

// ---------------------------------------------------------------- autoencoder

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += layer_sizes[l + 1] * (layer_sizes[l] + 1);
  return n;
}

void validate_layers(std::span<const std::size_t> sizes) {
  if (sizes.size() < 3 || sizes.size() % 2 == 0)
    throw Error(ErrorCode::NonMirroredLayers, "need an odd number (>= 3) of layer sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error(ErrorCode::NonMirroredLayers, "layer sizes must be positive");
    if (sizes[i] != sizes[sizes.size() - 1 - i])
      throw Error(ErrorCode::NonMirroredLayers, "encoder and decoder layer sizes must mirror");
  }
  if (sizes[sizes.size() / 2] > sizes.front())
    throw Error(ErrorCode::NonMirroredLayers, "bottleneck may not be wider than the input");
}

Autoencoder init_autoencoder(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  validate_layers(layer_sizes);
  Autoencoder ae;
  ae.layer_sizes = std::move(layer_sizes);
  ae.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < ae.layer_sizes.size(); ++l) {
    const std::size_t in = ae.layer_sizes[l], out = ae.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseMatrix w(out, in);
    for (double& x : w.values()) x = rng.uniform(-limit, limit);
    ae.weights.push_back(std::move(w));
    ae.biases.emplace_back(out, 0.0);
  }
  return ae;
}

namespace {

// activations[0] = input, activations[L] = output
void forward(const Autoencoder& ae, std::span<const double> x, std::vector<std::vector<double>>& act) {
  const std::size_t layers = ae.weights.size();
  act.resize(layers + 1);
  act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const DenseMatrix& w = ae.weights[l];
    auto& out = act[l + 1];
    out.assign(ae.biases[l].begin(), ae.biases[l].end());
    for (std::size_t o = 0; o < w.rows(); ++o) out[o] += dot(w.row(o), act[l]);
    if (l + 1 < layers)
      for (double& v : out) v = std::tanh(v);
  }
}

DenseMatrix run_to_layer(const Autoencoder& ae, const DenseMatrix& data, std::size_t layer) {
  if (data.cols() != ae.input_dim()) throw Error(ErrorCode::DimensionMismatch, "data width differs from autoencoder input");
  DenseMatrix out(data.rows(), ae.layer_sizes[layer]);
  std::vector<std::vector<double>> act;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    forward(ae, data.row(r), act);
    std::copy(act[layer].begin(), act[layer].end(), out.row(r).begin());
  }
  return out;
}

// Accumulates the gradient of mean squared error over `rows` into `grad`
// (same layout as parameters()); returns the summed squared error.
double backprop(const Autoencoder& ae, const DenseMatrix& data, std::span<const std::size_t> rows,
                std::vector<double>& grad) {
  const std::size_t layers = ae.weights.size();
  grad.assign(ae.parameter_count(), 0.0);
  std::vector<std::size_t> offset(layers);
  for (std::size_t l = 0, o = 0; l < layers; ++l) {
    offset[l] = o;
    o += ae.weights[l].rows() * (ae.weights[l].cols() + 1);
  }
  const double scale = 2.0 / static_cast<double>(rows.size() * ae.input_dim());
  std::vector<std::vector<double>> act;
  std::vector<double> delta, prev;
  double sse = 0.0;
  for (std::size_t r : rows) {
    auto x = data.row(r);
    forward(ae, x, act);
    delta.resize(ae.input_dim());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double e = act[layers][i] - x[i];
      sse += e * e;
      delta[i] = scale * e;
    }
    for (std::size_t l = layers; l-- > 0;) {
      const DenseMatrix& w = ae.weights[l];
      double* gw = grad.data() + offset[l];
      double* gb = gw + w.rows() * w.cols();
      const auto& input = act[l];
      for (std::size_t o = 0; o < w.rows(); ++o) {
        const double dlt = delta[o];
        if (dlt == 0.0) continue;
        double* grow = gw + o * w.cols();
        for (std::size_t i = 0; i < w.cols(); ++i) grow[i] += dlt * input[i];
        gb[o] += dlt;
      }
      if (l == 0) break;
      prev.assign(w.cols(), 0.0);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        const double dlt = delta[o];
        if (dlt == 0.0) continue;
        auto wrow = w.row(o);
        for (std::size_t i = 0; i < w.cols(); ++i) prev[i] += wrow[i] * dlt;
      }
      for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= 1.0 - input[i] * input[i];
      delta.swap(prev);
    }
  }
  return sse;
}

void apply_step(Autoencoder& ae, std::span<const double> grad, double lr) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < ae.weights.size(); ++l) {
    for (double& w : ae.weights[l].values()) w -= lr * grad[k++];
    for (double& b : ae.biases[l]) b -= lr * grad[k++];
  }
}

}  // namespace

DenseMatrix encode(const Autoencoder& ae, const DenseMatrix& data) {
  return run_to_layer(ae, data, ae.layer_sizes.size() / 2);
}

DenseMatrix reconstruct(const Autoencoder& ae, const DenseMatrix& data) {
  return run_to_layer(ae, data, ae.layer_sizes.size() - 1);
}

double reconstruction_loss(const Autoencoder& ae, const DenseMatrix& data) {
  if (data.rows() == 0) return 0.0;
  const DenseMatrix out = reconstruct(ae, data);
  double sse = 0.0;
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    const double e = out.values()[i] - data.values()[i];
    sse += e * e;
  }
  return sse / static_cast<double>(data.rows() * data.cols());
}

std::vector<double> parameters(const Autoencoder& ae) {
  std::vector<double> flat;
  flat.reserve(ae.parameter_count());
  for (std::size_t l = 0; l < ae.weights.size(); ++l) {
    flat.insert(flat.end(), ae.weights[l].values().begin(), ae.weights[l].values().end());
    flat.insert(flat.end(), ae.biases[l].begin(), ae.biases[l].end());
  }
  return flat;
}

void set_parameters(Autoencoder& ae, std::span<const double> flat) {
  if (flat.size() != ae.parameter_count()) throw Error(ErrorCode::DimensionMismatch, "parameter vector length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < ae.weights.size(); ++l) {
    for (double& w : ae.weights[l].values()) w = flat[k++];
    for (double& b : ae.biases[l]) b = flat[k++];
  }
}

std::vector<double> loss_gradient(const Autoencoder& ae, const DenseMatrix& data) {
  if (data.cols() != ae.input_dim()) throw Error(ErrorCode::DimensionMismatch, "data width differs from autoencoder input");
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad;
  backprop(ae, data, rows, grad);
  return grad;
}

void fit(Autoencoder& ae, const DenseMatrix& data, const TrainOptions& options) {
  if (!(options.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (options.epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (data.rows() == 0) throw Error(ErrorCode::EmptyData, "autoencoder training needs data");
  if (data.cols() != ae.input_dim()) throw Error(ErrorCode::DimensionMismatch, "data width differs from autoencoder input");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  Rng rng(ae.seed ^ 0x9e3779b97f4a7c15ULL);
  double lr = options.learning_rate;
  double loss = reconstruction_loss(ae, data);
  if (!std::isfinite(loss)) throw Error(ErrorCode::NaNLoss, "non-finite loss before training");
  if (ae.loss_history.empty()) ae.loss_history.push_back(loss);

  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto weights_before = ae.weights;
    const auto biases_before = ae.biases;
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      backprop(ae, data, std::span<const std::size_t>(order).subspan(start, end - start), grad);
      apply_step(ae, grad, lr);
    }
    const double next = reconstruction_loss(ae, data);
    if (!std::isfinite(next))
      throw Error(ErrorCode::NaNLoss, "loss diverged at epoch " + std::to_string(epoch + 1));
    if (next > loss) {
      ae.weights = weights_before;
      ae.biases = biases_before;
      lr *= 0.5;
    } else {
      loss = next;
    }
    ae.loss_history.push_back(loss);
  }
}

Autoencoder train_autoencoder(const DenseMatrix& data, std::vector<std::size_t> layer_sizes, int epochs,
                              double learning_rate, std::uint64_t seed, std::size_t batch_size) {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  Autoencoder ae = init_autoencoder(std::move(layer_sizes), seed);
  fit(ae, data, TrainOptions{epochs, learning_rate, batch_size});
  return ae;
}

// ------------------------------------------------------------ serialization

namespace {

void write_row(std::ostringstream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << io::format_real(values[i]);
  out << '\n';
}

std::vector<double> read_row(std::istream& in, std::size_t expected) {
  std::string line;
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "model truncated");
  std::istringstream s(line);
  std::vector<double> row;
  std::string tok;
  while (s >> tok) row.push_back(io::parse_real(tok));
  if (row.size() != expected) throw Error(ErrorCode::FormatError, "row has the wrong number of values");
  return row;
}

}  // namespace

std::string serialize(const SvdReducer& r) {
  std::ostringstream out;
  out << "MALDYN-SVD-v1\n" << r.k() << ' ' << r.components.cols() << '\n';
  write_row(out, r.singular_values);
  for (std::size_t j = 0; j < r.k(); ++j) write_row(out, r.components.row(j));
  return out.str();
}

SvdReducer parse_svd(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!io::next_line(in, line) || line != "MALDYN-SVD-v1") throw Error(ErrorCode::FormatError, "not a MALDYN-SVD-v1 file");
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "missing dimensions");
  std::istringstream dims(line);
  std::size_t k = 0, d = 0;
  if (!(dims >> k >> d)) throw Error(ErrorCode::FormatError, "bad dimensions");
  SvdReducer r;
  r.singular_values = read_row(in, k);
  r.components = DenseMatrix(k, d);
  for (std::size_t j = 0; j < k; ++j) {
    const auto row = read_row(in, d);
    std::copy(row.begin(), row.end(), r.components.row(j).begin());
  }
  return r;
}

std::string serialize(const Autoencoder& ae) {
  std::ostringstream out;
  out << "MALDYN-AE-v1\nlayers";
  for (auto s : ae.layer_sizes) out << ' ' << s;
  out << "\nseed " << ae.seed << '\n';
  for (std::size_t l = 0; l < ae.weights.size(); ++l) {
    out << "layer " << l << ' ' << ae.weights[l].rows() << ' ' << ae.weights[l].cols() << '\n';
    for (std::size_t o = 0; o < ae.weights[l].rows(); ++o) write_row(out, ae.weights[l].row(o));
    write_row(out, ae.biases[l]);
  }
  return out.str();
}

Autoencoder parse_autoencoder(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!io::next_line(in, line) || line != "MALDYN-AE-v1") throw Error(ErrorCode::FormatError, "not a MALDYN-AE-v1 file");
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "missing layers");
  std::istringstream ls(line);
  std::string key;
  ls >> key;
  if (key != "layers") throw Error(ErrorCode::FormatError, "expected layers");
  std::vector<std::size_t> sizes;
  std::size_t s;
  while (ls >> s) sizes.push_back(s);
  validate_layers(sizes);
  if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "missing seed");
  std::istringstream ss(line);
  Autoencoder ae;
  ss >> key >> ae.seed;
  if (key != "seed") throw Error(ErrorCode::FormatError, "expected seed");
  ae.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (!io::next_line(in, line)) throw Error(ErrorCode::FormatError, "missing layer header");
    std::istringstream hs(line);
    std::size_t idx, rows, cols;
    hs >> key >> idx >> rows >> cols;
    if (key != "layer" || idx != l || rows != sizes[l + 1] || cols != sizes[l])
      throw Error(ErrorCode::FormatError, "bad layer header");
    DenseMatrix w(rows, cols);
    for (std::size_t o = 0; o < rows; ++o) {
      const auto row = read_row(in, cols);
      std::copy(row.begin(), row.end(), w.row(o).begin());
    }
    ae.weights.push_back(std::move(w));
    ae.biases.push_back(read_row(in, rows));
  }
  return ae;
}

std::string embedding_csv(std::span<const std::string> sample_ids, const DenseMatrix& embedding) {
  if (sample_ids.size() != embedding.rows()) throw Error(ErrorCode::DimensionMismatch, "one id per embedding row");
  std::string out = "sample_id";
  for (std::size_t j = 0; j < embedding.cols(); ++j) out += ",dim" + std::to_string(j);
  out += '\n';
  for (std::size_t r = 0; r < embedding.rows(); ++r) {
    out += io::csv_cell(sample_ids[r]);
    for (double v : embedding.row(r)) out += "," + io::format_real(v);
    out += '\n';
  }
  return out;
}

}  // namespace maldyn::reduce
