#ifndef RPT_NUMERIC_HPP_
#define RPT_NUMERIC_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "rng.hpp"

namespace rpt {

using Vector = Eigen::VectorXd;
// Batches are laid out one sample per row.
using Matrix = Eigen::MatrixXd;

// One affine layer; weight is (out x in).
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

// Parameters and gradients share this layout.
using ParamSet = std::vector<DenseLayer>;

ParamSet zeros_like(const ParamSet& params);
double squared_norm(const ParamSet& params);
bool all_finite(const ParamSet& params);
bool all_finite(const Matrix& m);
void scale(ParamSet& params, double factor);
// dst += factor * src
void add_scaled(ParamSet& dst, const ParamSet& src, double factor);
std::size_t parameter_count(const ParamSet& params);

// Layer inputs recorded during a batched forward pass, consumed by backward().
struct Tape {
  std::vector<Matrix> inputs;
};

// Fully connected net with tanh hidden layers and a linear output layer.
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialized net with layer widths {input, hidden..., output}.
  explicit Mlp(const std::vector<int>& sizes);

  // Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp initialized(const std::vector<int>& sizes, Rng& rng);
  static std::size_t parameter_count(const std::vector<int>& sizes);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  Vector forward(const Vector& input) const;
  // Row-batched forward pass. When tape is non-null, layer inputs are kept
  // for a later backward() call.
  Matrix forward(const Matrix& inputs, Tape* tape = nullptr) const;

  // Gradient of sum_rows(<upstream_row, output_row>) with respect to every
  // parameter, for the batch recorded in tape.
  ParamSet backward(const Tape& tape, const Matrix& upstream) const;
  // Single-sample form of backward().
  ParamSet gradients(const Vector& input, const Vector& upstream) const;

 private:
  std::vector<int> sizes_;
  ParamSet params_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(const ParamSet& like, AdamConfig cfg)
      : config(cfg), first_moment(zeros_like(like)),
        second_moment(zeros_like(like)) {}

  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::int64_t step = 0;
};

// Bias-corrected Adam update in place.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

// Rescales all gradient sets jointly so their combined L2 norm is at most
// max_norm. Returns the norm measured before clipping.
double clip_global_norm(const std::vector<ParamSet*>& grads,
                        double max_norm = 0.4);
double clip_global_norm(ParamSet& grads, double max_norm = 0.4);

// Streaming per-feature mean / population variance.
class RunningScaler {
 public:
  static constexpr double kEpsilon = 1e-8;

  RunningScaler() = default;
  explicit RunningScaler(int dim)
      : mean_(Vector::Zero(dim)), variance_(Vector::Zero(dim)) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Vector& mean() const { return mean_; }
  const Vector& variance() const { return variance_; }

  void update(const Matrix& batch);
  void update(const Vector& sample);

  // (x - mean) / sqrt(variance + 1e-8); identity before any update.
  Vector normalize(const Vector& x) const;
  Matrix normalize(const Matrix& rows) const;

  void restore(Vector mean, Vector variance, double count);

 private:
  Vector mean_;
  Vector variance_;
  double count_ = 0.0;
};

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);
int argmax(const Vector& values);

int categorical_sample(const Vector& logits, Rng& rng);

struct CategoricalStats {
  double log_prob = 0.0;
  double entropy = 0.0;
};
CategoricalStats categorical_stats(const Vector& logits, int action);

}  // namespace rpt

#endif  // RPT_NUMERIC_HPP_
