#include "numeric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace rpt {

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out;
  out.reserve(params.size());
  for (const auto& layer : params) {
    out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                   Vector::Zero(layer.bias.size())});
  }
  return out;
}

double squared_norm(const ParamSet& params) {
  double total = 0.0;
  for (const auto& layer : params) {
    total += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  }
  return total;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool all_finite(const ParamSet& params) {
  for (const auto& layer : params) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void scale(ParamSet& params, double factor) {
  for (auto& layer : params) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

void add_scaled(ParamSet& dst, const ParamSet& src, double factor) {
  if (dst.size() != src.size()) throw ShapeError("add_scaled: layer count");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i].weight += factor * src[i].weight;
    dst[i].bias += factor * src[i].bias;
  }
}

std::size_t parameter_count(const ParamSet& params) {
  std::size_t n = 0;
  for (const auto& layer : params) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

Mlp::Mlp(const std::vector<int>& sizes) : sizes_(sizes) {
  if (sizes.size() < 2) throw ShapeError("Mlp needs at least input and output");
  for (int s : sizes) {
    if (s <= 0) throw ShapeError("Mlp layer widths must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    params_.push_back({Matrix::Zero(sizes[i + 1], sizes[i]),
                       Vector::Zero(sizes[i + 1])});
  }
}

Mlp Mlp::initialized(const std::vector<int>& sizes, Rng& rng) {
  Mlp net(sizes);
  for (auto& layer : net.params_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    // Fill column-major so the draw order is fixed by layout.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        layer.weight(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
  }
  return net;
}

std::size_t Mlp::parameter_count(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    n += static_cast<std::size_t>(sizes[i + 1]) * (sizes[i] + 1);
  }
  return n;
}

Vector Mlp::forward(const Vector& input) const {
  if (input.size() != input_dim()) {
    throw ShapeError("mlp input has " + std::to_string(input.size()) +
                     " entries, expected " + std::to_string(input_dim()));
  }
  Vector h = input;
  const std::size_t last = params_.size() - 1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Vector z = params_[i].weight * h + params_[i].bias;
    if (i != last) {
      h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Matrix Mlp::forward(const Matrix& inputs, Tape* tape) const {
  if (inputs.cols() != input_dim()) {
    throw ShapeError("mlp batch has " + std::to_string(inputs.cols()) +
                     " features, expected " + std::to_string(input_dim()));
  }
  if (tape != nullptr) tape->inputs.clear();
  Matrix h = inputs;
  const std::size_t last = params_.size() - 1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix z = h * params_[i].weight.transpose();
    z.rowwise() += params_[i].bias.transpose();
    if (tape != nullptr) tape->inputs.push_back(std::move(h));
    if (i != last) {
      h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

ParamSet Mlp::backward(const Tape& tape, const Matrix& upstream) const {
  if (tape.inputs.size() != params_.size()) {
    throw ShapeError("tape does not match network depth");
  }
  const Eigen::Index batch = tape.inputs.front().rows();
  if (upstream.rows() != batch || upstream.cols() != output_dim()) {
    throw ShapeError("upstream gradient shape mismatch");
  }
  ParamSet grads(params_.size());
  Matrix delta = upstream;  // gradient w.r.t. pre-activation of current layer
  for (std::size_t k = params_.size(); k-- > 0;) {
    const Matrix& in = tape.inputs[k];
    grads[k].weight = delta.transpose() * in;
    grads[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    // tape.inputs[k] holds tanh output of layer k-1.
    Matrix d_in = delta * params_[k].weight;
    delta = (d_in.array() * (1.0 - in.array().square())).matrix();
  }
  return grads;
}

ParamSet Mlp::gradients(const Vector& input, const Vector& upstream) const {
  if (upstream.size() != output_dim()) {
    throw ShapeError("upstream gradient has " +
                     std::to_string(upstream.size()) + " entries, expected " +
                     std::to_string(output_dim()));
  }
  Tape tape;
  forward(Matrix(input.transpose()), &tape);
  return backward(tape, Matrix(upstream.transpose()));
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: layer count mismatch");
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    if (p.size() != g.size() || p.size() != m.size()) {
      throw ShapeError("adam_step: parameter shape mismatch");
    }
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p.array() -= c.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weight, grads[i].weight, state.first_moment[i].weight,
           state.second_moment[i].weight);
    update(params[i].bias, grads[i].bias, state.first_moment[i].bias,
           state.second_moment[i].bias);
  }
}

double clip_global_norm(const std::vector<ParamSet*>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw UsageError("clip_global_norm: max_norm <= 0");
  double total = 0.0;
  for (const ParamSet* g : grads) total += squared_norm(*g);
  const double norm = std::sqrt(total);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (ParamSet* g : grads) scale(*g, factor);
  }
  return norm;
}

double clip_global_norm(ParamSet& grads, double max_norm) {
  return clip_global_norm(std::vector<ParamSet*>{&grads}, max_norm);
}

void RunningScaler::update(const Matrix& batch) {
  if (batch.cols() != dim()) {
    throw ShapeError("scaler batch has " + std::to_string(batch.cols()) +
                     " features, expected " + std::to_string(dim()));
  }
  const double m = static_cast<double>(batch.rows());
  if (m == 0) return;
  const Vector batch_mean = batch.colwise().mean().transpose();
  const Vector batch_var =
      (batch.rowwise() - batch_mean.transpose()).array().square().colwise().sum().transpose() / m;
  const double n = count_;
  const double total = n + m;
  const Vector delta = batch_mean - mean_;
  const Vector m2 = variance_ * n + batch_var * m +
                    delta.cwiseProduct(delta) * (n * m / total);
  mean_ += delta * (m / total);
  variance_ = m2 / total;
  count_ = total;
}

void RunningScaler::update(const Vector& sample) {
  update(Matrix(sample.transpose()));
}

Vector RunningScaler::normalize(const Vector& x) const {
  if (x.size() != dim()) throw ShapeError("scaler normalize: dimension mismatch");
  if (count_ == 0.0) return x;
  return ((x - mean_).array() / (variance_.array() + kEpsilon).sqrt()).matrix();
}

Matrix RunningScaler::normalize(const Matrix& rows) const {
  if (rows.cols() != dim()) throw ShapeError("scaler normalize: dimension mismatch");
  if (count_ == 0.0) return rows;
  const Eigen::RowVectorXd inv =
      (variance_.array() + kEpsilon).sqrt().inverse().matrix().transpose();
  Matrix out = rows.rowwise() - mean_.transpose();
  out.array().rowwise() *= inv.array();
  return out;
}

void RunningScaler::restore(Vector mean, Vector variance, double count) {
  if (mean.size() != variance.size()) throw ShapeError("scaler restore: shapes");
  if (count < 0.0) throw FormatError("scaler restore: negative count");
  mean_ = std::move(mean);
  variance_ = std::move(variance);
  count_ = count;
}

Vector log_softmax(const Vector& logits) {
  if (logits.size() == 0) throw UsageError("empty action set");
  const double max = logits.maxCoeff();
  const double log_sum = std::log((logits.array() - max).exp().sum());
  return (logits.array() - max - log_sum).matrix();
}

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw UsageError("empty action set");
  Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

int argmax(const Vector& values) {
  if (values.size() == 0) throw UsageError("argmax of empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

int categorical_sample(const Vector& logits, Rng& rng) {
  const Vector p = softmax(logits);
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cumulative += p[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

CategoricalStats categorical_stats(const Vector& logits, int action) {
  if (action < 0 || action >= logits.size()) {
    throw UsageError("action " + std::to_string(action) + " out of range [0, " +
                     std::to_string(logits.size()) + ")");
  }
  const Vector log_p = log_softmax(logits);
  const Vector p = log_p.array().exp().matrix();
  CategoricalStats s;
  s.log_prob = log_p[action];
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) entropy -= p[i] * log_p[i];
  }
  s.entropy = entropy;
  return s;
}

}  // namespace rpt
