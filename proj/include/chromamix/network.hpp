#ifndef CHROMAMIX_NETWORK_HPP_
#define CHROMAMIX_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chromamix {

// Actor-critic MLP with separate policy and value towers, each
// input -> hidden -> hidden (tanh) -> head. Parameters live in one flat vector
// so optimizers and finite-difference checks can treat them uniformly.
class PolicyValueNet {
 public:
  struct Shape {
    std::size_t inputs = 0;
    std::size_t hidden = 64;
    std::size_t actions = 30;
    bool operator==(const Shape&) const = default;
  };

  // Forward activations kept for the backward pass.
  struct Cache {
    std::vector<double> input;
    std::vector<double> pi_h1, pi_h2, vf_h1, vf_h2;
    std::vector<double> logits;
    double value = 0.0;
  };

  PolicyValueNet() = default;

  explicit PolicyValueNet(Shape shape) : shape_(shape) {
    if (shape.inputs == 0 || shape.hidden == 0 || shape.actions == 0) {
      throw std::invalid_argument("network dimensions must be positive");
    }
    layout();
    params_.assign(size_, 0.0);
  }

  /// Orthogonal init: gain sqrt(2) on hidden layers, 0.01 on the logits head,
  /// 1 on the value head; zero biases.
  template <class Rng>
  void init_orthogonal(Rng& rng) {
    const double g = std::sqrt(2.0);
    orthogonal(pi_.w1, shape_.hidden, shape_.inputs, g, rng);
    orthogonal(pi_.w2, shape_.hidden, shape_.hidden, g, rng);
    orthogonal(pi_.w3, shape_.actions, shape_.hidden, 0.01, rng);
    orthogonal(vf_.w1, shape_.hidden, shape_.inputs, g, rng);
    orthogonal(vf_.w2, shape_.hidden, shape_.hidden, g, rng);
    orthogonal(vf_.w3, 1, shape_.hidden, 1.0, rng);
    for (const Tower* t : {&pi_, &vf_}) {
      std::fill_n(params_.begin() + t->b1, shape_.hidden, 0.0);
      std::fill_n(params_.begin() + t->b2, shape_.hidden, 0.0);
      std::fill_n(params_.begin() + t->b3, t == &pi_ ? shape_.actions : 1, 0.0);
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return size_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  void forward(std::span<const double> x, Cache& c) const {
    if (x.size() != shape_.inputs) {
      throw std::invalid_argument("observation length " + std::to_string(x.size()) +
                                  " does not match network input " + std::to_string(shape_.inputs));
    }
    c.input.assign(x.begin(), x.end());
    run_tower(pi_, shape_.actions, c.input, c.pi_h1, c.pi_h2, c.logits);
    std::vector<double> v;
    run_tower(vf_, 1, c.input, c.vf_h1, c.vf_h2, v);
    c.value = v[0];
  }

  /// Accumulates d(loss)/d(params) into `grad` given upstream gradients on the
  /// logits and the value output.
  void backward(const Cache& c, std::span<const double> d_logits, double d_value,
                std::span<double> grad) const {
    back_tower(pi_, shape_.actions, c.input, c.pi_h1, c.pi_h2, d_logits, grad);
    const double dv[1] = {d_value};
    back_tower(vf_, 1, c.input, c.vf_h1, c.vf_h2, dv, grad);
  }

  bool finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
  }

 private:
  struct Tower {
    std::size_t w1, b1, w2, b2, w3, b3;
  };

  void layout() {
    std::size_t off = 0;
    auto place = [&off](std::size_t n) {
      const std::size_t at = off;
      off += n;
      return at;
    };
    const std::size_t in = shape_.inputs, h = shape_.hidden;
    for (Tower* t : {&pi_, &vf_}) {
      const std::size_t out = (t == &pi_) ? shape_.actions : 1;
      t->w1 = place(h * in);
      t->b1 = place(h);
      t->w2 = place(h * h);
      t->b2 = place(h);
      t->w3 = place(out * h);
      t->b3 = place(out);
    }
    size_ = off;
  }

  // y = W x + b with W stored row-major (rows x cols).
  void affine(std::size_t w, std::size_t b, std::size_t rows, std::size_t cols, const std::vector<double>& x,
              std::vector<double>& y) const {
    y.resize(rows);
    const double* W = params_.data() + w;
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = params_[b + r];
      const double* row = W + r * cols;
      for (std::size_t k = 0; k < cols; ++k) acc += row[k] * x[k];
      y[r] = acc;
    }
  }

  void run_tower(const Tower& t, std::size_t out, const std::vector<double>& x, std::vector<double>& h1,
                 std::vector<double>& h2, std::vector<double>& y) const {
    const std::size_t in = shape_.inputs, h = shape_.hidden;
    affine(t.w1, t.b1, h, in, x, h1);
    for (double& v : h1) v = std::tanh(v);
    affine(t.w2, t.b2, h, h, h1, h2);
    for (double& v : h2) v = std::tanh(v);
    affine(t.w3, t.b3, out, h, h2, y);
  }

  void back_tower(const Tower& t, std::size_t out, const std::vector<double>& x, const std::vector<double>& h1,
                  const std::vector<double>& h2, std::span<const double> dy, std::span<double> grad) const {
    const std::size_t in = shape_.inputs, h = shape_.hidden;
    std::vector<double> dh2(h, 0.0), dh1(h, 0.0);

    // Output layer.
    for (std::size_t r = 0; r < out; ++r) {
      const double g = dy[r];
      if (g == 0.0) continue;
      grad[t.b3 + r] += g;
      double* gw = grad.data() + t.w3 + r * h;
      const double* w = params_.data() + t.w3 + r * h;
      for (std::size_t k = 0; k < h; ++k) {
        gw[k] += g * h2[k];
        dh2[k] += g * w[k];
      }
    }
    for (std::size_t k = 0; k < h; ++k) dh2[k] *= 1.0 - h2[k] * h2[k];

    // Second hidden layer.
    for (std::size_t r = 0; r < h; ++r) {
      const double g = dh2[r];
      grad[t.b2 + r] += g;
      double* gw = grad.data() + t.w2 + r * h;
      const double* w = params_.data() + t.w2 + r * h;
      for (std::size_t k = 0; k < h; ++k) {
        gw[k] += g * h1[k];
        dh1[k] += g * w[k];
      }
    }
    for (std::size_t k = 0; k < h; ++k) dh1[k] *= 1.0 - h1[k] * h1[k];

    // First hidden layer.
    for (std::size_t r = 0; r < h; ++r) {
      const double g = dh1[r];
      grad[t.b1 + r] += g;
      double* gw = grad.data() + t.w1 + r * in;
      for (std::size_t k = 0; k < in; ++k) gw[k] += g * x[k];
    }
  }

  // Fills a rows x cols block with a (semi-)orthogonal matrix scaled by gain.
  template <class Rng>
  void orthogonal(std::size_t offset, std::size_t rows, std::size_t cols, double gain, Rng& rng) {
    const bool tall = rows >= cols;
    const std::size_t n = tall ? rows : cols;  // vector length
    const std::size_t m = tall ? cols : rows;  // vector count
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> q(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i) {
      for (;;) {
        for (double& v : q[i]) v = normal(rng);
        // Modified Gram-Schmidt against the previous vectors.
        for (std::size_t j = 0; j < i; ++j) {
          double dot = 0.0;
          for (std::size_t k = 0; k < n; ++k) dot += q[i][k] * q[j][k];
          for (std::size_t k = 0; k < n; ++k) q[i][k] -= dot * q[j][k];
        }
        double norm = 0.0;
        for (double v : q[i]) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 1e-8) {
          for (double& v : q[i]) v /= norm;
          break;
        }
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        params_[offset + r * cols + c] = gain * (tall ? q[c][r] : q[r][c]);
      }
    }
  }

  Shape shape_{};
  Tower pi_{}, vf_{};
  std::size_t size_ = 0;
  std::vector<double> params_;
};

// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-5)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-5;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace chromamix

#endif  // CHROMAMIX_NETWORK_HPP_
