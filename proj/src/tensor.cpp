#include "ecan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecan/errors.hpp"

namespace ecan {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

constexpr double kNormFloor = 1e-12;

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor::Node& Tensor::node() {
  if (!node_) throw UsageError("tensor: use of undefined tensor");
  return *node_;
}

const Tensor::Node& Tensor::node() const {
  if (!node_) throw UsageError("tensor: use of undefined tensor");
  return *node_;
}

const std::vector<std::size_t>& Tensor::shape() const { return node().shape; }

std::size_t Tensor::numel() const { return node().values.size(); }

std::size_t Tensor::rank() const { return node().shape.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("tensor: rows() on rank-" + std::to_string(rank()));
  return node().shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("tensor: cols() on rank-" + std::to_string(rank()));
  return node().shape[1];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

std::vector<double>& Tensor::values() { return node().values; }

const std::vector<double>& Tensor::values() const { return node().values; }

std::vector<double>& Tensor::grad() { return node().ensure_grad(); }

bool Tensor::has_grad() const { return !node().grad.empty(); }

void Tensor::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("tensor: item() on " + shape_str(shape()));
  }
  return node().values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node().values[r * cols() + c];
}

Tensor Tensor::clone(bool requires_grad) const {
  return from(shape(), values(), requires_grad);
}

// ---------------------------------------------------------------------------
// Tape ops
// ---------------------------------------------------------------------------

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got rank-" +
                         std::to_string(t.rank()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor Tape::make_output(std::vector<std::size_t> shape,
                         std::vector<double> values, bool requires_grad) {
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  Tensor y = make_output({m, n}, std::move(out),
                         a.requires_grad() || b.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, bn = b.node_, yn = y.node_;
    record([an, bn, yn, m, k, n]() {
      if (yn->grad.empty()) return;
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& ga = an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double g = gy[i * n + j];
            for (std::size_t p = 0; p < k; ++p)
              ga[i * k + p] += g * bn->values[p * n + j];
          }
      }
      if (bn->requires_grad) {
        auto& gb = bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av_ip = an->values[i * k + p];
            for (std::size_t j = 0; j < n; ++j)
              gb[p * n + j] += av_ip * gy[i * n + j];
          }
      }
    });
  }
  return y;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tensor y = make_output(a.shape(), std::move(out),
                         a.requires_grad() || b.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, bn = b.node_, yn = y.node_;
    record([an, bn, yn]() {
      if (yn->grad.empty()) return;
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& ga = an->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (bn->requires_grad) {
        auto& gb = bn->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor Tape::add_rowvec(const Tensor& a, const Tensor& v) {
  require_rank2(a, "add_rowvec");
  if (v.rank() != 1 || v.numel() != a.cols()) {
    throw DimensionError("add_rowvec: vector length " + std::to_string(v.numel()) +
                         " vs " + std::to_string(a.cols()) + " columns");
  }
  const std::size_t n = a.rows(), m = a.cols();
  const auto& av = a.values();
  const auto& vv = v.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = av[i * m + j] + vv[j];
  Tensor y = make_output({n, m}, std::move(out),
                         a.requires_grad() || v.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, vn = v.node_, yn = y.node_;
    record([an, vn, yn, n, m]() {
      if (yn->grad.empty()) return;
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& ga = an->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (vn->requires_grad) {
        auto& gv = vn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) gv[j] += gy[i * m + j];
      }
    });
  }
  return y;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tensor y = make_output(a.shape(), std::move(out),
                         a.requires_grad() || b.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, bn = b.node_, yn = y.node_;
    record([an, bn, yn]() {
      if (yn->grad.empty()) return;
      const auto& gy = yn->grad;
      if (an->requires_grad) {
        auto& ga = an->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bn->values[i];
      }
      if (bn->requires_grad) {
        auto& gb = bn->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * an->values[i];
      }
    });
  }
  return y;
}

Tensor Tape::scale(const Tensor& a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = c * av[i];
  Tensor y = make_output(a.shape(), std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, c]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < yn->grad.size(); ++i) ga[i] += c * yn->grad[i];
    });
  }
  return y;
}

Tensor Tape::relu(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  Tensor y = make_output(a.shape(), std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < yn->grad.size(); ++i)
        if (an->values[i] > 0.0) ga[i] += yn->grad[i];
    });
  }
  return y;
}

Tensor Tape::exp(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
  Tensor y = make_output(a.shape(), std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < yn->grad.size(); ++i)
        ga[i] += yn->grad[i] * yn->values[i];
    });
  }
  return y;
}

Tensor Tape::log(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::log(av[i]);
  Tensor y = make_output(a.shape(), std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < yn->grad.size(); ++i)
        ga[i] += yn->grad[i] / an->values[i];
    });
  }
  return y;
}

Tensor Tape::clamp_min(const Tensor& a, double lo) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] < lo ? lo : av[i];
  Tensor y = make_output(a.shape(), std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, lo]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < yn->grad.size(); ++i)
        if (an->values[i] >= lo) ga[i] += yn->grad[i];
    });
  }
  return y;
}

Tensor Tape::transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t n = a.rows(), m = a.cols();
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
  Tensor y = make_output({m, n}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, n, m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += yn->grad[j * n + i];
    });
  }
  return y;
}

Tensor Tape::sum(const Tensor& a) {
  const auto& av = a.values();
  double s = 0.0;
  for (double x : av) s += x;
  Tensor y = make_output({1}, {s}, a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn]() {
      if (yn->grad.empty()) return;
      const double g = yn->grad[0];
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  }
  return y;
}

Tensor Tape::mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean: empty tensor");
  const auto& av = a.values();
  double s = 0.0;
  for (double x : av) s += x;
  const double inv = 1.0 / static_cast<double>(av.size());
  Tensor y = make_output({1}, {s * inv}, a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, inv]() {
      if (yn->grad.empty()) return;
      const double g = yn->grad[0] * inv;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  }
  return y;
}

Tensor Tape::row_sum(const Tensor& a) {
  require_rank2(a, "row_sum");
  const std::size_t n = a.rows(), m = a.cols();
  const auto& av = a.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += av[i * m + j];
  Tensor y = make_output({n}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, n, m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const double g = yn->grad[i];
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g;
      }
    });
  }
  return y;
}

Tensor Tape::col_mean(const Tensor& a) {
  require_rank2(a, "col_mean");
  const std::size_t n = a.rows(), m = a.cols();
  if (n == 0) throw DimensionError("col_mean: zero rows");
  const auto& av = a.values();
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += av[i * m + j];
  for (std::size_t j = 0; j < m; ++j) out[j] *= inv;
  Tensor y = make_output({m}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, n, m, inv]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += yn->grad[j] * inv;
    });
  }
  return y;
}

Tensor Tape::gather_rows(const Tensor& a, std::vector<std::size_t> indices) {
  require_rank2(a, "gather_rows");
  const std::size_t n = a.rows(), m = a.cols(), k = indices.size();
  for (std::size_t idx : indices)
    if (idx >= n)
      throw IndexError("gather_rows: index " + std::to_string(idx) +
                       " out of range [0, " + std::to_string(n) + ")");
  const auto& av = a.values();
  std::vector<double> out(k * m);
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t j = 0; j < m; ++j) out[t * m + j] = av[indices[t] * m + j];
  Tensor y = make_output({k, m}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, indices = std::move(indices), m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t t = 0; t < indices.size(); ++t)
        for (std::size_t j = 0; j < m; ++j)
          ga[indices[t] * m + j] += yn->grad[t * m + j];
    });
  }
  return y;
}

Tensor Tape::take(const Tensor& a, std::vector<std::size_t> indices) {
  if (a.rank() != 1) throw DimensionError("take: expected rank-1 tensor");
  const std::size_t n = a.numel(), k = indices.size();
  for (std::size_t idx : indices)
    if (idx >= n)
      throw IndexError("take: index " + std::to_string(idx) + " out of range [0, " +
                       std::to_string(n) + ")");
  const auto& av = a.values();
  std::vector<double> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t] = av[indices[t]];
  Tensor y = make_output({k}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, indices = std::move(indices)]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t t = 0; t < indices.size(); ++t)
        ga[indices[t]] += yn->grad[t];
    });
  }
  return y;
}

Tensor Tape::gather(const Tensor& a, std::vector<std::size_t> rows,
                    std::vector<std::size_t> cols) {
  require_rank2(a, "gather");
  if (rows.size() != cols.size())
    throw DimensionError("gather: row/col index count mismatch");
  const std::size_t n = a.rows(), m = a.cols(), k = rows.size();
  for (std::size_t t = 0; t < k; ++t)
    if (rows[t] >= n || cols[t] >= m)
      throw IndexError("gather: entry (" + std::to_string(rows[t]) + ", " +
                       std::to_string(cols[t]) + ") out of range");
  const auto& av = a.values();
  std::vector<double> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t] = av[rows[t] * m + cols[t]];
  Tensor y = make_output({k}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, rows = std::move(rows), cols = std::move(cols), m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      for (std::size_t t = 0; t < rows.size(); ++t)
        ga[rows[t] * m + cols[t]] += yn->grad[t];
    });
  }
  return y;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  require_rank2(a, "softmax_rows");
  const std::size_t n = a.rows(), m = a.cols();
  if (m == 0) throw DimensionError("softmax_rows: zero columns");
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = av[i * m];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, av[i * m + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = std::exp(av[i * m + j] - mx);
      s += out[i * m + j];
    }
    const double inv = 1.0 / s;
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] *= inv;
  }
  Tensor y = make_output({n, m}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, n, m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      // dx = y * (gy - <gy, y>) per row
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j)
          dot += yn->grad[i * m + j] * yn->values[i * m + j];
        for (std::size_t j = 0; j < m; ++j)
          ga[i * m + j] += yn->values[i * m + j] * (yn->grad[i * m + j] - dot);
      }
    });
  }
  return y;
}

Tensor Tape::l2_normalize_rows(const Tensor& a) {
  require_rank2(a, "l2_normalize_rows");
  const std::size_t n = a.rows(), m = a.cols();
  const auto& av = a.values();
  std::vector<double> out(av.size());
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) sq += av[i * m + j] * av[i * m + j];
    const double norm = std::sqrt(sq);
    if (norm < kNormFloor) {
      throw DegenerateFeatureError("l2_normalize_rows: row " + std::to_string(i) +
                                   " has norm below 1e-12");
    }
    norms[i] = norm;
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = av[i * m + j] / norm;
  }
  Tensor y = make_output({n, m}, std::move(out), a.requires_grad());
  if (y.requires_grad()) {
    auto an = a.node_, yn = y.node_;
    record([an, yn, norms = std::move(norms), n, m]() {
      if (yn->grad.empty()) return;
      auto& ga = an->ensure_grad();
      // dx = (gy - y * <gy, y>) / ||x|| per row
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j)
          dot += yn->grad[i * m + j] * yn->values[i * m + j];
        const double inv = 1.0 / norms[i];
        for (std::size_t j = 0; j < m; ++j)
          ga[i * m + j] +=
              (yn->grad[i * m + j] - yn->values[i * m + j] * dot) * inv;
      }
    });
  }
  return y;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward: loss must be a one-element tensor");
  }
  loss.node_->ensure_grad()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void l2_normalize_rows_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) sq += m.at(i, j) * m.at(i, j);
    const double norm = std::sqrt(sq);
    if (norm < kNormFloor) {
      throw DegenerateFeatureError("l2_normalize_rows: row " + std::to_string(i) +
                                   " has norm below 1e-12");
    }
    for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) /= norm;
  }
}

}  // namespace ecan
