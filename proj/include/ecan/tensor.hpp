#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "ecan/matrix.hpp"

namespace ecan {

// Dense real array with an optional gradient buffer. Copies are handles to
// shared storage; Tape op outputs allocate fresh storage. Gradients are
// summed into lazily-allocated zero buffers, so a tensor reached by several
// paths accumulates every contribution. Callers zero grads between steps.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t numel() const;
  std::size_t rank() const;
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only
  bool requires_grad() const;

  std::vector<double>& values();
  const std::vector<double>& values() const;

  /// Gradient buffer, allocated as zeros on first access.
  std::vector<double>& grad();
  bool has_grad() const;
  void zero_grad();

  /// Value of a one-element tensor.
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  /// Deep copy with fresh storage and no gradient.
  Tensor clone(bool requires_grad = false) const;

 private:
  struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until touched
    bool requires_grad = false;

    std::vector<double>& ensure_grad() {
      if (grad.empty()) grad.assign(values.size(), 0.0);
      return grad;
    }
  };

  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  Node& node();
  const Node& node() const;

  std::shared_ptr<Node> node_;
  friend class Tape;
};

// Reverse-mode tape. Ops append their backward closures in execution order;
// backward() replays them once, in reverse. One tape per training step; the
// tape is not shared across threads.
class Tape {
 public:
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  /// a[n x m] + v[m], v broadcast over rows.
  Tensor add_rowvec(const Tensor& a, const Tensor& v);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor relu(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor clamp_min(const Tensor& a, double lo);
  Tensor transpose(const Tensor& a);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  /// Per-row sums of a rank-2 tensor: [n x m] -> [n].
  Tensor row_sum(const Tensor& a);
  /// Per-column means of a rank-2 tensor: [n x m] -> [m].
  Tensor col_mean(const Tensor& a);
  /// Row selection: [n x m] -> [k x m]. Duplicate indices sum in backward.
  Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices);
  /// Element selection from a rank-1 tensor.
  Tensor take(const Tensor& a, std::vector<std::size_t> indices);
  /// Entry selection (rows[i], cols[i]) from a rank-2 tensor -> [k].
  Tensor gather(const Tensor& a, std::vector<std::size_t> rows,
                std::vector<std::size_t> cols);
  /// Row-wise softmax with max-subtraction.
  Tensor softmax_rows(const Tensor& a);
  /// Rows scaled to unit Euclidean norm; rows with norm < 1e-12 are rejected.
  Tensor l2_normalize_rows(const Tensor& a);

  /// Seeds d(loss)=1 and propagates through recorded ops in reverse order.
  void backward(const Tensor& loss);

  std::size_t recorded_ops() const { return ops_.size(); }
  void clear() { ops_.clear(); }

 private:
  Tensor make_output(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad);
  void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

  std::vector<std::function<void()>> ops_;
};

/// Plain (gradient-free) row normalization, shared by bank updates and
/// anywhere a detached copy of normalized features is needed.
void l2_normalize_rows_inplace(Matrix& m);

}  // namespace ecan
