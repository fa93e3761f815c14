#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vernet/util.hpp"

namespace vernet {

// Shape disagreement between operands.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A softmax/mean slice with no valid entries.
class DegenerateSliceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's contract (wrong rank, non-scalar loss, ...).
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data, zero until backward touches it
  bool trainable = false;
};

// Dense row-major 64-bit tensor. Value-semantics handle over shared storage
// so backward closures can keep operands alive across the tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor from(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor randn(std::vector<int> shape, double stddev, Rng& rng);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(impl_->data.size()); }

  // 2-D accessors. The handle has shallow const semantics: storage lives
  // behind a shared pointer so backward closures can accumulate gradients
  // through by-value captures.
  int rows() const { return impl_->shape[0]; }
  int cols() const { return impl_->shape[1]; }
  double& at(int r, int c) const { return impl_->data[static_cast<std::size_t>(r) * cols() + c]; }
  double& at(int i) const { return impl_->data[static_cast<std::size_t>(i)]; }

  // scalar read; ContractError unless size() == 1
  double value() const;

  std::vector<double>& data() const { return impl_->data; }
  std::vector<double>& grad() const { return impl_->grad; }

  bool trainable() const { return impl_->trainable; }
  Tensor& set_trainable(bool t) {
    impl_->trainable = t;
    return *this;
  }

  void zero_grad() const { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }
  bool all_finite() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  TensorImpl* impl() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Define-by-run tape: every op appends one backward closure in execution
// order; backward(loss) seeds d(loss)=1 and replays them in exact reverse.
class Tape {
 public:
  void record(std::function<void()> fn) { records_.push_back(std::move(fn)); }
  void backward(const Tensor& loss);
  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<std::function<void()>> records_;
};

// --- operations -----------------------------------------------------------
// All ops validate shapes up front, compute the forward result, and record
// the gradient rule on the tape.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// a [r x s] times b^T where b is [t x s]; contiguous-dot form used by attention
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);
// v [r] (1-D) times m [r x d] -> [d]
Tensor row_matmul(Tape& tape, const Tensor& v, const Tensor& m);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul_scalar(Tape& tape, const Tensor& a, double c);
// x times the index-th element of s (s participates in the gradient)
Tensor scale_by_element(Tape& tape, const Tensor& x, const Tensor& s, int index);

// x [n x in] (or 1-D [in]) -> x.w + b with w [in x out], b [out]
Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);
// normalize the last axis; y = (x - mean)/sqrt(var + eps) * gain + bias
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// masked softmax along `axis`; mask (same shape, 0/1) marks valid entries.
// Masked entries are exactly 0 in the output and receive zero gradient.
Tensor softmax(Tape& tape, const Tensor& x, int axis, const Tensor* mask = nullptr);

Tensor gelu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, int axis);
Tensor slice_rows(Tape& tape, const Tensor& x, int r0, int r1);
Tensor slice_cols(Tape& tape, const Tensor& x, int c0, int c1);

// mean over one axis of a 2-D tensor -> 1-D
Tensor mean(Tape& tape, const Tensor& x, int axis);
// mean over every element -> scalar
Tensor mean_all(Tape& tape, const Tensor& x);
// mean over entries where mask (same shape, 0/1) is set -> scalar
Tensor mean_masked(Tape& tape, const Tensor& x, const Tensor& mask);
Tensor sum_all(Tape& tape, const Tensor& x);

// rows of `table` selected by ids; gradient scatter-adds into the table
Tensor embed_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids);

// mean over masked rows of -log softmax(logits)[target]; logits [n x classes]
Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<std::uint8_t>& mask);

}  // namespace vernet
