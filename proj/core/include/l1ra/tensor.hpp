// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace l1ra {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Empty until a gradient is first accumulated.
  std::vector<double> grad;
  bool requires_grad = false;
};

/// Dense row-major array of doubles with an optional gradient accumulator.
///
/// A Tensor is a shared handle: copies alias the same storage, which is what
/// lets the tape route gradients back into parameters. Use clone() for an
/// independent copy. Rank-1 tensors of length n act as a 1 x n row wherever a
/// row-broadcast is accepted.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  /// Leading dimension of a matrix; 1 for a rank-1 tensor.
  std::size_t rows() const;
  /// Trailing dimension.
  std::size_t cols() const;

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  double& operator[](std::size_t i) { return impl_->data[i]; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double& at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient storage, allocated (zero-filled) on first access. Like the
  /// handle itself, constness does not propagate to the shared storage.
  std::span<double> grad() const;
  void zero_grad();
  void clear_grad() { impl_->grad.clear(); }

  /// Replaces shape and contents in place; every handle observes the change.
  /// Any accumulated gradient is dropped.
  void reset(Shape shape, std::vector<double> values);

  /// Deep copy without gradient; requires_grad is preserved.
  Tensor clone() const;

  /// Identity of the underlying storage.
  const TensorImpl* id() const { return impl_.get(); }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

/// Ordered record of backward closures for one forward pass.
///
/// Operations append a closure only when one of their inputs requires a
/// gradient. backward() replays the closures in reverse order exactly once and
/// then releases them together with the intermediates they hold.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  void record(BackwardFn fn);
  void backward(const Tensor& loss);
  void clear();

  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<BackwardFn> records_;
  bool consumed_ = false;
};

}  // namespace l1ra
