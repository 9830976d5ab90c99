#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "hoir/common.hpp"

namespace hoir::nn {

struct NnError : Error {
  using Error::Error;
};

// Dense row-major matrix with a paired gradient buffer. The scalar type is
// templated so the same model code runs in float for training and double for
// finite-difference verification.
template <typename T>
struct TensorData {
  int rows = 0, cols = 0;
  std::vector<T> v;
  std::vector<T> g;

  TensorData() = default;
  TensorData(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)),
                             g(static_cast<size_t>(r) * c, T(0)) {}

  size_t size() const { return v.size(); }
  T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  T at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  T& grad_at(int r, int c) { return g[static_cast<size_t>(r) * cols + c]; }
};

// Reverse-mode tape. Nodes are created in topological order (an op may only
// read already-created nodes), so backward() is a single reverse sweep.
template <typename T>
class Graph {
 public:
  using Node = int;

  Node make(int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw NnError("make: non-positive tensor shape");
    tensors_.emplace_back(rows, cols);
    backward_fns_.emplace_back();
    return static_cast<Node>(tensors_.size() - 1);
  }

  // Ops call this right after filling the node's forward value; the closure
  // may capture the node's own id.
  void set_backward(Node n, std::function<void()> fn) {
    backward_fns_.at(static_cast<size_t>(n)) = std::move(fn);
  }

  TensorData<T>& data(Node n) { return tensors_.at(static_cast<size_t>(n)); }
  const TensorData<T>& data(Node n) const { return tensors_.at(static_cast<size_t>(n)); }
  size_t node_count() const { return tensors_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation order.
  void backward(Node loss) {
    auto& l = data(loss);
    if (l.rows != 1 || l.cols != 1)
      throw NnError("backward: loss must be a scalar, got " + std::to_string(l.rows) + "x" +
                    std::to_string(l.cols));
    l.g[0] = T(1);
    for (size_t i = tensors_.size(); i-- > 0;) {
      if (i <= static_cast<size_t>(loss) && backward_fns_[i]) backward_fns_[i]();
    }
  }

  void zero_grad() {
    for (auto& t : tensors_) std::fill(t.g.begin(), t.g.end(), T(0));
  }

 private:
  // Deque keeps references to existing nodes valid while ops append new ones;
  // op bodies hold `data(a)` references across `make` calls.
  std::deque<TensorData<T>> tensors_;
  std::vector<std::function<void()>> backward_fns_;
};

}  // namespace hoir::nn
