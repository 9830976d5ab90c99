#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "hoir/nn/graph.hpp"

// Elementary differentiable ops over Graph<T>. Every op creates exactly one
// node; its backward closure accumulates into the inputs' gradient buffers.
// Closures capture the graph by pointer, so the graph must not move during a
// step. Kernels are either plain ordered loops or single-threaded Eigen
// products: results are bit-reproducible from run to run for a given build,
// which keeps training byte-deterministic.

namespace hoir::nn {

template <typename T>
int constant(Graph<T>& g, int rows, int cols, const std::vector<T>& values) {
  if (values.size() != static_cast<size_t>(rows) * cols)
    throw NnError("constant: data size mismatch");
  const int n = g.make(rows, cols);
  g.data(n).v = values;
  return n;
}

template <typename T>
int transpose(Graph<T>& g, int a) {
  const auto& A = g.data(a);
  const int n = g.make(A.cols, A.rows);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) O.at(j, i) = A.at(i, j);
  g.set_backward(n, [&g, a, n]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) A.grad_at(i, j) += O.g[static_cast<size_t>(j) * A.rows + i];
  });
  return n;
}

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
int matmul(Graph<T>& g, int a, int b) {
  const auto& A = g.data(a);
  const auto& B = g.data(b);
  if (A.cols != B.rows) throw NnError("matmul: inner dimension mismatch");
  const int n = g.make(A.rows, B.cols);
  auto& O = g.data(n);
  MatMap<T>(O.v.data(), O.rows, O.cols).noalias() =
      ConstMatMap<T>(A.v.data(), A.rows, A.cols) * ConstMatMap<T>(B.v.data(), B.rows, B.cols);
  g.set_backward(n, [&g, a, b, n]() {
    auto& A = g.data(a);
    auto& B = g.data(b);
    auto& O = g.data(n);
    const ConstMatMap<T> dO(O.g.data(), O.rows, O.cols);
    MatMap<T>(A.g.data(), A.rows, A.cols).noalias() +=
        dO * ConstMatMap<T>(B.v.data(), B.rows, B.cols).transpose();
    MatMap<T>(B.g.data(), B.rows, B.cols).noalias() +=
        ConstMatMap<T>(A.v.data(), A.rows, A.cols).transpose() * dO;
  });
  return n;
}

template <typename T>
int add(Graph<T>& g, int a, int b) {
  const auto& A = g.data(a);
  const auto& B = g.data(b);
  if (A.rows != B.rows || A.cols != B.cols) throw NnError("add: shape mismatch");
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (size_t i = 0; i < O.size(); ++i) O.v[i] = A.v[i] + B.v[i];
  g.set_backward(n, [&g, a, b, n]() {
    auto& A = g.data(a);
    auto& B = g.data(b);
    auto& O = g.data(n);
    for (size_t i = 0; i < O.size(); ++i) {
      A.g[i] += O.g[i];
      B.g[i] += O.g[i];
    }
  });
  return n;
}

// a (N x W) + bias (1 x W) broadcast over rows.
template <typename T>
int add_rowvec(Graph<T>& g, int a, int bias) {
  const auto& A = g.data(a);
  const auto& B = g.data(bias);
  if (B.rows != 1 || B.cols != A.cols) throw NnError("add_rowvec: bias shape mismatch");
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) O.at(i, j) = A.at(i, j) + B.at(0, j);
  g.set_backward(n, [&g, a, bias, n]() {
    auto& A = g.data(a);
    auto& B = g.data(bias);
    auto& O = g.data(n);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) {
        const T go = O.g[static_cast<size_t>(i) * O.cols + j];
        A.grad_at(i, j) += go;
        B.grad_at(0, j) += go;
      }
  });
  return n;
}

template <typename T>
int scale(Graph<T>& g, int a, double s) {
  const auto& A = g.data(a);
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (size_t i = 0; i < O.size(); ++i) O.v[i] = A.v[i] * static_cast<T>(s);
  g.set_backward(n, [&g, a, n, s]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    for (size_t i = 0; i < O.size(); ++i) A.g[i] += O.g[i] * static_cast<T>(s);
  });
  return n;
}

template <typename T>
int concat_cols(Graph<T>& g, const std::vector<int>& parts) {
  if (parts.empty()) throw NnError("concat_cols: no inputs");
  const int rows = g.data(parts[0]).rows;
  int cols = 0;
  for (int p : parts) {
    if (g.data(p).rows != rows) throw NnError("concat_cols: row mismatch");
    cols += g.data(p).cols;
  }
  const int n = g.make(rows, cols);
  auto& O = g.data(n);
  int off = 0;
  for (int p : parts) {
    const auto& P = g.data(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < P.cols; ++j) O.at(i, off + j) = P.at(i, j);
    off += P.cols;
  }
  g.set_backward(n, [&g, parts, n]() {
    auto& O = g.data(n);
    int off = 0;
    for (int p : parts) {
      auto& P = g.data(p);
      for (int i = 0; i < P.rows; ++i)
        for (int j = 0; j < P.cols; ++j)
          P.grad_at(i, j) += O.g[static_cast<size_t>(i) * O.cols + off + j];
      off += P.cols;
    }
  });
  return n;
}

template <typename T>
int slice_cols(Graph<T>& g, int a, int start, int width) {
  const auto& A = g.data(a);
  if (start < 0 || width <= 0 || start + width > A.cols) throw NnError("slice_cols: bad range");
  const int n = g.make(A.rows, width);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < width; ++j) O.at(i, j) = A.at(i, start + j);
  g.set_backward(n, [&g, a, n, start, width]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < width; ++j)
        A.grad_at(i, start + j) += O.g[static_cast<size_t>(i) * width + j];
  });
  return n;
}

// Row-by-row inner product of two equally shaped matrices -> N x 1.
template <typename T>
int rowwise_dot(Graph<T>& g, int a, int b) {
  const auto& A = g.data(a);
  const auto& B = g.data(b);
  if (A.rows != B.rows || A.cols != B.cols) throw NnError("rowwise_dot: shape mismatch");
  const int n = g.make(A.rows, 1);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i) {
    T acc = T(0);
    for (int j = 0; j < A.cols; ++j) acc += A.at(i, j) * B.at(i, j);
    O.at(i, 0) = acc;
  }
  g.set_backward(n, [&g, a, b, n]() {
    auto& A = g.data(a);
    auto& B = g.data(b);
    auto& O = g.data(n);
    for (int i = 0; i < A.rows; ++i) {
      const T go = O.g[static_cast<size_t>(i)];
      if (go == T(0)) continue;
      for (int j = 0; j < A.cols; ++j) {
        A.grad_at(i, j) += go * B.at(i, j);
        B.grad_at(i, j) += go * A.at(i, j);
      }
    }
  });
  return n;
}

// Scales row i of a (N x W) by s_i, s being N x 1.
template <typename T>
int mul_colvec(Graph<T>& g, int a, int s) {
  const auto& A = g.data(a);
  const auto& S = g.data(s);
  if (S.rows != A.rows || S.cols != 1) throw NnError("mul_colvec: scale shape mismatch");
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) O.at(i, j) = A.at(i, j) * S.at(i, 0);
  g.set_backward(n, [&g, a, s, n]() {
    auto& A = g.data(a);
    auto& S = g.data(s);
    auto& O = g.data(n);
    for (int i = 0; i < A.rows; ++i) {
      T sg = T(0);
      const T si = S.at(i, 0);
      for (int j = 0; j < A.cols; ++j) {
        const T go = O.g[static_cast<size_t>(i) * O.cols + j];
        A.grad_at(i, j) += go * si;
        sg += go * A.at(i, j);
      }
      S.grad_at(i, 0) += sg;
    }
  });
  return n;
}

template <typename T>
int softmax_rows(Graph<T>& g, int a) {
  const auto& A = g.data(a);
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (int i = 0; i < A.rows; ++i) {
    T mx = A.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
    T sum = T(0);
    for (int j = 0; j < A.cols; ++j) {
      const T e = std::exp(A.at(i, j) - mx);
      O.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < A.cols; ++j) O.at(i, j) /= sum;
  }
  g.set_backward(n, [&g, a, n]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    for (int i = 0; i < O.rows; ++i) {
      T dot = T(0);
      for (int j = 0; j < O.cols; ++j)
        dot += O.g[static_cast<size_t>(i) * O.cols + j] * O.at(i, j);
      for (int j = 0; j < O.cols; ++j) {
        const T yj = O.at(i, j);
        A.grad_at(i, j) += yj * (O.g[static_cast<size_t>(i) * O.cols + j] - dot);
      }
    }
  });
  return n;
}

// Exact GELU: x * Phi(x) with Phi the standard normal CDF.
template <typename T>
int gelu(Graph<T>& g, int a) {
  const auto& A = g.data(a);
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  const T inv_sqrt2 = T(0.7071067811865475244);
  for (size_t i = 0; i < O.size(); ++i) {
    const T x = A.v[i];
    O.v[i] = x * T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
  }
  g.set_backward(n, [&g, a, n]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    const T inv_sqrt2 = T(0.7071067811865475244);
    const T inv_sqrt2pi = T(0.3989422804014326779);
    for (size_t i = 0; i < O.size(); ++i) {
      const T x = A.v[i];
      const T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
      const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * x * x);
      A.g[i] += O.g[i] * (cdf + x * pdf);
    }
  });
  return n;
}

template <typename T>
int sigmoid(Graph<T>& g, int a) {
  const auto& A = g.data(a);
  const int n = g.make(A.rows, A.cols);
  auto& O = g.data(n);
  for (size_t i = 0; i < O.size(); ++i) O.v[i] = T(1) / (T(1) + std::exp(-A.v[i]));
  g.set_backward(n, [&g, a, n]() {
    auto& A = g.data(a);
    auto& O = g.data(n);
    for (size_t i = 0; i < O.size(); ++i) {
      const T y = O.v[i];
      A.g[i] += O.g[i] * y * (T(1) - y);
    }
  });
  return n;
}

// Mean squared error over all entries -> 1 x 1.
template <typename T>
int mse_loss(Graph<T>& g, int pred, int target) {
  const auto& P = g.data(pred);
  const auto& Y = g.data(target);
  if (P.rows != Y.rows || P.cols != Y.cols) throw NnError("mse_loss: shape mismatch");
  const int n = g.make(1, 1);
  auto& O = g.data(n);
  T acc = T(0);
  for (size_t i = 0; i < P.size(); ++i) {
    const T d = P.v[i] - Y.v[i];
    acc += d * d;
  }
  O.v[0] = acc / static_cast<T>(P.size());
  g.set_backward(n, [&g, pred, target, n]() {
    auto& P = g.data(pred);
    auto& Y = g.data(target);
    auto& O = g.data(n);
    const T go = O.g[0] * T(2) / static_cast<T>(P.size());
    for (size_t i = 0; i < P.size(); ++i) {
      const T d = P.v[i] - Y.v[i];
      P.g[i] += go * d;
      Y.g[i] -= go * d;
    }
  });
  return n;
}

// Image tensors below are laid out rows = channels, cols = H * W (row-major
// spatial). Spatial dimensions are passed alongside because the tensor shape
// alone cannot carry them.

namespace detail {

// Patch matrix for im2col convolution: rows = cin*k*k, cols = ho*wo, zeros
// where the kernel hangs over the padded border.
template <typename T>
void im2col(const TensorData<T>& X, int h, int w, int ksize, int stride, int pad, int ho, int wo,
            std::vector<T>& P) {
  const int cin = X.rows;
  P.assign(static_cast<size_t>(cin) * ksize * ksize * ho * wo, T(0));
  const size_t ncols = static_cast<size_t>(ho) * wo;
  for (int ic = 0; ic < cin; ++ic)
    for (int ky = 0; ky < ksize; ++ky)
      for (int kx = 0; kx < ksize; ++kx) {
        T* prow = P.data() + (static_cast<size_t>(ic) * ksize * ksize + ky * ksize + kx) * ncols;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            prow[oy * wo + ox] = X.v[static_cast<size_t>(ic) * (h * w) + iy * w + ix];
          }
        }
      }
}

}  // namespace detail

template <typename T>
int conv2d(Graph<T>& g, int input, int weight, int bias, int h, int w, int ksize, int stride,
           int pad) {
  const auto& X = g.data(input);
  const auto& W = g.data(weight);
  const auto& B = g.data(bias);
  const int cin = X.rows;
  if (X.cols != h * w) throw NnError("conv2d: spatial size mismatch");
  if (W.cols != cin * ksize * ksize) throw NnError("conv2d: weight shape mismatch");
  const int cout = W.rows;
  if (B.rows != 1 || B.cols != cout) throw NnError("conv2d: bias shape mismatch");
  const int ho = (h + 2 * pad - ksize) / stride + 1;
  const int wo = (w + 2 * pad - ksize) / stride + 1;
  if (ho <= 0 || wo <= 0) throw NnError("conv2d: empty output");

  const int n = g.make(cout, ho * wo);
  auto& O = g.data(n);
  std::vector<T> P;
  detail::im2col(X, h, w, ksize, stride, pad, ho, wo, P);
  MatMap<T> mo(O.v.data(), cout, ho * wo);
  mo.noalias() = ConstMatMap<T>(W.v.data(), W.rows, W.cols) *
                 ConstMatMap<T>(P.data(), cin * ksize * ksize, ho * wo);
  for (int oc = 0; oc < cout; ++oc) mo.row(oc).array() += B.at(0, oc);
  g.set_backward(n, [&g, input, weight, bias, n, h, w, ksize, stride, pad, ho, wo]() {
    auto& X = g.data(input);
    auto& W = g.data(weight);
    auto& B = g.data(bias);
    auto& O = g.data(n);
    const int cin = X.rows, cout = W.rows;
    const int prow_count = cin * ksize * ksize;
    // Rebuild the patch matrix rather than keeping it on the tape; im2col is
    // cheap next to the two products below.
    std::vector<T> P;
    detail::im2col(X, h, w, ksize, stride, pad, ho, wo, P);
    const ConstMatMap<T> dO(O.g.data(), cout, ho * wo);
    MatMap<T>(W.g.data(), W.rows, W.cols).noalias() +=
        dO * ConstMatMap<T>(P.data(), prow_count, ho * wo).transpose();
    for (int oc = 0; oc < cout; ++oc) B.grad_at(0, oc) += dO.row(oc).sum();
    std::vector<T> dP(static_cast<size_t>(prow_count) * ho * wo);
    MatMap<T>(dP.data(), prow_count, ho * wo).noalias() =
        ConstMatMap<T>(W.v.data(), W.rows, W.cols).transpose() * dO;
    // col2im scatter-add, plain ordered loops.
    const size_t ncols = static_cast<size_t>(ho) * wo;
    for (int ic = 0; ic < cin; ++ic)
      for (int ky = 0; ky < ksize; ++ky)
        for (int kx = 0; kx < ksize; ++kx) {
          const T* prow =
              dP.data() + (static_cast<size_t>(ic) * ksize * ksize + ky * ksize + kx) * ncols;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w) continue;
              X.g[static_cast<size_t>(ic) * (h * w) + iy * w + ix] += prow[oy * wo + ox];
            }
          }
        }
  });
  return n;
}

// 2x2 average pool, stride 2; h and w must be even.
template <typename T>
int avgpool2(Graph<T>& g, int input, int h, int w) {
  const auto& X = g.data(input);
  if (X.cols != h * w) throw NnError("avgpool2: spatial size mismatch");
  if (h % 2 != 0 || w % 2 != 0) throw NnError("avgpool2: odd spatial size");
  const int ho = h / 2, wo = w / 2;
  const int n = g.make(X.rows, ho * wo);
  auto& O = g.data(n);
  for (int c = 0; c < X.rows; ++c)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        O.at(c, oy * wo + ox) =
            (X.at(c, (2 * oy) * w + 2 * ox) + X.at(c, (2 * oy) * w + 2 * ox + 1) +
             X.at(c, (2 * oy + 1) * w + 2 * ox) + X.at(c, (2 * oy + 1) * w + 2 * ox + 1)) *
            T(0.25);
  g.set_backward(n, [&g, input, n, h, w, ho, wo]() {
    auto& X = g.data(input);
    auto& O = g.data(n);
    for (int c = 0; c < X.rows; ++c)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const T go = O.g[static_cast<size_t>(c) * (ho * wo) + oy * wo + ox] * T(0.25);
          X.grad_at(c, (2 * oy) * w + 2 * ox) += go;
          X.grad_at(c, (2 * oy) * w + 2 * ox + 1) += go;
          X.grad_at(c, (2 * oy + 1) * w + 2 * ox) += go;
          X.grad_at(c, (2 * oy + 1) * w + 2 * ox + 1) += go;
        }
  });
  return n;
}

// Nearest-neighbor 2x upsample.
template <typename T>
int upsample2(Graph<T>& g, int input, int h, int w) {
  const auto& X = g.data(input);
  if (X.cols != h * w) throw NnError("upsample2: spatial size mismatch");
  const int ho = h * 2, wo = w * 2;
  const int n = g.make(X.rows, ho * wo);
  auto& O = g.data(n);
  for (int c = 0; c < X.rows; ++c)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) O.at(c, oy * wo + ox) = X.at(c, (oy / 2) * w + ox / 2);
  g.set_backward(n, [&g, input, n, h, w, ho, wo]() {
    auto& X = g.data(input);
    auto& O = g.data(n);
    for (int c = 0; c < X.rows; ++c)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          X.grad_at(c, (oy / 2) * w + ox / 2) +=
              O.g[static_cast<size_t>(c) * (ho * wo) + oy * wo + ox];
  });
  return n;
}

// Bilinear sampling of a feature map (C x H*W) at N locations given in
// feature-index coordinates (N x 2 tensor, columns u,v). Coordinates are
// clamped to the valid range; they are treated as constants, so gradients
// flow into the feature map only. Output is N x C.
template <typename T>
int bilinear_gather(Graph<T>& g, int feat, int h, int w, int uv) {
  const auto& F = g.data(feat);
  const auto& U = g.data(uv);
  if (F.cols != h * w) throw NnError("bilinear_gather: spatial size mismatch");
  if (U.cols != 2) throw NnError("bilinear_gather: uv must be N x 2");
  const int N = U.rows, C = F.rows;
  const int n = g.make(N, C);
  auto& O = g.data(n);

  auto corners = [h, w](T uf, T vf, int& x0, int& y0, T& fu, T& fv) {
    uf = std::min(std::max(uf, T(0)), T(w - 1));
    vf = std::min(std::max(vf, T(0)), T(h - 1));
    x0 = std::min(static_cast<int>(uf), w - 2 >= 0 ? w - 2 : 0);
    y0 = std::min(static_cast<int>(vf), h - 2 >= 0 ? h - 2 : 0);
    fu = uf - T(x0);
    fv = vf - T(y0);
  };

  for (int i = 0; i < N; ++i) {
    int x0, y0;
    T fu, fv;
    corners(U.at(i, 0), U.at(i, 1), x0, y0, fu, fv);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    for (int c = 0; c < C; ++c) {
      const T v00 = F.at(c, y0 * w + x0), v01 = F.at(c, y0 * w + x1);
      const T v10 = F.at(c, y1 * w + x0), v11 = F.at(c, y1 * w + x1);
      O.at(i, c) = (T(1) - fv) * ((T(1) - fu) * v00 + fu * v01) +
                   fv * ((T(1) - fu) * v10 + fu * v11);
    }
  }
  g.set_backward(n, [&g, feat, uv, n, h, w, corners]() {
    auto& F = g.data(feat);
    auto& U = g.data(uv);
    auto& O = g.data(n);
    for (int i = 0; i < O.rows; ++i) {
      int x0, y0;
      T fu, fv;
      corners(U.at(i, 0), U.at(i, 1), x0, y0, fu, fv);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      for (int c = 0; c < O.cols; ++c) {
        const T go = O.g[static_cast<size_t>(i) * O.cols + c];
        if (go == T(0)) continue;
        F.grad_at(c, y0 * w + x0) += go * (T(1) - fv) * (T(1) - fu);
        F.grad_at(c, y0 * w + x1) += go * (T(1) - fv) * fu;
        F.grad_at(c, y1 * w + x0) += go * fv * (T(1) - fu);
        F.grad_at(c, y1 * w + x1) += go * fv * fu;
      }
    }
  });
  return n;
}

// Feature sampling for pixel-aligned queries. `uv` (N x 2, constant) holds
// image-pixel coordinates; the op converts them to feature-index coordinates
// as uf = u * (fw / img_w) - 0.5 (so the center of image pixel block i maps
// to feature index i), bilinearly samples the C x fh*fw map with border
// clamping, and zeroes the output row for any query outside the image
// rectangle [0, img_w) x [0, img_h). Gradients flow into the feature map for
// in-image rows only. `inside_out`, when given, receives the per-row flag.
template <typename T>
int pixel_index(Graph<T>& g, int feat, int fh, int fw, int img_h, int img_w, int uv,
                std::vector<uint8_t>* inside_out = nullptr) {
  const auto& F = g.data(feat);
  const auto& U = g.data(uv);
  if (F.cols != fh * fw) throw NnError("pixel_index: feature spatial size mismatch");
  if (U.cols != 2) throw NnError("pixel_index: uv must be N x 2");
  if (img_h <= 0 || img_w <= 0) throw NnError("pixel_index: bad image size");
  const int N = U.rows, C = F.rows;
  const T su = static_cast<T>(fw) / static_cast<T>(img_w);
  const T sv = static_cast<T>(fh) / static_cast<T>(img_h);

  auto inside = std::make_shared<std::vector<uint8_t>>(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const T u = U.at(i, 0), v = U.at(i, 1);
    (*inside)[i] = (u >= T(0) && u < static_cast<T>(img_w) && v >= T(0) &&
                    v < static_cast<T>(img_h))
                       ? 1
                       : 0;
  }
  if (inside_out) *inside_out = *inside;

  auto corners = [fh, fw, su, sv](T u, T v, int& x0, int& y0, T& fu, T& fv) {
    T uf = u * su - T(0.5);
    T vf = v * sv - T(0.5);
    uf = std::min(std::max(uf, T(0)), T(fw - 1));
    vf = std::min(std::max(vf, T(0)), T(fh - 1));
    x0 = std::min(static_cast<int>(uf), fw - 2 >= 0 ? fw - 2 : 0);
    y0 = std::min(static_cast<int>(vf), fh - 2 >= 0 ? fh - 2 : 0);
    fu = uf - T(x0);
    fv = vf - T(y0);
  };

  const int n = g.make(N, C);
  auto& O = g.data(n);
  for (int i = 0; i < N; ++i) {
    if (!(*inside)[i]) continue;  // row stays zero
    int x0, y0;
    T fu, fv;
    corners(U.at(i, 0), U.at(i, 1), x0, y0, fu, fv);
    const int x1 = std::min(x0 + 1, fw - 1), y1 = std::min(y0 + 1, fh - 1);
    for (int c = 0; c < C; ++c) {
      const T v00 = F.at(c, y0 * fw + x0), v01 = F.at(c, y0 * fw + x1);
      const T v10 = F.at(c, y1 * fw + x0), v11 = F.at(c, y1 * fw + x1);
      O.at(i, c) = (T(1) - fv) * ((T(1) - fu) * v00 + fu * v01) +
                   fv * ((T(1) - fu) * v10 + fu * v11);
    }
  }
  g.set_backward(n, [&g, feat, uv, n, fh, fw, corners, inside]() {
    auto& F = g.data(feat);
    auto& U = g.data(uv);
    auto& O = g.data(n);
    for (int i = 0; i < O.rows; ++i) {
      if (!(*inside)[i]) continue;
      int x0, y0;
      T fu, fv;
      corners(U.at(i, 0), U.at(i, 1), x0, y0, fu, fv);
      const int x1 = std::min(x0 + 1, fw - 1), y1 = std::min(y0 + 1, fh - 1);
      for (int c = 0; c < O.cols; ++c) {
        const T go = O.g[static_cast<size_t>(i) * O.cols + c];
        if (go == T(0)) continue;
        F.grad_at(c, y0 * fw + x0) += go * (T(1) - fv) * (T(1) - fu);
        F.grad_at(c, y0 * fw + x1) += go * (T(1) - fv) * fu;
        F.grad_at(c, y1 * fw + x0) += go * fv * (T(1) - fu);
        F.grad_at(c, y1 * fw + x1) += go * fv * fu;
      }
    }
  });
  return n;
}

// The two helpers below are compositions of the ops above (they add several
// nodes), provided because scaled dot-product attention is used in enough
// places to deserve one audited implementation.

// Single-head scaled dot-product attention. q: M x d, k: M' x d, v: M' x dv.
// Returns softmax(q k^T / sqrt(d)) v, shape M x dv.
template <typename T>
int attention(Graph<T>& g, int q, int k, int v) {
  const auto& Q = g.data(q);
  const auto& K = g.data(k);
  const auto& V = g.data(v);
  if (Q.cols != K.cols) throw NnError("attention: q/k width mismatch");
  if (K.rows != V.rows) throw NnError("attention: k/v row mismatch");
  const int scores = matmul(g, q, transpose(g, k));
  const int scaled = scale(g, scores, 1.0 / std::sqrt(static_cast<double>(Q.cols)));
  return matmul(g, softmax_rows(g, scaled), v);
}

// Multi-head self-attention over a token sequence (rows = tokens). The four
// projections are square (D x D) so the token width is preserved; columns are
// split into `heads` equal slices, attended independently, re-concatenated,
// and mixed by wo. Returns M x D.
template <typename T>
int multihead(Graph<T>& g, int tokens, int wq, int wk, int wv, int wo, int heads) {
  const auto& X = g.data(tokens);
  const int D = X.cols;
  for (int wnode : {wq, wk, wv, wo}) {
    const auto& W = g.data(wnode);
    if (W.rows != D || W.cols != D) throw NnError("multihead: projection must be D x D");
  }
  if (heads <= 0 || D % heads != 0) throw NnError("multihead: heads must divide token width");
  const int dh = D / heads;
  const int Qn = matmul(g, tokens, wq);
  const int Kn = matmul(g, tokens, wk);
  const int Vn = matmul(g, tokens, wv);
  std::vector<int> per_head;
  per_head.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const int qs = slice_cols(g, Qn, h * dh, dh);
    const int ks = slice_cols(g, Kn, h * dh, dh);
    const int vs = slice_cols(g, Vn, h * dh, dh);
    per_head.push_back(attention(g, qs, ks, vs));
  }
  return matmul(g, concat_cols(g, per_head), wo);
}

}  // namespace hoir::nn
