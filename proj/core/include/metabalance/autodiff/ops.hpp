#pragma once

// Differentiable primitives. Every backward rule is written in terms of these
// same primitives, so gradients computed with create_graph=true are themselves
// differentiable.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance::ad {

namespace detail {

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
}

template <typename T>
using Tensors = std::vector<BasicTensor<T>>;

}  // namespace detail

template <typename T>
BasicTensor<T> constant(Matrix<T> value) {
  return BasicTensor<T>(std::move(value));
}

// Forward declarations for mutually recursive backward rules.
template <typename T> BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);
template <typename T> BasicTensor<T> div(const BasicTensor<T>&, const BasicTensor<T>&);
template <typename T> BasicTensor<T> scale(const BasicTensor<T>&, T);
template <typename T> BasicTensor<T> neg(const BasicTensor<T>&);
template <typename T> BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);
template <typename T> BasicTensor<T> transpose(const BasicTensor<T>&);
template <typename T> BasicTensor<T> sum(const BasicTensor<T>&);
template <typename T> BasicTensor<T> expand(const BasicTensor<T>&, Eigen::Index, Eigen::Index);
template <typename T> BasicTensor<T> sum_rows(const BasicTensor<T>&);
template <typename T> BasicTensor<T> sum_cols(const BasicTensor<T>&);
template <typename T> BasicTensor<T> broadcast_cols(const BasicTensor<T>&, Eigen::Index);
template <typename T> BasicTensor<T> broadcast_rows(const BasicTensor<T>&, Eigen::Index);
template <typename T> BasicTensor<T> exp(const BasicTensor<T>&);
template <typename T> BasicTensor<T> sigmoid(const BasicTensor<T>&);
template <typename T> BasicTensor<T> slice_rows(const BasicTensor<T>&, Eigen::Index, Eigen::Index);
template <typename T> BasicTensor<T> pad_rows(const BasicTensor<T>&, Eigen::Index, Eigen::Index);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  return BasicTensor<T>::make_result(
      a.value() + b.value(), {a, b},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) { return detail::Tensors<T>{g, g}; },
      "add");
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  return BasicTensor<T>::make_result(
      a.value() - b.value(), {a, b},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{g, neg(g)};
      },
      "sub");
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  return BasicTensor<T>::make_result(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](const BasicTensor<T>&, const BasicTensor<T>& g) {
        detail::Tensors<T> grads(2);
        if (a.requires_grad()) grads[0] = mul(g, b);
        if (b.requires_grad()) grads[1] = mul(g, a);
        return grads;
      },
      "mul");
}

template <typename T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "div");
  return BasicTensor<T>::make_result(
      a.value().cwiseQuotient(b.value()), {a, b},
      [a, b](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        // d(a/b)/db = -(a/b)/b
        return detail::Tensors<T>{div(g, b), neg(div(mul(g, self), b))};
      },
      "div");
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T c) {
  return BasicTensor<T>::make_result(
      a.value() * c, {a},
      [c](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{scale(g, c)};
      },
      "scale");
}

template <typename T>
BasicTensor<T> neg(const BasicTensor<T>& a) {
  return BasicTensor<T>::make_result(
      -a.value(), {a},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) { return detail::Tensors<T>{neg(g)}; },
      "neg");
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T c) {
  return BasicTensor<T>::make_result(
      (a.value().array() + c).matrix(), {a},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) { return detail::Tensors<T>{g}; },
      "add_scalar");
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " x " +
                     b.shape_string());
  Matrix<T> out = a.value() * b.value();
  return BasicTensor<T>::make_result(
      std::move(out), {a, b},
      [a, b](const BasicTensor<T>&, const BasicTensor<T>& g) {
        detail::Tensors<T> grads(2);
        if (a.requires_grad()) grads[0] = matmul(g, transpose(b));
        if (b.requires_grad()) grads[1] = matmul(transpose(a), g);
        return grads;
      },
      "matmul");
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().transpose()), {a},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{transpose(g)};
      },
      "transpose");
}

/// Sum of all elements, as a 1x1 tensor.
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  const auto r = a.rows();
  const auto c = a.cols();
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [r, c](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{expand(g, r, c)};
      },
      "sum");
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

/// Broadcasts a 1x1 tensor to rows x cols.
template <typename T>
BasicTensor<T> expand(const BasicTensor<T>& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.numel() != 1) throw ShapeError("expand: expected 1x1, got " + s.shape_string());
  return BasicTensor<T>::make_result(
      Matrix<T>::Constant(rows, cols, s.value()(0, 0)), {s},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) { return detail::Tensors<T>{sum(g)}; },
      "expand");
}

/// Row-wise sum: (n x c) -> (n x 1).
template <typename T>
BasicTensor<T> sum_rows(const BasicTensor<T>& a) {
  const auto c = a.cols();
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().rowwise().sum()), {a},
      [c](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{broadcast_cols(g, c)};
      },
      "sum_rows");
}

/// Column-wise sum: (n x c) -> (1 x c).
template <typename T>
BasicTensor<T> sum_cols(const BasicTensor<T>& a) {
  const auto n = a.rows();
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().colwise().sum()), {a},
      [n](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{broadcast_rows(g, n)};
      },
      "sum_cols");
}

/// (n x 1) -> (n x cols) by repeating the column.
template <typename T>
BasicTensor<T> broadcast_cols(const BasicTensor<T>& v, Eigen::Index cols) {
  if (v.cols() != 1) throw ShapeError("broadcast_cols: expected n x 1, got " + v.shape_string());
  return BasicTensor<T>::make_result(
      Matrix<T>(v.value().replicate(1, cols)), {v},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{sum_rows(g)};
      },
      "broadcast_cols");
}

/// (1 x c) -> (rows x c) by repeating the row.
template <typename T>
BasicTensor<T> broadcast_rows(const BasicTensor<T>& v, Eigen::Index rows) {
  if (v.rows() != 1) throw ShapeError("broadcast_rows: expected 1 x c, got " + v.shape_string());
  return BasicTensor<T>::make_result(
      Matrix<T>(v.value().replicate(rows, 1)), {v},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{sum_cols(g)};
      },
      "broadcast_rows");
}

/// Bias add: x (n x c) + b (1 x c) broadcast over rows.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ShapeError("add_bias: bias " + b.shape_string() + " incompatible with input " +
                     x.shape_string());
  Matrix<T> out = x.value();
  out.rowwise() += b.value().row(0);
  return BasicTensor<T>::make_result(
      std::move(out), {x, b},
      [](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{g, sum_cols(g)};
      },
      "add_bias");
}

/// ReLU with subgradient 0 at the kink.
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  Matrix<T> mask = (a.value().array() > T(0)).template cast<T>().matrix();
  Matrix<T> out = a.value().cwiseProduct(mask);
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [mask = std::move(mask)](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{mul(g, constant(mask))};
      },
      "relu");
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& a) {
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().array().tanh().matrix()), {a},
      [](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        // 1 - tanh^2, expressed through the output so it stays differentiable
        auto one_minus_sq = neg(add_scalar(mul(self, self), T(-1)));
        return detail::Tensors<T>{mul(g, one_minus_sq)};
      },
      "tanh");
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  Matrix<T> out = a.value().unaryExpr([](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  });
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        auto one_minus = neg(add_scalar(self, T(-1)));
        return detail::Tensors<T>{mul(g, mul(self, one_minus))};
      },
      "sigmoid");
}

/// log(1 + exp(x)), evaluated without overflow.
template <typename T>
BasicTensor<T> softplus(const BasicTensor<T>& a) {
  Matrix<T> out = a.value().unaryExpr([](T x) {
    return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
  });
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [a](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{mul(g, sigmoid(a))};
      },
      "softplus");
}

template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& a) {
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().array().exp().matrix()), {a},
      [](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        return detail::Tensors<T>{mul(g, self)};
      },
      "exp");
}

template <typename T>
BasicTensor<T> log(const BasicTensor<T>& a) {
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().array().log().matrix()), {a},
      [a](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{div(g, a)};
      },
      "log");
}

/// Elementwise x^p for a constant exponent.
template <typename T>
BasicTensor<T> pow(const BasicTensor<T>& a, T p) {
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().array().pow(p).matrix()), {a},
      [a, p](const BasicTensor<T>&, const BasicTensor<T>& g) {
        if (p == T(0)) return detail::Tensors<T>{scale(g, T(0))};
        return detail::Tensors<T>{mul(g, scale(pow(a, p - T(1)), p))};
      },
      "pow");
}

/// Row-wise log-softmax.
template <typename T>
BasicTensor<T> log_softmax(const BasicTensor<T>& a) {
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T m = x.row(i).maxCoeff();
    const T lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = (x.row(i).array() - lse).matrix();
  }
  const auto c = a.cols();
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [c](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        auto probs = exp(self);
        return detail::Tensors<T>{sub(g, mul(probs, broadcast_cols(sum_rows(g), c)))};
      },
      "log_softmax");
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& a) {
  return exp(log_softmax(a));
}

/// Rows [start, start+count).
template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + a.shape_string());
  const auto total = a.rows();
  return BasicTensor<T>::make_result(
      Matrix<T>(a.value().middleRows(start, count)), {a},
      [start, total](const BasicTensor<T>& self, const BasicTensor<T>& g) {
        return detail::Tensors<T>{pad_rows(g, start, total - start - self.rows())};
      },
      "slice_rows");
}

/// Inserts `before` zero rows above and `after` zero rows below.
template <typename T>
BasicTensor<T> pad_rows(const BasicTensor<T>& a, Eigen::Index before, Eigen::Index after) {
  Matrix<T> out = Matrix<T>::Zero(before + a.rows() + after, a.cols());
  out.middleRows(before, a.rows()) = a.value();
  const auto n = a.rows();
  return BasicTensor<T>::make_result(
      std::move(out), {a},
      [before, n](const BasicTensor<T>&, const BasicTensor<T>& g) {
        return detail::Tensors<T>{slice_rows(g, before, n)};
      },
      "pad_rows");
}

/// Stacks tensors with equal column counts vertically.
template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const auto cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw ShapeError("concat_rows: column mismatch " + parts.front().shape_string() + " vs " +
                       p.shape_string());
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    offsets.push_back(off);
    off += p.rows();
  }
  std::vector<BasicTensor<T>> inputs(parts.begin(), parts.end());
  std::vector<Eigen::Index> sizes;
  for (const auto& p : parts) sizes.push_back(p.rows());
  return BasicTensor<T>::make_result(
      std::move(out), std::move(inputs),
      [offsets, sizes](const BasicTensor<T>&, const BasicTensor<T>& g) {
        detail::Tensors<T> grads;
        for (std::size_t i = 0; i < offsets.size(); ++i)
          grads.push_back(slice_rows(g, offsets[i], sizes[i]));
        return grads;
      },
      "concat_rows");
}

/**
 * Inverted dropout. In training mode each element is kept with probability
 * 1 - p and scaled by 1 / (1 - p); evaluation mode and p == 0 return the
 * input unchanged.
 */
template <typename T, typename Rng>
BasicTensor<T> dropout(const BasicTensor<T>& a, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw ConfigError("dropout: probability must be in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  const T inv_keep = T(1) / static_cast<T>(1.0 - p);
  Matrix<T> mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv_keep : T(0);
  return mul(a, constant(std::move(mask)));
}

template <typename T>
BasicTensor<T> operator+(const BasicTensor<T>& a, const BasicTensor<T>& b) { return add(a, b); }
template <typename T>
BasicTensor<T> operator-(const BasicTensor<T>& a, const BasicTensor<T>& b) { return sub(a, b); }
template <typename T>
BasicTensor<T> operator*(const BasicTensor<T>& a, const BasicTensor<T>& b) { return mul(a, b); }
template <typename T>
BasicTensor<T> operator/(const BasicTensor<T>& a, const BasicTensor<T>& b) { return div(a, b); }
template <typename T>
BasicTensor<T> operator-(const BasicTensor<T>& a) { return neg(a); }
template <typename T>
BasicTensor<T> operator*(const BasicTensor<T>& a, T c) { return scale(a, c); }
template <typename T>
BasicTensor<T> operator*(T c, const BasicTensor<T>& a) { return scale(a, c); }

}  // namespace metabalance::ad
