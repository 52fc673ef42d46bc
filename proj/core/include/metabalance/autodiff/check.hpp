#pragma once

// Finite-difference validation of first- and second-order tape gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "metabalance/autodiff/grad.hpp"

namespace metabalance::ad {

/// Scalar objective over a list of parameter tensors.
using Objective = std::function<Tensor(const std::vector<Tensor>& params)>;

/**
 * Relative error between two flat vectors: ||a - b|| / max(||a||, ||b||).
 * Both-zero compares equal. When both norms are below `floor` the absolute
 * difference is returned instead, so exact zeros (e.g. a vanishing Hessian)
 * are not divided by roundoff.
 */
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             double floor = 1e-12) {
  const double diff = (a - b).norm();
  const double scale = std::max(a.norm(), b.norm());
  if (scale < floor) return diff;
  return diff / scale;
}

namespace detail {

inline std::vector<Tensor> make_leaves(const std::vector<MatrixD>& values) {
  std::vector<Tensor> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(Tensor::parameter(v));
  return out;
}

inline Eigen::VectorXd flatten(const std::vector<MatrixD>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Eigen::VectorXd out(n);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    off += p.size();
  }
  return out;
}

inline std::vector<MatrixD> unflatten(const Eigen::VectorXd& flat,
                                      const std::vector<MatrixD>& like) {
  std::vector<MatrixD> out;
  Eigen::Index off = 0;
  for (const auto& p : like) {
    MatrixD m(p.rows(), p.cols());
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(off, p.size());
    off += p.size();
    out.push_back(std::move(m));
  }
  return out;
}

inline Eigen::VectorXd tape_gradient(const Objective& f, const std::vector<MatrixD>& at) {
  auto leaves = make_leaves(at);
  auto g = grad(f(leaves), leaves);
  std::vector<MatrixD> vals;
  for (const auto& t : g) vals.push_back(t.value());
  return flatten(vals);
}

}  // namespace detail

/// Central finite-difference gradient of f at `at` with step h.
inline Eigen::VectorXd finite_difference_gradient(const Objective& f,
                                                  const std::vector<MatrixD>& at,
                                                  double h = 1e-5) {
  const Eigen::VectorXd x = detail::flatten(at);
  Eigen::VectorXd out(x.size());
  NoGradGuard no_grad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fp = f(detail::make_leaves(detail::unflatten(xp, at))).item();
    const double fm = f(detail::make_leaves(detail::unflatten(xm, at))).item();
    out(i) = (fp - fm) / (2.0 * h);
  }
  return out;
}

/// Relative error of the tape gradient against central differences.
inline double gradient_check(const Objective& f, const std::vector<MatrixD>& at,
                             double h = 1e-5) {
  return relative_error(detail::tape_gradient(f, at), finite_difference_gradient(f, at, h));
}

/// Hessian-vector product H(at) * v by double backward through the tape.
inline Eigen::VectorXd tape_hvp(const Objective& f, const std::vector<MatrixD>& at,
                                const Eigen::VectorXd& v) {
  auto leaves = detail::make_leaves(at);
  auto g = grad(f(leaves), leaves, /*create_graph=*/true);
  auto vs = detail::unflatten(v, at);
  Tensor dot = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < g.size(); ++i) dot = add(dot, sum(mul(g[i], constant(vs[i]))));
  if (!dot.requires_grad()) return Eigen::VectorXd::Zero(v.size());
  auto hv = grad(dot, leaves);
  std::vector<MatrixD> vals;
  for (const auto& t : hv) vals.push_back(t.value());
  return detail::flatten(vals);
}

/// H * v by central differences of the tape gradient along v.
inline Eigen::VectorXd finite_difference_hvp(const Objective& f,
                                             const std::vector<MatrixD>& at,
                                             const Eigen::VectorXd& v, double h = 1e-5) {
  const Eigen::VectorXd x = detail::flatten(at);
  const Eigen::VectorXd gp = detail::tape_gradient(f, detail::unflatten(x + h * v, at));
  const Eigen::VectorXd gm = detail::tape_gradient(f, detail::unflatten(x - h * v, at));
  return (gp - gm) / (2.0 * h);
}

/**
 * Largest relative error between tape HVPs and finite-difference HVPs over
 * the given probe directions.
 */
inline double grad_of_grad_check(const Objective& f, const std::vector<MatrixD>& at,
                                 const std::vector<Eigen::VectorXd>& directions,
                                 double h = 1e-5) {
  double worst = 0.0;
  for (const auto& v : directions)
    worst = std::max(worst, relative_error(tape_hvp(f, at, v), finite_difference_hvp(f, at, v, h)));
  return worst;
}

}  // namespace metabalance::ad
