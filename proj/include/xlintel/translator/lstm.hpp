#ifndef XLINTEL_TRANSLATOR_LSTM_HPP_
#define XLINTEL_TRANSLATOR_LSTM_HPP_

#include <cmath>
#include <utility>

#include <Eigen/Core>

#include "xlintel/errors.hpp"
#include "xlintel/tensor.hpp"

namespace xlintel {

// Gate rows are stacked i, f, g, o; each block is hidden() rows tall.
template <typename Scalar>
struct LstmCell {
  RowMatrix<Scalar> W_x;  // 4h x d
  RowMatrix<Scalar> W_h;  // 4h x h
  Vector<Scalar> b;       // 4h

  LstmCell() = default;
  LstmCell(Eigen::Index input_dim, Eigen::Index hidden_dim)
      : W_x(RowMatrix<Scalar>::Zero(4 * hidden_dim, input_dim)),
        W_h(RowMatrix<Scalar>::Zero(4 * hidden_dim, hidden_dim)),
        b(Vector<Scalar>::Zero(4 * hidden_dim)) {}

  Eigen::Index input_dim() const { return W_x.cols(); }
  Eigen::Index hidden() const { return W_h.cols(); }

  void set_zero() {
    W_x.setZero();
    W_h.setZero();
    b.setZero();
  }

  template <typename U>
  LstmCell<U> cast() const {
    LstmCell<U> out;
    out.W_x = W_x.template cast<U>();
    out.W_h = W_h.template cast<U>();
    out.b = b.template cast<U>();
    return out;
  }
};

namespace detail {

template <typename Derived>
auto logistic(const Eigen::ArrayBase<Derived>& x) {
  return (typename Derived::Scalar(1) + (-x).exp()).inverse();
}

}  // namespace detail

// Activations of one cell application over a batch (one column per sequence),
// kept for the backward pass.
template <typename Scalar>
struct LstmStepCache {
  Matrix<Scalar> x, h_prev, c_prev;
  Matrix<Scalar> i, f, g, o;
  Matrix<Scalar> c, tanh_c, h;
};

template <typename Scalar>
void lstm_forward(const LstmCell<Scalar>& cell, const Matrix<Scalar>& x, const Matrix<Scalar>& h_prev,
                  const Matrix<Scalar>& c_prev, LstmStepCache<Scalar>& cache) {
  const Eigen::Index h = cell.hidden();
  Matrix<Scalar> gates = cell.W_x * x;
  gates.noalias() += cell.W_h * h_prev;
  gates.colwise() += cell.b;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i = detail::logistic(gates.topRows(h).array()).matrix();
  cache.f = detail::logistic(gates.middleRows(h, h).array()).matrix();
  cache.g = gates.middleRows(2 * h, h).array().tanh().matrix();
  cache.o = detail::logistic(gates.bottomRows(h).array()).matrix();
  cache.c = (cache.f.array() * c_prev.array() + cache.i.array() * cache.g.array()).matrix();
  cache.tanh_c = cache.c.array().tanh().matrix();
  cache.h = (cache.o.array() * cache.tanh_c.array()).matrix();
}

// Accumulates parameter gradients into `grad` and returns (dx, dh_prev,
// dc_prev) through the out-parameters.
template <typename Scalar>
void lstm_backward(const LstmCell<Scalar>& cell, const LstmStepCache<Scalar>& cache,
                   const Matrix<Scalar>& dh, const Matrix<Scalar>& dc, LstmCell<Scalar>& grad,
                   Matrix<Scalar>* dx, Matrix<Scalar>& dh_prev, Matrix<Scalar>& dc_prev) {
  const Eigen::Index h = cell.hidden();
  const auto one = Scalar(1);
  Matrix<Scalar> dc_total =
      (dc.array() + dh.array() * cache.o.array() * (one - cache.tanh_c.array().square())).matrix();
  Matrix<Scalar> dgates(4 * h, dh.cols());
  dgates.topRows(h) =
      (dc_total.array() * cache.g.array() * cache.i.array() * (one - cache.i.array())).matrix();
  dgates.middleRows(h, h) =
      (dc_total.array() * cache.c_prev.array() * cache.f.array() * (one - cache.f.array())).matrix();
  dgates.middleRows(2 * h, h) =
      (dc_total.array() * cache.i.array() * (one - cache.g.array().square())).matrix();
  dgates.bottomRows(h) =
      (dh.array() * cache.tanh_c.array() * cache.o.array() * (one - cache.o.array())).matrix();
  dc_prev = (dc_total.array() * cache.f.array()).matrix();

  grad.W_x.noalias() += dgates * cache.x.transpose();
  grad.W_h.noalias() += dgates * cache.h_prev.transpose();
  grad.b.noalias() += dgates.rowwise().sum();
  if (dx) dx->noalias() = cell.W_x.transpose() * dgates;
  dh_prev.noalias() = cell.W_h.transpose() * dgates;
}

// One application on single vectors: (h', c').
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> lstm_step(const LstmCell<Scalar>& cell, const Vector<Scalar>& x,
                                                    const Vector<Scalar>& h, const Vector<Scalar>& c) {
  if (x.size() != cell.input_dim() || h.size() != cell.hidden() || c.size() != cell.hidden())
    throw InputError("lstm_step: shape mismatch");
  if (!x.allFinite() || !h.allFinite() || !c.allFinite()) throw NumericError("lstm_step: non-finite input");
  LstmStepCache<Scalar> cache;
  lstm_forward<Scalar>(cell, x, h, c, cache);
  return {cache.h.col(0), cache.c.col(0)};
}

}  // namespace xlintel

#endif  // XLINTEL_TRANSLATOR_LSTM_HPP_
