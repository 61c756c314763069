#ifndef XLINTEL_TENSOR_HPP_
#define XLINTEL_TENSOR_HPP_

#include <Eigen/Core>

namespace xlintel {

// Parameters are stored row-major so checkpoints can stream data() directly.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

}  // namespace xlintel

#endif  // XLINTEL_TENSOR_HPP_
