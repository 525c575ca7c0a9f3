#pragma once

#include <Eigen/Dense>

namespace vfp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// V^π as an |S| vector. Kept as a plain Eigen vector so the value-space
/// arithmetic (differences, spans, projections) reads naturally.
using ValueVector = Eigen::VectorXd;

inline double max_abs(const Eigen::Ref<const Vector>& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Solves A x = b for every column of b with partial-pivot LU.
Matrix dense_solve(const Matrix& a, const Matrix& b);

}  // namespace vfp
