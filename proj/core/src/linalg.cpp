#include "vfp/linalg.hpp"

#include "vfp/error.hpp"

namespace vfp {

Matrix dense_solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "dense_solve: incompatible shapes");
    }
    return a.partialPivLu().solve(b);
}

}  // namespace vfp
