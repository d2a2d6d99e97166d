#pragma once

#include "subforest/common.hpp"

namespace subforest {

/// Lawson-Hanson active-set NNLS in Gram form:
///     min_{x >= 0} x'Qx - 2c'x
/// with Q symmetric positive semi-definite. Columns that are numerically
/// dependent on the current passive set are never admitted.
Vector nnls_gram(const Matrix& Q, const Vector& c, int max_iterations = 0);

/// min_{x >= 0} ||A x - b||^2, via nnls_gram on A'A.
Vector nnls(const Matrix& A, const Vector& b);

} // namespace subforest
