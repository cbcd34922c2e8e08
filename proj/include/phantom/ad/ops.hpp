#pragma once

// Differentiable primitives over Var. Binary elementwise ops broadcast a
// dimension of size 1 against the other operand (row vectors, column vectors
// and scalars); gradients are reduced back over the broadcast dimension.

#include <cstddef>
#include <vector>

#include "phantom/ad/var.hpp"

namespace phantom::ad {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

Var matmul(const Var& a, const Var& b);

Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
/// Identity inside [lo, hi], constant (zero gradient) outside.
Var clamp(const Var& a, double lo, double hi);

/// Elementwise log(e^a + e^b).
Var logaddexp(const Var& a, const Var& b);
/// Row-wise log-sum-exp: (r x c) -> (r x 1).
Var logsumexp_rows(const Var& a);

Var sum(const Var& a);            // -> 1 x 1
Var mean(const Var& a);           // -> 1 x 1
Var sum_cols(const Var& a);       // (r x c) -> (r x 1)
Var sum_rows(const Var& a);       // (r x c) -> (1 x c)

Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);

/// out(i, j) = a(i', index(i, j)) with i' = i, or 0 when `a` has one row.
/// `index` is row-major with `rows` rows and `cols` columns.
Var gather_cols(const Var& a, const std::vector<std::size_t>& index, std::size_t rows,
                std::size_t cols);

/// Elementwise zero-inflated Poisson log-probability of `counts` with
/// activity probability sigmoid(logit_alpha) and rate softplus(pre_lambda).
/// The activity probability is clipped to [1e-7, 1 - 1e-7]; outside that band
/// the logit carries no gradient.
Var zip_log_prob(const Var& logit_alpha, const Var& pre_lambda, const Tensor& counts);

/// Logit bound equivalent to clipping sigmoid output to [1e-7, 1 - 1e-7].
double activity_logit_bound();

// Scalar link functions shared with the non-differentiable code paths.
double sigmoid(double x);
double softplus(double x);
double log_sigmoid(double x);

}  // namespace phantom::ad
