#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace clam {

// Dense row-major double matrices. Row vectors are 1xN matrices; the
// per-instance features and embeddings of a bag are the rows of a KxD matrix.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what);
void require_finite(const Matrix& m, std::string_view what);
void require_finite(const Vector& v, std::string_view what);

/// Max-subtracted softmax. Throws on empty or non-finite input.
Vector softmax(const Vector& v);

/// Row-wise softmax of a matrix, each row normalized independently.
Matrix softmax_rows(const Matrix& m);

/// log(sum(exp(v))) with max subtraction.
double log_sum_exp(const Vector& v);

double sigmoid(double x);

// Elementwise tanh and logistic built on exp, which Eigen vectorizes for
// doubles (its tanh is scalar). Absolute error stays within a few ulp of 1.
Matrix tanh_array(const Matrix& x);
Matrix sigmoid_array(const Matrix& x);

/// tanh(Va h + bv) * sigm(Ua h + bu) for a single embedding h.
/// Biases are optional row vectors; pass empty matrices to omit them.
Vector gated_activation(const Vector& h, const Matrix& ua, const Matrix& va,
                        const Matrix& bu = Matrix(), const Matrix& bv = Matrix());

/// Central-difference gradient check.
///
/// Returns max_i |(f(x + eps e_i) - f(x - eps e_i)) / 2eps - g_i| / max(1, |g_i|)
/// over the coordinates in `coords` (all coordinates when empty). `x` is
/// restored before returning.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<double> x, std::span<const double> analytic_grad, double eps = 1e-6,
                         std::span<const std::size_t> coords = {});

}  // namespace clam
