#include "clam/numerics.hpp"

#include "clam/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Config: return "config";
    case ErrorKind::Label: return "label";
    case ErrorKind::DegenerateBag: return "degenerate-bag";
    case ErrorKind::Format: return "format";
    case ErrorKind::Split: return "split";
    case ErrorKind::Sampler: return "sampler";
    case ErrorKind::Training: return "training";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Metric: return "metric";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorKind::Dimension,
                std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                    ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw Error(ErrorKind::Numeric, std::string(what) + " contains non-finite values");
}

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) throw Error(ErrorKind::Numeric, std::string(what) + " contains non-finite values");
}

Vector softmax(const Vector& v) {
  if (v.size() == 0) throw Error(ErrorKind::Dimension, "softmax of an empty vector");
  require_finite(v, "softmax input");
  const Vector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& m) {
  if (m.cols() == 0) throw Error(ErrorKind::Dimension, "softmax over zero columns");
  require_finite(m, "softmax input");
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto e = (m.row(r).array() - m.row(r).maxCoeff()).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) throw Error(ErrorKind::Dimension, "log-sum-exp of an empty vector");
  const double mx = v.maxCoeff();
  return mx + std::log((v.array() - mx).exp().sum());
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix tanh_array(const Matrix& x) {
  return (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

Matrix sigmoid_array(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Vector gated_activation(const Vector& h, const Matrix& ua, const Matrix& va, const Matrix& bu,
                        const Matrix& bv) {
  if (ua.cols() != h.size() || va.cols() != h.size() || ua.rows() != va.rows()) {
    throw Error(ErrorKind::Dimension, "gated_activation: Ua/Va must both be Hx" + std::to_string(h.size()));
  }
  Vector a = va * h;
  Vector b = ua * h;
  if (bv.size() != 0) {
    require_shape(bv, 1, va.rows(), "gated_activation bias bv");
    a += bv.transpose();
  }
  if (bu.size() != 0) {
    require_shape(bu, 1, ua.rows(), "gated_activation bias bu");
    b += bu.transpose();
  }
  Vector out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]) * sigmoid(b[i]);
  return out;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f, std::span<double> x,
                         std::span<const double> analytic_grad, double eps,
                         std::span<const std::size_t> coords) {
  if (!(eps > 0)) throw Error(ErrorKind::Config, "finite_diff_check: eps must be positive");
  if (analytic_grad.size() != x.size()) throw Error(ErrorKind::Dimension, "finite_diff_check: gradient size mismatch");

  double worst = 0.0;
  auto probe = [&](std::size_t i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double fp = f(x);
    x[i] = saved - eps;
    const double fm = f(x);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error(ErrorKind::Numeric, "finite_diff_check: non-finite objective at coordinate " + std::to_string(i));
    }
    const double numeric = (fp - fm) / (2.0 * eps);
    const double g = analytic_grad[i];
    worst = std::max(worst, std::abs(numeric - g) / std::max(1.0, std::abs(g)));
  };

  if (coords.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) probe(i);
  } else {
    for (std::size_t i : coords) {
      if (i >= x.size()) throw Error(ErrorKind::Dimension, "finite_diff_check: coordinate out of range");
      probe(i);
    }
  }
  return worst;
}

}  // namespace clam
