#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "workload/error.hpp"
#include "workload/profiler.hpp"

namespace workload {

namespace {

// Solves (T + alpha I) u = d column by column, T symmetric tridiagonal and
// positive semidefinite, so no pivoting is needed for alpha > 0.
Eigen::MatrixXd solve_shifted(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double alpha,
                              const Eigen::MatrixXd& d) {
  const Eigen::Index m = diag.size();
  Eigen::VectorXd c(m);
  Eigen::VectorXd piv(m);
  piv(0) = diag(0) + alpha;
  for (Eigen::Index i = 1; i < m; ++i) {
    c(i - 1) = sub(i - 1) / piv(i - 1);
    piv(i) = diag(i) + alpha - c(i - 1) * sub(i - 1);
  }
  Eigen::MatrixXd u = d;
  for (Eigen::Index i = 1; i < m; ++i) u.row(i) -= c(i - 1) * u.row(i - 1);
  u.row(m - 1) /= piv(m - 1);
  for (Eigen::Index i = m - 1; i-- > 0;) u.row(i) = u.row(i) / piv(i) - c(i) * u.row(i + 1);
  return u;
}

}  // namespace

std::vector<double> RidgeClassifier::default_alphas() {
  std::vector<double> out;
  for (int k = 0; k < 10; ++k) out.push_back(std::pow(10.0, -3.0 + 6.0 * k / 9.0));
  return out;
}

void RidgeClassifier::fit(std::span<const std::vector<double>> features, std::span<const Awp> labels,
                          std::span<const double> alphas_in) {
  if (features.size() != labels.size()) throw InvariantError("feature and label counts differ");
  if (features.empty()) throw InvariantError("classifier needs training data");
  std::array<std::size_t, kAwpCount> per_class{};
  for (Awp a : labels) ++per_class[static_cast<std::size_t>(a)];
  if (std::count(per_class.begin(), per_class.end(), std::size_t{0}) >= 2) {
    throw InvariantError("classifier needs at least two classes");
  }
  const std::vector<double> alphas =
      alphas_in.empty() ? default_alphas() : std::vector<double>(alphas_in.begin(), alphas_in.end());

  const auto n = static_cast<Eigen::Index>(features.size());
  const auto p = static_cast<Eigen::Index>(features.front().size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(features[i].size()) != p) throw InvariantError("feature vectors differ in length");
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(features[i].data(), p);
  }

  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::RowVectorXd scale = (x.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(scale(k) > 0.0)) scale(k) = 1.0;
  }
  x.array().rowwise() /= scale.array();

  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, kAwpCount, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) y(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  y.rowwise() -= y_mean;

  // The smaller Gram matrix is reduced once to G = Q T Q^T; each penalty is
  // then a tridiagonal solve and the hat-matrix trace needs eigenvalues only.
  const bool dual = n <= p;
  const Eigen::Index m = dual ? n : p;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  if (dual) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(gram);
  const Eigen::VectorXd diag = tri.diagonal();
  const Eigen::VectorXd sub = tri.subDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("ridge eigenvalue computation failed");
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  // Right-hand side in the tridiagonal basis: Q^T y (dual) or Q^T X^T y (primal).
  const Eigen::MatrixXd rhs = dual ? Eigen::MatrixXd(y) : Eigen::MatrixXd(x.transpose() * y);
  const Eigen::MatrixXd d = tri.matrixQ().adjoint() * rhs;
  const double y_norm2 = y.squaredNorm();

  double best_gcv = std::numeric_limits<double>::infinity();
  double best_alpha = alphas.front();
  Eigen::MatrixXd best_u;
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) throw InvariantError("ridge penalties must be positive");
    double trace = 0.0;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) trace += lambda(k) / (lambda(k) + alpha);
    Eigen::MatrixXd u = solve_shifted(diag, sub, alpha, d);
    // dual: y - Hy = alpha (K + alpha I)^-1 y. primal: |y - Xw|^2 expanded with
    // w^T G w = d^T u - alpha |u|^2.
    const double rss = dual ? alpha * alpha * u.squaredNorm()
                            : y_norm2 - (d.array() * u.array()).sum() - alpha * u.squaredNorm();
    const double dof = static_cast<double>(n) - trace;
    const double gcv = dof > 0.0 ? static_cast<double>(n) * rss / (dof * dof) : std::numeric_limits<double>::infinity();
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_alpha = alpha;
      best_u = std::move(u);
    }
  }
  if (best_u.size() == 0) best_u = solve_shifted(diag, sub, best_alpha, d);

  const Eigen::MatrixXd coef = tri.matrixQ() * best_u;
  const Eigen::MatrixXd w = dual ? Eigen::MatrixXd(x.transpose() * coef) : coef;

  alpha_ = best_alpha;
  mean_.assign(mean.data(), mean.data() + p);
  scale_.assign(scale.data(), scale.data() + p);
  weights_.assign(static_cast<std::size_t>(p), {});
  for (Eigen::Index k = 0; k < p; ++k) {
    for (std::size_t c = 0; c < kAwpCount; ++c) weights_[static_cast<std::size_t>(k)][c] = w(k, static_cast<Eigen::Index>(c));
  }
  for (std::size_t c = 0; c < kAwpCount; ++c) intercept_[c] = y_mean(static_cast<Eigen::Index>(c));
}

std::array<double, kAwpCount> RidgeClassifier::decision(std::span<const double> x) const {
  if (!fitted()) throw InvariantError("classifier is not fitted");
  if (x.size() != weights_.size()) throw InvariantError("feature vector length does not match the classifier");
  std::array<double, kAwpCount> out = intercept_;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double z = (x[k] - mean_[k]) / scale_[k];
    for (std::size_t c = 0; c < kAwpCount; ++c) out[c] += z * weights_[k][c];
  }
  return out;
}

ScoreVector RidgeClassifier::scores(std::span<const double> x) const {
  const auto d = decision(x);
  const double top = *std::max_element(d.begin(), d.end());
  ScoreVector s{};
  double total = 0.0;
  for (std::size_t c = 0; c < kAwpCount; ++c) {
    s[c] = std::exp(d[c] - top);
    total += s[c];
  }
  for (double& v : s) v /= total;
  return s;
}

}  // namespace workload
