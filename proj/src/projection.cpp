#include "cemas/equilibrium.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace cemas {

EllipsoidProjector::EllipsoidProjector(const Matrix& H) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidInput("ellipsoid metric must be symmetric positive definite");
  }
  basis_ = eig.eigenvectors();
  weights_ = eig.eigenvalues();
}

EllipsoidProjection EllipsoidProjector::project(const Vector& u, double C) const {
  if (!(C > 0.0)) throw InvalidInput("ellipsoid level must be positive");
  const Vector z = basis_.transpose() * u;
  const Vector wz2 = weights_.cwiseProduct(z.cwiseAbs2());
  if (wz2.sum() <= C) return {u, 0.0};

  // phi(mu) = sum_i w_i z_i^2 / (1 + mu w_i)^2 - C is convex and strictly
  // decreasing on mu >= 0, so Newton from the left never overshoots; the
  // bracket guards against rounding.
  auto phi = [&](double mu) { return (wz2.array() / (1.0 + mu * weights_.array()).square()).sum() - C; };
  auto dphi = [&](double mu) {
    return -2.0 * (wz2.array() * weights_.array() / (1.0 + mu * weights_.array()).cube()).sum();
  };

  double lo = 0.0;
  double hi = 1.0;
  while (phi(hi) > 0.0) hi *= 2.0;
  double mu = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = phi(mu);
    if (std::abs(f) <= 1e-12 * C) break;
    if (f > 0.0) lo = mu; else hi = mu;
    double next = mu - f / dphi(mu);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == mu) break;
    mu = next;
  }

  const Vector scaled = z.array() / (1.0 + mu * weights_.array());
  return {basis_ * scaled, mu};
}

Vector project_ellipsoid(const Vector& u, const Matrix& H, double C) {
  return EllipsoidProjector(H).project(u, C).point;
}

}  // namespace cemas
