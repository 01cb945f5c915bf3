#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formguard/errors.hpp"

namespace formguard::num {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value cutoff used for numerical rank decisions.
inline constexpr double kDefaultRankTol = 1e-8;

/// e^{M t} by scaling-and-squaring with a degree-13 Pade approximant.
/// Throws DimensionError for non-square M, DomainError for non-finite input.
Matrix matrix_exponential(const Matrix& m, double t);

/// Exact zero-order-hold discretization of x' = A x + B u at step ts:
/// Ad = e^{A ts}, Bd = (integral_0^ts e^{A tau} dtau) B, both obtained from one
/// exponential of the (n+m)-augmented block matrix.
std::pair<Matrix, Matrix> zoh_discretize(const Matrix& a, const Matrix& b, double ts);

/// Orthonormal basis of the numerical kernel of m: right singular vectors whose
/// singular value is below rank_tol * sigma_max. Columns of V beyond min(rows, cols)
/// count as zero singular values, so a wide matrix always reports its kernel.
/// An empty result means full column rank at the given tolerance.
std::vector<Vector> null_space(const Matrix& m, double rank_tol = kDefaultRankTol);

/// Steady-state predictor gain H of the discrete Riccati equation with identity
/// state weighting and unit output weighting, so that spectral_radius(Ad - H Cd) < 1.
/// Throws DetectabilityError when the iteration fails to produce a stabilizing gain.
Matrix stabilizing_gain(const Matrix& ad, const Matrix& cd);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& m);

}  // namespace formguard::num
