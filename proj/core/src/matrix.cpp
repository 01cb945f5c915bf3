#include "formguard/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace formguard::num {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Degree-13 Pade approximant of e^A, on a matrix pre-scaled so that ||A||_1 is
// moderate. Coefficients are the standard Pade(13,13) numerator coefficients.
Matrix pade13(const Matrix& a) {
    static const double c[] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const Eigen::Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = a * (a6 * (c[13] * a6 + c[11] * a4 + c[9] * a2) +
                          c[7] * a6 + c[5] * a4 + c[3] * a2 + c[1] * ident);
    const Matrix v = a6 * (c[12] * a6 + c[10] * a4 + c[8] * a2) +
                     c[6] * a6 + c[4] * a4 + c[2] * a2 + c[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Matrix matrix_exponential(const Matrix& m, double t) {
    if (m.rows() != m.cols()) {
        throw DimensionError("matrix_exponential: input must be square");
    }
    if (!all_finite(m) || !std::isfinite(t)) {
        throw DomainError("matrix_exponential: non-finite input");
    }
    Matrix a = m * t;
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    // Scale so the Pade approximant stays in its accuracy range (theta_13 ~ 5.37).
    int squarings = 0;
    if (norm > 5.37) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 5.37))));
        a /= std::pow(2.0, squarings);
    }
    Matrix e = pade13(a);
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e;
}

std::pair<Matrix, Matrix> zoh_discretize(const Matrix& a, const Matrix& b, double ts) {
    if (a.rows() != a.cols()) {
        throw DimensionError("zoh_discretize: A must be square");
    }
    if (b.rows() != a.rows()) {
        throw DimensionError("zoh_discretize: B row count must match A");
    }
    if (!(ts > 0.0) || !std::isfinite(ts)) {
        throw DomainError("zoh_discretize: Ts must be positive");
    }
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, m) = b;
    const Matrix e = matrix_exponential(aug, ts);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

std::vector<Vector> null_space(const Matrix& m, double rank_tol) {
    if (!all_finite(m)) throw DomainError("null_space: non-finite input");
    if (!(rank_tol > 0.0)) throw DomainError("null_space: rank_tol must be positive");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    std::vector<Vector> basis;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double sigma = j < sv.size() ? sv(j) : 0.0;
        if (sigma_max == 0.0 || sigma < rank_tol * sigma_max) {
            basis.push_back(svd.matrixV().col(j));
        }
    }
    return basis;
}

Matrix stabilizing_gain(const Matrix& ad, const Matrix& cd) {
    if (ad.rows() != ad.cols()) {
        throw DimensionError("stabilizing_gain: Ad must be square");
    }
    if (cd.cols() != ad.rows()) {
        throw DimensionError("stabilizing_gain: Cd column count must match Ad");
    }
    const Eigen::Index n = ad.rows();
    const Eigen::Index p = cd.rows();
    const Matrix q = Matrix::Identity(n, n);
    const Matrix r = Matrix::Identity(p, p);

    Matrix cov = Matrix::Identity(n, n);
    constexpr int kMaxIters = 50000;
    for (int it = 0; it < kMaxIters; ++it) {
        const Matrix s = cd * cov * cd.transpose() + r;
        const Matrix gain = s.ldlt().solve(cd * cov * ad.transpose()).transpose();
        Matrix next = ad * cov * ad.transpose() - gain * s * gain.transpose() + q;
        next = 0.5 * (next + next.transpose());  // keep symmetric against drift
        const double delta = (next - cov).norm() / std::max(1.0, cov.norm());
        cov = next;
        if (!all_finite(cov)) break;
        if (delta < 1e-13) break;
    }
    if (!all_finite(cov)) {
        throw DetectabilityError("stabilizing_gain: Riccati iteration diverged");
    }
    const Matrix s = cd * cov * cd.transpose() + r;
    const Matrix h = s.ldlt().solve(cd * cov * ad.transpose()).transpose();
    if (spectral_radius(ad - h * cd) >= 1.0) {
        throw DetectabilityError("stabilizing_gain: (Ad, Cd) pair is not detectable");
    }
    return h;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("spectral_radius: input must be square");
    }
    if (!all_finite(m)) throw DomainError("spectral_radius: non-finite input");
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace formguard::num
