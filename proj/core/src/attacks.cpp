#include "formguard/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "formguard/orchestrator.hpp"

namespace formguard {

using num::Matrix;
using num::Vector;

namespace {

constexpr double kZeroConfirmTol = 1e-8;   // relative sigma_min cutoff at a zero
constexpr double kRealFilterTol = 1e-8;    // imaginary-part tolerance

// Deterministic standard-normal samples (Box-Muller over a seeded mt19937_64),
// independent of the standard library's distribution implementation.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
    double next() {
        double u1 = std::ldexp(static_cast<double>(rng_()) + 1.0, -64);
        double u2 = std::ldexp(static_cast<double>(rng_()), -64);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }
    Matrix matrix(Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = next();
        return m;
    }

private:
    std::mt19937_64 rng_;
};

struct PencilSvd {
    double sigma_min = 0.0;   // smallest of the min(rows, cols) singular values
    double sigma_max = 0.0;
    Vector kernel;            // V column past the numerical rank (unit norm)
    bool has_kernel = false;
};

PencilSvd pencil_svd(const Matrix& p) {
    Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullV);
    PencilSvd out;
    const Vector& sv = svd.singularValues();
    out.sigma_max = sv.size() ? sv(0) : 0.0;
    out.sigma_min = sv.size() ? sv(sv.size() - 1) : 0.0;
    // Kernel candidate: last column of V. For a wide pencil it always spans the
    // exact kernel; for a square/tall pencil it is meaningful only near a zero.
    if (p.cols() > 0) {
        out.kernel = svd.matrixV().col(p.cols() - 1);
        const double implicit_sigma = p.cols() > sv.size() ? 0.0 : out.sigma_min;
        out.has_kernel = out.sigma_max == 0.0 ||
                         implicit_sigma < kZeroConfirmTol * out.sigma_max;
    }
    return out;
}

Vector normalize_sign(Vector v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0.0) v = -v;
            break;
        }
    }
    return v;
}

// Real positive generalized eigenvalues of (M0 + lambda M1) v = 0 for a square
// pencil, each confirmed against the original (possibly non-square) pencil.
std::vector<double> candidate_rates_square(const Matrix& m0, const Matrix& m1) {
    Eigen::GeneralizedEigenSolver<Matrix> ges;
    ges.compute(-m0, m1, /*computeEigenvectors=*/false);
    std::vector<double> rates;
    for (Eigen::Index i = 0; i < ges.alphas().size(); ++i) {
        const std::complex<double> alpha = ges.alphas()(i);
        const double beta = ges.betas()(i);
        if (std::abs(beta) < 1e-12 * std::max(1.0, std::abs(alpha))) continue;
        const std::complex<double> lam = alpha / beta;
        if (std::abs(lam.imag()) > kRealFilterTol * std::max(1.0, std::abs(lam.real())))
            continue;
        if (lam.real() > 0.0 && std::isfinite(lam.real())) rates.push_back(lam.real());
    }
    return rates;
}

std::vector<double> candidate_rates(const Matrix& m0, const Matrix& m1) {
    const Eigen::Index rows = m0.rows();
    const Eigen::Index cols = m0.cols();
    if (rows == cols) return candidate_rates_square(m0, m1);
    // Square the pencil down with two independent deterministic projections;
    // spurious compression roots differ between them and fail SVD confirmation.
    std::vector<double> rates;
    for (std::uint64_t seed : {0x5eedf00dULL, 0xbadcafeULL}) {
        GaussianStream gs(seed);
        Matrix q0, q1;
        if (rows > cols) {
            const Matrix w = gs.matrix(cols, rows);
            q0 = w * m0;
            q1 = w * m1;
        } else {
            const Matrix v = gs.matrix(cols, rows);
            q0 = m0 * v;
            q1 = m1 * v;
        }
        auto found = candidate_rates_square(q0, q1);
        rates.insert(rates.end(), found.begin(), found.end());
    }
    return rates;
}

}  // namespace

Matrix build_pencil_from(const Matrix& a, const Matrix& b, const Matrix& c,
                         double lambda) {
    const Eigen::Index n = a.rows();
    Matrix p = Matrix::Zero(n + c.rows(), n + b.cols());
    p.topLeftCorner(n, n) = lambda * Matrix::Identity(n, n) - a;
    p.topRightCorner(n, b.cols()) = -b;
    p.bottomLeftCorner(c.rows(), n) = c;
    return p;
}

Matrix build_pencil(const NetworkModel& model, double lambda) {
    return build_pencil_from(model.at(1).a, model.b_attack, model.c, lambda);
}

bool pencil_is_degenerate(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (b.cols() > c.rows()) return true;  // wide pencil: kernel at every rate
    // Structurally singular square/tall pencils show a kernel at generic probes.
    for (double probe : {0.7312913, 2.1840569, 5.0421337}) {
        if (!pencil_svd(build_pencil_from(a, b, c, probe)).has_kernel) return false;
    }
    return true;
}

namespace {

// With a trivial kernel of C (full column selection), C x0 = 0 forces x0 = 0 and
// no stealthy direction can exist at any rate.
bool output_matrix_blocks_all_directions(const Matrix& c) {
    if (c.rows() < c.cols()) return false;
    Eigen::JacobiSVD<Matrix> svd(c);
    const Vector& sv = svd.singularValues();
    return sv(sv.size() - 1) > kZeroConfirmTol * sv(0);
}

}  // namespace

std::vector<InvariantZero> find_invariant_zeros(const NetworkModel& model) {
    const Matrix& a = model.at(1).a;
    const Matrix& b = model.b_attack;
    const Matrix& c = model.c;
    if (b.cols() == 0) throw ZeroDynamicsError("no unstable zero dynamics: empty attack set");
    if (output_matrix_blocks_all_directions(c)) {
        throw ZeroDynamicsError(
            "no unstable zero dynamics: the output matrix has full column rank, "
            "so no state direction is invisible");
    }

    std::vector<InvariantZero> zeros;
    if (pencil_is_degenerate(a, b, c)) {
        // Stealthy directions exist at every positive rate; report the canonical
        // representative so downstream selection stays deterministic.
        const auto svd = pencil_svd(build_pencil_from(a, b, c, kCanonicalZeroRate));
        zeros.push_back({kCanonicalZeroRate, normalize_sign(svd.kernel)});
        return zeros;
    }

    const Matrix m0 = build_pencil_from(a, b, c, 0.0);
    Matrix m1 = Matrix::Zero(m0.rows(), m0.cols());
    m1.topLeftCorner(a.rows(), a.rows()) = Matrix::Identity(a.rows(), a.rows());

    for (double lam : candidate_rates(m0, m1)) {
        const auto svd = pencil_svd(build_pencil_from(a, b, c, lam));
        if (svd.sigma_min >= kZeroConfirmTol * svd.sigma_max) continue;
        const bool duplicate =
            std::any_of(zeros.begin(), zeros.end(), [&](const InvariantZero& z) {
                return std::abs(z.lambda - lam) <= 1e-7 * std::max(1.0, std::abs(lam));
            });
        if (!duplicate) zeros.push_back({lam, normalize_sign(svd.kernel)});
    }
    std::sort(zeros.begin(), zeros.end(),
              [](const auto& l, const auto& r) { return l.lambda < r.lambda; });
    if (zeros.empty()) {
        throw ZeroDynamicsError("no unstable zero dynamics: pencil keeps full rank "
                                "for every positive real rate");
    }
    return zeros;
}

namespace {

// Smallest growth rate at which the discretized pencil loses rank: generalized
// eigenvalues mu of the discrete pencil pair filtered to real mu > 1, each
// SVD-confirmed. Returns ln(mu)/Ts.
double smallest_discrete_zero_rate(const Matrix& ad, const Matrix& bd, const Matrix& c,
                                   double ts) {
    const Matrix m0 = build_pencil_from(ad, bd, c, 0.0);
    Matrix m1 = Matrix::Zero(m0.rows(), m0.cols());
    m1.topLeftCorner(ad.rows(), ad.rows()) = Matrix::Identity(ad.rows(), ad.rows());
    double best = 0.0;
    for (double mu : candidate_rates(m0, m1)) {
        if (mu <= 1.0) continue;  // growth only
        const auto svd = pencil_svd(build_pencil_from(ad, bd, c, mu));
        if (svd.sigma_min >= kZeroConfirmTol * svd.sigma_max) continue;
        const double rate = std::log(mu) / ts;
        if (best == 0.0 || rate < best) best = rate;
    }
    if (best == 0.0) {
        throw ZeroDynamicsError("no unstable zero dynamics: discretized pencil keeps "
                                "full rank for every growth rate");
    }
    return best;
}

}  // namespace

ZdaPlan synthesize_zda(const NetworkModel& model, double scale, const ZdaOptions& options) {
    if (scale == 0.0) throw DomainError("synthesize_zda: scale must be nonzero");
    if (model.compromised.empty()) {
        throw ZeroDynamicsError("no unstable zero dynamics: empty attack set");
    }
    const ModeMatrices& m1 = model.at(1);
    const int n = model.state_dim();
    const int na = static_cast<int>(model.b_attack.cols());
    if (output_matrix_blocks_all_directions(model.c)) {
        throw ZeroDynamicsError(
            "no unstable zero dynamics: the output matrix has full column rank");
    }

    // Stealthiness must hold in the sampled closed loop, so the kernel comes
    // from the discretized pencil at mu = e^{lambda Ts}. A degenerate pencil
    // admits every positive rate (canonical default, config-overridable); an
    // isolated-zero pencil pins the admissible discrete rates itself.
    const bool degenerate = pencil_is_degenerate(m1.ad, m1.bd_attack, model.c);
    double default_rate = kCanonicalZeroRate;
    if (!degenerate) {
        default_rate = smallest_discrete_zero_rate(m1.ad, m1.bd_attack, model.c, model.ts);
    }

    ZdaPlan plan;
    plan.compromised = model.compromised;
    plan.scale = scale;
    plan.ts = model.ts;
    plan.lambda = {options.lambda_x.value_or(default_rate),
                   options.lambda_y.value_or(default_rate)};

    for (int axis = 0; axis < kAxes; ++axis) {
        const double lambda = plan.lambda[axis];
        if (!(lambda > 0.0)) throw DomainError("synthesize_zda: rate must be positive");
        const double mu = std::exp(lambda * model.ts);
        Matrix pd = build_pencil_from(m1.ad, m1.bd_attack, model.c, mu);
        const auto svd = pencil_svd(pd);
        if (!svd.has_kernel) {
            throw ZeroDynamicsError(
                "no unstable zero dynamics: discrete pencil keeps full rank at rate " +
                std::to_string(lambda));
        }
        Vector v = svd.kernel;
        Vector x0 = v.head(n);
        Vector u0 = v.tail(na);

        if (plan.designated == 0) {
            int designated = options.designated.value_or(0);
            if (designated == 0) {
                x0.head(model.n_agents).cwiseAbs().maxCoeff(&designated);
                designated += 1;  // back to 1-based
            }
            plan.designated = designated;
        }
        const double offset = x0(plan.designated - 1);
        if (std::abs(offset) < 1e-12 * x0.norm()) {
            throw DomainError("synthesize_zda: designated agent " +
                              std::to_string(plan.designated) +
                              " has no position offset in the stealthy direction");
        }
        const double factor = scale / offset;
        x0 *= factor;
        u0 *= factor;
        plan.x0_attack[axis] = x0;
        plan.u0[axis] = u0;
        Vector stacked(n + na);
        stacked << x0, u0;
        plan.pencil_residual[axis] = (pd * stacked).norm();
        plan.continuous_pencil_residual[axis] =
            (build_pencil_from(m1.a, model.b_attack, model.c, lambda) * stacked).norm();
    }
    return plan;
}

Matrix zda_signal(const ZdaPlan& plan, long k) {
    if (k < 0) throw DomainError("zda_signal: step index must be non-negative");
    Matrix u(plan.u0[0].size(), kAxes);
    for (int axis = 0; axis < kAxes; ++axis) {
        u.col(axis) = plan.u0[axis] * std::exp(plan.lambda[axis] * double(k) * plan.ts);
    }
    return u;
}

double CovertWaveform::value(double t) const {
    switch (kind) {
        case Kind::ramp: return p1 * t;
        case Kind::step: return p1;
        case Kind::sinusoid: return p1 * std::sin(2.0 * std::numbers::pi * p2 * t);
    }
    return 0.0;
}

void CovertPlan::reset_shadow(int state_dim) {
    for (auto& s : shadow) s = Vector::Zero(state_dim);
}

Matrix covert_attack_input(const CovertPlan& plan, double t) {
    const auto na = static_cast<Eigen::Index>(plan.compromised.size());
    Matrix u = Matrix::Zero(na, kAxes);
    if (t < plan.start_time) return u;
    for (int axis = 0; axis < kAxes; ++axis) {
        u.col(axis).setConstant(plan.waveform[axis].value(t - plan.start_time));
    }
    return u;
}

Matrix covert_sensor_signal(CovertPlan& plan, const NetworkModel& model, long k,
                            const Matrix& u_a_k) {
    if (plan.shadow[0].size() != model.state_dim()) plan.reset_shadow(model.state_dim());
    const ModeMatrices& m1 = model.at(1);
    Matrix us(model.output_dim(), kAxes);
    const double t = double(k) * model.ts;
    for (int axis = 0; axis < kAxes; ++axis) {
        us.col(axis) = model.c * plan.shadow[axis];
        // Shadow runs the attacker's mode-1 model copy; it never tracks switches.
        if (t >= plan.start_time) {
            plan.shadow[axis] =
                m1.ad * plan.shadow[axis] + m1.bd_attack * u_a_k.col(axis);
        }
    }
    return us;
}

int ReplayPlan::window_ticks(double ts) const {
    return static_cast<int>(std::llround(record_window / ts));
}

void ReplayPlan::validate() const {
    if (!(record_window > 0.0)) throw DomainError("replay: record window must be positive");
    if (!(start_time > record_window)) {
        throw DomainError("replay: attack start must exceed the record window");
    }
    if (dos_targets.empty()) throw DomainError("replay: DoS target set is empty");
}

void replay_record(ReplayPlan& plan, const std::array<Vector, kAxes>& y, double ts) {
    const auto window = static_cast<std::size_t>(plan.window_ticks(ts));
    if (plan.buffer.size() < window) {
        plan.buffer.push_back(y);
    } else {
        plan.buffer[plan.recorded % window] = y;
    }
    ++plan.recorded;
}

Matrix replay_sensor_signal(const ReplayPlan& plan, const NetworkModel& model,
                            const PlantState& x_now, long k) {
    const auto window = static_cast<std::size_t>(plan.window_ticks(model.ts));
    if (plan.buffer.size() < window) {
        throw DomainError("replay: buffer not yet full at attack start");
    }
    const long k_start = std::lround(plan.start_time / model.ts);
    if (k < k_start) throw DomainError("replay: queried before the attack start");
    // Loop position of tick k inside the recorded window, oldest sample first.
    const std::size_t offset = static_cast<std::size_t>(k - k_start) % window;
    const std::size_t idx = (plan.recorded + offset) % window;
    Matrix us(model.output_dim(), kAxes);
    for (int axis = 0; axis < kAxes; ++axis) {
        us.col(axis) = model.c * x_now.x[axis] - plan.buffer[idx][axis];
    }
    return us;
}

Topology apply_dos(const Topology& topo, const std::set<int>& targets) {
    Topology out;
    out.n_agents = topo.n_agents;
    out.mode_id = topo.mode_id;
    for (const auto& e : topo.edges) {
        if (!targets.count(e.first) && !targets.count(e.second)) out.edges.insert(e);
    }
    return out;
}

StealthinessVerdict verify_stealthiness(const RunLog& attacked, const RunLog& nominal,
                                        double tol) {
    if (attacked.ticks.size() != nominal.ticks.size() || attacked.ts != nominal.ts) {
        throw DimensionError("verify_stealthiness: logs do not share Ts and horizon");
    }
    StealthinessVerdict verdict;
    for (std::size_t k = 0; k < attacked.ticks.size(); ++k) {
        const auto& ya = attacked.ticks[k].y_transmitted;
        const auto& yn = nominal.ticks[k].y_transmitted;
        for (int axis = 0; axis < kAxes; ++axis) {
            if (ya[axis].size() != yn[axis].size()) {
                throw DimensionError("verify_stealthiness: output dimensions differ");
            }
            const double dev = (ya[axis] - yn[axis]).cwiseAbs().maxCoeff();
            verdict.max_deviation = std::max(verdict.max_deviation, dev);
            if (dev > tol && verdict.stealthy) {
                verdict.stealthy = false;
                verdict.first_violation_time = attacked.ticks[k].time;
            }
        }
    }
    return verdict;
}

}  // namespace formguard
