#pragma once

// Test-only oracles: independent routes to the values the library computes.
// Nothing here may call into the code path it is used to check.

#include <algorithm>
#include <vector>

#include "fdisac/blocks.hpp"
#include "fdisac/system.hpp"

namespace oracles {

using fdisac::cx;
using fdisac::MatC;
using fdisac::Rng;
using fdisac::VecC;
using fdisac::VecR;

// ---------------------------------------------------------------------------
// Monte-Carlo SINR estimation from the received-signal equation: draw unit
// symbols and noise, accumulate the filtered signal and interference powers
// separately, and form the ratio of sample means.
// ---------------------------------------------------------------------------

struct McSinr {
    double signal_power = 0.0;
    double floor_power = 0.0;
    double sinr() const { return signal_power / floor_power; }
};

inline McSinr mc_radar_sinr(const fdisac::EffectiveChannels& eff,
                            const fdisac::DesignVariables& vars, double sigma_r_sq,
                            int num_draws, Rng& rng) {
    const Eigen::Index Nt = eff.H.cols(), Nr = eff.H.rows();
    const Eigen::RowVectorXcd echo = vars.u0.adjoint() * eff.H * vars.W;
    const Eigen::RowVectorXcd leak = vars.u0.adjoint() * eff.G * vars.W;
    std::vector<cx> user_gain(eff.hU.size());
    for (std::size_t k = 0; k < eff.hU.size(); ++k)
        user_gain[k] = std::sqrt(vars.q[static_cast<Eigen::Index>(k)]) * vars.u0.dot(eff.hU[k]);
    const double noise_gain = std::sqrt(sigma_r_sq);

    McSinr acc;
    for (int n = 0; n < num_draws; ++n) {
        cx sig = 0.0;
        for (Eigen::Index j = 0; j < Nt; ++j) sig += echo[j] * rng.complex_gaussian();
        cx interf = 0.0;
        for (Eigen::Index j = 0; j < Nt; ++j) interf += leak[j] * rng.complex_gaussian();
        for (const cx g : user_gain) interf += g * rng.complex_gaussian();
        cx noise_out = 0.0;
        for (Eigen::Index j = 0; j < Nr; ++j)
            noise_out += std::conj(vars.u0[j]) * noise_gain * rng.complex_gaussian();
        interf += noise_out;
        acc.signal_power += std::norm(sig);
        acc.floor_power += std::norm(interf);
    }
    acc.signal_power /= num_draws;
    acc.floor_power /= num_draws;
    return acc;
}

inline McSinr mc_user_sinr(const fdisac::EffectiveChannels& eff,
                           const fdisac::DesignVariables& vars, double sigma_r_sq, int user,
                           int num_draws, Rng& rng) {
    const auto& uk = vars.u[static_cast<std::size_t>(user)];
    const Eigen::Index Nt = eff.H.cols(), Nr = eff.H.rows();
    const Eigen::RowVectorXcd echo = uk.adjoint() * eff.H * vars.W;
    const Eigen::RowVectorXcd leak = uk.adjoint() * eff.G * vars.W;
    std::vector<cx> user_gain(eff.hU.size());
    for (std::size_t k = 0; k < eff.hU.size(); ++k)
        user_gain[k] = std::sqrt(vars.q[static_cast<Eigen::Index>(k)]) * uk.dot(eff.hU[k]);
    const double noise_gain = std::sqrt(sigma_r_sq);

    McSinr acc;
    for (int n = 0; n < num_draws; ++n) {
        const cx sig = user_gain[static_cast<std::size_t>(user)] * rng.complex_gaussian();
        cx interf = 0.0;
        for (std::size_t k = 0; k < user_gain.size(); ++k)
            if (static_cast<int>(k) != user) interf += user_gain[k] * rng.complex_gaussian();
        for (Eigen::Index j = 0; j < Nt; ++j) interf += echo[j] * rng.complex_gaussian();
        for (Eigen::Index j = 0; j < Nt; ++j) interf += leak[j] * rng.complex_gaussian();
        for (Eigen::Index j = 0; j < Nr; ++j)
            interf += std::conj(uk[j]) * noise_gain * rng.complex_gaussian();
        acc.signal_power += std::norm(sig);
        acc.floor_power += std::norm(interf);
    }
    acc.signal_power /= num_draws;
    acc.floor_power /= num_draws;
    return acc;
}

// ---------------------------------------------------------------------------
// Brute-force effective-channel assembly, elementwise.
// ---------------------------------------------------------------------------

inline MatC brute_force_reflected(const fdisac::ChannelSet& ch, const VecC& phi) {
    const Eigen::Index M = ch.G_t.rows(), Nt = ch.G_t.cols(), Nr = ch.G_r.cols();
    MatC G = MatC::Zero(Nr, Nt);
    for (Eigen::Index i = 0; i < Nr; ++i)
        for (Eigen::Index j = 0; j < Nt; ++j) {
            cx acc = std::conj(ch.H_s(j, i));
            for (Eigen::Index m = 0; m < M; ++m)
                acc += std::conj(ch.G_r(m, i)) * phi[m] * ch.G_t(m, j);
            G(i, j) = acc;
        }
    return G;
}

// ---------------------------------------------------------------------------
// Independent first-order oracles for the convex QCQP solver.
// ---------------------------------------------------------------------------

/// Projected gradient for  min w^H A w - 2Re(b^H w) + c  s.t. ||w - c0||^2 <= R^2.
inline double projected_gradient_ball(const MatC& A, const VecC& b, double c, const VecC& center,
                                      double radius, int iters) {
    Eigen::SelfAdjointEigenSolver<MatC> es(A);
    const double lip = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lip;
    VecC w = center;
    for (int i = 0; i < iters; ++i) {
        w -= step * 2.0 * (A * w - b);
        const VecC d = w - center;
        const double n = d.norm();
        if (n > radius) w = center + d * (radius / n);
    }
    return std::real((w.adjoint() * A * w).value()) - 2.0 * b.dot(w).real() + c;
}

/// Dual bisection for the single-ball case: lambda >= 0 with
/// w(lambda) = (A + lambda I)^{-1} (b + lambda c0); complementary slackness
/// pins lambda by the monotone radius of w(lambda) - c0.
inline double dual_bisection_ball(const MatC& A, const VecC& b, double c, const VecC& center,
                                  double radius) {
    auto w_of = [&](double lam) {
        const MatC m = A + lam * MatC::Identity(A.rows(), A.cols());
        return m.ldlt().solve((b + lam * center).eval()).eval();
    };
    auto obj = [&](const VecC& w) {
        return std::real((w.adjoint() * A * w).value()) - 2.0 * b.dot(w).real() + c;
    };
    // Interior optimum?
    {
        Eigen::SelfAdjointEigenSolver<MatC> es(A);
        if (es.eigenvalues().minCoeff() > 1e-12) {
            const VecC w = w_of(0.0);
            if ((w - center).norm() <= radius) return obj(w);
        }
    }
    double lo = 0.0, hi = 1.0;
    while ((w_of(hi) - center).norm() > radius) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((w_of(mid) - center).norm() > radius)
            lo = mid;
        else
            hi = mid;
    }
    return obj(w_of(hi));
}

/// Nested ternary search on the concave dual for two PSD quadratic
/// constraints; inner minimization of the Lagrangian is a linear solve.
struct TwoConstraintDual {
    MatC A;
    VecC b;
    double c = 0.0;
    MatC P1, P2;
    VecC r1, r2;
    double s1 = 0.0, s2 = 0.0;

    double lagrangian_min(double l1, double l2) const {
        const MatC m = A + l1 * P1 + l2 * P2 +
                       1e-13 * MatC::Identity(A.rows(), A.cols());
        const VecC rhs = b + l1 * r1 + l2 * r2;
        const VecC w = m.ldlt().solve(rhs);
        return std::real((w.adjoint() * m * w).value()) - 2.0 * rhs.dot(w).real() + c + l1 * s1 +
               l2 * s2 - 1e-13 * w.squaredNorm();
    }

    double inner_max_l2(double l1, double hi) const {
        double a = 0.0, b2 = hi;
        for (int i = 0; i < 120; ++i) {
            const double m1 = a + (b2 - a) / 3.0, m2 = b2 - (b2 - a) / 3.0;
            if (lagrangian_min(l1, m1) < lagrangian_min(l1, m2))
                a = m1;
            else
                b2 = m2;
        }
        return lagrangian_min(l1, 0.5 * (a + b2));
    }

    double solve(double hi = 1e4) const {
        double a = 0.0, b1 = hi;
        for (int i = 0; i < 120; ++i) {
            const double m1 = a + (b1 - a) / 3.0, m2 = b1 - (b1 - a) / 3.0;
            if (inner_max_l2(m1, hi) < inner_max_l2(m2, hi))
                a = m1;
            else
                b1 = m2;
        }
        return inner_max_l2(0.5 * (a + b1), hi);
    }
};

// ---------------------------------------------------------------------------
// Grid search for the power subproblem in t = sqrt(q) coordinates.
// ---------------------------------------------------------------------------

inline double power_grid_search(const VecR& a, const VecR& b, const VecR& d, double c3,
                                double c3_hat, const VecR& t_max, double resolution,
                                bool sensing) {
    const int K = static_cast<int>(a.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> steps(static_cast<std::size_t>(K));
    long total = 1;
    for (int k = 0; k < K; ++k) {
        // one extra point so the exact box edge is always on the lattice
        steps[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(t_max[k] / resolution)) + 2;
        total *= steps[static_cast<std::size_t>(k)];
    }
    std::vector<int> idx(static_cast<std::size_t>(K), 0);
    for (long n = 0; n < total; ++n) {
        long rem = n;
        double obj = -c3, load = 0.0;
        for (int k = 0; k < K; ++k) {
            const int i = static_cast<int>(rem % steps[static_cast<std::size_t>(k)]);
            rem /= steps[static_cast<std::size_t>(k)];
            const double t = std::min(i * resolution, t_max[k]);
            obj += a[k] * t * t + b[k] * t;
            load += d[k] * t * t;
        }
        if (sensing && load > c3_hat) continue;
        best = std::min(best, obj);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Dense generalized eigen-oracle for the radar filter direction.
// ---------------------------------------------------------------------------

inline VecC dominant_generalized_eigvec(const MatC& E2, const MatC& E1) {
    Eigen::GeneralizedSelfAdjointEigenSolver<MatC> ges(E2, E1);
    VecC v = ges.eigenvectors().col(E1.rows() - 1);
    return v / v.norm();
}

/// Angle between complex directions, insensitive to scale and phase.
inline double direction_angle(const VecC& a, const VecC& b) {
    const double cosang =
        std::min(1.0, std::abs(a.dot(b)) / std::max(a.norm() * b.norm(), 1e-300));
    return std::acos(cosang);
}

// ---------------------------------------------------------------------------
// Random PSD instance helpers.
// ---------------------------------------------------------------------------

inline MatC random_psd(Rng& rng, Eigen::Index n, double ridge = 0.0) {
    const MatC g = rng.complex_gaussian_matrix(n, n);
    return g * g.adjoint() / double(n) + ridge * MatC::Identity(n, n);
}

inline VecC random_vec(Rng& rng, Eigen::Index n) {
    VecC v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_gaussian();
    return v;
}

}  // namespace oracles
