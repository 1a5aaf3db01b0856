#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fdisac {

using cx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// Bad arguments or malformed problem data.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An internal invariant was broken (should not happen with valid inputs).
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A block update lost feasibility that an upstream invariant guaranteed.
class FeasibilityLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No feasible starting point exists for this scenario draw.
class InfeasibleScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Deterministic random stream with an explicit draw order. All Gaussian
/// draws go through the polar form below so a (config, seed) pair maps to a
/// bit-identical sequence on any platform with IEEE doubles.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Circularly symmetric complex Gaussian, zero mean, E|z|^2 = 1.
    cx complex_gaussian() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-std::log(u1));
        return std::polar(mag, 2.0 * M_PI * u2);
    }

    /// Real standard normal (two uniforms per draw, no cached spare).
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Unit-modulus phase vector exp(j theta), theta uniform in [0, 2pi).
    VecC unit_modulus_vector(Eigen::Index n) {
        VecC v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = std::polar(1.0, 2.0 * M_PI * uniform());
        return v;
    }

    MatC complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
        MatC m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = complex_gaussian();
        return m;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fdisac
