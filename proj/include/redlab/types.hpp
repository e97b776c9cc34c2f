#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace redlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// Flat layout of the product basis |g, n>: channel-major, instrument-minor.
// Channel g = 0 is the non-measured/background channel, g = 1..n_channels
// are the measured channels; n = 0..n_readings-1 indexes instrument states.
struct ProductBasisIndex {
    int g = 0;
    int n = 0;

    static ProductBasisIndex from_flat(int flat, int n_readings) {
        return {flat / n_readings, flat % n_readings};
    }
    int flat(int n_readings) const { return g * n_readings + n; }
};

namespace defaults {
// Pole-proximity guard, relative to the local pole spacing.
inline constexpr double tol_pole_rel = 1e-8;
// Poles whose residue falls below tol_residue_rel * max residue are
// deactivated (removable singularities).
inline constexpr double tol_residue_rel = 1e-14;
// Root acceptance: |f(root)| <= tol_root * local evaluation scale.
inline constexpr double tol_root = 1e-10;
// Bisection/secant stops when the bracket width <= bracket_rel * (1 + |eta|).
inline constexpr double bracket_rel = 1e-13;
inline constexpr int max_root_iters = 200;
// Relative gap for the partitioned-vs-full spectrum oracle.
inline constexpr double oracle_tol = 1e-8;
}  // namespace defaults

}  // namespace redlab
