#pragma once

#include <string>
#include <vector>

#include "redlab/effective.hpp"
#include "redlab/model.hpp"
#include "redlab/secular.hpp"
#include "redlab/types.hpp"

namespace redlab {

// Brute-force verifiers. Everything here stays independent of the secular
// root-finding path it cross-checks: full_spectrum is a dense Hermitian
// solve of the assembled operator, partitioned_spectrum tracks determinant
// signs of the nonlinear channel problem, grid_bisect_roots rediscover the
// secular roots by uniform scanning.

struct SpectrumReport {
    std::string method;
    std::vector<double> values;  // sorted
    // pairing produced by compare_spectra: (a index, b index, |gap|)
    struct Pair {
        int ia;
        int ib;
        double abs_gap;
        double rel_gap;
    };
    std::vector<Pair> matched;
    double max_gap = 0.0;  // max relative gap over matched pairs
    bool pass = true;
    std::vector<std::string> notes;  // ScanGap and friends, non-fatal
};

SpectrumReport full_spectrum(const MeasurementProblem& problem);

// All eta with det(diag(p0) + V_eff(eta) - eta I) = 0, located by a
// sign-tracked scan over pole-free intervals plus bisection. Requires the
// exact (full) auxiliary mode. `kernel_distortion` is a test hook: it adds
// that multiple of the identity to the effective kernel, deliberately
// corrupting the partitioning identity.
SpectrumReport partitioned_spectrum(const ChannelReduction& reduction,
                                    int points_per_interval = 256,
                                    double kernel_distortion = 0.0);

// Independent rediscovery of one channel's secular roots.
SecularRoots grid_bisect_roots(const ChannelConstants& constants, int points_per_interval);

// Greedy sorted pairing of b's values onto a's (subset mode: every value of
// `a` must find a partner in `b`). strict demands equal cardinality.
SpectrumReport compare_spectra(const SpectrumReport& a, const SpectrumReport& b, double tol,
                               bool strict = false);

// Extended-precision secular evaluation (compensated long double sum);
// reference for curve data emitted by the CLI.
long double secular_value_extended(const ChannelConstants& constants, long double eta);

}  // namespace redlab
