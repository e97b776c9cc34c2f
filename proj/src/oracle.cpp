#include "redlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "redlab/errors.hpp"

namespace redlab {

namespace {

using CLD = std::complex<long double>;
using MatrixCLD = Eigen::Matrix<CLD, Eigen::Dynamic, Eigen::Dynamic>;

// Factorization-free determinant by subset dynamic programming, O(2^n n).
// Continuous in the matrix entries, which keeps sign tracking honest next
// to poles where pivoted factorizations may flip.
CLD det_subset_dp(const MatrixCLD& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<CLD> dp(size_t(1) << n, CLD(0));
    dp[0] = CLD(1);
    for (unsigned mask = 1; mask < dp.size(); ++mask) {
        const int row = __builtin_popcount(mask) - 1;
        CLD acc(0);
        int sign = 1;
        for (int col = 0; col < n; ++col) {
            if (!(mask & (1u << col))) continue;
            acc += static_cast<long double>(sign) * m(row, col) * dp[mask & ~(1u << col)];
            sign = -sign;
        }
        dp[mask] = acc;
    }
    return dp.back();
}

CLD scaled_det(const MatrixCLD& m) {
    long double scale = 0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) scale = std::max(scale, std::abs(m(i, j)));
    if (scale == 0) return CLD(0);
    return (m / scale).determinant();
}

long double det_real(const MatrixCLD& m) {
    const CLD d = m.rows() <= 8 ? det_subset_dp(m) : scaled_det(m);
    return d.real();
}

double bisect(const std::function<long double(long double)>& f, long double a, long double b,
              long double fa) {
    for (int iter = 0; iter < 200; ++iter) {
        const long double mid = 0.5L * (a + b);
        if (b - a <= 1e-14L * (1.0L + std::abs(mid))) break;
        const long double fm = f(mid);
        if (fm == 0.0L) return static_cast<double>(mid);
        if ((fm > 0) == (fa > 0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return static_cast<double>(0.5L * (a + b));
}

std::pair<double, double> gershgorin_bounds(const Matrix& h) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < h.rows(); ++i) {
        double radius = 0.0;
        for (int j = 0; j < h.cols(); ++j)
            if (j != i) radius += std::abs(h(i, j));
        lo = std::min(lo, h(i, i).real() - radius);
        hi = std::max(hi, h(i, i).real() + radius);
    }
    return {lo, hi};
}

}  // namespace

SpectrumReport full_spectrum(const MeasurementProblem& problem) {
    if (problem.dim() > 512)
        throw DimensionMismatch("full_spectrum capped at dimension 512");
    const Matrix h = build_full_hamiltonian(problem);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) throw EigenFailure("full dense eigensolve failed");
    SpectrumReport rep;
    rep.method = "full";
    rep.values.assign(solver.eigenvalues().data(),
                      solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(rep.values.begin(), rep.values.end());
    return rep;
}

SpectrumReport partitioned_spectrum(const ChannelReduction& reduction, int points_per_interval,
                                    double kernel_distortion) {
    if (reduction.mode() != AuxiliaryMode::full)
        throw std::invalid_argument("partitioned_spectrum requires the full auxiliary mode");
    const auto& problem = reduction.problem();
    const int n_p = problem.n_readings();

    SpectrumReport rep;
    rep.method = "partitioned";

    const auto f = [&](long double eta) -> long double {
        const double e = static_cast<double>(eta);
        Matrix m = reduction.effective_kernel(e);
        for (int n = 0; n < n_p; ++n)
            m(n, n) += problem.instrument.readings[n] - e + kernel_distortion;
        MatrixCLD mld = m.cast<CLD>();
        return det_real(mld);
    };

    // Pole-free scan windows from Gershgorin bounds of the full operator.
    std::vector<double> poles;
    for (const auto& t : reduction.terms()) poles.push_back(t.pole);
    std::sort(poles.begin(), poles.end());
    poles.erase(std::unique(poles.begin(), poles.end(),
                            [&](double a, double b) {
                                return std::abs(a - b) < reduction.pole_guard();
                            }),
                poles.end());
    auto [lo, hi] = gershgorin_bounds(build_full_hamiltonian(problem));
    lo -= 1.0;
    hi += 1.0;

    std::vector<std::pair<double, double>> windows;
    double cursor = lo;
    for (double p : poles) {
        if (p - reduction.pole_guard() > cursor)
            windows.push_back({cursor, p - reduction.pole_guard()});
        cursor = p + reduction.pole_guard();
    }
    if (cursor < hi) windows.push_back({cursor, hi});

    for (const auto& [a, b] : windows) {
        const int pts = std::max(points_per_interval, 8);
        long double prev_x = a;
        long double prev_f = f(prev_x);
        bool change = false;
        for (int i = 1; i <= pts; ++i) {
            const long double x = a + (b - a) * static_cast<long double>(i) / pts;
            const long double fx = f(x);
            if ((fx > 0) != (prev_f > 0) || fx == 0.0L) {
                rep.values.push_back(bisect(f, prev_x, x, prev_f));
                change = true;
            }
            prev_x = x;
            prev_f = fx;
        }
        if (!change) rep.notes.push_back("ScanGap: no sign change in [" + std::to_string(a) +
                                         ", " + std::to_string(b) + "]");
    }
    std::sort(rep.values.begin(), rep.values.end());
    return rep;
}

SecularRoots grid_bisect_roots(const ChannelConstants& constants, int points_per_interval) {
    if (points_per_interval < 64)
        throw std::invalid_argument("grid_bisect_roots requires >= 64 points per interval");
    SecularRoots out;
    out.n = constants.n;
    const auto act = constants.active_poles();

    const auto f = [&](long double eta) -> long double {
        // Compensated (Neumaier) summation.
        long double sum = 0.0L, comp = 0.0L;
        for (const auto* p : act) {
            const long double term =
                static_cast<long double>(p->residue) / (eta - static_cast<long double>(p->position));
            const long double t = sum + term;
            comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
            sum = t;
        }
        return (sum + comp) - (eta - static_cast<long double>(constants.p0n));
    };

    if (act.empty()) {
        out.roots.push_back(constants.p0n);
        out.brackets.push_back({constants.p0n, constants.p0n});
        return out;
    }

    // Flank ranges grow geometrically until the sign settles.
    const double span = act.back()->position - act.front()->position;
    double reach = std::max({1.0, span, std::abs(constants.p0n - act.front()->position),
                             std::abs(constants.p0n - act.back()->position)});
    double left = act.front()->position - reach;
    for (int i = 0; i < 200 && f(left) <= 0; ++i) {
        reach *= 2;
        left = act.front()->position - reach;
    }
    reach = std::max({1.0, span, std::abs(constants.p0n - act.back()->position)});
    double right = act.back()->position + reach;
    for (int i = 0; i < 200 && f(right) >= 0; ++i) {
        reach *= 2;
        right = act.back()->position + reach;
    }

    std::vector<std::pair<double, double>> intervals;
    intervals.push_back({left, act.front()->position});
    for (size_t i = 0; i + 1 < act.size(); ++i)
        intervals.push_back({act[i]->position, act[i + 1]->position});
    intervals.push_back({act.back()->position, right});

    for (size_t k = 0; k < intervals.size(); ++k) {
        auto [a, b] = intervals[k];
        const double w = b - a;
        const double eps = std::max(w * 1e-12, (std::abs(a) + std::abs(b)) * 1e-15);
        if (k > 0) a += eps;
        if (k + 1 < intervals.size()) b -= eps;
        long double prev_x = a;
        long double prev_f = f(prev_x);
        for (int i = 1; i <= points_per_interval; ++i) {
            const long double x =
                a + (b - a) * static_cast<long double>(i) / points_per_interval;
            const long double fx = f(x);
            if ((fx > 0) != (prev_f > 0) || fx == 0.0L) {
                out.roots.push_back(bisect(f, prev_x, x, prev_f));
                out.brackets.push_back({static_cast<double>(prev_x), static_cast<double>(x)});
            }
            prev_x = x;
            prev_f = fx;
        }
    }
    std::sort(out.roots.begin(), out.roots.end());
    return out;
}

SpectrumReport compare_spectra(const SpectrumReport& a, const SpectrumReport& b, double tol,
                               bool strict) {
    if (strict && a.values.size() != b.values.size())
        throw CountMismatch("spectra differ in cardinality: " + std::to_string(a.values.size()) +
                            " vs " + std::to_string(b.values.size()));
    SpectrumReport rep;
    rep.method = a.method + "_vs_" + b.method;
    rep.values = a.values;

    // One-to-one nearest pairing over sorted lists.
    size_t j = 0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        if (j >= b.values.size()) {
            rep.pass = false;
            break;
        }
        const size_t remaining = a.values.size() - 1 - i;
        while (j + 1 < b.values.size() && j + 1 + remaining < b.values.size() &&
               std::abs(b.values[j + 1] - a.values[i]) <= std::abs(b.values[j] - a.values[i]))
            ++j;
        const double abs_gap = std::abs(b.values[j] - a.values[i]);
        const double denom = std::max({1.0, std::abs(a.values[i]), std::abs(b.values[j])});
        rep.matched.push_back({static_cast<int>(i), static_cast<int>(j), abs_gap,
                               abs_gap / denom});
        rep.max_gap = std::max(rep.max_gap, abs_gap / denom);
        ++j;
    }
    if (rep.matched.size() != a.values.size()) rep.pass = false;
    if (rep.max_gap > tol) rep.pass = false;
    return rep;
}

long double secular_value_extended(const ChannelConstants& constants, long double eta) {
    long double sum = 0.0L, comp = 0.0L;
    for (const auto& p : constants.poles) {
        if (!p.active) continue;
        const long double term =
            static_cast<long double>(p.residue) / (eta - static_cast<long double>(p.position));
        const long double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace redlab
