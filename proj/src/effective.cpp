#include "redlab/effective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "redlab/errors.hpp"

namespace redlab {

namespace {

// Guard distance: tol_pole_rel scaled by the local pole spacing (or the
// spectral span when there is a single pole).
double compute_pole_guard(std::vector<double> poles) {
    if (poles.empty()) return 0.0;
    std::sort(poles.begin(), poles.end());
    double spacing = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < poles.size(); ++i)
        spacing = std::min(spacing, poles[i] - poles[i - 1]);
    if (!std::isfinite(spacing) || spacing <= 0.0)
        spacing = std::max(1.0, std::abs(poles.front()) + std::abs(poles.back()));
    return defaults::tol_pole_rel * std::max(1.0, spacing);
}

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw EigenFailure(std::string("eigendecomposition failed for ") + what);
    return solver;
}

}  // namespace

const AuxiliarySpectrum& ChannelReduction::spectrum(int g) const {
    for (const auto& s : spectra_)
        if (s.g == g) return s;
    throw DimensionMismatch("no auxiliary spectrum for channel " + std::to_string(g));
}

ChannelReduction ChannelReduction::solve(const MeasurementProblem& problem, AuxiliaryMode mode) {
    ChannelReduction red;
    red.problem_ = problem;
    red.mode_ = mode;
    const int n_phi = problem.n_channels();
    const int n_p = problem.n_readings();

    Matrix p0 = Matrix::Zero(n_p, n_p);
    for (int n = 0; n < n_p; ++n) p0(n, n) = problem.instrument.readings[n];

    if (mode == AuxiliaryMode::diagonal) {
        for (int g = 1; g <= n_phi; ++g) {
            auto solver = decompose(p0 + problem.block(g, g), "auxiliary channel");
            AuxiliarySpectrum aux;
            aux.g = g;
            aux.phi = problem.system.phi[g];
            aux.levels.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n_p);
            aux.modes = solver.eigenvectors();
            for (int n = 0; n < n_p; ++n) {
                Term t;
                t.pole = aux.levels[n] + aux.phi;
                t.coupling = problem.block(0, g) * aux.modes.col(n);
                t.joint_vec = Vector::Zero(n_phi * n_p);
                t.joint_vec.segment((g - 1) * n_p, n_p) = aux.modes.col(n);
                t.g = g;
                t.n = n;
                red.terms_.push_back(std::move(t));
            }
            red.spectra_.push_back(std::move(aux));
        }
    } else {
        // Joint block over all measured channels, inter-channel couplings kept.
        const int dim = n_phi * n_p;
        Matrix joint = Matrix::Zero(dim, dim);
        for (int g = 1; g <= n_phi; ++g) {
            for (int gp = 1; gp <= n_phi; ++gp) {
                Matrix b = problem.block(g, gp);
                if (g == gp) b += p0 + problem.system.phi[g] * Matrix::Identity(n_p, n_p);
                joint.block((g - 1) * n_p, (gp - 1) * n_p, n_p, n_p) = b;
            }
        }
        auto solver = decompose(joint, "joint auxiliary block");

        std::vector<std::vector<std::pair<double, Vector>>> per_channel(n_phi + 1);
        for (int k = 0; k < dim; ++k) {
            const Vector vec = solver.eigenvectors().col(k);
            // Re-slice by dominant channel weight.
            int best_g = 1;
            double best_w = -1.0;
            for (int g = 1; g <= n_phi; ++g) {
                const double w = vec.segment((g - 1) * n_p, n_p).squaredNorm();
                if (w > best_w) {
                    best_w = w;
                    best_g = g;
                }
            }
            Term t;
            t.pole = solver.eigenvalues()[k];
            t.coupling = Vector::Zero(n_p);
            for (int g = 1; g <= n_phi; ++g)
                t.coupling += problem.block(0, g) * vec.segment((g - 1) * n_p, n_p);
            t.joint_vec = vec;
            t.g = best_g;
            per_channel[best_g].push_back({t.pole, vec});
            red.terms_.push_back(std::move(t));
        }
        for (int g = 1; g <= n_phi; ++g) {
            if (per_channel[g].size() != static_cast<size_t>(n_p)) red.slicing_ambiguous_ = true;
            AuxiliarySpectrum aux;
            aux.g = g;
            aux.phi = problem.system.phi[g];
            std::sort(per_channel[g].begin(), per_channel[g].end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            aux.modes = Matrix::Zero(n_p, static_cast<int>(per_channel[g].size()));
            for (size_t k = 0; k < per_channel[g].size(); ++k) {
                aux.levels.push_back(per_channel[g][k].first - aux.phi);
                Vector slice = per_channel[g][k].second.segment((g - 1) * n_p, n_p);
                const double norm = slice.norm();
                if (norm > 0) slice /= norm;
                aux.modes.col(static_cast<int>(k)) = slice;
            }
            red.spectra_.push_back(std::move(aux));
        }
        // Level indices within each channel, ascending by pole.
        std::vector<int> counter(n_phi + 1, 0);
        std::vector<size_t> order(red.terms_.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return red.terms_[a].pole < red.terms_[b].pole;
        });
        for (size_t idx : order) red.terms_[idx].n = counter[red.terms_[idx].g]++;
    }

    std::vector<double> poles;
    for (const auto& t : red.terms_) poles.push_back(t.pole);
    red.pole_guard_ = compute_pole_guard(std::move(poles));
    return red;
}

void ChannelReduction::guard_eta(double eta, int g) const {
    for (const auto& t : terms_) {
        if (g >= 0 && t.g != g) continue;
        if (std::abs(eta - t.pole) < pole_guard_)
            throw PoleProximity("eta = " + std::to_string(eta) + " within pole guard of pole " +
                                std::to_string(t.pole));
    }
}

Matrix ChannelReduction::green_function(int g, double eta) const {
    guard_eta(eta, g);
    const auto& aux = spectrum(g);
    return redlab::green_function(aux, eta, pole_guard_);
}

Matrix ChannelReduction::effective_kernel(double eta) const {
    guard_eta(eta, -1);
    Matrix m = problem_.block(0, 0);
    for (const auto& t : terms_)
        m += (t.coupling * t.coupling.adjoint()) / Complex(eta - t.pole);
    // Hermitian up to rounding; symmetrize for downstream eigensolves.
    m = 0.5 * (m + m.adjoint().eval());
    return m;
}

Matrix ChannelReduction::h_kernel(int g, double eta) const {
    guard_eta(eta, mode_ == AuxiliaryMode::diagonal ? g : -1);
    const int n_p = problem_.n_readings();
    Matrix h = Matrix::Zero(n_p, n_p);
    for (const auto& t : terms_) {
        Vector slice = t.joint_vec.segment((g - 1) * n_p, n_p);
        if (slice.isZero(0.0)) continue;
        h += (slice * t.coupling.adjoint()) / Complex(eta - t.pole);
    }
    return h;
}

ChannelReduction solve_auxiliary(const MeasurementProblem& problem, AuxiliaryMode mode) {
    return ChannelReduction::solve(problem, mode);
}

Matrix green_function(const AuxiliarySpectrum& aux, double eta, double tol_pole) {
    const double eta_g = eta - aux.phi;
    const int n_levels = static_cast<int>(aux.levels.size());
    Matrix g = Matrix::Zero(aux.modes.rows(), aux.modes.rows());
    for (int n = 0; n < n_levels; ++n) {
        const double denom = aux.levels[n] - eta_g;
        if (std::abs(denom) < tol_pole)
            throw PoleProximity("eta within tol_pole of auxiliary level " +
                                std::to_string(aux.levels[n] + aux.phi));
        g += (aux.modes.col(n) * aux.modes.col(n).adjoint()) / Complex(denom);
    }
    return g;
}

EffectiveKernel effective_kernel(const ChannelReduction& reduction, double eta) {
    return EffectiveKernel{eta, reduction.effective_kernel(eta)};
}

}  // namespace redlab
