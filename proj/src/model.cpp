#include "redlab/model.hpp"

#include <cmath>
#include <sstream>

#include "redlab/errors.hpp"

namespace redlab {

namespace {

bool finite(const Matrix& m) { return m.allFinite(); }

void check_dimensions(const MeasurementProblem& p) {
    const int n_phi = p.system.n_channels();
    const int n_p = p.instrument.n_readings();
    if (n_phi < 1) throw DimensionMismatch("need at least one measured channel (N_phi >= 1)");
    if (n_p < 1) throw DimensionMismatch("need at least one instrument reading (N_P >= 1)");
    const auto n_amp = p.system.amplitudes.size();
    if (n_amp != static_cast<size_t>(n_phi) && n_amp != static_cast<size_t>(n_phi) + 1)
        throw DimensionMismatch("amplitude list must have N_phi (or N_phi+1) entries, got " +
                                std::to_string(n_amp));
    if (!p.instrument.ground_weights.empty() &&
        p.instrument.ground_weights.size() != static_cast<size_t>(n_p))
        throw DimensionMismatch("ground_weights must have N_P entries");
    for (const auto& [key, block] : p.coupling.blocks) {
        const auto [g, gp] = key;
        if (g < 0 || gp < 0 || g > n_phi || gp > n_phi)
            throw DimensionMismatch("coupling block index (" + std::to_string(g) + "," +
                                    std::to_string(gp) + ") out of range");
        if (block.rows() != n_p || block.cols() != n_p) {
            std::ostringstream os;
            os << "coupling block (" << g << "," << gp << ") is " << block.rows() << "x"
               << block.cols() << ", expected " << n_p << "x" << n_p;
            throw DimensionMismatch(os.str());
        }
    }
}

void check_finite(const MeasurementProblem& p) {
    for (double x : p.system.phi)
        if (!std::isfinite(x)) throw NonFinite("non-finite channel energy");
    for (double x : p.instrument.readings)
        if (!std::isfinite(x)) throw NonFinite("non-finite instrument reading");
    for (const Complex& a : p.system.amplitudes)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw NonFinite("non-finite amplitude");
    for (const Complex& w : p.instrument.ground_weights)
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
            throw NonFinite("non-finite ground weight");
    for (const auto& [key, block] : p.coupling.blocks)
        if (!finite(block)) throw NonFinite("non-finite coupling block entry");
}

}  // namespace

const Matrix& MeasurementProblem::block(int g, int gp) const {
    auto it = coupling.blocks.find({g, gp});
    if (it == coupling.blocks.end())
        throw DimensionMismatch("coupling block not materialized; run validate_problem first");
    return it->second;
}

MeasurementProblem validate_problem(const MeasurementProblem& raw) {
    MeasurementProblem p = raw;
    check_dimensions(p);
    check_finite(p);

    const int n_phi = p.n_channels();
    const int n_p = p.n_readings();

    // Pin phi[0] = 0; the common origin moves out of both energy lists.
    const double shift = p.system.phi[0];
    for (double& x : p.system.phi) x -= shift;
    for (double& x : p.instrument.readings) x -= shift;

    // amplitudes[0] (background channel) defaults to zero.
    if (p.system.amplitudes.size() == static_cast<size_t>(n_phi))
        p.system.amplitudes.insert(p.system.amplitudes.begin(), Complex(0.0));

    double amp_norm2 = 0.0;
    for (const Complex& a : p.system.amplitudes) amp_norm2 += std::norm(a);
    if (amp_norm2 <= 0.0) throw ZeroState("all measured-state amplitudes are zero");

    if (p.instrument.ground_weights.empty())
        p.instrument.ground_weights.assign(n_p, Complex(1.0 / std::sqrt(double(n_p))));
    double gw_norm2 = 0.0;
    for (const Complex& w : p.instrument.ground_weights) gw_norm2 += std::norm(w);
    if (gw_norm2 <= 0.0) throw ZeroState("ground state weights are all zero");
    if (std::abs(gw_norm2 - 1.0) > 1e-14) {  // keeps validation idempotent bit-for-bit
        const double gw_scale = 1.0 / std::sqrt(gw_norm2);
        for (Complex& w : p.instrument.ground_weights) w *= gw_scale;
    }

    // Materialize all blocks and enforce the adjoint relation pairwise.
    std::map<std::pair<int, int>, Matrix> blocks;
    const Matrix zero = Matrix::Zero(n_p, n_p);
    for (int g = 0; g <= n_phi; ++g) {
        for (int gp = g; gp <= n_phi; ++gp) {
            auto lo = p.coupling.blocks.find({g, gp});
            auto hi = p.coupling.blocks.find({gp, g});
            Matrix upper;
            if (lo == p.coupling.blocks.end() && hi == p.coupling.blocks.end()) {
                upper = zero;
            } else if (hi == p.coupling.blocks.end()) {
                upper = lo->second;
                if (g == gp) {
                    if ((upper - upper.adjoint().eval()).cwiseAbs().maxCoeff() > 1e-12)
                        throw NonHermitian("diagonal block (" + std::to_string(g) +
                                           ") is not Hermitian");
                    upper = 0.5 * (upper + upper.adjoint().eval());
                }
            } else if (lo == p.coupling.blocks.end()) {
                upper = hi->second.adjoint();
            } else {
                const Matrix diff = lo->second - hi->second.adjoint().eval();
                if (diff.cwiseAbs().maxCoeff() > 1e-12)
                    throw NonHermitian("blocks (" + std::to_string(g) + "," + std::to_string(gp) +
                                       ") and (" + std::to_string(gp) + "," + std::to_string(g) +
                                       ") violate the adjoint relation");
                upper = 0.5 * (lo->second + hi->second.adjoint().eval());
                if (g == gp) upper = 0.5 * (upper + upper.adjoint().eval());
            }
            blocks[{g, gp}] = upper;
            if (g != gp) blocks[{gp, g}] = upper.adjoint();
        }
    }
    p.coupling.blocks = std::move(blocks);
    return p;
}

Matrix build_full_hamiltonian(const MeasurementProblem& problem) {
    const int n_phi = problem.n_channels();
    const int n_p = problem.n_readings();
    Matrix h = Matrix::Zero(problem.dim(), problem.dim());
    for (int g = 0; g <= n_phi; ++g) {
        for (int gp = 0; gp <= n_phi; ++gp) {
            Matrix b = problem.block(g, gp);
            if (g == gp) {
                for (int n = 0; n < n_p; ++n)
                    b(n, n) += problem.instrument.readings[n] + problem.system.phi[g];
            }
            h.block(g * n_p, gp * n_p, n_p, n_p) = b;
        }
    }
    return h;
}

Vector initial_state(const MeasurementProblem& problem) {
    const int n_p = problem.n_readings();
    Vector state = Vector::Zero(problem.dim());
    for (int g = 0; g <= problem.n_channels(); ++g) {
        const Complex a = problem.system.amplitudes[g];
        if (a == Complex(0.0)) continue;
        for (int n = 0; n < n_p; ++n)
            state[ProductBasisIndex{g, n}.flat(n_p)] = a * problem.instrument.ground_weights[n];
    }
    const double norm = state.norm();
    if (norm <= 0.0) throw ZeroState("initial state has zero norm");
    return state / norm;
}

MeasurementProblem swap_roles(const MeasurementProblem& problem) {
    const int n_phi = problem.n_channels();
    const int n_p = problem.n_readings();
    const int n_old = n_phi + 1;  // old channel count including g = 0

    // The new channel origin is the first old reading; moving it keeps every
    // diagonal entry phi_g + reading_n intact, which makes the swap an exact
    // involution and the full operator permutation-similar.
    const double origin = problem.instrument.readings[0];

    MeasurementProblem out;
    out.label = problem.label;
    out.system.phi.resize(n_p);
    for (int n = 0; n < n_p; ++n) out.system.phi[n] = problem.instrument.readings[n] - origin;
    out.instrument.readings.resize(n_old);
    for (int g = 0; g < n_old; ++g) out.instrument.readings[g] = problem.system.phi[g] + origin;

    double amp_norm = 0.0;
    for (const Complex& a : problem.system.amplitudes) amp_norm += std::norm(a);
    amp_norm = std::sqrt(amp_norm);
    out.system.amplitudes.resize(n_p);
    for (int n = 0; n < n_p; ++n)
        out.system.amplitudes[n] = problem.instrument.ground_weights[n] * amp_norm;
    out.instrument.ground_weights.resize(n_old);
    for (int g = 0; g < n_old; ++g)
        out.instrument.ground_weights[g] = problem.system.amplitudes[g] / amp_norm;

    for (int n = 0; n < n_p; ++n) {
        for (int np = 0; np < n_p; ++np) {
            Matrix b = Matrix::Zero(n_old, n_old);
            bool nonzero = false;
            for (int g = 0; g < n_old; ++g) {
                for (int gp = 0; gp < n_old; ++gp) {
                    const Complex v = problem.block(g, gp)(n, np);
                    if (v != Complex(0.0)) nonzero = true;
                    b(g, gp) = v;
                }
            }
            if (nonzero) out.coupling.blocks[{n, np}] = std::move(b);
        }
    }
    return validate_problem(out);
}

}  // namespace redlab
