#include "redlab/scenarios.hpp"

#include <cmath>

#include "redlab/errors.hpp"
#include "redlab/json_io.hpp"

namespace redlab {

TwoSlitConfig fix_ts() {
    TwoSlitConfig c;
    c.separation = 2.0;
    c.amp1 = Complex(1.0 / std::sqrt(2.0));
    c.amp2 = Complex(1.0 / std::sqrt(2.0));
    c.coupling_strength1 = 0.2;
    c.coupling_strength2 = 0.2;
    c.delta = 0.1;
    c.detector_overlap = 0.3;
    c.label = "FIX-TS";
    return c;
}

TwoSlitConfig fix_ta() {
    TwoSlitConfig c = fix_ts();
    c.amp1 = Complex(0.6);
    c.amp2 = Complex(0.8);
    c.label = "FIX-TA";
    return c;
}

MeasurementProblem build_two_slit(const TwoSlitConfig& config) {
    if (!(config.separation > 0.0)) throw DimensionMismatch("detector separation must be > 0");
    if (config.coupling_strength1 < 0.0 || config.coupling_strength2 < 0.0)
        throw DimensionMismatch("coupling strengths must be >= 0");

    const double x1 = -0.5 * config.separation;
    const double x2 = +0.5 * config.separation;

    MeasurementProblem p;
    p.label = config.label;
    p.system.phi = {0.0, x1, x2};
    p.system.amplitudes = {config.amp1, config.amp2};
    p.instrument.readings = {x1, x2};

    const double mu = config.detector_overlap;
    const double strengths[2] = {config.coupling_strength1, config.coupling_strength2};
    for (int g = 1; g <= 2; ++g) {
        Matrix b(2, 2);
        for (int n = 0; n < 2; ++n) {
            const double row = (n == g - 1) ? 1.0 : mu;  // sensed at reading n = g
            for (int np = 0; np < 2; ++np)
                b(n, np) = strengths[g - 1] * row * ((n == np) ? 1.0 : mu);
        }
        p.coupling.blocks[{0, g}] = b;
    }

    // Level offsets splitting the central pole pair, mirror-antisymmetric.
    Matrix d1 = Matrix::Zero(2, 2), d2 = Matrix::Zero(2, 2);
    d1(1, 1) = config.delta;
    d2(0, 0) = -config.delta;
    if (!d1.isZero(0.0)) p.coupling.blocks[{1, 1}] = d1;
    if (!d2.isZero(0.0)) p.coupling.blocks[{2, 2}] = d2;

    if (config.cross_coupling != 0.0)
        p.coupling.blocks[{1, 2}] = config.cross_coupling * Matrix::Identity(2, 2);

    if (config.background_level != 0.0)
        p.coupling.blocks[{0, 0}] = config.background_level * Matrix::Identity(2, 2);

    return validate_problem(p);
}

TwoSlitReport two_slit_report(const MeasurementProblem& problem) {
    TwoSlitReport rep;
    rep.problem = problem;
    const auto reduction = solve_auxiliary(problem, AuxiliaryMode::diagonal);
    for (int n = 0; n < problem.n_readings(); ++n)
        rep.constants.push_back(channel_constants(reduction, n));
    for (const auto& c : rep.constants) rep.roots.push_back(find_roots(c));
    rep.partition = classify_realisations(rep.roots, rep.constants);
    rep.realisations = build_realisations(reduction, rep.roots, rep.partition);
    for (const auto& r : rep.realisations) {
        rep.alphas.push_back(r.alpha);
        rep.localization.push_back(localization_report(problem, r));
    }

    // Coherent vs probabilistic mixture of the realised branches, compared
    // on the instrument marginal.
    const int n_p = problem.n_readings();
    const int n_phi = problem.n_channels();
    Vector coherent = Vector::Zero(problem.dim());
    RealVector incoherent = RealVector::Zero(n_p);
    for (const auto& r : rep.realisations) {
        Vector branch = Vector::Zero(problem.dim());
        for (const auto& s : r.states) branch += s.c * s.components;
        const double norm = branch.norm();
        if (norm > 0) branch /= norm;
        const Complex weight = problem.system.amplitudes[r.g];
        coherent += weight * branch;
        for (int n = 0; n < n_p; ++n) {
            double cell = 0.0;
            for (int g = 0; g <= n_phi; ++g)
                cell += std::norm(branch[ProductBasisIndex{g, n}.flat(n_p)]);
            incoherent[n] += std::norm(weight) * cell;
        }
    }
    RealVector coh_marginal = RealVector::Zero(n_p);
    for (int n = 0; n < n_p; ++n)
        for (int g = 0; g <= n_phi; ++g)
            coh_marginal[n] += std::norm(coherent[ProductBasisIndex{g, n}.flat(n_p)]);
    rep.interference_contrast = (coh_marginal - incoherent).norm();
    return rep;
}

MeasurementProblem load_scenario(const std::string& path) {
    return json_io::read_problem_file(path);
}

void save_scenario(const MeasurementProblem& problem, const std::string& path) {
    json_io::write_problem_file(problem, path);
}

}  // namespace redlab
