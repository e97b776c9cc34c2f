#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "redlab/types.hpp"

namespace redlab {

// Spectrum and decomposition of the measured quantity. phi[g] is the
// eigenvalue attached to channel g (phi[0] belongs to the non-measured
// background channel and is pinned to zero by validation). amplitudes[g]
// is the decomposition coefficient of the measured state over channel g;
// amplitudes[0] defaults to zero.
struct SystemSpec {
    std::vector<double> phi;
    std::vector<Complex> amplitudes;

    int n_channels() const { return static_cast<int>(phi.size()) - 1; }
};

// Unperturbed instrument readings and the pre-measurement ground state.
struct InstrumentSpec {
    std::vector<double> readings;
    std::vector<Complex> ground_weights;  // empty => uniform

    int n_readings() const { return static_cast<int>(readings.size()); }
};

// Coupling blocks V^{gg'} in the instrument basis. Missing blocks are zero;
// validation materializes them and enforces V^{g'g} = (V^{gg'})^dagger.
struct CouplingSpec {
    std::map<std::pair<int, int>, Matrix> blocks;
};

struct MeasurementProblem {
    SystemSpec system;
    InstrumentSpec instrument;
    CouplingSpec coupling;
    std::string label;

    int n_channels() const { return system.n_channels(); }
    int n_readings() const { return instrument.n_readings(); }
    int dim() const { return (n_channels() + 1) * n_readings(); }

    // Valid only after validate_problem (blocks materialized).
    const Matrix& block(int g, int gp) const;
};

// Canonicalizes and checks an untrusted problem: materializes zero blocks,
// symmetrizes block pairs (rejecting violations beyond 1e-12), pins
// phi[0] = 0 by shifting all channel energies and readings, and normalizes
// the ground weights. Idempotent.
MeasurementProblem validate_problem(const MeasurementProblem& raw);

// Full coupled operator, block (g,g') = delta_{gg'} (diag(readings) +
// phi_g I) + V^{gg'}, laid out by ProductBasisIndex::flat. Exactly
// Hermitian for a validated problem.
Matrix build_full_hamiltonian(const MeasurementProblem& problem);

// Pre-measurement product state: component (g,n) = amplitudes[g] *
// ground_weights[n], normalized to unit norm.
Vector initial_state(const MeasurementProblem& problem);

// Nondemolition-mode problem: object and instrument exchanged, coupling
// tensor re-sliced so that block (n,n') over the channel basis carries the
// entries V^{gg'}_{nn'}. The energy origin moves between the two specs so
// that swap_roles(swap_roles(p)) == p exactly and the full operator stays
// permutation-similar to the original.
MeasurementProblem swap_roles(const MeasurementProblem& problem);

}  // namespace redlab
