#pragma once

#include <cstdint>
#include <vector>

#include "redlab/effective.hpp"
#include "redlab/model.hpp"
#include "redlab/secular.hpp"
#include "redlab/types.hpp"

namespace redlab {

// One solved eigenstate of the reduced problem, assembled back over the
// full product basis. `channel` is the secular channel n whose equation
// produced the root (the mean-field seed for the background component).
struct ReducedState {
    double root = 0.0;
    int channel = 0;
    bool shared = false;
    Vector components;  // flat, unit norm, first nonzero entry real positive
    Complex c{0.0};     // intra-realisation coefficient, Sum c = 1 per realisation
};

struct Realisation {
    int index = 0;  // 0-based; reports print 1-based
    int g = 0;      // measured channel this realisation manifests
    std::vector<ReducedState> states;
    // roots_per_channel[n] = this realisation's roots from channel n
    // (shared seam roots included).
    std::vector<std::vector<double>> roots_per_channel;
    Complex C{0.0};
    double alpha = 0.0;
    bool degenerate_overlap = false;  // boundary overlaps all vanished
};

struct DensityGrid {
    RealMatrix values;      // (n_channels+1) x n_readings, sums to 1
    RealVector marginal_g;  // per channel
    RealVector marginal_n;  // per instrument state
};

struct SampleRecord {
    std::int64_t draw = 0;
    int realisation = 0;    // 1-based
    int reading_index = 0;  // 1-based instrument channel
    double root_value = 0.0;
};

// Background component of the reduced state at `root`, channels g >= 1
// reconstructed through the h-kernels. In full (exact-partitioning) mode the
// background part is the eigenvector of the effective channel problem whose
// eigenvalue matches `root`; in diagonal mode it is the unperturbed
// instrument state of the secular channel, the mean-field seed.
ReducedState reduced_state(const ChannelReduction& reduction, double root, int channel,
                           bool shared = false);

// Full pipeline step: classify -> build states -> boundary match ->
// probabilities. Realisations come back ordered by family center with
// Sum alpha = 1.
std::vector<Realisation> build_realisations(const ChannelReduction& reduction,
                                            const std::vector<SecularRoots>& roots,
                                            const RealisationPartition& partition);

// Boundary matching for one realisation: C = amplitude of the measured state
// at the realisation's channel; per-state coefficients from the overlap of
// each background component with the instrument ground state, normalized
// linearly to Sum c = 1.
void boundary_match(const MeasurementProblem& problem, Realisation& realisation);

// alpha_i = |C_i|^2 / Sum_j |C_j|^2.
std::vector<double> probabilities(std::vector<Realisation>& realisations);

DensityGrid density(const MeasurementProblem& problem, const Realisation& realisation);
DensityGrid expected_density(const MeasurementProblem& problem,
                             const std::vector<Realisation>& realisations);

struct LocalizationReport {
    std::vector<double> channel_fraction;     // per g = 0..n_channels
    std::vector<double> instrument_fraction;  // per n
    int dominant_channel = 0;                 // argmax over g >= 1
};
LocalizationReport localization_report(const MeasurementProblem& problem,
                                       const Realisation& realisation);

// Deterministic sampler: realisation per alpha, then a reading among the
// realisation's non-shared states per |c|^2. The stream is mt19937_64 with
// 53-bit uniforms, reproducible byte-for-byte across platforms.
std::vector<SampleRecord> sample(const std::vector<Realisation>& realisations,
                                 std::uint64_t seed, std::int64_t count);

}  // namespace redlab
