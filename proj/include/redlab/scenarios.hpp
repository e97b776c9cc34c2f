#pragma once

#include <string>
#include <vector>

#include "redlab/model.hpp"
#include "redlab/realisation.hpp"
#include "redlab/secular.hpp"
#include "redlab/types.hpp"

namespace redlab {

// Two point detectors at x = -D/2 and x = +D/2, a blocked background
// channel, and the incident transverse profile sampled at the detector
// sites. The instrument readings are the detector positions themselves.
//
// Couplings: block V^{0g} has magnitude coupling_strength[g-1], its rows
// weighted so the interaction is sensed mostly at reading n = g and its
// columns mixing auxiliary states with relative weight detector_overlap.
// The overlap is what gives every secular channel its full set of
// branches; with overlap = 0 the cross poles carry no residue and the
// redundant solution set collapses.
//
// delta shifts the detector-dressed levels (V^{gg} = diag of the delta
// pattern (0, +delta) / (-delta, 0)), splitting the two central poles that
// would otherwise coincide. delta = 0 reproduces the strictly symmetric
// degenerate case, which the pipeline handles by merging.
struct TwoSlitConfig {
    double separation = 2.0;  // D
    Complex amp1{1.0};        // profile at X1 = -D/2
    Complex amp2{1.0};        // profile at X2 = +D/2
    double coupling_strength1 = 0.2;
    double coupling_strength2 = 0.2;
    double cross_coupling = 0.0;    // |V12|, direct detector-detector block
    double delta = 0.1;             // level offsets, Eq.-73-style
    double detector_overlap = 0.3;  // cross-detector excitation weight
    double background_level = 0.0;  // blocked-channel energy offset
    std::string label = "two-slit";
};

TwoSlitConfig fix_ts();  // canonical symmetric fixture
TwoSlitConfig fix_ta();  // asymmetric amplitudes (0.6, 0.8)

MeasurementProblem build_two_slit(const TwoSlitConfig& config);

struct TwoSlitReport {
    MeasurementProblem problem;
    std::vector<ChannelConstants> constants;
    std::vector<SecularRoots> roots;
    RealisationPartition partition;
    std::vector<Realisation> realisations;
    std::vector<double> alphas;
    std::vector<LocalizationReport> localization;
    // L2 distance between the coherent and incoherent instrument marginals
    // of the alpha-weighted realisation states; nonzero when measurement
    // erased an interference cross term.
    double interference_contrast = 0.0;
};

TwoSlitReport two_slit_report(const MeasurementProblem& problem);

MeasurementProblem load_scenario(const std::string& path);
void save_scenario(const MeasurementProblem& problem, const std::string& path);

}  // namespace redlab
