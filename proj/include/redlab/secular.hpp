#pragma once

#include <optional>
#include <vector>

#include "redlab/effective.hpp"
#include "redlab/model.hpp"
#include "redlab/types.hpp"

namespace redlab {

// One simple pole of the channel-n secular function: position = auxiliary
// level + phi_g, residue = |<psi_0n| V^{0g} |psi_gn'>|^2.
struct SecularPole {
    double position = 0.0;
    double residue = 0.0;
    int g = 0;        // source channel; -1 after a cross-channel merge
    int n_prime = 0;  // source level index; -1 after a merge
    bool merged = false;
    bool active = true;
};

// Per-channel secular data for V_nn(eta) = eta - p0n.
struct ChannelConstants {
    int n = 0;         // instrument channel index, 0-based
    double p0n = 0.0;  // <psi_0n| diag(p0) + V^{00} |psi_0n>
    std::vector<SecularPole> poles;  // sorted ascending, merges applied

    std::vector<const SecularPole*> active_poles() const;
};

struct SecularRoots {
    int n = 0;
    std::vector<double> roots;  // sorted ascending
    std::vector<std::pair<double, double>> brackets;
    // Active poles that produced no resolvable sign change and were dropped.
    std::vector<double> deactivated_poles;
};

struct SolutionCounts {
    long n_solutions = 0;     // N_s   = N_phi N_P + 1
    long n_base = 0;          // N0_s  = N_P + 1
    long n_realisations = 0;  // N_R   = round(N_s / N0_s)
};

// Label axis the classifier managed to use. Realisations follow the
// measured-channel families when those sit in disjoint position ranges;
// the instrument-state families otherwise (the coordinate-measurement
// layout, where the two label sets interleave by construction).
enum class GroupingAxis { channel, instrument, fallback };

struct RootMembership {
    std::vector<int> realisations;  // 1 entry normally, >= 2 for shared roots
    bool shared = false;
};

struct RealisationPartition {
    int n_realisations = 0;
    GroupingAxis axis = GroupingAxis::channel;
    bool group_overlap = false;   // families of the primary axis interleave
    bool count_deviation = false; // realised count differs from Eq.-style N_R
    // membership[channel][root index]
    std::vector<std::vector<RootMembership>> membership;
    // family label per realisation on the chosen axis (g or n')
    std::vector<int> family_label;
};

ChannelConstants channel_constants(const ChannelReduction& reduction, int n);

double secular_value(const ChannelConstants& constants, double eta);

// All solutions of secular_value(eta) = eta - p0n by guaranteed bracketing:
// one root in every open interval between consecutive active poles plus one
// on each flank. With zero active poles the single root is eta = p0n.
SecularRoots find_roots(const ChannelConstants& constants);

SolutionCounts count_solutions(int n_phi, int n_p);

RealisationPartition classify_realisations(const std::vector<SecularRoots>& roots,
                                           const std::vector<ChannelConstants>& constants);

}  // namespace redlab
