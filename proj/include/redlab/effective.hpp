#pragma once

#include <vector>

#include "redlab/model.hpp"
#include "redlab/types.hpp"

namespace redlab {

enum class AuxiliaryMode { diagonal, full };

// Spectrum of one channel's auxiliary problem. Levels are reported with the
// channel energy phi_g excluded; the pole seen by the reduced problem sits
// at level + phi_g. In diagonal mode the modes are exactly unitary; in full
// mode each column is the (renormalized) slice of a joint eigenvector whose
// dominant weight lies in this channel.
struct AuxiliarySpectrum {
    int g = 0;
    double phi = 0.0;
    std::vector<double> levels;
    Matrix modes;
};

// Result of eliminating the measured channels g >= 1 in favour of the
// background channel. Holds everything the eta-dependent kernels need.
//
// Diagonal mode solves each channel's auxiliary problem with the
// inter-channel couplings dropped (the mean-field route); full mode
// diagonalizes the joint g >= 1 block, which makes the elimination an exact
// partitioning of the coupled operator.
class ChannelReduction {
public:
    struct Term {
        double pole = 0.0;   // auxiliary level + phi_g (joint eigenvalue in full mode)
        Vector coupling;     // V^{0g} psi (channel-0 side), length N_P
        Vector joint_vec;    // eigenvector over the g >= 1 product space
        int g = 0;           // owning / dominant channel
        int n = 0;           // level index within that channel
    };

    static ChannelReduction solve(const MeasurementProblem& problem, AuxiliaryMode mode);

    const MeasurementProblem& problem() const { return problem_; }
    AuxiliaryMode mode() const { return mode_; }
    const std::vector<AuxiliarySpectrum>& spectra() const { return spectra_; }
    const AuxiliarySpectrum& spectrum(int g) const;
    const std::vector<Term>& terms() const { return terms_; }

    // Sum_n psi_gn psi_gn^dagger / (level_gn - (eta - phi_g)).
    Matrix green_function(int g, double eta) const;

    // V^{00} + sum over terms of w w^dagger / (eta - pole).
    Matrix effective_kernel(double eta) const;

    // Kernel reconstructing the channel-g component from the channel-0 one:
    // psi_g = h_kernel(g, eta) psi_0.
    Matrix h_kernel(int g, double eta) const;

    // Smallest |eta - pole| over this problem's poles must exceed this.
    double pole_guard() const { return pole_guard_; }

    // True when full mode distributed an unexpected number of joint
    // eigenvectors to some channel (cross-channel mixing too strong to
    // re-slice cleanly).
    bool slicing_ambiguous() const { return slicing_ambiguous_; }

private:
    void guard_eta(double eta, int g /* -1 = all channels */) const;

    MeasurementProblem problem_;
    AuxiliaryMode mode_ = AuxiliaryMode::diagonal;
    std::vector<AuxiliarySpectrum> spectra_;
    std::vector<Term> terms_;
    double pole_guard_ = 0.0;
    bool slicing_ambiguous_ = false;
};

struct EffectiveKernel {
    double eta = 0.0;
    Matrix matrix;  // V^{00} + V_hat(eta)
};

// Free-function faces of the operations above.
ChannelReduction solve_auxiliary(const MeasurementProblem& problem, AuxiliaryMode mode);
Matrix green_function(const AuxiliarySpectrum& aux, double eta, double tol_pole);
EffectiveKernel effective_kernel(const ChannelReduction& reduction, double eta);

}  // namespace redlab
