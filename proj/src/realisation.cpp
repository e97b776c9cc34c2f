#include "redlab/realisation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "redlab/errors.hpp"

namespace redlab {

namespace {

void fix_phase(Vector& v) {
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            const Complex phase = v[i] / std::abs(v[i]);
            v /= phase;
            return;
        }
    }
}

double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw; identical on every conforming platform.
    return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

}  // namespace

ReducedState reduced_state(const ChannelReduction& reduction, double root, int channel,
                           bool shared) {
    const auto& problem = reduction.problem();
    const int n_p = problem.n_readings();
    const int n_phi = problem.n_channels();
    if (channel < 0 || channel >= n_p)
        throw DimensionMismatch("reduced_state channel out of range");

    ReducedState state;
    state.root = root;
    state.channel = channel;
    state.shared = shared;

    Vector psi0;
    if (reduction.mode() == AuxiliaryMode::full) {
        // Exact partitioning: the effective channel problem has an eigenvalue
        // at the root; take its eigenvector.
        Matrix m = reduction.effective_kernel(root);
        for (int n = 0; n < n_p; ++n) m(n, n) += problem.instrument.readings[n];
        Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
        if (solver.info() != Eigen::Success)
            throw EigenFailure("effective channel eigensolve failed");
        int best = 0;
        double best_gap = std::abs(solver.eigenvalues()[0] - root);
        for (int i = 1; i < n_p; ++i) {
            const double gap = std::abs(solver.eigenvalues()[i] - root);
            if (gap < best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        const double scale = 1.0 + std::abs(root);
        if (best_gap > 1e-6 * scale)
            throw ChannelSolveFailure("no effective-problem eigenvalue within tolerance of root " +
                                      std::to_string(root));
        psi0 = solver.eigenvectors().col(best);
    } else {
        psi0 = Vector::Zero(n_p);
        psi0[channel] = 1.0;
    }

    state.components = Vector::Zero(problem.dim());
    state.components.segment(0, n_p) = psi0;
    for (int g = 1; g <= n_phi; ++g)
        state.components.segment(g * n_p, n_p) = reduction.h_kernel(g, root) * psi0;
    state.components.normalize();
    fix_phase(state.components);
    return state;
}

std::vector<Realisation> build_realisations(const ChannelReduction& reduction,
                                            const std::vector<SecularRoots>& roots,
                                            const RealisationPartition& partition) {
    const auto& problem = reduction.problem();
    const int n_p = problem.n_readings();
    std::vector<Realisation> out(partition.n_realisations);
    for (int i = 0; i < partition.n_realisations; ++i) {
        out[i].index = i;
        out[i].roots_per_channel.assign(n_p, {});
    }

    for (size_t ch = 0; ch < roots.size(); ++ch) {
        for (size_t k = 0; k < roots[ch].roots.size(); ++k) {
            const auto& m = partition.membership[ch][k];
            if (m.realisations.empty()) continue;
            ReducedState state = reduced_state(reduction, roots[ch].roots[k],
                                               static_cast<int>(ch), m.shared);
            for (int ri : m.realisations) {
                out[ri].states.push_back(state);
                out[ri].roots_per_channel[ch].push_back(state.root);
            }
        }
    }

    // Label each realisation with the channel its density manifests. On the
    // channel axis the family label already is that g; otherwise take the
    // dominant measured channel of the realisation's own states.
    for (auto& r : out) {
        if (partition.axis == GroupingAxis::channel &&
            partition.family_label[r.index] >= 1) {
            r.g = partition.family_label[r.index];
            continue;
        }
        const int n_phi = problem.n_channels();
        std::vector<double> mass(n_phi + 1, 0.0);
        for (const auto& s : r.states)
            for (int g = 1; g <= n_phi; ++g)
                mass[g] += s.components.segment(g * n_p, n_p).squaredNorm();
        int best = 1;
        for (int g = 2; g <= n_phi; ++g)
            if (mass[g] > mass[best]) best = g;
        r.g = best;
    }

    for (auto& r : out) boundary_match(problem, r);
    probabilities(out);
    return out;
}

void boundary_match(const MeasurementProblem& problem, Realisation& realisation) {
    const int n_p = problem.n_readings();
    realisation.C = problem.system.amplitudes[realisation.g];

    Vector ground(n_p);
    for (int n = 0; n < n_p; ++n) ground[n] = problem.instrument.ground_weights[n];

    std::vector<Complex> overlap(realisation.states.size());
    Complex total(0.0);
    double max_abs = 0.0;
    for (size_t k = 0; k < realisation.states.size(); ++k) {
        overlap[k] = ground.dot(realisation.states[k].components.segment(0, n_p));
        total += overlap[k];
        max_abs = std::max(max_abs, std::abs(overlap[k]));
    }
    if (max_abs < 1e-14 || std::abs(total) < 1e-14) {
        realisation.degenerate_overlap = true;
        const double uniform = realisation.states.empty()
                                   ? 0.0
                                   : 1.0 / static_cast<double>(realisation.states.size());
        for (auto& s : realisation.states) s.c = uniform;
        return;
    }
    for (size_t k = 0; k < realisation.states.size(); ++k)
        realisation.states[k].c = overlap[k] / total;
}

std::vector<double> probabilities(std::vector<Realisation>& realisations) {
    double total = 0.0;
    for (const auto& r : realisations) total += std::norm(r.C);
    if (total <= 0.0) throw AllZero("every realisation amplitude C_i is zero");
    std::vector<double> alphas;
    for (auto& r : realisations) {
        r.alpha = std::norm(r.C) / total;
        alphas.push_back(r.alpha);
    }
    return alphas;
}

DensityGrid density(const MeasurementProblem& problem, const Realisation& realisation) {
    const int n_p = problem.n_readings();
    const int n_phi = problem.n_channels();
    Vector sum = Vector::Zero(problem.dim());
    for (const auto& s : realisation.states) sum += s.c * s.components;

    DensityGrid grid;
    grid.values = RealMatrix::Zero(n_phi + 1, n_p);
    for (int g = 0; g <= n_phi; ++g)
        for (int n = 0; n < n_p; ++n)
            grid.values(g, n) = std::norm(sum[ProductBasisIndex{g, n}.flat(n_p)]);
    const double total = grid.values.sum();
    if (total > 0.0) grid.values /= total;
    grid.marginal_g = grid.values.rowwise().sum();
    grid.marginal_n = grid.values.colwise().sum();
    return grid;
}

DensityGrid expected_density(const MeasurementProblem& problem,
                             const std::vector<Realisation>& realisations) {
    const int n_p = problem.n_readings();
    const int n_phi = problem.n_channels();
    DensityGrid grid;
    grid.values = RealMatrix::Zero(n_phi + 1, n_p);
    for (const auto& r : realisations) grid.values += r.alpha * density(problem, r).values;
    grid.marginal_g = grid.values.rowwise().sum();
    grid.marginal_n = grid.values.colwise().sum();
    return grid;
}

LocalizationReport localization_report(const MeasurementProblem& problem,
                                       const Realisation& realisation) {
    const DensityGrid grid = density(problem, realisation);
    LocalizationReport rep;
    rep.channel_fraction.assign(grid.marginal_g.data(),
                                grid.marginal_g.data() + grid.marginal_g.size());
    rep.instrument_fraction.assign(grid.marginal_n.data(),
                                   grid.marginal_n.data() + grid.marginal_n.size());
    rep.dominant_channel = 1;
    for (int g = 2; g <= problem.n_channels(); ++g)
        if (rep.channel_fraction[g] > rep.channel_fraction[rep.dominant_channel])
            rep.dominant_channel = g;
    return rep;
}

std::vector<SampleRecord> sample(const std::vector<Realisation>& realisations,
                                 std::uint64_t seed, std::int64_t count) {
    // Sampleable categories: non-shared states with their |c|^2 weights,
    // restricted to realisations of nonzero probability.
    struct Category {
        double weight;
        int reading;
        double root;
    };
    std::vector<double> alpha_cdf;
    std::vector<std::vector<Category>> cats(realisations.size());
    double acc = 0.0;
    for (size_t i = 0; i < realisations.size(); ++i) {
        acc += realisations[i].alpha;
        alpha_cdf.push_back(acc);
        double wsum = 0.0;
        for (const auto& s : realisations[i].states) {
            if (s.shared) continue;
            const double w = std::norm(s.c);
            wsum += w;
            cats[i].push_back({w, s.channel, s.root});
        }
        if (cats[i].empty())  // nothing but shared roots; sample those instead
            for (const auto& s : realisations[i].states) {
                const double w = std::norm(s.c);
                wsum += w;
                cats[i].push_back({w, s.channel, s.root});
            }
        for (auto& c : cats[i]) c.weight = wsum > 0 ? c.weight / wsum : 1.0 / cats[i].size();
    }
    if (!alpha_cdf.empty()) alpha_cdf.back() = 1.0;

    std::mt19937_64 rng(seed);
    std::vector<SampleRecord> records;
    records.reserve(static_cast<size_t>(count));
    for (std::int64_t d = 0; d < count; ++d) {
        const double u = uniform01(rng);
        size_t i = 0;
        while (i + 1 < alpha_cdf.size() && u >= alpha_cdf[i]) ++i;
        while (cats[i].empty() && i + 1 < cats.size()) ++i;
        if (cats[i].empty()) throw AllZero("no sampleable outcome categories");
        const double v = uniform01(rng);
        double run = 0.0;
        const Category* chosen = &cats[i].back();
        for (const auto& c : cats[i]) {
            run += c.weight;
            if (v < run) {
                chosen = &c;
                break;
            }
        }
        records.push_back({d, static_cast<int>(i) + 1, chosen->reading + 1, chosen->root});
    }
    return records;
}

}  // namespace redlab
