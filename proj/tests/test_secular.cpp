#include <doctest.h>

#include <set>

#include "oracle_helpers.hpp"
#include "redlab/errors.hpp"
#include "redlab/oracle.hpp"
#include "redlab/scenarios.hpp"
#include "redlab/secular.hpp"

using namespace redlab;

namespace {

// FIX-TS channel-1 roots, frozen from an independent 40-digit bisection of
// sum_k r_k/(eta - p_k) = eta + 1 with poles {-2, -0.1, 0.1, 2} and
// residues {0.04, 0.0036, 0.0036, 0.000324}.
const double kFixTsChannel1Roots[5] = {
    -2.0386463767131520, -0.96882992171323267, -0.096006682774218628,
    0.10337449300130505, 2.0001084881992982};

ChannelConstants one_pole_constants() {
    ChannelConstants c;
    c.n = 0;
    c.p0n = 0.0;
    SecularPole p;
    p.position = 0.0;
    p.residue = 1.0;
    p.g = 1;
    p.n_prime = 0;
    c.poles.push_back(p);
    return c;
}

}  // namespace

TEST_CASE("constants without coupling have zero residues and shifted p0") {
    MeasurementProblem raw;
    raw.system.phi = {0.0, 1.0};
    raw.system.amplitudes = {Complex(1.0)};
    raw.instrument.readings = {-1.0, 1.0};
    Matrix v00 = Matrix::Zero(2, 2);
    v00(0, 0) = 0.25;
    v00(1, 1) = -0.5;
    raw.coupling.blocks[{0, 0}] = v00;
    const auto p = validate_problem(raw);
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    const auto c0 = channel_constants(red, 0);
    const auto c1 = channel_constants(red, 1);
    CHECK(c0.p0n == doctest::Approx(-0.75));
    CHECK(c1.p0n == doctest::Approx(0.5));
    for (const auto& pole : c0.poles) CHECK(pole.residue == 0.0);
    CHECK(c0.active_poles().empty());
}

TEST_CASE("a 2x2 problem has at most four poles per channel") {
    const auto p = build_two_slit(fix_ts());
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    for (int n = 0; n < 2; ++n)
        CHECK(channel_constants(red, n).poles.size() <= 4);
}

TEST_CASE("FIX-TS residues are the squared configured strengths") {
    const auto p = build_two_slit(fix_ts());
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    const auto c = channel_constants(red, 0);
    REQUIRE(c.poles.size() == 4);
    // Own-detector pole at -2 carries the full strength 0.2^2; the rest are
    // overlap-suppressed copies.
    CHECK(c.poles[0].position == doctest::Approx(-2.0));
    CHECK(c.poles[0].residue == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(c.poles[1].residue == doctest::Approx(0.0036).epsilon(1e-14));
    CHECK(c.poles[2].residue == doctest::Approx(0.0036).epsilon(1e-14));
    CHECK(c.poles[3].residue == doctest::Approx(0.000324).epsilon(1e-14));
}

TEST_CASE("secular value examples") {
    const auto c = one_pole_constants();
    CHECK(secular_value(c, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(secular_value(c, 1e9) == doctest::Approx(1e-9).epsilon(1e-12));
    CHECK(secular_value(c, 1e9) > 0.0);
    CHECK_THROWS_AS((void)secular_value(c, 0.0), PoleEvaluation);
}

TEST_CASE("no poles: the single root is p0n") {
    ChannelConstants c;
    c.n = 0;
    c.p0n = 3.0;
    const auto roots = find_roots(c);
    REQUIRE(roots.roots.size() == 1);
    CHECK(roots.roots[0] == 3.0);
}

TEST_CASE("single pole, unit residue: roots at -1 and +1") {
    const auto roots = find_roots(one_pole_constants());
    REQUIRE(roots.roots.size() == 2);
    CHECK(roots.roots[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(roots.roots[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("FIX-TS channel 1 has exactly the five frozen roots") {
    const auto p = build_two_slit(fix_ts());
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    const auto roots = find_roots(channel_constants(red, 0));
    REQUIRE(roots.roots.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(roots.roots[i] == doctest::Approx(kFixTsChannel1Roots[i]).epsilon(1e-11));
}

TEST_CASE("count_solutions matches the closed forms") {
    auto c = count_solutions(2, 2);
    CHECK(c.n_solutions == 5);
    CHECK(c.n_base == 3);
    CHECK(c.n_realisations == 2);
    c = count_solutions(1, 1);
    CHECK(c.n_solutions == 2);
    CHECK(c.n_base == 2);
    CHECK(c.n_realisations == 1);
    c = count_solutions(3, 4);
    CHECK(c.n_solutions == 13);
    CHECK(c.n_base == 5);
    CHECK(c.n_realisations == 3);
    CHECK_THROWS_AS((void)count_solutions(0, 1), DimensionMismatch);
}

TEST_CASE("interlacing: one root strictly inside every inter-pole interval") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 250; ++trial) {
        const int k = 1 + int(rng() % 8);
        const auto c = testutil::random_constants(rng, k);
        const auto roots = find_roots(c);
        REQUIRE(roots.roots.size() == static_cast<size_t>(k) + 1);
        const auto act = c.active_poles();
        CHECK(roots.roots.front() < act.front()->position);
        CHECK(roots.roots.back() > act.back()->position);
        for (int i = 0; i + 1 < k; ++i) {
            CHECK(roots.roots[i + 1] > act[i]->position);
            CHECK(roots.roots[i + 1] < act[i + 1]->position);
        }
    }
}

TEST_CASE("count law over channels of a random separated problem") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 5; ++trial) {
        const int n_phi = 1 + int(rng() % 3);
        const int n_p = 1 + int(rng() % 4);
        const auto p = testutil::random_problem(rng, n_phi, n_p, 0.25, true, false);
        const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
        size_t total = 0;
        for (int n = 0; n < n_p; ++n)
            total += find_roots(channel_constants(red, n)).roots.size();
        CHECK(total == static_cast<size_t>(n_p) * (n_phi * n_p + 1));
    }
}

TEST_CASE("secular value is strictly decreasing between poles") {
    std::mt19937_64 rng(23);
    const auto c = testutil::random_constants(rng, 5);
    const auto act = c.active_poles();
    for (size_t i = 0; i + 1 < act.size(); ++i) {
        const double w = act[i + 1]->position - act[i]->position;
        double prev = std::numeric_limits<double>::infinity();
        for (double frac : {0.2, 0.4, 0.6, 0.8}) {
            const double v = secular_value(c, act[i]->position + frac * w);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("shift covariance: moving poles and p0 by c moves every root by c") {
    std::mt19937_64 rng(24);
    auto c = testutil::random_constants(rng, 6);
    const auto before = find_roots(c).roots;
    const double shift = 1.875;
    c.p0n += shift;
    for (auto& p : c.poles) p.position += shift;
    const auto after = find_roots(c).roots;
    REQUIRE(before.size() == after.size());
    for (size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] - before[i] == doctest::Approx(shift).epsilon(1e-10));
}

TEST_CASE("every root satisfies the secular equation to scaled 1e-10") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = testutil::random_constants(rng, 2 + int(rng() % 6));
        for (double root : find_roots(c).roots) {
            double scale = 1.0 + std::abs(root) + std::abs(c.p0n);
            for (const auto& p : c.poles)
                if (p.active) scale += p.residue / std::abs(root - p.position);
            CHECK(std::abs(secular_value(c, root) - (root - c.p0n)) <=
                  defaults::tol_root * scale);
        }
    }
}

TEST_CASE("classification of the two-slit fixture matches the shared-root layout") {
    const auto p = build_two_slit(fix_ts());
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    std::vector<ChannelConstants> constants;
    std::vector<SecularRoots> roots;
    for (int n = 0; n < 2; ++n) {
        constants.push_back(channel_constants(red, n));
        roots.push_back(find_roots(constants.back()));
    }
    const auto part = classify_realisations(roots, constants);
    CHECK(part.n_realisations == 2);
    CHECK(part.axis == GroupingAxis::instrument);
    CHECK(part.group_overlap);  // the g-families interleave by construction
    for (int ch = 0; ch < 2; ++ch) {
        REQUIRE(part.membership[ch].size() == 5);
        CHECK(part.membership[ch][0].realisations == std::vector<int>{0});
        CHECK(part.membership[ch][1].realisations == std::vector<int>{0});
        CHECK(part.membership[ch][2].shared);
        CHECK(part.membership[ch][2].realisations == std::vector<int>{0, 1});
        CHECK(part.membership[ch][3].realisations == std::vector<int>{1});
        CHECK(part.membership[ch][4].realisations == std::vector<int>{1});
        // the shared root is the near-zero one
        CHECK(std::abs(roots[ch].roots[2]) < 0.1);
    }
}

TEST_CASE("single measured channel: one realisation holding every root") {
    std::mt19937_64 rng(26);
    const auto p = testutil::random_problem(rng, 1, 3, 0.3, true, false);
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    std::vector<ChannelConstants> constants;
    std::vector<SecularRoots> roots;
    for (int n = 0; n < 3; ++n) {
        constants.push_back(channel_constants(red, n));
        roots.push_back(find_roots(constants.back()));
    }
    const auto part = classify_realisations(roots, constants);
    CHECK(part.n_realisations == 1);
    for (const auto& channel : part.membership)
        for (const auto& m : channel) CHECK(m.realisations == std::vector<int>{0});
}

TEST_CASE("separated groups: brute-force bracket inspection agrees") {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 20; ++trial) {
        const int n_phi = 2 + int(rng() % 3);
        const int n_p = 1 + int(rng() % 3);
        const auto p = testutil::random_problem(rng, n_phi, n_p, 0.2, true, false);
        const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
        std::vector<ChannelConstants> constants;
        std::vector<SecularRoots> roots;
        for (int n = 0; n < n_p; ++n) {
            constants.push_back(channel_constants(red, n));
            roots.push_back(find_roots(constants.back()));
        }
        const auto part = classify_realisations(roots, constants);
        if (part.axis != GroupingAxis::channel) continue;  // rare residue dropout
        CHECK(part.n_realisations == n_phi);

        for (int ch = 0; ch < n_p; ++ch) {
            const auto act = constants[ch].active_poles();
            if (roots[ch].roots.size() != act.size() + 1) continue;
            // exhaustive bracket inspection: a root bounded by poles of one
            // channel belongs to it; flank or mixed-bracket roots go to every
            // adjacent channel's realisation
            for (size_t k = 0; k < roots[ch].roots.size(); ++k) {
                std::set<int> expect;
                if (k > 0) expect.insert(act[k - 1]->g);
                if (k < act.size()) expect.insert(act[k]->g);
                const auto& got = part.membership[ch][k].realisations;
                REQUIRE(got.size() == expect.size());
                for (int ri : got) CHECK(expect.count(part.family_label[ri]) == 1);
                CHECK(part.membership[ch][k].shared == (expect.size() > 1));
            }
            // every realisation ends up with the complete base set
            std::vector<int> per_realisation(part.n_realisations, 0);
            for (const auto& m : part.membership[ch])
                for (int ri : m.realisations) ++per_realisation[ri];
            for (int count : per_realisation) CHECK(count == n_p + 1);
        }
    }
}

TEST_CASE("curve data matches the extended-precision oracle") {
    const auto p = build_two_slit(fix_ts());
    const auto red = solve_auxiliary(p, AuxiliaryMode::diagonal);
    const auto c = channel_constants(red, 0);
    for (int i = 0; i <= 400; ++i) {
        const double eta = -3.0 + 6.0 * i / 400.0;
        bool near = false;
        for (const auto& pole : c.poles)
            if (std::abs(eta - pole.position) < 1e-3) near = true;
        if (near) continue;
        const double fast = secular_value(c, eta);
        const double slow = static_cast<double>(secular_value_extended(c, eta));
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}
