#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "oracle_helpers.hpp"
#include "redlab/errors.hpp"
#include "redlab/json_io.hpp"
#include "redlab/scenarios.hpp"

using namespace redlab;

namespace {

std::string temp_path(const char* name) {
    return std::string("redlab_test_") + name + ".json";
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(temp_path(name)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("symmetric fixture is mirror symmetric") {
    const auto rep = two_slit_report(build_two_slit(fix_ts()));
    REQUIRE(rep.roots.size() == 2);
    REQUIRE(rep.roots[0].roots.size() == 5);
    REQUIRE(rep.roots[1].roots.size() == 5);
    // channel 2's roots are channel 1's negated and reversed
    for (int i = 0; i < 5; ++i)
        CHECK(rep.roots[1].roots[i] ==
              doctest::Approx(-rep.roots[0].roots[4 - i]).epsilon(1e-12));
    CHECK(rep.alphas[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.alphas[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("FIX-TS report: five roots, two realisations sharing the near-zero root") {
    const auto rep = two_slit_report(build_two_slit(fix_ts()));
    CHECK(rep.partition.n_realisations == 2);
    for (int ch = 0; ch < 2; ++ch) {
        CHECK(rep.roots[ch].roots.size() == 5);
        int shared = 0;
        for (const auto& m : rep.partition.membership[ch])
            if (m.shared) ++shared;
        CHECK(shared == 1);
        CHECK(rep.partition.membership[ch][2].shared);
    }
    for (const auto& r : rep.realisations) {
        size_t total = 0;
        for (const auto& per_channel : r.roots_per_channel) total += per_channel.size();
        CHECK(total == 6);  // three per secular channel, seam root included
    }
    // localisation dominance, strict
    for (size_t i = 0; i < rep.realisations.size(); ++i) {
        const auto& loc = rep.localization[i];
        const int own = rep.realisations[i].g;
        const int other = own == 1 ? 2 : 1;
        CHECK(loc.channel_fraction[own] > loc.channel_fraction[other]);
    }
    CHECK(rep.interference_contrast > 0.0);
}

TEST_CASE("FIX-TA report reproduces the Born weights") {
    const auto rep = two_slit_report(build_two_slit(fix_ta()));
    REQUIRE(rep.alphas.size() == 2);
    CHECK(rep.alphas[0] == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(rep.alphas[1] == doctest::Approx(0.64).epsilon(1e-12));
}

TEST_CASE("two-slit problems are invariant under the mirror permutation") {
    auto config = fix_ts();
    const auto p = build_two_slit(config);
    // mirror: swap detectors and instrument states, negate energies
    const Matrix v01 = p.block(0, 1);
    const Matrix v02 = p.block(0, 2);
    for (int n = 0; n < 2; ++n)
        for (int np = 0; np < 2; ++np)
            CHECK(v02(1 - n, 1 - np) == v01(n, np));
    CHECK(p.system.phi[1] == -p.system.phi[2]);
    CHECK(p.block(1, 1)(1, 1) == -p.block(2, 2)(0, 0));
}

TEST_CASE("scenario round-trip is bit exact") {
    const auto p = build_two_slit(fix_ts());
    TempFile f("roundtrip");
    save_scenario(p, f.path);
    const auto q = load_scenario(f.path);
    CHECK(q.system.phi == p.system.phi);
    CHECK(q.system.amplitudes == p.system.amplitudes);
    CHECK(q.instrument.readings == p.instrument.readings);
    CHECK(q.instrument.ground_weights == p.instrument.ground_weights);
    for (const auto& [key, block] : p.coupling.blocks)
        CHECK(block == q.coupling.blocks.at(key));

    // and the emitted bytes are reproducible
    TempFile g("roundtrip2");
    save_scenario(q, g.path);
    std::ifstream a(f.path), b(g.path);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("minimal scenario file loads") {
    TempFile f("minimal");
    std::ofstream(f.path) << R"({
      "system": {"phi": [0, 1], "amp_re": [1]},
      "instrument": {"readings": [0.5]}
    })";
    const auto p = load_scenario(f.path);
    CHECK(p.n_channels() == 1);
    CHECK(p.n_readings() == 1);
}

TEST_CASE("mismatched block size is a schema/validation failure") {
    TempFile f("badblock");
    std::ofstream(f.path) << R"({
      "system": {"phi": [0, 1], "amp_re": [1]},
      "instrument": {"readings": [0.5, 1.5]},
      "coupling": {"blocks": [{"g": 0, "gp": 1, "re": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}]}
    })";
    CHECK_THROWS_AS((void)load_scenario(f.path), DimensionMismatch);
}

TEST_CASE("unknown keys are rejected") {
    TempFile f("unknown");
    std::ofstream(f.path) << R"({
      "system": {"phi": [0, 1], "amp_re": [1]},
      "instrument": {"readings": [0.5]},
      "surprise": 1
    })";
    CHECK_THROWS_AS((void)load_scenario(f.path), SchemaError);
}

TEST_CASE("truncated json is a parse failure") {
    TempFile f("truncated");
    std::ofstream(f.path) << R"({"system": {"phi": [0, 1)";
    CHECK_THROWS_AS((void)load_scenario(f.path), ParseError);
}

TEST_CASE("background level lands on the diagonal of V00") {
    TempFile f("bg");
    std::ofstream(f.path) << R"({
      "system": {"phi": [0, 1], "amp_re": [1]},
      "instrument": {"readings": [0.5]},
      "background_level": 0.25
    })";
    const auto p = load_scenario(f.path);
    CHECK(p.block(0, 0)(0, 0).real() == doctest::Approx(0.25));
}

TEST_CASE("localisation dominance holds for weak couplings across a sweep") {
    for (double strength : {0.05, 0.15, 0.3}) {
        auto config = fix_ts();
        config.coupling_strength1 = config.coupling_strength2 = strength;
        const auto rep = two_slit_report(build_two_slit(config));
        for (size_t i = 0; i < rep.realisations.size(); ++i) {
            const int own = rep.realisations[i].g;
            const int other = own == 1 ? 2 : 1;
            CHECK(rep.localization[i].channel_fraction[own] >
                  rep.localization[i].channel_fraction[other]);
        }
    }
}
