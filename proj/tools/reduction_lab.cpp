// reduction-lab: command-line front end for the measurement-reduction
// pipeline. Exit codes: 0 success, 1 validation/parse failure, 2 numerical
// failure, 3 oracle mismatch.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "redlab/errors.hpp"
#include "redlab/json_io.hpp"
#include "redlab/model.hpp"
#include "redlab/oracle.hpp"
#include "redlab/realisation.hpp"
#include "redlab/scenarios.hpp"
#include "redlab/secular.hpp"

using redlab::json_io::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitOracle = 3;

void print_error(const std::string& code, const std::string& message) {
    ordered_json err;
    err["error"] = code;
    err["message"] = message;
    std::cerr << redlab::json_io::dump(err);
}

std::uint64_t effective_seed(std::uint64_t cli_seed) {
    if (const char* env = std::getenv("REDLAB_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
    }
    return cli_seed;
}

struct Pipeline {
    redlab::ChannelReduction reduction;
    std::vector<redlab::ChannelConstants> constants;
    std::vector<redlab::SecularRoots> roots;
    redlab::RealisationPartition partition;
    std::vector<redlab::Realisation> realisations;
};

Pipeline run_pipeline(const redlab::MeasurementProblem& problem, redlab::AuxiliaryMode mode) {
    Pipeline p{redlab::solve_auxiliary(problem, mode), {}, {}, {}, {}};
    for (int n = 0; n < problem.n_readings(); ++n)
        p.constants.push_back(redlab::channel_constants(p.reduction, n));
    for (const auto& c : p.constants) p.roots.push_back(redlab::find_roots(c));
    p.partition = redlab::classify_realisations(p.roots, p.constants);
    p.realisations = redlab::build_realisations(p.reduction, p.roots, p.partition);
    return p;
}

ordered_json realisation_json(const redlab::MeasurementProblem& problem,
                              const redlab::Realisation& r) {
    ordered_json rj;
    rj["index"] = r.index + 1;
    rj["g"] = r.g;
    rj["alpha"] = r.alpha;
    rj["C_re"] = r.C.real();
    rj["C_im"] = r.C.imag();
    ordered_json roots = ordered_json::array();
    for (const auto& per_channel : r.roots_per_channel) roots.push_back(per_channel);
    rj["roots_per_channel"] = roots;
    const auto loc = redlab::localization_report(problem, r);
    rj["channel_fractions"] = loc.channel_fraction;
    rj["instrument_fractions"] = loc.instrument_fraction;
    rj["dominant_channel"] = loc.dominant_channel;
    if (r.degenerate_overlap) rj["degenerate_overlap"] = true;
    return rj;
}

ordered_json solve_report(const redlab::MeasurementProblem& problem, const Pipeline& p) {
    ordered_json rep;
    rep["label"] = problem.label;
    const auto counts = redlab::count_solutions(problem.n_channels(), problem.n_readings());
    ordered_json cj;
    cj["n_solutions"] = counts.n_solutions;
    cj["n_base"] = counts.n_base;
    cj["n_realisations"] = counts.n_realisations;
    rep["counts"] = cj;

    ordered_json channels = ordered_json::array();
    for (size_t n = 0; n < p.constants.size(); ++n) {
        ordered_json ch;
        ch["n"] = static_cast<int>(n) + 1;
        ch["p0"] = p.constants[n].p0n;
        ordered_json poles = ordered_json::array();
        for (const auto& pole : p.constants[n].poles) {
            ordered_json pj;
            pj["position"] = pole.position;
            pj["residue"] = pole.residue;
            pj["g"] = pole.g;
            pj["n_prime"] = pole.n_prime < 0 ? -1 : pole.n_prime + 1;
            pj["active"] = pole.active;
            if (pole.merged) pj["merged"] = true;
            poles.push_back(pj);
        }
        ch["poles"] = poles;
        ch["roots"] = p.roots[n].roots;
        if (!p.roots[n].deactivated_poles.empty())
            ch["deactivated_poles"] = p.roots[n].deactivated_poles;
        channels.push_back(ch);
    }
    rep["channels"] = channels;

    ordered_json realisations = ordered_json::array();
    ordered_json alphas = ordered_json::array();
    for (const auto& r : p.realisations) {
        realisations.push_back(realisation_json(problem, r));
        alphas.push_back(r.alpha);
    }
    rep["realisations"] = realisations;
    rep["alphas"] = alphas;

    ordered_json diag;
    diag["grouping_axis"] = p.partition.axis == redlab::GroupingAxis::channel ? "channel"
                            : p.partition.axis == redlab::GroupingAxis::instrument
                                ? "instrument"
                                : "fallback";
    diag["group_overlap"] = p.partition.group_overlap;
    diag["count_deviation"] = p.partition.count_deviation;
    diag["slicing_ambiguous"] = p.reduction.slicing_ambiguous();
    rep["diagnostics"] = diag;
    return rep;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw redlab::ParseError("cannot open output file: " + path);
    out << text;
}

std::string csv_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

int cmd_validate(const std::string& scenario) {
    const auto problem = redlab::load_scenario(scenario);
    ordered_json summary;
    summary["label"] = problem.label;
    summary["n_channels"] = problem.n_channels();
    summary["n_readings"] = problem.n_readings();
    summary["dim"] = problem.dim();
    summary["phi"] = problem.system.phi;
    summary["readings"] = problem.instrument.readings;
    int nonzero_blocks = 0;
    for (const auto& [key, m] : problem.coupling.blocks)
        if (key.first <= key.second && !m.isZero(0.0)) ++nonzero_blocks;
    summary["nonzero_blocks"] = nonzero_blocks;
    std::cout << redlab::json_io::dump(summary);
    return kExitOk;
}

int cmd_solve(const std::string& scenario, const std::string& out) {
    const auto problem = redlab::load_scenario(scenario);
    const Pipeline p = run_pipeline(problem, redlab::AuxiliaryMode::diagonal);
    const ordered_json rep = solve_report(problem, p);
    if (out.empty())
        std::cout << redlab::json_io::dump(rep);
    else
        redlab::json_io::write_file(rep, out);
    return kExitOk;
}

int cmd_sample(const std::string& scenario, std::int64_t n, std::uint64_t seed,
               const std::string& out, const std::string& summary_path) {
    const auto problem = redlab::load_scenario(scenario);
    const Pipeline p = run_pipeline(problem, redlab::AuxiliaryMode::diagonal);
    const auto records = redlab::sample(p.realisations, seed, n);

    std::string csv = "draw,realisation,reading_index,root_value\n";
    for (const auto& r : records) {
        csv += std::to_string(r.draw) + "," + std::to_string(r.realisation) + "," +
               std::to_string(r.reading_index) + "," + csv_double(r.root_value) + "\n";
    }
    if (out.empty())
        std::cout << csv;
    else
        write_text(out, csv);

    ordered_json summary;
    summary["count"] = n;
    summary["seed"] = seed;
    std::vector<std::int64_t> hits(p.realisations.size(), 0);
    for (const auto& r : records) ++hits[r.realisation - 1];
    ordered_json freqs = ordered_json::array(), alphas = ordered_json::array(),
                 bounds = ordered_json::array(), within = ordered_json::array();
    double chi2 = 0.0;
    for (size_t i = 0; i < p.realisations.size(); ++i) {
        const double alpha = p.realisations[i].alpha;
        const double freq = n > 0 ? static_cast<double>(hits[i]) / n : 0.0;
        const double sigma = n > 0 ? std::sqrt(alpha * (1.0 - alpha) / n) : 0.0;
        freqs.push_back(freq);
        alphas.push_back(alpha);
        bounds.push_back(4.0 * sigma);
        within.push_back(n == 0 || std::abs(freq - alpha) <= 4.0 * sigma);
        const double expected = alpha * n;
        if (expected > 0) chi2 += (hits[i] - expected) * (hits[i] - expected) / expected;
    }
    summary["frequencies"] = freqs;
    summary["alphas"] = alphas;
    summary["four_sigma"] = bounds;
    summary["within_four_sigma"] = within;
    summary["chi_square"] = chi2;
    if (summary_path.empty())
        std::cerr << redlab::json_io::dump(summary);
    else
        redlab::json_io::write_file(summary, summary_path);
    return kExitOk;
}

int cmd_oracle(const std::string& scenario, double tol, const std::string& out,
               double corrupt_kernel) {
    const auto problem = redlab::load_scenario(scenario);
    const auto full = redlab::full_spectrum(problem);
    const auto reduction = redlab::solve_auxiliary(problem, redlab::AuxiliaryMode::full);
    const auto part = redlab::partitioned_spectrum(reduction, 256, corrupt_kernel);
    const auto cmp = redlab::compare_spectra(part, full, tol);

    // Mean-field secular roots vs the full spectrum: reported, not gated.
    const auto diag_reduction = redlab::solve_auxiliary(problem, redlab::AuxiliaryMode::diagonal);
    double secular_gap = 0.0;
    for (int n = 0; n < problem.n_readings(); ++n) {
        const auto roots = redlab::find_roots(redlab::channel_constants(diag_reduction, n));
        redlab::SpectrumReport sr;
        sr.method = "secular";
        sr.values = roots.roots;
        const auto scmp = redlab::compare_spectra(sr, full, 1.0);
        secular_gap = std::max(secular_gap, scmp.max_gap);
    }

    ordered_json rep;
    rep["method"] = cmp.method;
    rep["count"] = static_cast<int>(part.values.size());
    rep["full_count"] = static_cast<int>(full.values.size());
    rep["max_gap"] = cmp.max_gap;
    rep["pass"] = cmp.pass;
    rep["tol"] = tol;
    rep["secular_meanfield_max_gap"] = secular_gap;
    if (!part.notes.empty()) rep["notes"] = part.notes;
    if (out.empty())
        std::cout << redlab::json_io::dump(rep);
    else
        redlab::json_io::write_file(rep, out);
    return cmp.pass ? kExitOk : kExitOracle;
}

int cmd_plotdata(const std::string& scenario, int channel, const std::string& range, int points,
                 const std::string& out, const std::string& poles_path) {
    const auto problem = redlab::load_scenario(scenario);
    const auto reduction = redlab::solve_auxiliary(problem, redlab::AuxiliaryMode::diagonal);
    if (channel < 1 || channel > problem.n_readings())
        throw redlab::DimensionMismatch("plotdata channel out of range");
    const auto constants = redlab::channel_constants(reduction, channel - 1);
    const auto roots = redlab::find_roots(constants);

    double lo = 0.0, hi = 0.0;
    if (!range.empty()) {
        const auto colon = range.find(':');
        if (colon == std::string::npos)
            throw redlab::ParseError("range must look like LO:HI");
        lo = std::stod(range.substr(0, colon));
        hi = std::stod(range.substr(colon + 1));
    } else {
        const auto act = constants.active_poles();
        if (act.empty()) {
            lo = constants.p0n - 1.0;
            hi = constants.p0n + 1.0;
        } else {
            const double span = std::max(1e-3, act.back()->position - act.front()->position);
            lo = act.front()->position - 0.5 * span;
            hi = act.back()->position + 0.5 * span;
        }
    }
    if (!(hi > lo)) throw redlab::ParseError("plotdata range is empty");
    if (points < 2) throw redlab::ParseError("plotdata needs points >= 2");

    const double guard = reduction.pole_guard();
    std::string csv = "eta,secular_value,line_value\n";
    for (int i = 0; i < points; ++i) {
        const double eta = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        bool near_pole = false;
        for (const auto& pole : constants.poles)
            if (pole.active && std::abs(eta - pole.position) < guard) near_pole = true;
        if (near_pole) continue;
        csv += csv_double(eta) + "," + csv_double(redlab::secular_value(constants, eta)) + "," +
               csv_double(eta - constants.p0n) + "\n";
    }
    if (out.empty())
        std::cout << csv;
    else
        write_text(out, csv);

    ordered_json sidecar;
    sidecar["channel"] = channel;
    sidecar["p0"] = constants.p0n;
    ordered_json poles = ordered_json::array();
    for (const auto& pole : constants.poles) {
        ordered_json pj;
        pj["position"] = pole.position;
        pj["residue"] = pole.residue;
        pj["g"] = pole.g;
        pj["active"] = pole.active;
        poles.push_back(pj);
    }
    sidecar["poles"] = poles;
    sidecar["roots"] = roots.roots;
    if (!poles_path.empty())
        redlab::json_io::write_file(sidecar, poles_path);
    else
        std::cerr << redlab::json_io::dump(sidecar);
    return kExitOk;
}

int cmd_twoslit(const redlab::TwoSlitConfig& config, const std::string& out,
                const std::string& emit_scenario) {
    const auto problem = redlab::build_two_slit(config);
    if (!emit_scenario.empty()) redlab::save_scenario(problem, emit_scenario);
    const auto rep = redlab::two_slit_report(problem);

    ordered_json j;
    j["label"] = problem.label;
    ordered_json roots = ordered_json::array();
    for (const auto& r : rep.roots) roots.push_back(r.roots);
    j["roots_per_channel"] = roots;
    j["n_realisations"] = rep.partition.n_realisations;
    j["alphas"] = rep.alphas;
    ordered_json realisations = ordered_json::array();
    for (const auto& r : rep.realisations) realisations.push_back(realisation_json(problem, r));
    j["realisations"] = realisations;
    j["interference_contrast"] = rep.interference_contrast;
    if (out.empty())
        std::cout << redlab::json_io::dump(j);
    else
        redlab::json_io::write_file(j, out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reduction-lab: multi-branch secular reduction of coupled measurement models"};
    app.require_subcommand(1);

    std::string scenario, out, summary_path, range, poles_path, emit_scenario;
    std::int64_t n_draws = 0;
    std::uint64_t seed = 0;
    double tol = redlab::defaults::oracle_tol;
    double corrupt_kernel = 0.0;
    int channel = 1;
    int points = 2001;

    auto* validate = app.add_subcommand("validate", "load and validate a scenario");
    validate->add_option("--scenario", scenario)->required();

    auto* solve = app.add_subcommand("solve", "run the full reduction pipeline");
    solve->add_option("--scenario", scenario)->required();
    solve->add_option("--out", out);

    auto* sample_cmd = app.add_subcommand("sample", "draw measurement outcomes");
    sample_cmd->add_option("--scenario", scenario)->required();
    sample_cmd->add_option("--n", n_draws)->required();
    sample_cmd->add_option("--seed", seed);
    sample_cmd->add_option("--out", out);
    sample_cmd->add_option("--summary", summary_path);

    auto* oracle_cmd = app.add_subcommand("oracle", "cross-check against brute force");
    oracle_cmd->add_option("--scenario", scenario)->required();
    oracle_cmd->add_option("--tol", tol);
    oracle_cmd->add_option("--out", out);
    oracle_cmd->add_option("--corrupt-kernel", corrupt_kernel)
        ->description("test hook: distort the effective kernel by this amount")
        ->group("");  // hidden

    auto* plot = app.add_subcommand("plotdata", "emit secular-curve data");
    plot->add_option("--scenario", scenario)->required();
    plot->add_option("--channel", channel);
    plot->add_option("--range", range);
    plot->add_option("--points", points);
    plot->add_option("--out", out);
    plot->add_option("--poles", poles_path);

    auto* twoslit = app.add_subcommand("twoslit", "build and analyse the two-slit model");
    std::string preset;
    double separation = 2.0, amp1 = 1.0, amp2 = 1.0, strength1 = 0.2, strength2 = 0.2;
    double cross_coupling = 0.0, delta = 0.1, overlap = 0.3, background = 0.0;
    twoslit->add_option("--preset", preset)->check(CLI::IsMember({"FIX-TS", "FIX-TA"}));
    twoslit->add_option("--separation", separation);
    twoslit->add_option("--amp1", amp1);
    twoslit->add_option("--amp2", amp2);
    twoslit->add_option("--strength1", strength1);
    twoslit->add_option("--strength2", strength2);
    twoslit->add_option("--cross-coupling", cross_coupling);
    twoslit->add_option("--delta", delta);
    twoslit->add_option("--overlap", overlap);
    twoslit->add_option("--background", background);
    twoslit->add_option("--out", out);
    twoslit->add_option("--emit-scenario", emit_scenario);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(scenario);
        if (solve->parsed()) return cmd_solve(scenario, out);
        if (sample_cmd->parsed())
            return cmd_sample(scenario, n_draws, effective_seed(seed), out, summary_path);
        if (oracle_cmd->parsed()) return cmd_oracle(scenario, tol, out, corrupt_kernel);
        if (plot->parsed())
            return cmd_plotdata(scenario, channel, range, points, out, poles_path);
        if (twoslit->parsed()) {
            redlab::TwoSlitConfig config;
            if (preset == "FIX-TS") config = redlab::fix_ts();
            if (preset == "FIX-TA") config = redlab::fix_ta();
            if (twoslit->count("--separation")) config.separation = separation;
            if (twoslit->count("--amp1")) config.amp1 = amp1;
            if (twoslit->count("--amp2")) config.amp2 = amp2;
            if (twoslit->count("--strength1")) config.coupling_strength1 = strength1;
            if (twoslit->count("--strength2")) config.coupling_strength2 = strength2;
            if (twoslit->count("--cross-coupling")) config.cross_coupling = cross_coupling;
            if (twoslit->count("--delta")) config.delta = delta;
            if (twoslit->count("--overlap")) config.detector_overlap = overlap;
            if (twoslit->count("--background")) config.background_level = background;
            return cmd_twoslit(config, out, emit_scenario);
        }
    } catch (const redlab::ParseError& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::SchemaError& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::DimensionMismatch& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::NonHermitian& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::NonFinite& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::ZeroState& e) {
        print_error(e.code(), e.what());
        return kExitValidation;
    } catch (const redlab::Error& e) {
        print_error(e.code(), e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        print_error("Unexpected", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
