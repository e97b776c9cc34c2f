#include "redlab/secular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "redlab/errors.hpp"

namespace redlab {

namespace {

double eval_f(const std::vector<const SecularPole*>& poles, double p0n, double eta) {
    double sum = 0.0;
    for (const auto* p : poles) sum += p->residue / (eta - p->position);
    return sum - (eta - p0n);
}

// Safeguarded secant inside a sign-changing bracket; f(a) > 0 > f(b).
double refine_root(const std::vector<const SecularPole*>& poles, double p0n, double a, double fa,
                   double b, double fb) {
    for (int iter = 0; iter < defaults::max_root_iters; ++iter) {
        const double mid = 0.5 * (a + b);
        const double width = b - a;
        if (width <= defaults::bracket_rel * (1.0 + std::abs(mid))) break;
        double x = b - fb * (b - a) / (fb - fa);
        const double margin = 0.125 * width;
        if (!(x > a + margin && x < b - margin)) x = mid;
        const double fx = eval_f(poles, p0n, x);
        if (fx == 0.0) return x;
        if (fx > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    return 0.5 * (a + b);
}

struct BracketResult {
    bool ok = false;
    double a = 0.0, b = 0.0, fa = 0.0, fb = 0.0;
    int failed_pole = -1;  // index into the active list whose branch never resolved
};

// Interior interval (poles[i], poles[i+1]); the secular branch runs from
// +inf down to -inf, so we push the endpoints inward until the signs show.
BracketResult bracket_interior(const std::vector<const SecularPole*>& poles, double p0n, int i) {
    const double lo = poles[i]->position;
    const double hi = poles[i + 1]->position;
    const double w = hi - lo;
    BracketResult r;
    double eps = 0.25 * w;
    const double eps_min = std::max(w, std::abs(lo) + std::abs(hi)) * 1e-15;
    double a = lo + eps, fa = eval_f(poles, p0n, a);
    while (fa <= 0.0 && eps > eps_min) {
        eps *= 0.5;
        a = lo + eps;
        fa = eval_f(poles, p0n, a);
    }
    if (fa <= 0.0) {
        r.failed_pole = i;
        return r;
    }
    eps = 0.25 * w;
    double b = hi - eps, fb = eval_f(poles, p0n, b);
    while (fb >= 0.0 && eps > eps_min) {
        eps *= 0.5;
        b = hi - eps;
        fb = eval_f(poles, p0n, b);
    }
    if (fb >= 0.0) {
        r.failed_pole = i + 1;
        return r;
    }
    if (a >= b) {  // residues so small the window collapsed; treat as merged
        r.failed_pole = i;
        return r;
    }
    r.ok = true;
    r.a = a;
    r.b = b;
    r.fa = fa;
    r.fb = fb;
    return r;
}

BracketResult bracket_flank(const std::vector<const SecularPole*>& poles, double p0n, bool left) {
    BracketResult r;
    const int k = static_cast<int>(poles.size());
    const double edge = left ? poles.front()->position : poles.back()->position;
    const double w = std::max({1.0, 0.1 * std::abs(edge), std::abs(edge - p0n)});
    const double span =
        std::max(poles.back()->position - poles.front()->position, std::abs(edge));
    const double eps_min = std::max(1.0, span) * 1e-15;
    (void)k;

    // Inner endpoint hugs the pole; outer endpoint expands geometrically.
    double eps = 0.25;
    double inner = left ? edge - eps : edge + eps;
    double finner = eval_f(poles, p0n, inner);
    // Left flank needs f(inner) < 0 (branch dives to -inf), right needs > 0.
    while ((left ? finner >= 0.0 : finner <= 0.0) && eps > eps_min) {
        eps *= 0.5;
        inner = left ? edge - eps : edge + eps;
        finner = eval_f(poles, p0n, inner);
    }
    if (left ? finner >= 0.0 : finner <= 0.0) {
        r.failed_pole = left ? 0 : static_cast<int>(poles.size()) - 1;
        return r;
    }
    double step = w;
    double outer = left ? edge - step : edge + step;
    double fouter = eval_f(poles, p0n, outer);
    for (int tries = 0; (left ? fouter <= 0.0 : fouter >= 0.0) && tries < 200; ++tries) {
        step *= 2.0;
        outer = left ? edge - step : edge + step;
        fouter = eval_f(poles, p0n, outer);
    }
    if (left ? fouter <= 0.0 : fouter >= 0.0) {
        r.failed_pole = left ? 0 : static_cast<int>(poles.size()) - 1;
        return r;
    }
    r.ok = true;
    if (left) {  // f(outer) > 0 > f(inner)
        r.a = outer;
        r.fa = fouter;
        r.b = inner;
        r.fb = finner;
    } else {  // f(inner) > 0 > f(outer)
        r.a = inner;
        r.fa = finner;
        r.b = outer;
        r.fb = fouter;
    }
    return r;
}

}  // namespace

std::vector<const SecularPole*> ChannelConstants::active_poles() const {
    std::vector<const SecularPole*> out;
    for (const auto& p : poles)
        if (p.active) out.push_back(&p);
    return out;
}

ChannelConstants channel_constants(const ChannelReduction& reduction, int n) {
    const auto& problem = reduction.problem();
    if (n < 0 || n >= problem.n_readings())
        throw DimensionMismatch("channel index out of range in channel_constants");

    ChannelConstants c;
    c.n = n;
    c.p0n = problem.instrument.readings[n] + problem.block(0, 0)(n, n).real();

    for (const auto& t : reduction.terms()) {
        SecularPole p;
        p.position = t.pole;
        p.residue = std::norm(t.coupling[n]);
        p.g = t.g;
        p.n_prime = t.n;
        c.poles.push_back(p);
    }
    std::sort(c.poles.begin(), c.poles.end(),
              [](const SecularPole& a, const SecularPole& b) { return a.position < b.position; });

    // Coincident poles merge into one with summed residue; a merge across
    // different source channels loses its single-g label.
    const double merge_tol = reduction.pole_guard();
    std::vector<SecularPole> merged;
    for (const auto& p : c.poles) {
        if (!merged.empty() && p.position - merged.back().position < merge_tol) {
            SecularPole& m = merged.back();
            m.position = (m.position * m.residue + p.position * p.residue) /
                         std::max(m.residue + p.residue, 1e-300);
            m.residue += p.residue;
            if (m.g != p.g) m.g = -1;
            if (m.n_prime != p.n_prime) m.n_prime = -1;
            m.merged = true;
        } else {
            merged.push_back(p);
        }
    }
    c.poles = std::move(merged);

    double max_residue = 0.0;
    for (const auto& p : c.poles) max_residue = std::max(max_residue, p.residue);
    const double tol_residue = defaults::tol_residue_rel * max_residue;
    for (auto& p : c.poles) p.active = p.residue > tol_residue && p.residue > 0.0;
    return c;
}

double secular_value(const ChannelConstants& constants, double eta) {
    double sum = 0.0;
    for (const auto& p : constants.poles) {
        if (!p.active) continue;
        if (eta == p.position)
            throw PoleEvaluation("secular function evaluated exactly at pole " +
                                 std::to_string(p.position));
        sum += p.residue / (eta - p.position);
    }
    return sum;
}

SecularRoots find_roots(const ChannelConstants& constants) {
    SecularRoots out;
    out.n = constants.n;

    std::vector<SecularPole> working = constants.poles;
    for (bool retry = true; retry;) {
        retry = false;
        out.roots.clear();
        out.brackets.clear();
        std::vector<const SecularPole*> act;
        for (const auto& p : working)
            if (p.active) act.push_back(&p);

        if (act.empty()) {
            out.roots.push_back(constants.p0n);
            out.brackets.push_back({constants.p0n, constants.p0n});
            return out;
        }

        std::vector<BracketResult> brs;
        brs.push_back(bracket_flank(act, constants.p0n, true));
        for (int i = 0; i + 1 < static_cast<int>(act.size()); ++i)
            brs.push_back(bracket_interior(act, constants.p0n, i));
        brs.push_back(bracket_flank(act, constants.p0n, false));

        for (const auto& br : brs) {
            if (!br.ok) {
                // The branch at this pole never produced a sign change: its
                // residue is numerically unresolvable. Drop the pole and redo.
                const SecularPole* bad = act[br.failed_pole];
                for (auto& p : working)
                    if (p.active && p.position == bad->position) {
                        p.active = false;
                        out.deactivated_poles.push_back(p.position);
                        break;
                    }
                retry = true;
                break;
            }
        }
        if (retry) continue;

        for (const auto& br : brs) {
            out.roots.push_back(refine_root(act, constants.p0n, br.a, br.fa, br.b, br.fb));
            out.brackets.push_back({br.a, br.b});
        }
    }
    return out;
}

SolutionCounts count_solutions(int n_phi, int n_p) {
    if (n_phi < 1 || n_p < 1)
        throw DimensionMismatch("count_solutions requires N_phi >= 1 and N_P >= 1");
    SolutionCounts c;
    c.n_solutions = static_cast<long>(n_phi) * n_p + 1;
    c.n_base = static_cast<long>(n_p) + 1;
    c.n_realisations = std::lround(static_cast<double>(c.n_solutions) / c.n_base);
    return c;
}

namespace {

struct PoleView {
    double position;
    int g;
    int n_prime;
    bool merged;
};

// Families are the distinct values of the chosen label; a family is usable
// for classification when the position ranges are pairwise disjoint.
bool families_separated(const std::vector<PoleView>& poles, bool by_channel) {
    std::map<int, std::pair<double, double>> range;
    for (const auto& p : poles) {
        const int label = by_channel ? p.g : p.n_prime;
        if (label < 0) return false;  // cross-family merge defeats the axis
        auto it = range.find(label);
        if (it == range.end())
            range[label] = {p.position, p.position};
        else {
            it->second.first = std::min(it->second.first, p.position);
            it->second.second = std::max(it->second.second, p.position);
        }
    }
    std::vector<std::pair<double, double>> spans;
    for (const auto& [label, r] : range) spans.push_back(r);
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first <= spans[i - 1].second) return false;
    return true;
}

}  // namespace

RealisationPartition classify_realisations(const std::vector<SecularRoots>& roots,
                                           const std::vector<ChannelConstants>& constants) {
    if (roots.size() != constants.size())
        throw DimensionMismatch("roots/constants channel count mismatch");
    RealisationPartition part;

    // Union of poles active in at least one channel. Positions agree across
    // channels (they come from the same auxiliary terms); activity may not.
    std::vector<PoleView> pool;
    std::set<double> seen;
    for (const auto& c : constants)
        for (const auto& p : c.poles)
            if (p.active && seen.insert(p.position).second)
                pool.push_back({p.position, p.g, p.n_prime, p.merged});
    std::sort(pool.begin(), pool.end(),
              [](const PoleView& a, const PoleView& b) { return a.position < b.position; });

    if (pool.empty()) {
        // No coupling at all: a single trivial realisation holds every root.
        part.n_realisations = 1;
        part.family_label = {-1};
        for (const auto& r : roots) {
            std::vector<RootMembership> m(r.roots.size());
            for (auto& mm : m) mm.realisations = {0};
            part.membership.push_back(std::move(m));
        }
        return part;
    }

    bool by_channel = families_separated(pool, true);
    bool by_instrument = !by_channel && families_separated(pool, false);
    part.axis = by_channel    ? GroupingAxis::channel
                : by_instrument ? GroupingAxis::instrument
                                : GroupingAxis::fallback;
    part.group_overlap = !by_channel;

    // Family centers order the realisation indices.
    auto label_of = [&](const PoleView& p) -> int {
        if (part.axis == GroupingAxis::instrument) return p.n_prime;
        return p.g;  // channel axis and fallback both label by g
    };
    std::map<int, std::pair<double, int>> centers;  // label -> (sum, count)
    for (const auto& p : pool) {
        const int l = label_of(p);
        if (l < 0) continue;
        centers[l].first += p.position;
        centers[l].second += 1;
    }
    std::vector<std::pair<double, int>> order;  // (center, label)
    for (const auto& [label, sc] : centers) order.push_back({sc.first / sc.second, label});
    std::sort(order.begin(), order.end());
    std::map<int, int> realisation_of_label;
    for (size_t i = 0; i < order.size(); ++i) {
        realisation_of_label[order[i].second] = static_cast<int>(i);
        part.family_label.push_back(order[i].second);
    }
    part.n_realisations = static_cast<int>(order.size());

    // Per channel, roots interlace that channel's own active poles; the
    // bracketing poles decide membership. A root whose bracket touches two
    // families (or a cross-family merged pole) is shared between them; under
    // the fallback axis the nearest pole's family decides alone.
    for (size_t ch = 0; ch < roots.size(); ++ch) {
        std::vector<const SecularPole*> act;
        for (const auto& p : constants[ch].poles)
            if (p.active &&
                std::find(roots[ch].deactivated_poles.begin(), roots[ch].deactivated_poles.end(),
                          p.position) == roots[ch].deactivated_poles.end())
                act.push_back(&p);

        std::vector<RootMembership> member(roots[ch].roots.size());
        if (act.empty()) {
            for (auto& m : member) {
                m.shared = part.n_realisations > 1;
                for (int i = 0; i < part.n_realisations; ++i) m.realisations.push_back(i);
            }
            part.membership.push_back(std::move(member));
            continue;
        }
        if (roots[ch].roots.size() != act.size() + 1)
            throw CountMismatch("root/pole interlacing broken in classify_realisations");

        auto families_of_pole = [&](const SecularPole* p) -> std::vector<int> {
            auto add = [&](std::vector<int>& v, int label) {
                if (label < 0) {  // cross-family merge: adjacent to everything
                    for (int i = 0; i < part.n_realisations; ++i) v.push_back(i);
                    return;
                }
                auto it = realisation_of_label.find(label);
                if (it != realisation_of_label.end()) v.push_back(it->second);
            };
            std::vector<int> v;
            add(v, part.axis == GroupingAxis::instrument ? p->n_prime : p->g);
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        };

        for (size_t k = 0; k < roots[ch].roots.size(); ++k) {
            const SecularPole* left = k > 0 ? act[k - 1] : nullptr;
            const SecularPole* right = k < act.size() ? act[k] : nullptr;
            std::vector<int> fams;
            if (part.axis == GroupingAxis::fallback) {
                const double x = roots[ch].roots[k];
                const SecularPole* nearest =
                    (left && right)
                        ? (x - left->position <= right->position - x ? left : right)
                        : (left ? left : right);
                fams = families_of_pole(nearest);
                if (fams.size() > 1) fams = {fams.front()};
            } else {
                for (const SecularPole* p : {left, right}) {
                    if (!p) continue;
                    for (int f : families_of_pole(p)) fams.push_back(f);
                }
                std::sort(fams.begin(), fams.end());
                fams.erase(std::unique(fams.begin(), fams.end()), fams.end());
            }
            member[k].realisations = fams;
            member[k].shared = fams.size() > 1;
        }
        part.membership.push_back(std::move(member));
    }

    // Eq.-style realisation count uses N_phi inferred from the pole labels.
    int n_phi = 0;
    for (const auto& p : pool) n_phi = std::max(n_phi, p.g);
    if (n_phi >= 1) {
        const auto counts = count_solutions(n_phi, static_cast<int>(constants.size()));
        part.count_deviation = counts.n_realisations != part.n_realisations;
    }
    return part;
}

}  // namespace redlab
