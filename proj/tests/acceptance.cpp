// Acceptance gate: one self-contained check per shipped guarantee, each
// printed as a single PASS/FAIL line. Exits nonzero when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ks/analysis.hpp"
#include "ks/assignments.hpp"
#include "ks/cli.hpp"
#include "ks/diagram.hpp"
#include "ks/reductions.hpp"
#include "oracle.hpp"

using namespace ks;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::pair<Ray, Ray> canonical_pair(double p) {
    return {Ray::from({1, 0, 0}), Ray::from({p, std::sqrt(1 - p * p), 0})};
}

struct Criterion {
    std::string label;
    std::function<bool(std::ostringstream&)> run;
};

} // namespace

int main() {
    std::vector<Criterion> criteria;

    criteria.push_back({"slope of the map at the parallel end is 1.2658 within 1e-3, under 1s",
                        [](std::ostringstream& note) {
        const auto t0 = std::chrono::steady_clock::now();
        const TaylorResult t = taylor_coefficient();
        const double dt = seconds_since(t0);
        note << "m=" << t.extrapolated << ", " << dt * 1e3 << " ms";
        return std::abs(t.extrapolated - 1.2658) <= 1e-3 && dt < 1.0;
    }});

    criteria.push_back({"10000-point sweep: f(p1) < p1 everywhere and the gap "
                        "strictly shrinks, under 10s",
                        [](std::ostringstream& note) {
        const auto t0 = std::chrono::steady_clock::now();
        const SweepResult s =
            sweep_f(strong_overlap_bound() + 1e-4, 1.0 - 1e-4, 10000);
        const double dt = seconds_since(t0);
        bool ok = s.rows.size() == 10000;
        for (const SweepRow& r : s.rows) ok = ok && r.f < r.p1;
        for (size_t i = 1; i < s.rows.size(); ++i)
            ok = ok && s.rows[i].gap < s.rows[i - 1].gap;
        note << "min gap=" << s.min_gap << ", " << dt * 1e3 << " ms";
        return ok && dt < 10.0;
    }});

    criteria.push_back({"10000-point sweep: the derivative exceeds 1 everywhere, under 10s",
                        [](std::ostringstream& note) {
        const auto t0 = std::chrono::steady_clock::now();
        const SweepResult s =
            sweep_f(strong_overlap_bound() + 1e-4, 1.0 - 1e-4, 10000);
        const double dt = seconds_since(t0);
        bool ok = s.rows.size() == 10000 && s.violations == 0;
        double dmin = s.rows.front().df;
        for (const SweepRow& r : s.rows) {
            ok = ok && r.df > 1.0;
            dmin = std::min(dmin, r.df);
        }
        note << "min df=" << dmin << ", " << dt * 1e3 << " ms";
        return ok && dt < 10.0;
    }});

    criteria.push_back({"the 1/sqrt(2) anchor reproduces its five designed overlaps to 1e-10",
                        [](std::ostringstream& note) {
        const auto [a, b] = canonical_pair(1.0 / std::sqrt(2.0));
        const ReductionTrace t = iterated_step(a, b, StepOptions{false});
        const double want[5] = {std::sqrt(2.0 / 3.0), 2.0 / std::sqrt(5.0),
                                std::sqrt(2.0 / 5.0), std::sqrt(2.0 / 3.0),
                                1.0 / std::sqrt(3.0)};
        const double got[5] = {inner(a, t.v1), inner(a, t.v2), inner(t.b, t.v2),
                               inner(t.b, t.c), inner(a, t.c)};
        double worst = 0;
        for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
        note << "max deviation=" << worst;
        return worst <= 1e-10;
    }});

    criteria.push_back({"100 random targets: reduce_toward hits the requested overlap to "
                        "1e-10 and matches the closed form",
                        [](std::ostringstream& note) {
        const GadgetLibrary lib = GadgetLibrary::load();
        std::mt19937_64 rng(20260817);
        double worst_overlap = 0, worst_shape = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const Ray a = Ray::from(sample_direction(rng));
            Ray b = a;
            double p = 1;
            do {
                b = Ray::from(sample_direction(rng));
                p = inner(a, b);
            } while (p <= 0.05 || p >= 0.93);
            const double x = p + (1 - p) * (0.05 + 0.9 * u01(rng));
            const Reduction r = reduce_toward(a, b, x, lib.step_gadget);
            worst_overlap = std::max(worst_overlap, std::abs(inner(a, r.c) - x));

            const double q = std::sqrt(1 - p * p);
            const double y = p * (1 - x * x) / (q * x);
            const Vector3 target{x, y, -sqrt_clamped(1 - x * x - y * y)};
            Vector3 cc = apply(canonical_pair_basis(a, b), r.c.vec());
            if (dot(cc, target) < 0) cc = cc * -1.0;
            worst_shape = std::max(worst_shape, norm(cc - target));
        }
        note << "max overlap error=" << worst_overlap
             << ", max component error=" << worst_shape;
        return worst_overlap <= 1e-10 && worst_shape <= 1e-9;
    }});

    criteria.push_back({"500 random diagrams: the solver agrees with 3^n brute force, "
                        "under 60s",
                        [](std::ostringstream& note) {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(0xC0FFEEull);
        int disagreements = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const oracle::RandomCase rc = oracle::random_case(rng, 12, 6, 3);
            const bool ref = oracle::satisfiable(rc.d, rc.fixed);
            const bool got =
                exists_admissible(rc.d, oracle::to_premises(rc.fixed)).satisfiable;
            disagreements += (ref != got);
        }
        const double dt = seconds_since(t0);
        note << disagreements << " disagreements, " << dt * 1e3 << " ms";
        return disagreements == 0 && dt < 60.0;
    }});

    criteria.push_back({"realized three-step chain at the 1/sqrt(2) anchor: a=b=1 forces "
                        "the target to 1 (solver and full enumeration)",
                        [](std::ostringstream& note) {
        const GadgetLibrary lib = GadgetLibrary::load();
        const auto [a, b] = canonical_pair(1.0 / std::sqrt(2.0));
        const ReductionTrace t = iterated_step(a, b, StepOptions{false});
        const Diagram d = realize_gadget(
            lib.chain_gadget,
            {{"a", a}, {"b", b}, {"v1", t.v1}, {"v2", t.v2}, {"c", t.c}});
        bool ok = validate(d).pass;

        ok = ok && !exists_admissible(d, {{"a", Requirement::One},
                                          {"b", Requirement::One},
                                          {"c", Requirement::Zero}})
                        .satisfiable;
        ok = ok && exists_admissible(d, {{"a", Requirement::One}, {"b", Requirement::One}})
                       .satisfiable;

        const oracle::Survey s = oracle::enumerate(d, {{"a", '1'}, {"b", '1'}});
        const auto c_idx = static_cast<size_t>(d.index_of("c"));
        ok = ok && s.admissible_count > 0;
        ok = ok && s.seen_one[c_idx] && !s.seen_zero[c_idx] && !s.seen_undefined[c_idx];
        note << s.admissible_count << " admissible completions, c always 1";
        return ok;
    }});

    criteria.push_back({"orthogonal-branch target overlap equals sqrt(1-p1^2) in "
                        "(0, sqrt(5/14)) to 1e-12 for p1 in {0.81, 0.9, 0.99}",
                        [](std::ostringstream& note) {
        const GadgetLibrary lib = GadgetLibrary::load();
        double worst = 0;
        bool ok = true;
        for (const double p : {0.81, 0.9, 0.99}) {
            const auto [a, b] = canonical_pair(p);
            const WitnessSet w = construct_extended_witness(a, b, lib);
            const Ray& ar = *w.diagram.observable("a").realization;
            const Ray& cperp = *w.diagram.observable("perp.c").realization;
            const double ov = inner(ar, cperp);
            worst = std::max(worst, std::abs(ov - std::sqrt(1 - p * p)));
            ok = ok && ov > 0.0 && ov < std::sqrt(5.0 / 14.0);
        }
        note << "max deviation=" << worst;
        return ok && worst <= 1e-12;
    }});

    criteria.push_back({"witness construction at overlap 0.9 is sound for its "
                        "certification level",
                        [](std::ostringstream& note) {
        const GadgetLibrary lib = GadgetLibrary::load();
        const auto [a, b] = canonical_pair(0.9);
        const WitnessSet w = construct_extended_witness(a, b, lib);
        const ValidationReport rep = validate(w.diagram);
        bool ok = rep.pass && rep.all_realized;
        ok = ok && rep.max_context_deviation <= 1e-9 && rep.max_unit_deviation <= 1e-9;

        if (lib.strong24.has_value()) {
            ok = ok && w.certification == WitnessSet::Certification::Full;
            ok = ok && check_value_indefinite(w.diagram, "a", "b");
            note << "full certification: value indefiniteness decided";
        } else {
            ok = ok && w.certification == WitnessSet::Certification::ModuloStrongSet;
            const Ray& ar = *w.diagram.observable("a").realization;
            ok = ok && inner(ar, w.chain.back().c) <= strong_overlap_bound();
            std::printf("        note: certification is modulo the external 24-ray "
                        "strong set (data file not shipped): the chain provably "
                        "forces the b=1 branch down to overlap %.6f and the "
                        "orthogonal branch covers b=0; completing both branches "
                        "requires strong_ks_24.json.\n",
                        inner(ar, w.chain.back().c));
            note << "modulo-strong-set: chain terminates at "
                 << inner(ar, w.chain.back().c) << " <= " << strong_overlap_bound();
        }
        return ok;
    }});

    criteria.push_back({"1e6-sample demo at eps=1e-3: definite fraction <= 1e-2 and "
                        "halving eps roughly halves it (3 sigma), under 30s",
                        [](std::ostringstream& note) {
        const auto t0 = std::chrono::steady_clock::now();
        const Ray a = Ray::from({1, 0, 0});
        const std::uint64_t n = 1000000;
        const MeasureDemo m1 = measure_demo(a, n, 1e-3, 97, 4);
        const MeasureDemo m2 = measure_demo(a, n, 5e-4, 97, 4);
        const double dt = seconds_since(t0);
        const double e1 = 2e-3, e2 = 1e-3;
        const double sigma = std::sqrt(e2 * (1 - e2) / static_cast<double>(n) +
                                       e1 * (1 - e1) / (4.0 * static_cast<double>(n)));
        const double drift = std::abs(m2.fraction - m1.fraction / 2);
        note << "fraction=" << m1.fraction << ", halved-eps drift=" << drift << " ("
             << drift / sigma << " sigma), " << dt * 1e3 << " ms";
        return m1.fraction <= 1e-2 && drift <= 3 * sigma && dt < 30.0;
    }});

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        std::ostringstream note;
        bool ok = false;
        try {
            ok = criteria[i].run(note);
        } catch (const std::exception& e) {
            note.str("");
            note << "exception: " << e.what();
        }
        std::printf("%s - C%zu: %s (%s)\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].label.c_str(), note.str().c_str());
        failures += !ok;
    }
    if (failures != 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
