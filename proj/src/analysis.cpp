#include "ks/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "ks/jsonfmt.hpp"

namespace ks {

namespace {

// Runs worker(begin, end) over [0, total) split into contiguous blocks, one
// per thread. Exceptions are collected and the first one rethrown.
template <typename Fn>
void parallel_blocks(int total, int jobs, Fn&& worker) {
    jobs = std::clamp(jobs, 1, std::max(1, total));
    if (jobs == 1) {
        worker(0, total);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
    const int base = total / jobs;
    const int extra = total % jobs;
    int begin = 0;
    for (int t = 0; t < jobs; ++t) {
        const int end = begin + base + (t < extra ? 1 : 0);
        threads.emplace_back([&, t, begin, end] {
            try {
                worker(begin, end);
            } catch (...) {
                errors[static_cast<size_t>(t)] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& th : threads) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace

SweepResult sweep_f(double lo, double hi, int n, int jobs) {
    if (!(lo >= strong_overlap_bound() && lo < hi && hi < 1.0)) {
        throw PreconditionError("sweep range must satisfy 3/sqrt(14) <= lo < hi < 1");
    }
    if (n < 2) throw PreconditionError("sweep needs at least two grid points");
    if (jobs < 1) throw PreconditionError("jobs must be at least 1");

    const double spacing = (hi - lo) / (n - 1);
    SweepResult res;
    res.rows.resize(static_cast<size_t>(n));

    // The grid may start exactly on the bound and the difference stencil
    // reaches slightly past it; the map itself is smooth on all of (0,1), so
    // evaluate without the range guard.
    const StepOptions relaxed{false};
    parallel_blocks(n, jobs, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const double p = (i == n - 1) ? hi : lo + spacing * i;
            double h = std::min(1e-6, spacing / 10.0);
            h = std::min(h, (1.0 - p) / 2.0);
            SweepRow& r = res.rows[static_cast<size_t>(i)];
            r.p1 = p;
            r.f = f_of(p, relaxed);
            r.df = (f_of(p + h, relaxed) - f_of(p - h, relaxed)) / (2.0 * h);
            r.gap = p - r.f;
        }
    });

    res.min_gap = res.rows.front().gap;
    for (const SweepRow& r : res.rows) {
        const bool ok = std::isfinite(r.f) && std::isfinite(r.df) && r.f < r.p1 && r.df > 1.0;
        if (!ok) ++res.violations;
        res.min_gap = std::min(res.min_gap, r.gap);
    }
    return res;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "p1,f,df,gap\n";
    for (const SweepRow& r : rows) {
        out << fmt_double(r.p1) << ',' << fmt_double(r.f) << ',' << fmt_double(r.df) << ','
            << fmt_double(r.gap) << '\n';
    }
    return out.str();
}

double closed_form_taylor_coefficient() {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double A = std::acos(std::sqrt(2.0 / 5.0));
    const double B = std::acos(std::sqrt(2.0 / 3.0));
    const double C = std::acos(2.0 / std::sqrt(5.0));
    const double A2 = A * A, B2 = B * B, C2 = C * C;
    return (pi2 * (A2 - B2) +
            8.0 * C * (C * (2.0 * B2 + std::sqrt((pi2 - 16.0 * B2) * (A2 - B2))) +
                       4.0 * B * std::sqrt((A2 - B2) * (B2 - C2)))) /
           (pi2 * A2);
}

TaylorResult taylor_coefficient() {
    TaylorResult r;
    r.eps = {1e-4, 1e-5, 1e-6};
    for (const double e : r.eps) {
        r.slopes.push_back((1.0 - f_of(1.0 - e)) / e);
    }
    // Neville tableau evaluated at eps = 0 over the (eps, slope) samples.
    std::vector<double> t = r.slopes;
    const size_t m = t.size();
    for (size_t j = 1; j < m; ++j) {
        for (size_t i = m - 1; i >= j; --i) {
            t[i] += (t[i] - t[i - 1]) * r.eps[i] / (r.eps[i - j] - r.eps[i]);
        }
    }
    r.extrapolated = t.back();
    r.closed_form = closed_form_taylor_coefficient();
    if (!(std::fabs(r.extrapolated - r.closed_form) <= 1e-4)) {
        throw NumericDomainError("extrapolated slope " + std::to_string(r.extrapolated) +
                                 " drifted from the exact coefficient; cancellation too large");
    }
    return r;
}

int iteration_count(double p1, std::uint64_t budget) {
    if (!(p1 > strong_overlap_bound() && p1 < 1.0)) {
        throw PreconditionError("overlap " + std::to_string(p1) +
                                " outside (3/sqrt(14), 1)");
    }
    double p = p1;
    int count = 0;
    while (p > strong_overlap_bound()) {
        if (static_cast<std::uint64_t>(count) >= budget) {
            throw IterationBudgetExceededError("map iteration exceeded " +
                                               std::to_string(budget) + " steps");
        }
        p = f_of(p);
        ++count;
    }
    return count;
}

StarVerdict classify_observable(const Ray& a, const Ray& x, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) {
        throw PreconditionError("classification tolerance must lie in (0, 0.5)");
    }
    StarVerdict v;
    v.overlap = inner(a, x);
    if (v.overlap >= 1.0 - eps) {
        v.kind = StarVerdict::Kind::ParallelDefinite;
    } else if (v.overlap <= eps) {
        v.kind = StarVerdict::Kind::OrthogonalDefinite;
    } else {
        v.kind = StarVerdict::Kind::Indefinite;
    }
    return v;
}

Vector3 sample_direction(std::mt19937_64& rng) {
    // 53 high bits -> [0,1) -> [-1,1); exactly the same doubles everywhere.
    const auto coord = [&rng] {
        return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
    };
    for (;;) {
        const double x = coord();
        const double y = coord();
        const double z = coord();
        const double r2 = x * x + y * y + z * z;
        if (r2 > 1.0 || r2 < 1e-12) continue;
        const double r = std::sqrt(r2);
        return {x / r, y / r, z / r};
    }
}

namespace {

std::array<std::uint64_t, 64> substream_seeds(std::uint64_t seed) {
    std::array<std::uint64_t, 64> seeds{};
    std::uint64_t s = seed;
    for (auto& out : seeds) { // splitmix64 steps decorrelate nearby seeds
        s += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        out = z ^ (z >> 31);
    }
    return seeds;
}

} // namespace

MeasureDemo measure_demo(const Ray& a, std::uint64_t samples, double eps, std::uint64_t seed,
                         int jobs) {
    if (samples < 1) throw PreconditionError("at least one sample required");
    if (!(eps > 0.0 && eps < 0.1)) {
        throw PreconditionError("measure tolerance must lie in (0, 0.1)");
    }
    if (jobs < 1) throw PreconditionError("jobs must be at least 1");

    constexpr int kStreams = 64;
    const auto seeds = substream_seeds(seed);

    MeasureDemo demo;
    demo.samples = samples;
    demo.eps = eps;
    demo.seed = seed;
    demo.expected_fraction = 2.0 * eps;

    struct Counts {
        std::uint64_t parallel = 0, orthogonal = 0, indefinite = 0;
    };
    std::array<Counts, kStreams> per{};

    parallel_blocks(kStreams, std::clamp(jobs, 1, kStreams), [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            std::mt19937_64 rng(seeds[static_cast<size_t>(k)]);
            const std::uint64_t mine =
                samples / kStreams +
                (static_cast<std::uint64_t>(k) < samples % kStreams ? 1 : 0);
            Counts& c = per[static_cast<size_t>(k)];
            for (std::uint64_t i = 0; i < mine; ++i) {
                const Vector3 dir = sample_direction(rng);
                const double overlap = std::fabs(dot(a.vec(), dir));
                if (overlap >= 1.0 - eps) {
                    ++c.parallel;
                } else if (overlap <= eps) {
                    ++c.orthogonal;
                } else {
                    ++c.indefinite;
                }
            }
        }
    });

    for (const auto& c : per) {
        demo.parallel += c.parallel;
        demo.orthogonal += c.orthogonal;
        demo.indefinite += c.indefinite;
    }
    demo.fraction =
        static_cast<double>(demo.parallel + demo.orthogonal) / static_cast<double>(samples);
    return demo;
}

std::string emit_measure_json(const MeasureDemo& m) {
    std::ostringstream out;
    out << "{\"eps\": " << fmt_double(m.eps) << ", \"samples\": " << m.samples
        << ", \"fraction\": " << fmt_double(m.fraction) << ", \"seed\": " << m.seed << "}\n";
    return out.str();
}

} // namespace ks
