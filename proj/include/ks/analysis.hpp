#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ks/reductions.hpp"

namespace ks {

// One grid point of a reduction-map sweep.
struct SweepRow {
    double p1 = 0;  // grid point
    double f = 0;   // f(p1)
    double df = 0;  // central-difference derivative
    double gap = 0; // p1 - f(p1)
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int violations = 0;   // rows where f >= p1, df <= 1, or a value is not finite
    double min_gap = 0.0; // smallest p1 - f(p1) over the grid
};

// Evaluates the reduction map on an n-point inclusive grid over [lo, hi].
// Requires strong_overlap_bound() <= lo < hi < 1 and n >= 2. Derivatives use
// a central difference with step min(1e-6, spacing/10), shrunk near 1 to stay
// inside the domain. `jobs` threads split the grid into contiguous blocks;
// the rows are identical for every job count.
SweepResult sweep_f(double lo, double hi, int n, int jobs = 1);

// CSV with header "p1,f,df,gap", one row per grid point, 17 significant
// digits per value.
std::string to_csv(const std::vector<SweepRow>& rows);

struct TaylorResult {
    std::vector<double> eps;    // probe offsets from 1
    std::vector<double> slopes; // (1 - f(1 - eps)) / eps per probe
    double extrapolated = 0;    // Richardson limit of the slopes
    double closed_form = 0;     // exact coefficient for reference
};

// First-order coefficient m of the expansion f(1 - eps) = 1 - m*eps + O(eps^2),
// estimated from double-precision evaluations at eps = 1e-4, 1e-5, 1e-6 and a
// ratio-10 Neville extrapolation to eps = 0. Throws NumericDomainError when
// cancellation pushes the estimate further than 1e-4 from the closed form.
TaylorResult taylor_coefficient();

// The same coefficient in closed form, with A = arccos(sqrt(2/5)),
// B = arccos(sqrt(2/3)), C = arccos(2/sqrt(5)):
//   m = [pi^2 (A^2-B^2) + 8C(C(2B^2 + sqrt((pi^2-16B^2)(A^2-B^2)))
//        + 4B sqrt((A^2-B^2)(B^2-C^2)))] / (pi^2 A^2).
double closed_form_taylor_coefficient();

// Minimal k with the k-fold iterate of the map at or below
// strong_overlap_bound(). Requires strong_overlap_bound() < p1 < 1; throws
// IterationBudgetExceededError past `budget` applications.
int iteration_count(double p1, std::uint64_t budget = 1000000);

// Classification of an observable x against a fixed ray a: only the rays
// parallel to a (value 1) or orthogonal to it (value 0) escape value
// indefiniteness, so everything else is indefinite.
struct StarVerdict {
    enum class Kind : unsigned char { ParallelDefinite, OrthogonalDefinite, Indefinite };
    Kind kind = Kind::Indefinite;
    double overlap = 0;
};

// kind is ParallelDefinite iff inner(a,x) >= 1 - eps, OrthogonalDefinite iff
// inner(a,x) <= eps. Requires 0 < eps < 0.5.
StarVerdict classify_observable(const Ray& a, const Ray& x, double eps);

// One uniformly distributed direction, by rejection from the unit ball. Only
// arithmetic, comparisons and sqrt touch the generator output, all exactly
// rounded, so the direction stream is identical on every conforming platform
// (a normalized-Gaussian sampler would give the same distribution but not the
// same bits).
Vector3 sample_direction(std::mt19937_64& rng);

struct MeasureDemo {
    std::uint64_t samples = 0;
    double eps = 0;
    std::uint64_t seed = 0;
    std::uint64_t parallel = 0;   // draws with overlap >= 1 - eps
    std::uint64_t orthogonal = 0; // draws with overlap <= eps
    std::uint64_t indefinite = 0;
    double fraction = 0;          // non-indefinite share of the draws
    double expected_fraction = 0; // exactly 2*eps: the overlap of a uniform
                                  // direction with a fixed ray is uniform on [0,1]
};

// Samples `samples` uniform directions and classifies each against a.
// Requires samples >= 1 and 0 < eps < 0.1. The draws come from 64 fixed
// substreams derived from the seed, so the counts do not depend on how many
// threads (`jobs`) consume the substreams.
MeasureDemo measure_demo(const Ray& a, std::uint64_t samples, double eps, std::uint64_t seed,
                         int jobs = 1);

// {"eps":..., "samples":..., "fraction":..., "seed":...}
std::string emit_measure_json(const MeasureDemo& m);

} // namespace ks
