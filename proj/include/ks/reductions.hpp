#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ks/assignments.hpp"
#include "ks/diagram.hpp"
#include "ks/vec3.hpp"

namespace ks {

// Largest overlap covered by a single 24-ray forcing set; one reduction step
// below this bound is enough to decide value indefiniteness directly.
inline double strong_overlap_bound() { return 3.0 / std::sqrt(14.0); }

enum class ZBranch : unsigned char { Minus, Plus };

// Single-step overlap reduction. In the basis where a = (1,0,0) and
// b = (p,q,0), the ray c = (x, p(1-x^2)/(qx), -z) with z = sqrt(1-x^2-y^2)
// satisfies <a|c> = x and <b|c> = p/x, which makes a - x c orthogonal to b;
// the returned gadget realizes the three contexts that force c = 1 whenever
// a = 1 and b = 1. Requires p < |x| < 1. The mirrored ray with +z works
// equally; Minus is the default for reproducibility.
struct Reduction {
    Ray c;
    Diagram gadget;
};
Reduction reduce_toward(const Ray& a, const Ray& b, double x, const Diagram& step_topology,
                        ZBranch branch = ZBranch::Minus);

struct StepOptions {
    bool enforce_range = true; // require strong_overlap_bound() < inner(a,b) < 1
};

// Every intermediate quantity of one iterated reduction step, in the order
// they are computed. Angles are in radians; the rays are expressed in the
// caller's frame.
struct ReductionTrace {
    double p1 = 0, q1 = 0;
    double alpha1 = 0, alpha2 = 0, alpha3 = 0;
    double theta_ab = 0, theta_av1 = 0, theta_av2 = 0, theta_bv2 = 0, theta_bc = 0;
    double x1 = 0, y1 = 0, z1 = 0, q2 = 0;
    double x2 = 0, y2 = 0, z2 = 0;
    double p3 = 0, q3 = 0;
    double x3 = 0, y3 = 0, z3 = 0;
    double k = 0;
    Ray a, b, v1, v2, c;
};

// One step of the iterated reduction: v1 reduces (a,b), v2 reduces (a,v1),
// c reduces (b,v2), with the fixed angle ratios
//   alpha1 = arccos(sqrt(2/3)) / arccos(1/sqrt(2)),
//   alpha2 = arccos(2/sqrt(5)) / arccos(sqrt(2/3)),
//   alpha3 = arccos(sqrt(2/3)) / arccos(sqrt(2/5)).
// The overlap inner(a,c) equals f_of(inner(a,b)). With enforce_range off the
// formulas are evaluated over all of (0,1) as long as the intermediate
// geometry stays real; far below the designed regime (overlaps under roughly
// 0.15) an intermediate square root goes negative and NumericDomainError is
// thrown. The anchor family at inner(a,b) = 1/sqrt(2), where inner(a,c)
// comes out as 1/sqrt(3), lies safely inside the relaxed domain.
ReductionTrace iterated_step(const Ray& a, const Ray& b, const StepOptions& opts = {});

// Scalar form of the same map, defined by the trace quantities alone.
double f_of(double p1, const StepOptions& opts = {});

// Repeats iterated_step from (a,b), feeding each step's c back in as the new
// b, until the overlap drops to strong_overlap_bound() or below. Throws
// IterationBudgetExceededError after `budget` steps.
std::vector<ReductionTrace> iterate_reduction(const Ray& a, const Ray& b,
                                              std::uint64_t budget = 1000000);

// Realizes an abstract topology: anchors get the given rays, and every other
// observable is solved as the cross product of two already-realized members
// of one of its contexts, iterated to a fixed point. Throws
// GadgetRealizationError when some observable stays undetermined.
Diagram realize_gadget(const Diagram& topology,
                       const std::vector<std::pair<std::string, Ray>>& anchors);

// Renames every observable; ids absent from the map are left unchanged.
Diagram relabel(const Diagram& d, const std::vector<std::pair<std::string, std::string>>& map);

// Union of several realized diagrams. Observables whose rays coincide within
// tol are identified (the first id wins), so shared anchors collapse into a
// single value slot; contexts are re-expressed and deduplicated.
Diagram merge_by_ray(const std::vector<Diagram>& parts, double tol = Tolerances{}.orth);

// Topology files for the two forcing gadgets, plus the optional 24-ray strong
// set. The directory defaults to ./data and can be overridden with the
// KS_FORGE_DATA environment variable.
struct GadgetLibrary {
    Diagram step_gadget;  // single-step forcing topology (7 observables)
    Diagram chain_gadget; // three-step forcing topology (17 observables)
    std::optional<Diagram> strong24;

    static std::string default_dir();
    static GadgetLibrary load(const std::string& dir = default_dir());
};

struct WitnessSet {
    enum class Certification : unsigned char {
        Full,           // includes validated 24-ray sets; value indefiniteness decided
        ModuloStrongSet // chain and branch only; completion needs the 24-ray data file
    };

    Diagram diagram;
    std::string a_id;
    std::string b_id;
    std::vector<ReductionTrace> chain;
    std::vector<std::array<std::string, 3>> branch_contexts; // both contexts of the b=0 branch
    std::string final_overlap_id; // id of the last chain target, empty when no chain
    Certification certification = Certification::ModuloStrongSet;
};

// Assembles the finite observable set witnessing value indefiniteness of b
// given a. Overlaps at or below strong_overlap_bound() specialize the 24-ray
// set directly (its data file is then required). Larger overlaps build the
// reduction chain for the b=1 branch and the two-context orthogonal branch
// for b=0; when the 24-ray file is available both branches are completed and
// the result is checked with check_value_indefinite.
WitnessSet construct_extended_witness(const Ray& a, const Ray& b, const GadgetLibrary& lib);

std::string emit_trace_json(const ReductionTrace& t);
std::string emit_chain_json(const std::vector<ReductionTrace>& chain);
std::string emit_witness_json(const WitnessSet& w);

} // namespace ks
