#include "ks/reductions.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "ks/jsonfmt.hpp"

namespace ks {

namespace {

struct Scalars {
    double p1, q1;
    double alpha1, alpha2, alpha3;
    double theta_ab, theta_av1, theta_av2, theta_bv2, theta_bc;
    double x1, y1, z1, q2;
    double x2, y2, z2;
    double p3, q3;
    double x3, y3, z3;
    double k;
    double f;
};

Scalars compute_scalars(double p1) {
    if (!(p1 > 0.0 && p1 < 1.0)) {
        throw PreconditionError("overlap " + std::to_string(p1) + " outside (0,1)");
    }
    Scalars s{};
    s.p1 = p1;
    s.q1 = sqrt_clamped(1.0 - p1 * p1);
    s.alpha1 = std::acos(std::sqrt(2.0 / 3.0)) / std::acos(1.0 / std::sqrt(2.0));
    s.alpha2 = std::acos(2.0 / std::sqrt(5.0)) / std::acos(std::sqrt(2.0 / 3.0));
    s.alpha3 = std::acos(std::sqrt(2.0 / 3.0)) / std::acos(std::sqrt(2.0 / 5.0));
    s.theta_ab = std::acos(p1);
    s.theta_av1 = s.alpha1 * s.theta_ab;
    s.theta_av2 = s.alpha2 * s.theta_av1;
    s.x1 = std::cos(s.theta_av1);
    s.y1 = p1 * (1.0 - s.x1 * s.x1) / (s.q1 * s.x1);
    s.z1 = sqrt_clamped(1.0 - s.x1 * s.x1 - s.y1 * s.y1);
    s.q2 = sqrt_clamped(1.0 - s.x1 * s.x1);
    s.x2 = std::cos(s.theta_av2);
    s.y2 = s.x1 * (1.0 - s.x2 * s.x2) / (s.q2 * s.x2);
    s.z2 = sqrt_clamped(1.0 - s.x2 * s.x2 - s.y2 * s.y2);
    s.p3 = p1 * s.x2 + s.q1 * (s.y1 * s.y2 - s.z1 * s.z2) / s.q2;
    // p3 < 1 analytically, but within a few ulp of the parallel end the
    // cancellation above can round to 1 or past it, and the chain below
    // degenerates (acos NaN, then 0/0). Refuse rather than return garbage.
    if (s.p3 >= 1.0) {
        throw NumericDomainError("overlap " + std::to_string(p1) +
                                 " is too close to 1 to evaluate in double precision");
    }
    s.theta_bv2 = std::acos(s.p3);
    s.theta_bc = s.alpha3 * s.theta_bv2;
    s.q3 = sqrt_clamped(1.0 - s.p3 * s.p3);
    s.x3 = std::cos(s.theta_bc);
    s.y3 = s.p3 * (1.0 - s.x3 * s.x3) / (s.q3 * s.x3);
    s.z3 = sqrt_clamped(1.0 - s.x3 * s.x3 - s.y3 * s.y3);
    const double cross2 = (s.y2 * s.z1 + s.y1 * s.z2) / s.q2;
    s.k = std::sqrt((s.x2 - s.p3 * p1) * (s.x2 - s.p3 * p1) +
                    ((s.y1 * s.y2 - s.z1 * s.z2) / s.q2 - s.p3 * s.q1) *
                        ((s.y1 * s.y2 - s.z1 * s.z2) / s.q2 - s.p3 * s.q1) +
                    cross2 * cross2);
    s.f = s.x3 * p1 + (s.y3 / s.k) * (s.x2 - p1 * s.p3) -
          (s.q1 * s.z3 / (s.k * s.q2)) * (s.y2 * s.z1 + s.y1 * s.z2);
    return s;
}

void require_range(double p1) {
    if (!(p1 > strong_overlap_bound() && p1 < 1.0)) {
        throw PreconditionError("overlap " + std::to_string(p1) +
                                " outside (3/sqrt(14), 1)");
    }
}

} // namespace

double f_of(double p1, const StepOptions& opts) {
    if (opts.enforce_range) require_range(p1);
    return compute_scalars(p1).f;
}

ReductionTrace iterated_step(const Ray& a, const Ray& b, const StepOptions& opts) {
    const Matrix3 m = canonical_pair_basis(a, b);
    const double p1 = inner(a, b);
    if (opts.enforce_range) require_range(p1);
    const Scalars s = compute_scalars(p1);

    ReductionTrace t;
    t.p1 = s.p1;
    t.q1 = s.q1;
    t.alpha1 = s.alpha1;
    t.alpha2 = s.alpha2;
    t.alpha3 = s.alpha3;
    t.theta_ab = s.theta_ab;
    t.theta_av1 = s.theta_av1;
    t.theta_av2 = s.theta_av2;
    t.theta_bv2 = s.theta_bv2;
    t.theta_bc = s.theta_bc;
    t.x1 = s.x1;
    t.y1 = s.y1;
    t.z1 = s.z1;
    t.q2 = s.q2;
    t.x2 = s.x2;
    t.y2 = s.y2;
    t.z2 = s.z2;
    t.p3 = s.p3;
    t.q3 = s.q3;
    t.x3 = s.x3;
    t.y3 = s.y3;
    t.z3 = s.z3;
    t.k = s.k;
    t.a = a;
    t.b = b;

    const Matrix3 back = m.transposed();
    const Vector3 v1c{s.x1, s.y1, s.z1};

    // Basis rotation taking (a, v1) into canonical position; v2 then has the
    // single-step form (x2, y2, -z2) in the rotated frame.
    const Matrix3 t2 = Matrix3::from_rows({1, 0, 0}, {0, s.y1 / s.q2, s.z1 / s.q2},
                                          {0, s.z1 / s.q2, -s.y1 / s.q2});
    const Vector3 v2c = apply(t2, {s.x2, s.y2, -s.z2});

    // Basis rotation taking (b, v2) into canonical position, expressed with
    // the normalizer k of v2 - p3 b; c has the form (x3, y3, -z3) there.
    const double w = (s.y2 * s.z1 + s.y1 * s.z2) / s.q2;
    const Matrix3 t3 = Matrix3::from_rows(
        {s.p1, (s.x2 - s.p3 * s.p1) / s.k, s.q1 * w / s.k},
        {s.q1, (s.y1 * s.y2 - s.z1 * s.z2 - s.p3 * s.q1 * s.q2) / (s.q2 * s.k),
         -s.p1 * w / s.k},
        {0.0, w / s.k, (s.p1 * (s.y1 * s.y2 - s.z1 * s.z2) - s.x2 * s.q1 * s.q2) / (s.q2 * s.k)});
    const Vector3 cc = apply(t3, {s.x3, s.y3, -s.z3});

    t.v1 = Ray::from(apply(back, v1c));
    t.v2 = Ray::from(apply(back, v2c));
    t.c = Ray::from(apply(back, cc));
    return t;
}

Reduction reduce_toward(const Ray& a, const Ray& b, double x, const Diagram& step_topology,
                        ZBranch branch) {
    const Matrix3 m = canonical_pair_basis(a, b);
    const double p = inner(a, b);
    const double xa = std::fabs(x);
    if (!(xa > p && xa < 1.0)) {
        throw PreconditionError("target overlap " + std::to_string(xa) +
                                " outside (" + std::to_string(p) + ", 1)");
    }
    const double q = sqrt_clamped(1.0 - p * p);
    const double y = p * (1.0 - xa * xa) / (q * xa);
    const double z = sqrt_clamped(1.0 - xa * xa - y * y);
    const Vector3 cc{xa, y, branch == ZBranch::Minus ? -z : z};
    Reduction r;
    r.c = Ray::from(apply(m.transposed(), cc));
    r.gadget = realize_gadget(step_topology, {{"a", a}, {"b", b}, {"c", r.c}});
    return r;
}

std::vector<ReductionTrace> iterate_reduction(const Ray& a, const Ray& b, std::uint64_t budget) {
    require_range(inner(a, b));
    std::vector<ReductionTrace> chain;
    Ray cur = b;
    for (std::uint64_t i = 0; i < budget; ++i) {
        chain.push_back(iterated_step(a, cur));
        cur = chain.back().c;
        if (inner(a, cur) <= strong_overlap_bound()) {
            return chain;
        }
    }
    throw IterationBudgetExceededError("reduction chain exceeded " + std::to_string(budget) +
                                       " steps");
}

Diagram realize_gadget(const Diagram& topology,
                       const std::vector<std::pair<std::string, Ray>>& anchors) {
    const auto& obs = topology.observables();
    const int n = static_cast<int>(obs.size());
    std::vector<std::optional<Ray>> rays(n);
    for (int i = 0; i < n; ++i) rays[i] = obs[i].realization;
    for (const auto& [id, ray] : anchors) {
        rays[topology.index_of(id)] = ray;
    }

    // Orthogonality neighbors: everything sharing a context with i. A node's
    // two defining constraints may come from two different contexts (a hinge
    // node like "orthogonal to a and to c"), so the pair is drawn from the
    // whole neighborhood, not from a single context.
    std::vector<std::vector<int>> neighbors(n);
    for (const auto& t : topology.contexts()) {
        for (const int o : t) {
            for (const int m : t) {
                if (m == o) continue;
                auto& nb = neighbors[o];
                if (std::find(nb.begin(), nb.end(), m) == nb.end()) nb.push_back(m);
            }
        }
    }

    bool progress = true;
    while (progress) {
        progress = false;
        for (int i = 0; i < n; ++i) {
            if (rays[i]) continue;
            const auto& nb = neighbors[i];
            for (size_t j = 0; !rays[i] && j < nb.size(); ++j) {
                if (!rays[nb[j]]) continue;
                for (size_t k = j + 1; k < nb.size(); ++k) {
                    if (!rays[nb[k]]) continue;
                    const Vector3 cr = cross(rays[nb[j]]->vec(), rays[nb[k]]->vec());
                    if (norm(cr) < 1e-6) continue; // nearly parallel pair, try another
                    rays[i] = Ray::from(cr);
                    progress = true;
                    break;
                }
            }
        }
    }
    std::vector<Observable> out;
    std::string missing;
    for (int i = 0; i < n; ++i) {
        if (!rays[i]) {
            missing += (missing.empty() ? "" : ", ") + obs[i].id;
        }
        out.push_back({obs[i].id, rays[i]});
    }
    if (!missing.empty()) {
        throw GadgetRealizationError("orthogonality constraints leave unrealized: " + missing);
    }
    std::vector<std::array<std::string, 3>> ctx;
    for (size_t c = 0; c < topology.contexts().size(); ++c) {
        ctx.push_back(topology.context_ids(static_cast<int>(c)));
    }
    return Diagram::make(std::move(out), ctx);
}

Diagram relabel(const Diagram& d, const std::vector<std::pair<std::string, std::string>>& map) {
    std::map<std::string, std::string> m(map.begin(), map.end());
    const auto rename = [&](const std::string& id) {
        auto it = m.find(id);
        return it == m.end() ? id : it->second;
    };
    std::vector<Observable> obs;
    for (const auto& o : d.observables()) {
        obs.push_back({rename(o.id), o.realization});
    }
    std::vector<std::array<std::string, 3>> ctx;
    for (size_t c = 0; c < d.contexts().size(); ++c) {
        const auto ids = d.context_ids(static_cast<int>(c));
        ctx.push_back({rename(ids[0]), rename(ids[1]), rename(ids[2])});
    }
    return Diagram::make(std::move(obs), ctx);
}

Diagram merge_by_ray(const std::vector<Diagram>& parts, double tol) {
    std::vector<Observable> acc;
    std::vector<std::array<std::string, 3>> ctx;
    for (const auto& part : parts) {
        std::vector<std::string> local(part.observables().size());
        for (size_t i = 0; i < part.observables().size(); ++i) {
            const auto& o = part.observables()[i];
            std::string target;
            if (o.realization) {
                for (const auto& e : acc) {
                    if (e.realization && same_ray(*e.realization, *o.realization, tol)) {
                        target = e.id;
                        break;
                    }
                }
            }
            if (target.empty()) {
                for (const auto& e : acc) {
                    if (e.id == o.id) {
                        throw DuplicateIdError("merge: id '" + o.id +
                                               "' names two distinct rays");
                    }
                }
                acc.push_back(o);
                target = o.id;
            }
            local[i] = target;
        }
        for (size_t c = 0; c < part.contexts().size(); ++c) {
            const auto& t = part.contexts()[c];
            ctx.push_back({local[t[0]], local[t[1]], local[t[2]]});
        }
    }
    return Diagram::make(std::move(acc), ctx);
}

std::string GadgetLibrary::default_dir() {
    if (const char* env = std::getenv("KS_FORGE_DATA")) {
        return env;
    }
    return "data";
}

GadgetLibrary GadgetLibrary::load(const std::string& dir) {
    GadgetLibrary lib;
    lib.step_gadget = load_diagram(dir + "/step_gadget.json");
    lib.chain_gadget = load_diagram(dir + "/chain_gadget.json");
    const std::string strong_path = dir + "/strong_ks_24.json";
    if (std::ifstream probe(strong_path); probe.good()) {
        lib.strong24 = load_diagram(strong_path); // malformed content still throws
    }
    return lib;
}

namespace {

bool all_realized(const Diagram& d) {
    for (const auto& o : d.observables()) {
        if (!o.realization) return false;
    }
    return true;
}

// Rotates a fully realized diagram so that its anchors (a_id, b_id) land on
// the rays (a, y). Requires matching overlaps; rays are re-canonicalized.
Diagram rotate_onto(const Diagram& d, const Ray& a, const Ray& y, double tol) {
    const auto& an = d.observable("a").realization;
    const auto& bn = d.observable("b").realization;
    if (!an || !bn) {
        throw GadgetRealizationError("rotation needs realized anchors 'a' and 'b'");
    }
    const double pn = inner(*an, *bn);
    const double pt = inner(a, y);
    if (std::fabs(pn - pt) > tol) {
        throw GadgetRealizationError("overlap mismatch: set built at " + std::to_string(pn) +
                                     ", requested " + std::to_string(pt));
    }
    const Matrix3 r = canonical_pair_basis(a, y).transposed() * canonical_pair_basis(*an, *bn);
    std::vector<Observable> obs;
    for (const auto& o : d.observables()) {
        obs.push_back({o.id, Ray::from(apply(r, o.realization->vec()))});
    }
    std::vector<std::array<std::string, 3>> ctx;
    for (size_t c = 0; c < d.contexts().size(); ++c) {
        ctx.push_back(d.context_ids(static_cast<int>(c)));
    }
    return Diagram::make(std::move(obs), ctx);
}

// Instantiates the strong set at the pair (a, y): directly when abstract or
// when the native overlap matches, otherwise refuses.
Diagram instantiate_strong(const Diagram& sd, const Ray& a, const Ray& y) {
    Diagram inst = all_realized(sd) ? rotate_onto(sd, a, y, Tolerances{}.unit)
                                    : realize_gadget(sd, {{"a", a}, {"b", y}});
    const ValidationReport rep = validate(inst);
    if (!rep.pass) {
        throw GadgetRealizationError("strong set instance fails validation (context deviation " +
                                     std::to_string(rep.max_context_deviation) + ")");
    }
    return inst;
}

// One-time solver gate for the file: {a=1, b definite} must be unsatisfiable
// on a realized instance.
void gate_strong(const Diagram& sd) {
    Diagram inst = sd;
    if (!all_realized(sd)) {
        const double p = strong_overlap_bound();
        const Ray a = Ray::from({1, 0, 0});
        const Ray b = Ray::from({p, std::sqrt(1.0 - p * p), 0});
        inst = realize_gadget(sd, {{"a", a}, {"b", b}});
    }
    if (!validate(inst).pass) {
        throw GadgetRealizationError("strong set data fails validation");
    }
    const Verdict v = exists_admissible(
        inst, {{"a", Requirement::One}, {"b", Requirement::Definite}});
    if (v.satisfiable) {
        throw GadgetRealizationError(
            "strong set data fails its gate: {a=1, b definite} is satisfiable");
    }
}

// Namespaces every observable of `d` with `prefix`, keeping ids in `keep`
// mapped to their designated replacements.
Diagram namespaced(const Diagram& d, const std::string& prefix,
                   const std::vector<std::pair<std::string, std::string>>& keep) {
    std::vector<std::pair<std::string, std::string>> map = keep;
    for (const auto& o : d.observables()) {
        bool kept = false;
        for (const auto& [from, to] : keep) {
            if (o.id == from) kept = true;
        }
        if (!kept) map.emplace_back(o.id, prefix + o.id);
    }
    return relabel(d, map);
}

// Attaches the strong set at the pair (a, y): a direct instance when
// possible, otherwise a single reduction step from (a, y) up to the set's
// native overlap followed by the native instance. Returns the diagrams to
// merge. The composite refutes {a=1, y=1}.
std::vector<Diagram> attach_strong(const GadgetLibrary& lib, const Ray& a, const Ray& y,
                                   const std::string& y_id, const std::string& prefix) {
    const Diagram& sd = *lib.strong24;
    std::vector<Diagram> parts;
    if (!all_realized(sd)) {
        Diagram inst = instantiate_strong(sd, a, y);
        parts.push_back(namespaced(inst, prefix, {{"a", "a"}, {"b", y_id}}));
        return parts;
    }
    const auto& an = sd.observable("a").realization;
    const auto& bn = sd.observable("b").realization;
    const double native = inner(*an, *bn);
    const double p = inner(a, y);
    if (std::fabs(native - p) <= Tolerances{}.unit) {
        Diagram inst = instantiate_strong(sd, a, y);
        parts.push_back(namespaced(inst, prefix, {{"a", "a"}, {"b", y_id}}));
        return parts;
    }
    if (p >= native) {
        throw GadgetRealizationError("overlap " + std::to_string(p) +
                                     " exceeds the strong set's native overlap " +
                                     std::to_string(native));
    }
    const Reduction glue = reduce_toward(a, y, native, lib.step_gadget);
    const std::string glue_c = prefix + "glue.c";
    parts.push_back(namespaced(glue.gadget, prefix + "glue.",
                               {{"a", "a"}, {"b", y_id}, {"c", glue_c}}));
    Diagram inst = instantiate_strong(sd, a, glue.c);
    parts.push_back(namespaced(inst, prefix, {{"a", "a"}, {"b", glue_c}}));
    return parts;
}

} // namespace

WitnessSet construct_extended_witness(const Ray& a, const Ray& b, const GadgetLibrary& lib) {
    const double p = inner(a, b);
    if (p <= Tolerances{}.unit || p >= 1.0 - Tolerances{}.unit) {
        throw DegeneratePairError("witness construction needs 0 < inner(a,b) < 1");
    }

    WitnessSet w;
    w.a_id = "a";
    w.b_id = "b";

    if (lib.strong24) gate_strong(*lib.strong24);

    if (p <= strong_overlap_bound()) {
        if (!lib.strong24) {
            throw GadgetRealizationError(
                "overlap " + std::to_string(p) +
                " is in the strong regime; the 24-ray set data file is required");
        }
        Diagram inst = instantiate_strong(*lib.strong24, a, b);
        w.diagram = namespaced(inst, "ks.", {{"a", "a"}, {"b", "b"}});
        w.certification = WitnessSet::Certification::Full;
        return w;
    }

    w.chain = iterate_reduction(a, b);
    std::vector<Diagram> parts;
    std::string prev_c = "b";
    for (size_t i = 0; i < w.chain.size(); ++i) {
        const ReductionTrace& t = w.chain[i];
        Diagram inst = realize_gadget(lib.chain_gadget, {{"a", t.a},
                                                         {"b", t.b},
                                                         {"v1", t.v1},
                                                         {"v2", t.v2},
                                                         {"c", t.c}});
        const std::string sp = "s" + std::to_string(i + 1) + ".";
        parts.push_back(namespaced(inst, sp, {{"a", "a"}, {"b", prev_c}, {"c", sp + "c"}}));
        prev_c = sp + "c";
    }
    w.final_overlap_id = prev_c;

    // Orthogonal branch: with a=1 both companions of a's context drop to 0,
    // so b=0 forces the ray orthogonal to b in the (a,b) plane to 1.
    const Matrix3 back = canonical_pair_basis(a, b).transposed();
    const double q = sqrt_clamped(1.0 - p * p);
    const Ray alpha = Ray::from(apply(back, {0, 1, 0}));
    const Ray beta = Ray::from(apply(back, {0, 0, 1}));
    const Ray cperp = Ray::from(apply(back, {q, -p, 0}));
    parts.push_back(Diagram::make({{"a", a},
                                   {"b", b},
                                   {"perp.alpha", alpha},
                                   {"perp.beta", beta},
                                   {"perp.c", cperp}},
                                  {{"a", "perp.alpha", "perp.beta"},
                                   {"b", "perp.c", "perp.beta"}}));
    w.branch_contexts = {{"a", "perp.alpha", "perp.beta"}, {"b", "perp.c", "perp.beta"}};

    if (lib.strong24) {
        const Ray ck = w.chain.back().c;
        for (auto& d : attach_strong(lib, a, ck, w.final_overlap_id, "ks1.")) {
            parts.push_back(std::move(d));
        }
        for (auto& d : attach_strong(lib, a, cperp, "perp.c", "ks2.")) {
            parts.push_back(std::move(d));
        }
        w.certification = WitnessSet::Certification::Full;
    } else {
        w.certification = WitnessSet::Certification::ModuloStrongSet;
    }

    w.diagram = merge_by_ray(parts);

    if (w.certification == WitnessSet::Certification::Full &&
        !check_value_indefinite(w.diagram, w.a_id, w.b_id)) {
        throw GadgetRealizationError("assembled witness fails the value-indefiniteness check");
    }
    return w;
}

namespace {

void trace_fields(std::ostringstream& out, const ReductionTrace& t) {
    const auto num = [&](const char* k, double v, bool comma = true) {
        out << "  \"" << k << "\": " << fmt_double(v) << (comma ? ",\n" : "\n");
    };
    const auto ray = [&](const char* k, const Ray& r) {
        out << "  \"" << k << "\": " << json_vector(r.vec()) << ",\n";
    };
    out << "{\n";
    num("p1", t.p1);
    num("q1", t.q1);
    num("alpha1", t.alpha1);
    num("alpha2", t.alpha2);
    num("alpha3", t.alpha3);
    num("theta_ab", t.theta_ab);
    num("theta_av1", t.theta_av1);
    num("theta_av2", t.theta_av2);
    num("theta_bv2", t.theta_bv2);
    num("theta_bc", t.theta_bc);
    num("x1", t.x1);
    num("y1", t.y1);
    num("z1", t.z1);
    num("q2", t.q2);
    num("x2", t.x2);
    num("y2", t.y2);
    num("z2", t.z2);
    num("p3", t.p3);
    num("q3", t.q3);
    num("x3", t.x3);
    num("y3", t.y3);
    num("z3", t.z3);
    num("k", t.k);
    ray("a", t.a);
    ray("b", t.b);
    ray("v1", t.v1);
    ray("v2", t.v2);
    ray("c", t.c);
    num("f", inner(t.a, t.c), false);
    out << "}";
}

} // namespace

std::string emit_trace_json(const ReductionTrace& t) {
    std::ostringstream out;
    trace_fields(out, t);
    out << "\n";
    return out.str();
}

std::string emit_chain_json(const std::vector<ReductionTrace>& chain) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < chain.size(); ++i) {
        out << (i ? ",\n" : "\n");
        trace_fields(out, chain[i]);
    }
    out << "\n]\n";
    return out.str();
}

std::string emit_witness_json(const WitnessSet& w) {
    std::ostringstream out;
    out << "{\n \"a\": " << json_string(w.a_id) << ",\n \"b\": " << json_string(w.b_id);
    out << ",\n \"certification\": "
        << (w.certification == WitnessSet::Certification::Full ? "\"full\""
                                                               : "\"modulo-strong-set\"");
    out << ",\n \"final_overlap_id\": "
        << (w.final_overlap_id.empty() ? "null" : json_string(w.final_overlap_id));
    out << ",\n \"branch_contexts\": [";
    for (size_t i = 0; i < w.branch_contexts.size(); ++i) {
        const auto& c = w.branch_contexts[i];
        out << (i ? ", " : "") << "[" << json_string(c[0]) << ", " << json_string(c[1]) << ", "
            << json_string(c[2]) << "]";
    }
    out << "],\n \"chain\": ";
    std::string chain = emit_chain_json(w.chain);
    if (!chain.empty() && chain.back() == '\n') chain.pop_back();
    out << chain;
    out << ",\n \"diagram\": ";
    std::string d = emit_diagram_json(w.diagram);
    if (!d.empty() && d.back() == '\n') d.pop_back();
    out << d << "\n}\n";
    return out.str();
}

} // namespace ks
