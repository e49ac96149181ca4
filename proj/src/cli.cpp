#include "ks/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "ks/analysis.hpp"
#include "ks/assignments.hpp"
#include "ks/diagram.hpp"
#include "ks/jsonfmt.hpp"
#include "ks/reductions.hpp"

namespace ks {

namespace {

void write_text(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open output file: " + path);
    f << text;
}

// Comma-separated vector flag ("--a 1,0,0"). Inputs are normalized; small
// deviations get a warning, large ones are treated as typos.
Ray parse_ray_flag(const std::string& flag, const std::string& text, std::ostream& err) {
    std::vector<double> comp;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            comp.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) {
                ++used;
            }
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw PreconditionError(flag + ": cannot parse component '" + item + "'");
        }
    }
    if (comp.size() != 3) {
        throw PreconditionError(flag + " expects three comma-separated components, e.g. 1,0,0");
    }
    const Vector3 v{comp[0], comp[1], comp[2]};
    if (!is_finite(v)) throw PreconditionError(flag + ": components must be finite");
    const double deviation = std::fabs(norm(v) - 1.0);
    if (deviation > 1e-2) {
        throw PreconditionError(flag + ": vector norm deviates from 1 by " +
                                std::to_string(deviation) + "; likely a typo");
    }
    if (deviation > 1e-6) {
        err << "note: normalizing " << flag << " (norm deviation " << deviation << ")\n";
    }
    return Ray::from(v);
}

Premise parse_premise_token(const std::string& token) {
    const size_t pos = token.rfind('=');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= token.size()) {
        throw PreconditionError("premise must look like id=1, id=0 or id=definite: '" + token +
                                "'");
    }
    Premise p;
    p.id = token.substr(0, pos);
    const std::string req = token.substr(pos + 1);
    if (req == "1") {
        p.req = Requirement::One;
    } else if (req == "0") {
        p.req = Requirement::Zero;
    } else if (req == "definite") {
        p.req = Requirement::Definite;
    } else {
        throw PreconditionError("premise value must be 1, 0 or definite: '" + token + "'");
    }
    return p;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<Premise> gather_premises(const std::vector<std::string>& tokens,
                                     const std::string& premises_file) {
    std::vector<Premise> premises;
    if (!premises_file.empty()) {
        premises = parse_premises_json(read_file(premises_file));
    }
    for (const std::string& t : tokens) {
        premises.push_back(parse_premise_token(t));
    }
    return premises;
}

// Either explicit --a/--b vectors or --overlap p (canonical pair).
struct PairFlags {
    std::string a_text, b_text;
    double overlap = -1.0;

    std::pair<Ray, Ray> resolve(std::ostream& err) const {
        const bool vectors = !a_text.empty() || !b_text.empty();
        if (overlap >= 0.0 && vectors) {
            throw PreconditionError("give either --overlap or --a/--b, not both");
        }
        if (overlap >= 0.0) {
            if (!(overlap > 0.0 && overlap < 1.0)) {
                throw PreconditionError("--overlap must lie strictly between 0 and 1");
            }
            return {Ray::from({1, 0, 0}),
                    Ray::from({overlap, std::sqrt(1.0 - overlap * overlap), 0})};
        }
        if (a_text.empty() || b_text.empty()) {
            throw PreconditionError("need both --a and --b (or --overlap)");
        }
        return {parse_ray_flag("--a", a_text, err), parse_ray_flag("--b", b_text, err)};
    }
};

void add_pair_flags(CLI::App* cmd, PairFlags& pf) {
    cmd->add_option("--a", pf.a_text, "first ray, comma-separated (e.g. 1,0,0)");
    cmd->add_option("--b", pf.b_text, "second ray, comma-separated");
    cmd->add_option("--overlap", pf.overlap,
                    "build the canonical pair (1,0,0), (p, sqrt(1-p^2), 0) instead");
}

std::string validation_json(const Diagram& d, const ValidationReport& rep) {
    std::ostringstream out;
    out << "{\n \"pass\": " << (rep.pass ? "true" : "false");
    out << ",\n \"all_realized\": " << (rep.all_realized ? "true" : "false");
    out << ",\n \"any_realized\": " << (rep.any_realized ? "true" : "false");
    out << ",\n \"observables\": " << d.observables().size();
    out << ",\n \"contexts\": " << d.contexts().size();
    out << ",\n \"max_context_deviation\": " << fmt_double(rep.max_context_deviation);
    out << ",\n \"max_unit_deviation\": " << fmt_double(rep.max_unit_deviation);
    out << "\n}\n";
    return out.str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"constructs and verifies finite observable sets that force value "
                 "indefiniteness, and analyzes the overlap-reduction map"};
    app.name("ks-forge");
    app.require_subcommand(1);

    int rc = 0;
    std::string out_path;

    // validate ----------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "check a diagram file's realization");
    struct {
        std::string diagram;
        double tol_orth = Tolerances{}.orth;
        double tol_unit = Tolerances{}.unit;
    } val;
    validate_cmd->add_option("--diagram", val.diagram, "diagram JSON file")->required();
    validate_cmd->add_option("--tol-orth", val.tol_orth, "context orthogonality tolerance");
    validate_cmd->add_option("--tol-unit", val.tol_unit, "unit-norm tolerance");
    validate_cmd->add_option("--out", out_path, "write the report here instead of stdout");
    validate_cmd->callback([&] {
        const Diagram d = load_diagram(val.diagram);
        const ValidationReport rep = validate(d, val.tol_orth, val.tol_unit);
        write_text(validation_json(d, rep), out_path, out);
        rc = rep.pass ? 0 : 1;
    });

    // solve ---------------------------------------------------------------
    auto* solve_cmd =
        app.add_subcommand("solve", "decide admissible-assignment existence under premises");
    struct {
        std::string diagram;
        std::vector<std::string> premise_tokens;
        std::string premises_file;
        bool boolean_total = false;
        bool explain = false;
        std::uint64_t budget = SolveOptions{}.node_budget;
    } sol;
    solve_cmd->add_option("--diagram", sol.diagram, "diagram JSON file")->required();
    solve_cmd->add_option("--premise", sol.premise_tokens,
                          "premise id=1 | id=0 | id=definite (repeatable)");
    solve_cmd->add_option("--premises", sol.premises_file, "premises JSON file");
    solve_cmd->add_flag("--boolean", sol.boolean_total,
                        "require a total {0,1} assignment (Boolean frame function)");
    solve_cmd->add_flag("--explain", sol.explain, "print the forcing chain to stderr");
    solve_cmd->add_option("--budget", sol.budget, "search node budget");
    solve_cmd->add_option("--out", out_path, "write the verdict here instead of stdout");
    solve_cmd->callback([&] {
        const Diagram d = load_diagram(sol.diagram);
        const auto premises = gather_premises(sol.premise_tokens, sol.premises_file);
        SolveOptions opts;
        opts.node_budget = sol.budget;
        const Verdict v = sol.boolean_total ? boolean_frame_function_exists(d, premises, opts)
                                            : exists_admissible(d, premises, opts);
        if (sol.explain) {
            err << describe_steps(d, v.premise_steps);
            if (v.premise_conflict) {
                err << "conflict: " << describe_step(d, *v.premise_conflict) << "\n";
            }
        }
        write_text(emit_verdict_json(d, v), out_path, out);
        rc = v.satisfiable ? 0 : 1;
    });

    // indefinite ----------------------------------------------------------
    auto* indef_cmd = app.add_subcommand(
        "indefinite", "check that b can take no value once a is 1 (both b=1 and b=0 refuted)");
    struct {
        std::string diagram;
        std::string a_id = "a";
        std::string b_id = "b";
        std::uint64_t budget = SolveOptions{}.node_budget;
    } ind;
    indef_cmd->add_option("--diagram", ind.diagram, "diagram JSON file")->required();
    indef_cmd->add_option("--a", ind.a_id, "observable id given the value 1");
    indef_cmd->add_option("--b", ind.b_id, "observable id tested for indefiniteness");
    indef_cmd->add_option("--budget", ind.budget, "search node budget");
    indef_cmd->add_option("--out", out_path, "write the result here instead of stdout");
    indef_cmd->callback([&] {
        const Diagram d = load_diagram(ind.diagram);
        SolveOptions opts;
        opts.node_budget = ind.budget;
        const Verdict one =
            exists_admissible(d, {{ind.a_id, Requirement::One}, {ind.b_id, Requirement::One}},
                              opts);
        const Verdict zero =
            exists_admissible(d, {{ind.a_id, Requirement::One}, {ind.b_id, Requirement::Zero}},
                              opts);
        const bool indefinite = !one.satisfiable && !zero.satisfiable;
        std::ostringstream os;
        os << "{\"indefinite\": " << (indefinite ? "true" : "false")
           << ", \"b_one_satisfiable\": " << (one.satisfiable ? "true" : "false")
           << ", \"b_zero_satisfiable\": " << (zero.satisfiable ? "true" : "false")
           << ", \"nodes\": " << (one.nodes + zero.nodes) << "}\n";
        write_text(os.str(), out_path, out);
        rc = indefinite ? 0 : 1;
    });

    // reduce ----------------------------------------------------------------
    auto* reduce_cmd =
        app.add_subcommand("reduce", "single reduction step toward a larger overlap");
    struct {
        std::string a_text, b_text;
        double x = 0;
        bool plus_z = false;
        std::string data_dir = GadgetLibrary::default_dir();
    } red;
    reduce_cmd->add_option("--a", red.a_text, "first ray, comma-separated")->required();
    reduce_cmd->add_option("--b", red.b_text, "second ray, comma-separated")->required();
    reduce_cmd->add_option("--x", red.x, "target overlap <a|c>, inner(a,b) < x < 1")->required();
    reduce_cmd->add_flag("--plus-z", red.plus_z, "use the mirrored +z branch");
    reduce_cmd->add_option("--data", red.data_dir, "gadget data directory");
    reduce_cmd->add_option("--out", out_path, "write the result here instead of stdout");
    reduce_cmd->callback([&] {
        const Ray a = parse_ray_flag("--a", red.a_text, err);
        const Ray b = parse_ray_flag("--b", red.b_text, err);
        const GadgetLibrary lib = GadgetLibrary::load(red.data_dir);
        const Reduction r = reduce_toward(a, b, red.x, lib.step_gadget,
                                          red.plus_z ? ZBranch::Plus : ZBranch::Minus);
        std::ostringstream os;
        os << "{\n \"c\": " << json_vector(r.c.vec()) << ",\n \"gadget\": ";
        std::string g = emit_diagram_json(r.gadget);
        if (!g.empty() && g.back() == '\n') g.pop_back();
        os << g << "\n}\n";
        write_text(os.str(), out_path, out);
        rc = 0;
    });

    // iterate ---------------------------------------------------------------
    auto* iterate_cmd =
        app.add_subcommand("iterate", "iterate the reduction until the strong regime");
    struct {
        PairFlags pair;
        std::uint64_t budget = 1000000;
    } itf;
    add_pair_flags(iterate_cmd, itf.pair);
    iterate_cmd->add_option("--budget", itf.budget, "maximum number of steps");
    iterate_cmd->add_option("--out", out_path, "write the chain here instead of stdout");
    iterate_cmd->callback([&] {
        const auto [a, b] = itf.pair.resolve(err);
        const auto chain = iterate_reduction(a, b, itf.budget);
        write_text(emit_chain_json(chain), out_path, out);
        err << "chain of " << chain.size() << " step(s); final overlap "
            << inner(chain.front().a, chain.back().c) << "\n";
        rc = 0;
    });

    // witness ---------------------------------------------------------------
    auto* witness_cmd =
        app.add_subcommand("witness", "assemble the finite witness set for a pair");
    struct {
        PairFlags pair;
        std::string data_dir = GadgetLibrary::default_dir();
    } wit;
    add_pair_flags(witness_cmd, wit.pair);
    witness_cmd->add_option("--data", wit.data_dir, "gadget data directory");
    witness_cmd->add_option("--out", out_path, "write the witness here instead of stdout");
    witness_cmd->callback([&] {
        const auto [a, b] = wit.pair.resolve(err);
        const GadgetLibrary lib = GadgetLibrary::load(wit.data_dir);
        const WitnessSet w = construct_extended_witness(a, b, lib);
        write_text(emit_witness_json(w), out_path, out);
        if (w.certification == WitnessSet::Certification::ModuloStrongSet) {
            err << "note: no 24-ray strong set file; the witness covers the reduction chain "
                   "and the orthogonal branch only, so indefiniteness is certified modulo "
                   "an external forcing set for overlaps at or below 3/sqrt(14)\n";
        }
        rc = 0;
    });

    // sweep -----------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep of the map and its derivative");
    struct {
        double lo = strong_overlap_bound() + 1e-4;
        double hi = 1.0 - 1e-4;
        int n = 10000;
        int jobs = 1;
    } sw;
    sweep_cmd->add_option("--lo", sw.lo, "grid start");
    sweep_cmd->add_option("--hi", sw.hi, "grid end");
    sweep_cmd->add_option("--n", sw.n, "number of grid points");
    sweep_cmd->add_option("--jobs", sw.jobs, "worker threads");
    sweep_cmd->add_option("--out", out_path, "write the CSV here instead of stdout");
    sweep_cmd->callback([&] {
        const SweepResult res = sweep_f(sw.lo, sw.hi, sw.n, sw.jobs);
        write_text(to_csv(res.rows), out_path, out);
        if (res.violations > 0) {
            err << res.violations << " row(s) violate f < p1 or df > 1\n";
            rc = 1;
        } else {
            rc = 0;
        }
    });

    // taylor ----------------------------------------------------------------
    auto* taylor_cmd =
        app.add_subcommand("taylor", "slope of the map at the parallel end (1 - f(1-e))/e");
    taylor_cmd->add_option("--out", out_path, "write the result here instead of stdout");
    taylor_cmd->callback([&] {
        const TaylorResult t = taylor_coefficient();
        std::ostringstream os;
        os << "{\"m\": " << fmt_double(t.extrapolated)
           << ", \"closed_form\": " << fmt_double(t.closed_form) << ", \"eps\": [";
        for (size_t i = 0; i < t.eps.size(); ++i) {
            os << (i ? ", " : "") << fmt_double(t.eps[i]);
        }
        os << "], \"slopes\": [";
        for (size_t i = 0; i < t.slopes.size(); ++i) {
            os << (i ? ", " : "") << fmt_double(t.slopes[i]);
        }
        os << "]}\n";
        write_text(os.str(), out_path, out);
        rc = 0;
    });

    // classify --------------------------------------------------------------
    auto* classify_cmd =
        app.add_subcommand("classify", "parallel-definite / orthogonal-definite / indefinite");
    struct {
        std::string a_text, b_text;
        double eps = 1e-6;
    } cls;
    classify_cmd->add_option("--a", cls.a_text, "reference ray, comma-separated")->required();
    classify_cmd->add_option("--b", cls.b_text, "observable ray, comma-separated")->required();
    classify_cmd->add_option("--eps", cls.eps, "definiteness tolerance");
    classify_cmd->add_option("--out", out_path, "write the result here instead of stdout");
    classify_cmd->callback([&] {
        const Ray a = parse_ray_flag("--a", cls.a_text, err);
        const Ray b = parse_ray_flag("--b", cls.b_text, err);
        const StarVerdict v = classify_observable(a, b, cls.eps);
        const char* kind = v.kind == StarVerdict::Kind::ParallelDefinite
                               ? "parallel-definite"
                               : (v.kind == StarVerdict::Kind::OrthogonalDefinite
                                      ? "orthogonal-definite"
                                      : "indefinite");
        std::ostringstream os;
        os << "{\"kind\": \"" << kind << "\", \"overlap\": " << fmt_double(v.overlap) << "}\n";
        write_text(os.str(), out_path, out);
        rc = 0;
    });

    // sample ------------------------------------------------------------
    auto* sample_cmd =
        app.add_subcommand("sample", "Monte Carlo fraction of definite observables");
    struct {
        std::string a_text = "1,0,0";
        std::uint64_t n = 0;
        double eps = 1e-3;
        std::uint64_t seed = 0;
        int jobs = 1;
    } smp;
    sample_cmd->add_option("--a", smp.a_text, "reference ray, comma-separated");
    sample_cmd->add_option("--n", smp.n, "number of samples")->required();
    sample_cmd->add_option("--eps", smp.eps, "definiteness tolerance");
    sample_cmd->add_option("--seed", smp.seed, "PRNG seed (runs are reproducible)")->required();
    sample_cmd->add_option("--jobs", smp.jobs, "worker threads");
    sample_cmd->add_option("--out", out_path, "write the result here instead of stdout");
    sample_cmd->callback([&] {
        const Ray a = parse_ray_flag("--a", smp.a_text, err);
        const MeasureDemo m = measure_demo(a, smp.n, smp.eps, smp.seed, smp.jobs);
        write_text(emit_measure_json(m), out_path, out);
        rc = 0;
    });

    // export ----------------------------------------------------------------
    auto* export_cmd = app.add_subcommand("export", "DOT graph of a diagram");
    struct {
        std::string diagram;
        std::vector<std::string> premise_tokens;
        std::string premises_file;
    } exp;
    export_cmd->add_option("--diagram", exp.diagram, "diagram JSON file")->required();
    export_cmd->add_option("--premise", exp.premise_tokens,
                           "overlay the propagation closure of these premises (repeatable)");
    export_cmd->add_option("--premises", exp.premises_file, "premises JSON file to overlay");
    export_cmd->add_option("--out", out_path, "write the DOT text here instead of stdout");
    export_cmd->callback([&] {
        const Diagram d = load_diagram(exp.diagram);
        std::string text;
        if (exp.premise_tokens.empty() && exp.premises_file.empty()) {
            text = export_dot(d);
        } else {
            const auto premises = gather_premises(exp.premise_tokens, exp.premises_file);
            const PropagationResult pr = propagate(d, premises);
            if (pr.conflict) {
                err << "note: premises conflict during propagation; overlaying the partial "
                       "closure\n";
            }
            text = export_dot(d, pr.closure);
        }
        write_text(text, out_path, out);
        rc = 0;
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

} // namespace ks
