#include "ks/assignments.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ks/jsonfmt.hpp"

namespace ks {

bool check_admissible(const Diagram& d, const Assignment& a) {
    if (a.values.size() != d.observables().size()) {
        throw PreconditionError("check_admissible: assignment size does not match diagram");
    }
    for (const auto& t : d.contexts()) {
        int ones = 0, zeros = 0;
        for (int i = 0; i < 3; ++i) {
            const Value v = a.values[t[i]];
            ones += v == Value::One;
            zeros += v == Value::Zero;
        }
        if (ones > 1) return false;
        if (ones == 1 && zeros != 2) return false;
        if (ones == 0 && zeros >= 2) return false;
    }
    return true;
}

namespace {

enum class Cell : unsigned char { Free, Undef, Zero, One };

Value cell_value(Cell c) {
    switch (c) {
        case Cell::One: return Value::One;
        case Cell::Zero: return Value::Zero;
        default: return Value::Undefined;
    }
}

Cell value_cell(Value v) {
    switch (v) {
        case Value::One: return Cell::One;
        case Value::Zero: return Cell::Zero;
        default: return Cell::Undef;
    }
}

struct Engine {
    const Diagram& dia;
    std::vector<Cell> cells;
    std::vector<std::vector<int>> adj;
    std::vector<int> trail;
    std::vector<Step>* step_sink = nullptr;
    std::optional<Step> failed;

    explicit Engine(const Diagram& d)
        : dia(d), cells(d.observables().size(), Cell::Free), adj(d.observables().size()) {
        for (size_t c = 0; c < d.contexts().size(); ++c) {
            for (const int o : d.contexts()[c]) {
                adj[o].push_back(static_cast<int>(c));
            }
        }
    }

    size_t mark() const { return trail.size(); }

    void undo(size_t m) {
        while (trail.size() > m) {
            cells[trail.back()] = Cell::Free;
            trail.pop_back();
        }
    }

    bool set_cell(int obs, Cell v, const Step& why, std::vector<int>& dirty) {
        const Cell cur = cells[obs];
        if (cur == v) return true;
        if (cur != Cell::Free) {
            failed = why;
            return false;
        }
        cells[obs] = v;
        trail.push_back(obs);
        if (step_sink) step_sink->push_back(why);
        for (const int c : adj[obs]) dirty.push_back(c);
        return true;
    }

    bool examine(int c, std::vector<int>& dirty) {
        const auto& t = dia.contexts()[c];
        int one = -1;
        for (int i = 0; i < 3; ++i) {
            if (cells[t[i]] == Cell::One) {
                one = t[i];
                break;
            }
        }
        if (one >= 0) {
            for (int i = 0; i < 3; ++i) {
                const int o = t[i];
                if (o == one) continue;
                Step s{Step::Rule::OneForcesZero, c, o, Value::Zero, {one, -1}};
                if (!set_cell(o, Cell::Zero, s, dirty)) return false;
            }
        }
        int zeros = 0;
        for (int i = 0; i < 3; ++i) zeros += cells[t[i]] == Cell::Zero;
        if (zeros >= 2) {
            int target = -1, f1 = -1, f2 = -1;
            if (zeros == 3) {
                target = t[0];
                f1 = t[1];
                f2 = t[2];
            } else {
                for (int i = 0; i < 3; ++i) {
                    if (cells[t[i]] != Cell::Zero) {
                        target = t[i];
                    } else if (f1 < 0) {
                        f1 = t[i];
                    } else {
                        f2 = t[i];
                    }
                }
            }
            Step s{Step::Rule::ZerosForceOne, c, target, Value::One, {f1, f2}};
            if (!set_cell(target, Cell::One, s, dirty)) return false;
        }
        return true;
    }

    bool flush(std::vector<int>& dirty) {
        while (!dirty.empty()) {
            const int c = dirty.back();
            dirty.pop_back();
            if (!examine(c, dirty)) return false;
        }
        return true;
    }
};

struct NormalizedPremises {
    std::vector<std::pair<int, Value>> fixed; // value premises, in premise order
    std::vector<int> definite;                // definite-only premises, in premise order
};

NormalizedPremises normalize_premises(const Diagram& d, const std::vector<Premise>& premises) {
    std::map<int, std::optional<Value>> seen; // nullopt = definite only
    std::vector<int> order;
    for (const auto& p : premises) {
        const int idx = d.index_of(p.id);
        std::optional<Value> want;
        if (p.req == Requirement::One) want = Value::One;
        if (p.req == Requirement::Zero) want = Value::Zero;
        auto it = seen.find(idx);
        if (it == seen.end()) {
            seen.emplace(idx, want);
            order.push_back(idx);
        } else if (want) {
            if (it->second && *it->second != *want) {
                throw ContradictoryPremisesError("premise '" + p.id +
                                                 "' required to be both 0 and 1");
            }
            it->second = want; // a value requirement subsumes definite
        }
    }
    NormalizedPremises out;
    for (const int idx : order) {
        const auto& want = seen.at(idx);
        if (want) {
            out.fixed.emplace_back(idx, *want);
        } else {
            out.definite.push_back(idx);
        }
    }
    return out;
}

std::vector<int> decision_order(const Diagram& d, const NormalizedPremises& prem) {
    const int n = static_cast<int>(d.observables().size());
    std::vector<int> degree(n, 0);
    for (const auto& t : d.contexts()) {
        for (const int o : t) degree[o]++;
    }
    std::vector<char> taken(n, 0);
    std::vector<int> order;
    order.reserve(n);
    for (const auto& [idx, v] : prem.fixed) {
        (void)v;
        if (!taken[idx]) {
            taken[idx] = 1;
            order.push_back(idx);
        }
    }
    for (const int idx : prem.definite) {
        if (!taken[idx]) {
            taken[idx] = 1;
            order.push_back(idx);
        }
    }
    std::vector<int> rest;
    for (int i = 0; i < n; ++i) {
        if (!taken[i]) rest.push_back(i);
    }
    std::sort(rest.begin(), rest.end(), [&](int a, int b) {
        if (degree[a] != degree[b]) return degree[a] > degree[b];
        return a < b;
    });
    order.insert(order.end(), rest.begin(), rest.end());
    return order;
}

struct Searcher {
    Engine eng;
    std::vector<int> order;
    std::vector<unsigned char> menu; // bit 1: try One, bit 2: try Zero, bit 4: try Undef
    const SolveOptions& opts;
    Verdict* verdict;

    Searcher(const Diagram& d, const SolveOptions& o, Verdict* v)
        : eng(d), opts(o), verdict(v) {}

    void record(int depth, int obs, Value val, bool conflict) {
        if (static_cast<int>(verdict->tree.size()) < opts.tree_record_limit) {
            verdict->tree.push_back({depth, obs, val, conflict});
        } else {
            verdict->tree_truncated = true;
        }
    }

    bool dfs(size_t pos, int depth) {
        while (pos < order.size() && eng.cells[order[pos]] != Cell::Free) ++pos;
        if (pos == order.size()) return true;
        const int obs = order[pos];
        static constexpr Cell kTry[3] = {Cell::One, Cell::Zero, Cell::Undef};
        static constexpr unsigned char kBit[3] = {1, 2, 4};
        for (int i = 0; i < 3; ++i) {
            if (!(menu[obs] & kBit[i])) continue;
            if (++verdict->nodes > opts.node_budget) {
                throw SearchBudgetExceededError("search exceeded node budget of " +
                                                std::to_string(opts.node_budget));
            }
            const size_t m = eng.mark();
            std::vector<int> dirty;
            Step decision{Step::Rule::Premise, -1, obs, cell_value(kTry[i]), {-1, -1}};
            bool ok = eng.set_cell(obs, kTry[i], decision, dirty) && eng.flush(dirty);
            record(depth, obs, cell_value(kTry[i]), !ok);
            if (ok && dfs(pos + 1, depth + 1)) return true;
            eng.undo(m);
        }
        return false;
    }
};

Verdict solve(const Diagram& d, const std::vector<Premise>& premises, const SolveOptions& opts,
              bool allow_undefined) {
    Verdict out;
    const NormalizedPremises prem = normalize_premises(d, premises);
    Searcher s(d, opts, &out);
    s.order = decision_order(d, prem);
    const unsigned char base = allow_undefined ? 7 : 3;
    s.menu.assign(d.observables().size(), base);
    for (const int idx : prem.definite) s.menu[idx] = 3;

    s.eng.step_sink = &out.premise_steps;
    std::vector<int> dirty;
    bool ok = true;
    for (const auto& [idx, v] : prem.fixed) {
        Step root{Step::Rule::Premise, -1, idx, v, {-1, -1}};
        if (!s.eng.set_cell(idx, value_cell(v), root, dirty)) {
            ok = false;
            break;
        }
    }
    if (ok) ok = s.eng.flush(dirty);
    s.eng.step_sink = nullptr;
    if (!ok) {
        out.premise_conflict = s.eng.failed;
        out.satisfiable = false;
        return out;
    }

    out.satisfiable = s.dfs(0, 0);
    if (out.satisfiable) {
        out.witness.values.resize(d.observables().size());
        for (size_t i = 0; i < d.observables().size(); ++i) {
            out.witness.values[i] = cell_value(s.eng.cells[i]);
        }
    }
    return out;
}

} // namespace

PropagationResult propagate(const Diagram& d, const std::vector<Premise>& premises) {
    PropagationResult out;
    const NormalizedPremises prem = normalize_premises(d, premises);
    Engine eng(d);
    eng.step_sink = &out.steps;
    std::vector<int> dirty;
    bool ok = true;
    for (const auto& [idx, v] : prem.fixed) {
        Step root{Step::Rule::Premise, -1, idx, v, {-1, -1}};
        if (!eng.set_cell(idx, value_cell(v), root, dirty)) {
            ok = false;
            break;
        }
    }
    if (ok) ok = eng.flush(dirty);
    out.conflict = !ok;
    if (!ok) out.failed = eng.failed;
    out.closure.values.resize(d.observables().size());
    for (size_t i = 0; i < d.observables().size(); ++i) {
        out.closure.values[i] = cell_value(eng.cells[i]);
    }
    return out;
}

Verdict exists_admissible(const Diagram& d, const std::vector<Premise>& premises,
                          const SolveOptions& opts) {
    return solve(d, premises, opts, /*allow_undefined=*/true);
}

Verdict boolean_frame_function_exists(const Diagram& d, const std::vector<Premise>& premises,
                                      const SolveOptions& opts) {
    return solve(d, premises, opts, /*allow_undefined=*/false);
}

bool check_value_indefinite(const Diagram& d, const std::string& a_id, const std::string& b_id,
                            const SolveOptions& opts) {
    const Verdict one = exists_admissible(
        d, {{a_id, Requirement::One}, {b_id, Requirement::One}}, opts);
    if (one.satisfiable) return false;
    const Verdict zero = exists_admissible(
        d, {{a_id, Requirement::One}, {b_id, Requirement::Zero}}, opts);
    return !zero.satisfiable;
}

std::string export_dot(const Diagram& d, const Assignment& a) {
    if (a.values.size() != d.observables().size()) {
        throw PreconditionError("export_dot: assignment size does not match diagram");
    }
    std::vector<int> values(a.values.size(), -1);
    for (size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == Value::One) values[i] = 1;
        if (a.values[i] == Value::Zero) values[i] = 0;
    }
    return export_dot(d, values);
}

std::vector<Premise> parse_premises_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("premises JSON: ") + e.what());
    }
    if (!j.is_array()) {
        throw ParseError("premises JSON: expected an array");
    }
    std::vector<Premise> out;
    for (const auto& p : j) {
        if (!p.is_object() || !p.contains("id") || !p.contains("req")) {
            throw ParseError("premises JSON: entries need 'id' and 'req'");
        }
        Premise pr;
        pr.id = p.at("id").get<std::string>();
        const std::string req = p.at("req").get<std::string>();
        if (req == "one") {
            pr.req = Requirement::One;
        } else if (req == "zero") {
            pr.req = Requirement::Zero;
        } else if (req == "definite") {
            pr.req = Requirement::Definite;
        } else {
            throw ParseError("premises JSON: unknown req '" + req + "'");
        }
        out.push_back(std::move(pr));
    }
    return out;
}

std::string emit_premises_json(const std::vector<Premise>& premises) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < premises.size(); ++i) {
        const char* req = premises[i].req == Requirement::One
                              ? "one"
                              : (premises[i].req == Requirement::Zero ? "zero" : "definite");
        out << (i ? ", " : "") << "{\"id\": " << json_string(premises[i].id)
            << ", \"req\": \"" << req << "\"}";
    }
    out << "]";
    return out.str();
}

namespace {

std::string step_json(const Diagram& d, const Step& s) {
    std::ostringstream out;
    const char* rule = s.rule == Step::Rule::Premise
                           ? "premise"
                           : (s.rule == Step::Rule::OneForcesZero ? "one-forces-zero"
                                                                  : "zeros-force-one");
    out << "{\"rule\": \"" << rule << "\", \"context\": ";
    if (s.context >= 0) {
        const auto ids = d.context_ids(s.context);
        out << "[" << json_string(ids[0]) << ", " << json_string(ids[1]) << ", "
            << json_string(ids[2]) << "]";
    } else {
        out << "null";
    }
    out << ", \"observable\": " << json_string(d.observables()[s.observable].id);
    out << ", \"value\": ";
    if (s.value == Value::One) {
        out << "1";
    } else if (s.value == Value::Zero) {
        out << "0";
    } else {
        out << "null";
    }
    out << ", \"forced_by\": [";
    bool first = true;
    for (const int f : s.forced_by) {
        if (f >= 0) {
            out << (first ? "" : ", ") << json_string(d.observables()[f].id);
            first = false;
        }
    }
    out << "]}";
    return out.str();
}

std::string witness_json(const Diagram& d, const Assignment& a) {
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == Value::Undefined) continue;
        out << (first ? "" : ", ") << json_string(d.observables()[i].id) << ": "
            << (a.values[i] == Value::One ? "1" : "0");
        first = false;
    }
    out << "}";
    return out.str();
}

} // namespace

std::string emit_verdict_json(const Diagram& d, const Verdict& v) {
    std::ostringstream out;
    out << "{\n \"outcome\": " << (v.satisfiable ? "\"satisfiable\"" : "\"unsatisfiable\"");
    out << ",\n \"nodes\": " << v.nodes;
    if (v.satisfiable) {
        out << ",\n \"witness\": " << witness_json(d, v.witness);
    }
    out << ",\n \"premise_steps\": [";
    for (size_t i = 0; i < v.premise_steps.size(); ++i) {
        out << (i ? ", " : "") << step_json(d, v.premise_steps[i]);
    }
    out << "]";
    out << ",\n \"premise_conflict\": "
        << (v.premise_conflict ? step_json(d, *v.premise_conflict) : "null");
    out << ",\n \"tree\": [";
    for (size_t i = 0; i < v.tree.size(); ++i) {
        const auto& e = v.tree[i];
        out << (i ? ", " : "") << "{\"depth\": " << e.depth << ", \"observable\": "
            << json_string(d.observables()[e.observable].id) << ", \"value\": ";
        if (e.value == Value::One) {
            out << "1";
        } else if (e.value == Value::Zero) {
            out << "0";
        } else {
            out << "null";
        }
        out << ", \"conflict\": " << (e.conflict ? "true" : "false") << "}";
    }
    out << "],\n \"tree_truncated\": " << (v.tree_truncated ? "true" : "false") << "\n}\n";
    return out.str();
}

std::string emit_propagation_json(const Diagram& d, const PropagationResult& r) {
    std::ostringstream out;
    out << "{\n \"conflict\": " << (r.conflict ? "true" : "false");
    out << ",\n \"closure\": " << witness_json(d, r.closure);
    out << ",\n \"steps\": [";
    for (size_t i = 0; i < r.steps.size(); ++i) {
        out << (i ? ", " : "") << step_json(d, r.steps[i]);
    }
    out << "]";
    out << ",\n \"failed\": " << (r.failed ? step_json(d, *r.failed) : "null") << "\n}\n";
    return out.str();
}

std::string describe_step(const Diagram& d, const Step& s) {
    std::ostringstream out;
    const std::string id = d.observables()[s.observable].id;
    const auto val = [](Value v) {
        return v == Value::One ? "1" : (v == Value::Zero ? "0" : "undefined");
    };
    if (s.rule == Step::Rule::Premise) {
        out << "premise: " << id << " := " << val(s.value);
        return out.str();
    }
    const auto ids = d.context_ids(s.context);
    out << "context {" << ids[0] << ", " << ids[1] << ", " << ids[2] << "}: ";
    if (s.rule == Step::Rule::OneForcesZero) {
        out << d.observables()[s.forced_by[0]].id << "=1 forces " << id << "=0";
    } else {
        out << d.observables()[s.forced_by[0]].id << "=0 and "
            << d.observables()[s.forced_by[1]].id << "=0 force " << id << "=1";
    }
    return out.str();
}

std::string describe_steps(const Diagram& d, const std::vector<Step>& steps) {
    std::ostringstream out;
    for (const auto& s : steps) {
        out << describe_step(d, s) << "\n";
    }
    return out.str();
}

} // namespace ks
