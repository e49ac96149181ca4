#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ks/diagram.hpp"

namespace ks {

enum class Value : unsigned char { Undefined = 0, Zero = 1, One = 2 };

// One value slot per observable, indexed like Diagram::observables(). A slot
// holding Undefined means the observable carries no value; there is no way to
// express context-dependent values, so non-contextuality holds by
// construction.
struct Assignment {
    std::vector<Value> values;
};

enum class Requirement : unsigned char { One, Zero, Definite };

struct Premise {
    std::string id;
    Requirement req = Requirement::One;
};

// Admissibility of a partial assignment:
//  (i)  a context containing a 1 has value 0 on both other members, and
//  (ii) a context containing two 0s has value 1 on the third member.
bool check_admissible(const Diagram& d, const Assignment& a);

struct Step {
    enum class Rule : unsigned char { Premise, OneForcesZero, ZerosForceOne } rule;
    int context = -1;    // -1 for premise steps
    int observable = -1; // the observable receiving `value`
    Value value = Value::Undefined;
    int forced_by[2] = {-1, -1}; // context members whose values triggered the rule
};

struct PropagationResult {
    bool conflict = false;
    Assignment closure;            // least fixed point (premise values included)
    std::vector<Step> steps;       // applied facts, in application order
    std::optional<Step> failed;    // the forcing that clashed, when conflict
};

// Least fixed point of rules (i) and (ii) from the value premises. Definite
// premises assert no value and contribute nothing here; they are handled by
// the branching driver in exists_admissible. Every derived fact holds in
// every admissible assignment extending the premises, so a conflict proves
// unsatisfiability outright.
PropagationResult propagate(const Diagram& d, const std::vector<Premise>& premises);

struct SolveOptions {
    std::uint64_t node_budget = 100000000ull; // decisions before SearchBudgetExceededError
    int tree_record_limit = 512;              // branch events kept for reporting
};

struct BranchEvent {
    int depth = 0;
    int observable = -1;
    Value value = Value::Undefined;
    bool conflict = false; // propagation refuted this branch immediately
};

struct Verdict {
    bool satisfiable = false;
    Assignment witness; // admissible and premise-satisfying, when satisfiable
    std::uint64_t nodes = 0;
    std::vector<Step> premise_steps;    // propagation prefix shared by all branches
    std::optional<Step> premise_conflict;
    std::vector<BranchEvent> tree;      // pre-order decision log (bounded)
    bool tree_truncated = false;
};

// Complete three-valued backtracking search: value premises are fixed up
// front, definite premises branch over {1,0}, every other observable branches
// over {1,0,undefined}, with propagation pruning each decision. Branch order
// is premise observables first, then descending context degree; ties fall
// back to id order.
Verdict exists_admissible(const Diagram& d, const std::vector<Premise>& premises,
                          const SolveOptions& opts = {});

// True when {a=1, b=1} and {a=1, b=0} are both unsatisfiable, i.e. assuming
// v(a)=1 no admissible assignment gives b any value.
bool check_value_indefinite(const Diagram& d, const std::string& a_id, const std::string& b_id,
                            const SolveOptions& opts = {});

// Existence of a total {0,1} assignment with exactly one 1 per context. Same
// engine with the undefined branch disabled.
Verdict boolean_frame_function_exists(const Diagram& d, const std::vector<Premise>& premises,
                                      const SolveOptions& opts = {});

std::string export_dot(const Diagram& d, const Assignment& a);

std::vector<Premise> parse_premises_json(const std::string& text);
std::string emit_premises_json(const std::vector<Premise>& premises);
std::string emit_verdict_json(const Diagram& d, const Verdict& v);
std::string emit_propagation_json(const Diagram& d, const PropagationResult& r);

// Human-readable forcing chain, one line per step.
std::string describe_steps(const Diagram& d, const std::vector<Step>& steps);
std::string describe_step(const Diagram& d, const Step& s);

} // namespace ks
