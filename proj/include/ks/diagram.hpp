#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ks/vec3.hpp"

namespace ks {

struct Observable {
    std::string id;
    std::optional<Ray> realization; // absent for abstract topology nodes
};

// A Greechie orthogonality diagram: observables plus contexts, each context a
// set of exactly three distinct observables (a maximal orthogonal triple once
// realized). Construction canonicalizes the representation: observables are
// sorted by id, each context triple is sorted, the context list is sorted and
// deduplicated. Structural problems (duplicate ids, unknown ids, repeated
// members inside a context) throw; geometric problems are reported by
// validate() instead so that broken realizations can be examined.
class Diagram {
  public:
    static Diagram make(std::vector<Observable> observables,
                        const std::vector<std::array<std::string, 3>>& contexts);

    const std::vector<Observable>& observables() const { return obs_; }
    const std::vector<std::array<int, 3>>& contexts() const { return ctx_; }

    bool has(const std::string& id) const { return index_.count(id) != 0; }
    int index_of(const std::string& id) const;
    const Observable& observable(const std::string& id) const { return obs_[index_of(id)]; }

    std::array<std::string, 3> context_ids(int c) const;

  private:
    std::vector<Observable> obs_;
    std::vector<std::array<int, 3>> ctx_;
    std::unordered_map<std::string, int> index_;
};

// All maximal mutually-orthogonal triples of the given rays become contexts.
Diagram from_rays(const std::vector<std::pair<std::string, Ray>>& rays,
                  double tol_orth = Tolerances{}.orth);

struct ContextCheck {
    int context = 0;
    bool realized = false;     // all three members carry rays
    double max_abs_inner = 0;  // worst pairwise overlap among realized members
};

struct ObservableCheck {
    int observable = 0;
    bool realized = false;
    double unit_deviation = 0; // | ||v|| - 1 |
};

struct ValidationReport {
    bool pass = false;
    bool all_realized = false;
    bool any_realized = false;
    double max_context_deviation = 0;
    double max_unit_deviation = 0;
    std::vector<ContextCheck> contexts;
    std::vector<ObservableCheck> observables;
};

// A fully abstract diagram passes vacuously (pass=true, any_realized=false).
// Contexts with unrealized members are checked only on their realized pairs.
ValidationReport validate(const Diagram& d, double tol_orth = Tolerances{}.orth,
                          double tol_unit = Tolerances{}.unit);

// Undirected DOT graph: one node per observable, one colored edge chain per
// context. The values overload draws value 1 as a square, value 0 as a solid
// circle and -1 (undefined) as a dashed circle; see also the Assignment
// overload in assignments.hpp.
std::string export_dot(const Diagram& d);
std::string export_dot(const Diagram& d, const std::vector<int>& values);

Diagram parse_diagram_json(const std::string& text);
Diagram load_diagram(const std::string& path);
std::string emit_diagram_json(const Diagram& d);

} // namespace ks
