#include <cmath>

#include "doctest.h"
#include "ks/diagram.hpp"

using namespace ks;

namespace {

Diagram two_context_demo() {
    const double p = 0.37, q = std::sqrt(1 - p * p);
    return from_rays({{"a", Ray::from({1, 0, 0})},
                      {"b", Ray::from({p, q, 0})},
                      {"c", Ray::from({q, -p, 0})},
                      {"alpha", Ray::from({0, 1, 0})},
                      {"beta", Ray::from({0, 0, 1})}});
}

} // namespace

TEST_CASE("make canonicalizes and validates structure") {
    const Diagram d = Diagram::make({{"z", {}}, {"a", {}}, {"m", {}}},
                                    {{"z", "m", "a"}, {"a", "z", "m"}});
    // observables sorted by id, duplicate context collapsed
    CHECK(d.observables()[0].id == "a");
    CHECK(d.observables()[1].id == "m");
    CHECK(d.observables()[2].id == "z");
    CHECK(d.contexts().size() == 1);
    const auto ids = d.context_ids(0);
    CHECK(ids[0] == "a");
    CHECK(ids[1] == "m");
    CHECK(ids[2] == "z");

    CHECK(d.has("m"));
    CHECK_FALSE(d.has("q"));
    CHECK_THROWS_AS(d.index_of("q"), UnknownIdError);

    CHECK_THROWS_AS(Diagram::make({{"a", {}}, {"a", {}}}, {}), DuplicateIdError);
    CHECK_THROWS_AS(Diagram::make({{"a", {}}, {"b", {}}}, {{"a", "b", "nope"}}),
                    UnknownIdError);
    CHECK_THROWS_AS(Diagram::make({{"a", {}}, {"b", {}}}, {{"a", "b", "b"}}),
                    DuplicateIdError);
}

TEST_CASE("from_rays finds exactly the orthogonal triples") {
    const Diagram d = two_context_demo();
    CHECK(d.observables().size() == 5);
    REQUIRE(d.contexts().size() == 2);
    // {a, alpha, beta} and {b, c, beta}
    const auto c0 = d.context_ids(0);
    const auto c1 = d.context_ids(1);
    CHECK(c0[0] == "a");
    CHECK(c0[1] == "alpha");
    CHECK(c0[2] == "beta");
    CHECK(c1[0] == "b");
    CHECK(c1[1] == "beta");
    CHECK(c1[2] == "c");

    // permuting the input changes nothing
    const double p = 0.37, q = std::sqrt(1 - p * p);
    const Diagram d2 = from_rays({{"beta", Ray::from({0, 0, 1})},
                                  {"c", Ray::from({q, -p, 0})},
                                  {"a", Ray::from({1, 0, 0})},
                                  {"alpha", Ray::from({0, 1, 0})},
                                  {"b", Ray::from({p, q, 0})}});
    CHECK(emit_diagram_json(d2) == emit_diagram_json(d));

    // non-orthogonal rays produce no contexts
    const Diagram none = from_rays({{"a", Ray::from({1, 0, 0})}, {"b", Ray::from({0.6, 0.8, 0})}});
    CHECK(none.contexts().empty());

    CHECK_THROWS_AS(from_rays({{"a", Ray::from({1, 0, 0})}, {"a", Ray::from({0, 1, 0})}}),
                    DuplicateIdError);
}

TEST_CASE("validate reports geometry faithfully") {
    const Diagram good = two_context_demo();
    const ValidationReport rep = validate(good);
    CHECK(rep.pass);
    CHECK(rep.all_realized);
    CHECK(rep.any_realized);
    CHECK(rep.max_context_deviation <= 1e-12);
    CHECK(rep.max_unit_deviation <= 1e-12);
    CHECK(rep.contexts.size() == good.contexts().size());
    CHECK(rep.observables.size() == good.observables().size());

    // a context with two equal rays fails loudly
    const Diagram bad = Diagram::make({{"x", Ray::from({1, 0, 0})},
                                       {"y", Ray::from({1, 0, 0})},
                                       {"z", Ray::from({0, 0, 1})}},
                                      {{"x", "y", "z"}});
    const ValidationReport brep = validate(bad);
    CHECK_FALSE(brep.pass);
    CHECK(brep.max_context_deviation == doctest::Approx(1.0));

    // abstract diagrams pass vacuously
    const Diagram abs = Diagram::make({{"x", {}}, {"y", {}}, {"z", {}}}, {{"x", "y", "z"}});
    const ValidationReport arep = validate(abs);
    CHECK(arep.pass);
    CHECK_FALSE(arep.any_realized);
    CHECK_FALSE(arep.all_realized);
}

TEST_CASE("dot export") {
    const Diagram d = two_context_demo();
    const std::string dot = export_dot(d);
    CHECK(dot.find("graph") != std::string::npos);
    CHECK(dot.find("\"alpha\"") != std::string::npos);
    CHECK(dot.find("--") != std::string::npos);

    // value overlay: 1 square, 0 circle, -1 dashed
    const std::string vdot = export_dot(d, std::vector<int>{1, 0, -1, 0, 0});
    CHECK(vdot.find("square") != std::string::npos);
    CHECK(vdot.find("dashed") != std::string::npos);
    CHECK_THROWS_AS(export_dot(d, std::vector<int>{1, 0}), PreconditionError);

    const Diagram empty = Diagram::make({}, {});
    CHECK(export_dot(empty).find("graph") != std::string::npos);
}

TEST_CASE("diagram JSON round-trip") {
    const Diagram d = two_context_demo();
    const std::string text = emit_diagram_json(d);
    const Diagram back = parse_diagram_json(text);
    CHECK(emit_diagram_json(back) == text);
    REQUIRE(back.observables().size() == 5);
    CHECK(back.observable("a").realization.has_value());
    CHECK(same_ray(*back.observable("a").realization, Ray::from({1, 0, 0})));

    // abstract nodes serialize as null vectors and survive the trip
    const Diagram abs = Diagram::make({{"x", {}}, {"y", Ray::from({0, 1, 0})}, {"z", {}}},
                                      {{"x", "y", "z"}});
    const Diagram abs2 = parse_diagram_json(emit_diagram_json(abs));
    CHECK_FALSE(abs2.observable("x").realization.has_value());
    CHECK(abs2.observable("y").realization.has_value());

    // unknown keys are ignored; malformed documents are rejected
    CHECK_NOTHROW(parse_diagram_json(
        R"({"observables":[{"id":"a","vector":null}],"contexts":[],"notes":"extra"})"));
    CHECK_THROWS_AS(parse_diagram_json("not json"), ParseError);
    CHECK_THROWS_AS(parse_diagram_json(R"({"observables":[{"id":"a","vector":[1,0]}]})"),
                    ParseError);
    CHECK_THROWS_AS(load_diagram("/nonexistent/path.json"), IoError);
}
