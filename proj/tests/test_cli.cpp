#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "ks/cli.hpp"

namespace {

std::string data_dir() {
    const char* e = std::getenv("KS_FORGE_DATA");
    return e ? e : "data";
}

std::string step_path() { return data_dir() + "/step_gadget.json"; }

struct CliResult {
    int rc;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int rc = ks::run(args, out, err);
    return {rc, out.str(), err.str()};
}

} // namespace

TEST_CASE("cli requires a subcommand and offers help") {
    CHECK(run_cli({}).rc == 2);
    CHECK(run_cli({"frobnicate"}).rc == 2);
    const CliResult help = run_cli({"--help"});
    CHECK(help.rc == 0);
    CHECK(help.out.find("validate") != std::string::npos);
}

TEST_CASE("cli validate") {
    const CliResult r = run_cli({"validate", "--diagram", step_path()});
    CHECK(r.rc == 0); // abstract file: vacuous pass
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("pass").get<bool>());

    CHECK(run_cli({"validate", "--diagram", "/nonexistent.json"}).rc == 2);
}

TEST_CASE("cli solve and explain") {
    const CliResult sat = run_cli(
        {"solve", "--diagram", step_path(), "--premise", "a=1", "--premise", "b=1"});
    CHECK(sat.rc == 0);
    CHECK(nlohmann::json::parse(sat.out).at("outcome") == "satisfiable");

    const CliResult unsat = run_cli({"solve", "--diagram", step_path(), "--premise", "a=1",
                                     "--premise", "b=1", "--premise", "c=0"});
    CHECK(unsat.rc == 1);
    CHECK(nlohmann::json::parse(unsat.out).at("outcome") == "unsatisfiable");

    const CliResult expl = run_cli({"solve", "--diagram", step_path(), "--premise", "a=1",
                                    "--premise", "b=1", "--explain"});
    CHECK(expl.rc == 0);
    CHECK_FALSE(expl.err.empty()); // propagation narration goes to stderr

    CHECK(run_cli({"solve", "--diagram", step_path(), "--boolean"}).rc == 0);
    CHECK(run_cli({"solve", "--diagram", step_path(), "--premise", "a=maybe"}).rc == 2);
}

TEST_CASE("cli on the realized chain instance") {
    const std::string path = data_dir() + "/chain_anchor.json";
    CHECK(run_cli({"validate", "--diagram", path}).rc == 0);
    // the realized chain forces c = 1 from a = b = 1
    CHECK(run_cli({"solve", "--diagram", path, "--premise", "a=1", "--premise", "b=1",
                   "--premise", "c=0"})
              .rc == 1);
    CHECK(run_cli({"solve", "--diagram", path, "--premise", "a=1", "--premise", "b=1"})
              .rc == 0);
}

TEST_CASE("cli indefinite") {
    // the bare step block leaves b free both ways, so no indefiniteness verdict
    const CliResult r = run_cli({"indefinite", "--diagram", step_path()});
    CHECK(r.rc == 1);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK_FALSE(j.at("indefinite").get<bool>());
    CHECK(j.at("b_one_satisfiable").get<bool>());
    CHECK(j.at("b_zero_satisfiable").get<bool>());
}

TEST_CASE("cli reduce emits the target ray and its gadget") {
    const CliResult r = run_cli({"reduce", "--a", "1,0,0", "--b",
                                 "0.5,0.8660254037844386,0", "--x", "0.9"});
    CHECK(r.rc == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    REQUIRE(j.at("c").is_array());
    CHECK(j.at("c").size() == 3);
    CHECK(j.at("c")[0].get<double>() == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(j.at("gadget").at("observables").size() == 7);

    CHECK(run_cli({"reduce", "--a", "1,0,0", "--b", "0.5,0.8660254037844386,0",
                   "--x", "0.2"})
              .rc == 2); // x below the pair overlap
}

TEST_CASE("cli iterate and witness") {
    const CliResult it = run_cli({"iterate", "--overlap", "0.9"});
    CHECK(it.rc == 0);
    const nlohmann::json chain = nlohmann::json::parse(it.out);
    REQUIRE(chain.is_array());
    CHECK(chain.size() == 3);

    const CliResult w = run_cli({"witness", "--overlap", "0.9"});
    CHECK(w.rc == 0);
    CHECK(w.out.find("modulo-strong-set") != std::string::npos);
    CHECK_FALSE(w.err.empty()); // certification caveat is narrated on stderr
    const nlohmann::json wj = nlohmann::json::parse(w.out);
    CHECK(wj.at("diagram").at("observables").size() == 50);
}

TEST_CASE("cli sweep and taylor") {
    const CliResult s = run_cli({"sweep", "--lo", "0.81", "--hi", "0.9", "--n", "10"});
    CHECK(s.rc == 0);
    CHECK(s.out.rfind("p1,f,df,gap\n", 0) == 0);

    const CliResult t = run_cli({"taylor"});
    CHECK(t.rc == 0);
    const nlohmann::json j = nlohmann::json::parse(t.out);
    CHECK(j.at("m").get<double>() == doctest::Approx(1.2658).epsilon(1e-3));
    CHECK(j.at("closed_form").get<double>() == doctest::Approx(1.2658).epsilon(1e-3));
}

TEST_CASE("cli classify") {
    const CliResult r =
        run_cli({"classify", "--a", "1,0,0", "--b", "1,0,0", "--eps", "0.01"});
    CHECK(r.rc == 0);
    CHECK(nlohmann::json::parse(r.out).at("kind") == "parallel-definite");

    const CliResult mid =
        run_cli({"classify", "--a", "1,0,0", "--b", "0.5,0.8660254037844386,0", "--eps",
                 "0.01"});
    CHECK(nlohmann::json::parse(mid.out).at("kind") == "indefinite");
}

TEST_CASE("cli sample") {
    const CliResult r =
        run_cli({"sample", "--n", "1000", "--eps", "0.01", "--seed", "7"});
    CHECK(r.rc == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("samples").get<long long>() == 1000);
    CHECK(j.at("fraction").get<double>() >= 0.0);

    CHECK(run_cli({"sample", "--n", "1000", "--eps", "0.01"}).rc == 2); // seed required
}

TEST_CASE("cli vector parsing") {
    // deviation beyond the hard cap is an error
    CHECK(run_cli({"classify", "--a", "2,0,0", "--b", "1,0,0", "--eps", "0.01"}).rc == 2);
    // small deviation is normalized with a note
    const CliResult ok =
        run_cli({"classify", "--a", "1.000005,0,0", "--b", "1,0,0", "--eps", "0.01"});
    CHECK(ok.rc == 0);
    CHECK_FALSE(ok.err.empty());
    // malformed component list
    CHECK(run_cli({"classify", "--a", "1,0", "--b", "1,0,0", "--eps", "0.01"}).rc == 2);
    CHECK(run_cli({"classify", "--a", "1,0,zebra", "--b", "1,0,0", "--eps", "0.01"}).rc == 2);
}

TEST_CASE("cli export") {
    const CliResult r = run_cli({"export", "--diagram", step_path()});
    CHECK(r.rc == 0);
    CHECK(r.out.find("graph") != std::string::npos);
    CHECK(r.out.find("--") != std::string::npos);

    const CliResult overlay = run_cli(
        {"export", "--diagram", step_path(), "--premise", "a=1", "--premise", "b=1"});
    CHECK(overlay.rc == 0);
    CHECK(overlay.out.find("square") != std::string::npos);
}

TEST_CASE("cli --out writes the report to a file") {
    const std::string path = "/tmp/ks_forge_cli_test_taylor.json";
    std::remove(path.c_str());
    const CliResult r = run_cli({"taylor", "--out", path});
    CHECK(r.rc == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    CHECK(j.contains("m"));
    std::remove(path.c_str());
}
