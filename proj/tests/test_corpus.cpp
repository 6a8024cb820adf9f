#include <doctest.h>

#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace eds;
using namespace eds::testing;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// drops comment lines and description keys added by hand
std::string body(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0 || line.rfind("description", 0) == 0) continue;
        out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("flow workspace satisfies d^2 = 0 and the structure equations") {
    for (int n = 2; n <= 3; ++n) {
        Workspace ws = mcf_workspace(n);
        ZeroTester zt(ws.domain, TestParams{});
        ValidationReport vr = validate_workspace(ws, zt);
        CHECK(vr.pass);
        CHECK(vr.checked > 0);
        ParabolicCoframing cof = coframing_from_workspace(ws, zt);
        CHECK(check_coframing(cof, zt).pass);
    }
}

TEST_CASE("flow invariants vanish for n = 3") {
    Prepared p = prepare_workspace(mcf_workspace(3));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_zero(inv.secondary));
    CHECK(is_zero(inv.secondary_residual));
    CHECK(is_zero(inv.tertiary));
    CHECK(is_zero(inv.tertiary_defect));
    CHECK(is_zero(inv.a_hat));
}

TEST_CASE("shipped workspace files match the generators") {
    CHECK(body(slurp(example_path("mcf_n3.toml"))) == body(workspace_to_toml(mcf_workspace(3))));
    for (const auto& kind : fixture_kinds()) {
        CAPTURE(kind);
        Workspace shipped = load_workspace_file(example_path("fixtures/" + kind + "_n3.toml"));
        Workspace built = make_fixture(kind, 3);
        CHECK(workspace_to_toml(shipped) == workspace_to_toml(built));
    }
}

TEST_CASE("fixture argument checks") {
    CHECK_THROWS_AS(make_fixture("nope", 3), CorpusError);
    CHECK_THROWS_AS(make_fixture("flat", 1), CorpusError);
    CHECK_THROWS_AS(make_fixture("xi10_pi23", 2), CorpusError);
    CHECK_THROWS_AS(mcf_workspace(7), CorpusError);
}

TEST_CASE("random evolutionary equations are reproducible") {
    std::mt19937_64 a(11), b(11);
    PdeProblem p = random_evolutionary(3, a);
    PdeProblem q = random_evolutionary(3, b);
    CHECK(p.F_text == q.F_text);
    CHECK(p.solved_coordinate == std::optional<std::string>("p0"));
}
