#include <doctest.h>

#include "eds/exterior.hpp"

#include <random>

using namespace eds;

namespace {

// coordinate workspace on R^3 with coordinates a, b, c
Workspace coords3() {
    Workspace ws;
    ws.name = "r3";
    ws.mode = Mode::Coordinate;
    ws.coframe = {"da", "db", "dc"};
    const char* names[] = {"a", "b", "c"};
    for (int k = 0; k < 3; ++k) ws.functions.emplace(names[k], Form::basis(k));
    ws.structure.assign(3, Form(2));
    ws.domain.variables = {"a", "b", "c"};
    return ws;
}

// Maurer-Cartan forms of so(3)-like structure: de1 = -e2^e3 etc. with a function f, df = f e1
Workspace mc3() {
    Workspace ws;
    ws.name = "mc";
    ws.coframe = {"e1", "e2", "e3"};
    ws.structure = {Form::monomial(mask_of({1, 2}), Expr(-1)), Form::monomial(mask_of({0, 2}), Expr(1)),
                    Form::monomial(mask_of({0, 1}), Expr(-1))};
    ws.domain.variables = {};
    return ws;
}

Expr V(const char* n) { return Expr::var(n); }

Form random_form(std::mt19937_64& rng, int deg, int m, const std::vector<std::string>& vars) {
    Form f(deg);
    for (int t = 0; t < 3; ++t) {
        std::vector<int> idx;
        while (static_cast<int>(idx.size()) < deg) {
            int k = static_cast<int>(rng() % static_cast<unsigned>(m));
            if (std::find(idx.begin(), idx.end(), k) == idx.end()) idx.push_back(k);
        }
        Expr c = Expr(static_cast<long>(rng() % 5) + 1);
        for (const auto& v : vars)
            if (rng() % 2) c = c * Expr::var(v);
        if (!vars.empty() && rng() % 2) c = c + make_pow(Expr::var(vars[rng() % vars.size()]), 2);
        std::sort(idx.begin(), idx.end());
        f.add_term(mask_of(idx), c);
    }
    return f;
}

}  // namespace

TEST_CASE("wedge basics") {
    Form e1 = Form::basis(0), e2 = Form::basis(1);
    Form w = wedge(e1, e2);
    CHECK(w.terms.size() == 1);
    CHECK(w.coeff(mask_of({0, 1})) == Expr(1));
    CHECK(wedge(e1, e1).empty());
    CHECK(wedge(e1 + e2, e2).coeff(mask_of({0, 1})) == Expr(1));
    CHECK(wedge(e2, e1).coeff(mask_of({0, 1})) == Expr(-1));
}

TEST_CASE("wedge is graded commutative and associative") {
    std::mt19937_64 rng(3);
    Workspace ws = coords3();
    ZeroTester zt(ws.domain, {});
    for (int t = 0; t < 20; ++t) {
        int da = static_cast<int>(rng() % 2) + 1, db = static_cast<int>(rng() % 2);
        Form a = random_form(rng, da, 6, {"a", "b"});
        Form b = random_form(rng, db, 6, {"c"});
        Form c = random_form(rng, 1, 6, {"a"});
        Form ab = wedge(a, b), ba = wedge(b, a);
        Form diff = ((da * db) % 2) ? ab + ba : ab - ba;
        for (const auto& [m, x] : diff.terms) CHECK(zt.test(x).status == ZeroStatus::Zero);
        Form as = wedge(wedge(a, b), c) - wedge(a, wedge(b, c));
        for (const auto& [m, x] : as.terms) CHECK(zt.test(x).status == ZeroStatus::Zero);
    }
}

TEST_CASE("d of constant forms and d squared") {
    Workspace ws = mc3();
    ZeroTester zt(ws.domain, {});
    CHECK(exterior_derivative(ws, Form::basis(0, Expr(5))).coeff(mask_of({1, 2})) == Expr(-5));
    CHECK(validate_workspace(ws, zt).pass);
    Workspace cs = coords3();
    ZeroTester zc(cs.domain, {});
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        Form a = random_form(rng, static_cast<int>(rng() % 2), 3, {"a", "b", "c"});
        Form dd = exterior_derivative(cs, exterior_derivative(cs, a));
        for (const auto& [m, x] : dd.terms) CHECK(zc.test(x).status == ZeroStatus::Zero);
    }
}

TEST_CASE("corrupted structure table fails validation") {
    Workspace ws;
    ws.coframe = {"e1", "e2", "e3"};
    ws.functions.emplace("f", Form::basis(0));
    // de1 = f e2^e3, de2 = de3 = 0: d(de1) = df^e2^e3 = e1^e2^e3 != 0
    ws.structure = {Form::monomial(mask_of({1, 2}), V("f")), Form(2), Form(2)};
    ws.domain.variables = {"f"};
    ZeroTester zt(ws.domain, {});
    auto rep = validate_workspace(ws, zt);
    CHECK_FALSE(rep.pass);
    // d(df) = d(e1) also fails; the structure failure comes first
    REQUIRE(rep.failures.size() == 2);
    CHECK(rep.failures[0].where == "d(de1)");
    CHECK(rep.failures[0].monomial == "e1^e2^e3");
    CHECK(rep.failures[1].where == "d(df)");
}

TEST_CASE("undeclared function is an error") {
    Workspace ws = mc3();
    CHECK_THROWS_AS(exterior_derivative(ws, Form::basis(0, V("zz"))), ExteriorError);
}

TEST_CASE("expand in basis of contact-like frame") {
    // coordinates x, p, q with dp expressed through theta = dp - q dx
    Workspace ws;
    ws.mode = Mode::Coordinate;
    ws.coframe = {"dx", "dp", "dq"};
    ws.functions = {{"x", Form::basis(0)}, {"p", Form::basis(1)}, {"q", Form::basis(2)}};
    ws.structure.assign(3, Form(2));
    ws.domain.variables = {"p", "q", "x"};
    ZeroTester zt(ws.domain, {});
    std::vector<Form> frame{Form::basis(1) - V("q") * Form::basis(0), Form::basis(0), Form::basis(2)};
    Form ex = expand_in_basis(ws, Form::basis(1), frame, zt);
    CHECK(zt.test(ex.coeff(bit(0)) - Expr(1)).status == ZeroStatus::Zero);
    CHECK(zt.test(ex.coeff(bit(1)) - V("q")).status == ZeroStatus::Zero);
    // d theta = -dq ^ dx = frame: -(f2 ^ f1) = f1 ^ f2
    Form dth = expand_in_basis(ws, exterior_derivative(ws, frame[0]), frame, zt);
    CHECK(zt.test(dth.coeff(mask_of({1, 2})) - Expr(1)).status == ZeroStatus::Zero);
}

TEST_CASE("expand round trip and reduce idempotence on random forms") {
    Workspace ws = coords3();
    ZeroTester zt(ws.domain, {});
    std::vector<Form> frame{Form::basis(0) + V("a") * Form::basis(1), Form::basis(1) - V("c") * Form::basis(2),
                            Form::basis(2) + Form::basis(0)};
    FrameBasis fb(frame, 3, zt);
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        Form a = random_form(rng, 2, 3, {"a", "b"});
        Form back = fb.reconstruct(fb.expand(a)) - a;
        for (const auto& [m, x] : back.terms) CHECK(zt.test(x).status == ZeroStatus::Zero);
        PfaffianIdeal I{{frame[0]}, "I"};
        Form r1 = reduce_mod(a, I, 3, zt);
        Form r2 = reduce_mod(r1, I, 3, zt);
        Form d = r1 - r2;
        for (const auto& [m, x] : d.terms) CHECK(zt.test(x).status == ZeroStatus::Zero);
    }
}

TEST_CASE("reduce_mod examples") {
    Workspace ws = coords3();
    ZeroTester zt(ws.domain, {});
    Form th = Form::basis(0), om = Form::basis(1), pi = Form::basis(2);
    CHECK(reduce_mod(wedge(th, om), {{th}, "theta"}, 3, zt).empty());
    Form r = reduce_mod(pi + V("a") * th, {{th}, "theta"}, 3, zt);
    CHECK(r.terms.size() == 1);
    CHECK(r.coeff(bit(2)) == Expr(1));
    CHECK_THROWS_AS(reduce_mod(pi, {{th, Expr(2) * th}, "dep"}, 3, zt), ExteriorError);
}

TEST_CASE("workspace files round trip bit exactly") {
    const char* text = R"(
kind = "workspace"
name = "demo"
mode = "abstract"
[coframe]
symbols = ["e1", "e2", "e3"]
[functions]
f = [["f", "e1"], ["-1/2", "e3"]]
[structure]
e1 = [["-1", "e2", "e3"]]
e2 = [["1", "e1", "e3"]]
e3 = [["-1", "e1", "e2"]]
[domain]
constraints = ["f"]
)";
    Workspace ws = load_workspace_toml(text);
    std::string t1 = workspace_to_toml(ws);
    Workspace ws2 = load_workspace_toml(t1);
    CHECK(workspace_to_toml(ws2) == t1);
    std::string j1 = workspace_to_json(ws);
    CHECK(workspace_to_json(load_workspace_json(j1)) == j1);
    CHECK_THROWS_AS(load_workspace_toml("kind = \"workspace\"\n[coframe]\nsymbols = [\"a\"]\n[structure]\nb = []\n"), ExteriorError);
}
