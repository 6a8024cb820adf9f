#include <doctest.h>

#include "eds/jetpar.hpp"

using namespace eds;

namespace {

PdeProblem minors3() {
    PdeProblem p = make_problem(3, "p0 - (p11*p22 - p12^2) - (p11*p33 - p13^2) - (p22*p33 - p23^2)");
    p.domain.base_point = std::map<std::string, Rational>{{"p11", -1}, {"p22", -1}, {"p33", -1},
                                                          {"p12", 0},  {"p13", 0},  {"p23", 0}};
    return p;
}

bool all_zero(const Form& f, ZeroTester& zt) {
    for (const auto& [m, c] : f.terms)
        if (zt.test(c).status != ZeroStatus::Zero) return false;
    return true;
}

}  // namespace

TEST_CASE("jet coordinate count") {
    CHECK(jet_coordinates(1).size() == 8);
    auto c3 = jet_coordinates(3);
    CHECK(c3.size() == 4 + 1 + 4 + 10);
    CHECK(c3.front() == "x0");
    CHECK(c3.back() == "p33");
    CHECK(p_name(2, 1) == "p12");
}

TEST_CASE("contact identities on J2") {
    for (int n : {1, 2, 3}) {
        Workspace ws = build_contact_system(n);
        ContactForms cf = contact_forms(ws, n);
        Domain dom;
        dom.variables = workspace_variables(ws);
        ZeroTester zt(dom, TestParams{});
        Form t0(2);
        for (int a = 0; a <= n; ++a) t0 = t0 - wedge(cf.theta[a], cf.omega[a]);
        CHECK(all_zero(exterior_derivative(ws, cf.theta_null) - t0, zt));
        for (int a = 0; a <= n; ++a) {
            Form ta(2);
            for (int b = 0; b <= n; ++b) ta = ta - wedge(cf.pi[a][b], cf.omega[b]);
            CHECK(all_zero(exterior_derivative(ws, cf.theta[a]) - ta, zt));
        }
        CHECK(validate_workspace(ws, zt).pass);
    }
}

TEST_CASE("symbol of the heat equation") {
    PdeProblem p = make_problem(3, "p11 + p22 + p33 - p0");
    prepare_problem(p);
    CHECK(*p.solved_coordinate == "p0");
    ZeroTester zt(p.domain, p.params);
    Matrix S = symbol_matrix(p, zt);
    // orientation flips F so the spatial trace is positive
    CHECK(S[1][1] == Expr(1));
    CHECK(S[0][0].is_zero());
    CHECK(S[1][2].is_zero());
    auto pc = check_parabolic(p, zt);
    CHECK(pc.parabolic);
    REQUIRE(pc.kernel.size() == 4);
    CHECK(zt.test(pc.kernel[0]).status == ZeroStatus::NonZero);
    for (int i = 1; i <= 3; ++i) CHECK(zt.test(pc.kernel[i]).status == ZeroStatus::Zero);
}

TEST_CASE("indefinite symbol is rejected") {
    PdeProblem p = make_problem(2, "p00 - p11 - p22");
    prepare_problem(p);
    ZeroTester zt(p.domain, p.params);
    auto pc = check_parabolic(p, zt);
    CHECK_FALSE(pc.parabolic);
    CHECK(pc.reason.find("indefinite") != std::string::npos);
}

TEST_CASE("elliptic symbol is rejected by rank") {
    PdeProblem p = make_problem(2, "p00 + p11 + p22");
    prepare_problem(p);
    ZeroTester zt(p.domain, p.params);
    auto pc = check_parabolic(p, zt);
    CHECK_FALSE(pc.parabolic);
}

TEST_CASE("symbol agrees with central differences") {
    PdeProblem p = minors3();
    prepare_problem(p);
    ZeroTester zt(p.domain, p.params);
    Matrix S = symbol_matrix(p, zt);
    Assignment pt;
    for (const auto& v : jet_coordinates(3)) pt[v] = Value(Rational(0));
    pt["p11"] = Value(Rational(-3, 2));
    pt["p22"] = Value(Rational(-1));
    pt["p33"] = Value(Rational(-7, 5));
    pt["p12"] = Value(Rational(1, 4));
    pt["p13"] = Value(Rational(-1, 3));
    pt["p23"] = Value(Rational(1, 7));
    Rational h(1, 1000);
    for (int a = 0; a <= 3; ++a)
        for (int b = a; b <= 3; ++b) {
            std::string v = p_name(a, b);
            Assignment up = pt, dn = pt;
            up[v] = Value(std::get<Rational>(pt[v]) + h);
            dn[v] = Value(std::get<Rational>(pt[v]) - h);
            Rational fd = (std::get<Rational>(evaluate(p.F, up)) - std::get<Rational>(evaluate(p.F, dn))) / (2 * h);
            Rational s = std::get<Rational>(evaluate(S[a][b], pt));
            if (a != b) s *= 2;
            CHECK(s == fd);
        }
}

TEST_CASE("solved coordinate detection order") {
    PdeProblem a = make_problem(2, "p0 - p11 - p22");
    prepare_problem(a);
    CHECK(*a.solved_coordinate == "p0");
    PdeProblem b = make_problem(2, "p00 + p0 - p11");
    prepare_problem(b);
    CHECK(*b.solved_coordinate == "p00");
    PdeProblem c = make_problem(2, "p11 + p22");
    prepare_problem(c);
    CHECK(*c.solved_coordinate == "p11");
    PdeProblem d = make_problem(2, "p11 + p22", {}, std::string("p0"));
    CHECK_THROWS_AS(prepare_problem(d), JetError);
}

TEST_CASE("restricted manifold dimension") {
    for (int n : {2, 3}) {
        PdeProblem p = make_problem(n, n == 2 ? "p0 - p11 - p22" : "p0 - p11 - p22 - p33");
        prepare_problem(p);
        Workspace M = restrict_to_equation(p);
        CHECK(M.size() == static_cast<int>(jet_coordinates(n).size()) - 1);
        ZeroTester zt(p.domain, p.params);
        CHECK(validate_workspace(M, zt).pass);
    }
}

TEST_CASE("parabolic coframings satisfy the structure equations") {
    SUBCASE("heat n=2") {
        PdeProblem p = make_problem(2, "p0 - p11 - p22");
        prepare_problem(p);
        ZeroTester zt(p.domain, p.params);
        auto cof = adapt_coframe(p, zt);
        CHECK(cof.layout.size() == cof.ambient.size());
        CHECK(cof.layout.extra == 0);
        auto chk = check_coframing(cof, zt);
        CHECK(chk.pass);
        // d theta_1 carries -1/n theta_0 ^ omega^1
        const auto& L = cof.layout;
        Expr c = coeff2(*cof.frame.structure[L.theta(1)], L.theta(0), L.omega(1));
        CHECK(zt.test(c + Expr(Rational(1, 2))).status == ZeroStatus::Zero);
    }
    SUBCASE("degenerate heat n=3") {
        PdeProblem p = make_problem(3, "p11 + p22 + p33", {}, std::string("p11"));
        prepare_problem(p);
        ZeroTester zt(p.domain, p.params);
        auto cof = adapt_coframe(p, zt);
        CHECK(check_coframing(cof, zt).pass);
        const auto& L = cof.layout;
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j) {
                Expr c = coeff2(*cof.frame.structure[L.theta(i)], L.theta(0), L.omega(j));
                CHECK(zt.test(c).status == ZeroStatus::Zero);
            }
    }
    SUBCASE("principal minors n=3") {
        PdeProblem p = minors3();
        prepare_problem(p);
        ZeroTester zt(p.domain, p.params);
        auto cof = adapt_coframe(p, zt);
        CHECK(check_coframing(cof, zt).pass);
    }
    SUBCASE("rotated adaptation") {
        PdeProblem p = make_problem(2, "p0 - p11 - p22");
        prepare_problem(p);
        ZeroTester zt(p.domain, p.params);
        AdaptOptions opt;
        opt.rotation = std::vector<std::vector<Rational>>{{Rational(3, 5), Rational(-4, 5)},
                                                          {Rational(4, 5), Rational(3, 5)}};
        auto cof = adapt_coframe(p, zt, opt);
        CHECK(check_coframing(cof, zt).pass);
    }
}
