#include <doctest.h>

#include "eds/matest.hpp"
#include "support.hpp"

using namespace eds;
using namespace eds::testing;

namespace {

FrameLayout layout(int n) {
    FrameLayout L;
    L.n = n;
    return L;
}

Form volume(const FrameLayout& L) {
    std::vector<Form> om;
    for (int a = 0; a <= L.n; ++a) om.push_back(Form::basis(L.omega(a)));
    return wedge_all(om);
}

bool same(const Form& a, const Form& b) { return (a - b).empty(); }

PdeProblem minors(int n) {
    std::string F = "p0";
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            F += " - (" + p_name(i, i) + "*" + p_name(j, j) + " - " + p_name(i, j) + "^2)";
    PdeProblem p = make_problem(n, F, {}, std::string("p0"));
    std::map<std::string, Rational> bp;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) bp[p_name(i, j)] = i == j ? -1 : 0;
    p.domain.base_point = bp;
    return p;
}

}  // namespace

TEST_CASE("omitted forms complete the volume form") {
    for (int n = 2; n <= 4; ++n) {
        FrameLayout L = layout(n);
        const Form vol = volume(L);
        for (int size = 0; size <= n + 1; ++size)
            for (const auto& J : subsets(n + 1, size)) {
                std::vector<Form> om;
                for (int a : J) om.push_back(Form::basis(L.omega(a)));
                Form wJ = om.empty() ? Form::scalar(Expr(1)) : wedge_all(om);
                CHECK(same(wedge(wJ, omitted_form(L, J)), vol));
            }
    }
}

TEST_CASE("omitted form of omega^1 for n = 2 carries a minus sign") {
    FrameLayout L = layout(2);
    Form expected = -wedge(Form::basis(L.omega(0)), Form::basis(L.omega(2)));
    CHECK(same(omitted_form(L, {1}), expected));
}

TEST_CASE("upsilon1 is primitive") {
    for (int n = 2; n <= 4; ++n) {
        FrameLayout L = layout(n);
        Form u = upsilon1(L);
        CHECK(wedge(u, contact_omega(L)).empty());
        CHECK(wedge(u, Form::basis(L.omega(0))).empty());
    }
}

TEST_CASE("linear type agrees with the invariants") {
    for (const char* file : {"heat_n3.toml", "minors_n3.toml"}) {
        Prepared p = prepare_pde(load_pde(file));
        InvariantSet inv = compute_invariants(*p.cof, *p.zt);
        Classification c = classify(inv, Verdict::Yes);
        LinearTypeReport r = check_linear_type(*p.cof, inv, *p.zt);
        CHECK(r.primitive);
        CHECK(r.linear_type == c.linear_type);
    }
    for (const std::string kind : {"flat", "tertiary", "xi12_pi12"}) {
        Prepared p = prepare_workspace(make_fixture(kind, 3));
        InvariantSet inv = compute_invariants(*p.cof, *p.zt);
        Classification c = classify(inv, Verdict::Yes);
        LinearTypeReport r = check_linear_type(*p.cof, inv, *p.zt);
        CHECK(r.linear_type == c.linear_type);
    }
}

TEST_CASE("heat equation is linear type") {
    Prepared p = prepare_pde(load_pde("heat_n3.toml"));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    LinearTypeReport r = check_linear_type(*p.cof, inv, *p.zt);
    CHECK(r.membership.verdict.status == ZeroStatus::Zero);
    CHECK(r.linear_type == Verdict::Yes);
}

TEST_CASE("upsilon2 for the minors equation, n = 4") {
    Prepared p = prepare_pde(minors(4));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    CHECK(is_nonzero(inv.secondary));
    CHECK(is_zero(inv.secondary_residual));
    Upsilon2Report u = upsilon2(*p.cof, inv, *p.zt);
    CHECK(u.applicable);
    REQUIRE(u.constructible);
    // f_2(A) reproduces 2 V_sec
    Tensor back = apply_f2(u.A);
    for (std::size_t k = 0; k < back.data.size(); ++k)
        CHECK(p.zt->test(back.data[k] - Expr(2) * inv.v_sec.data[k]).status == ZeroStatus::Zero);
    CHECK(u.closure.verdict.status == ZeroStatus::Zero);
    CHECK(u.closure.conditions > 0);
}

TEST_CASE("upsilon2 is not constructible off b2'") {
    Prepared p = prepare_workspace(make_fixture("sym4", 3));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    Upsilon2Report u = upsilon2(*p.cof, inv, *p.zt);
    CHECK(u.applicable);
    CHECK_FALSE(u.constructible);
    CHECK_FALSE(u.reason.empty());

    Prepared q = prepare_workspace(make_fixture("xi10_pi11", 3));
    InvariantSet inv2 = compute_invariants(*q.cof, *q.zt);
    CHECK_FALSE(upsilon2(*q.cof, inv2, *q.zt).applicable);
}
