#include <doctest.h>

#include "support.hpp"

using namespace eds;
using namespace eds::testing;

namespace {

InvariantSet invariants_of(Prepared& p) { return compute_invariants(*p.cof, *p.zt); }

void check_heat(int n) {
    Prepared p = prepare_pde(load_pde("heat_n" + std::to_string(n) + ".toml"));
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_zero(inv.secondary));
    CHECK(is_zero(inv.secondary_residual));
    CHECK(is_zero(inv.tertiary));
    if (n >= 3)
        CHECK(is_zero(inv.tertiary_defect));
    else
        CHECK_FALSE(inv.tertiary_defect.computed);
    CHECK(is_zero(inv.a_hat));
    CHECK(inv.primary_j0.verdict.exact);
    CHECK(p.zt->test(inv.a).status == ZeroStatus::NonZero);
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.evolutionary == Verdict::Yes);
    CHECK(c.monge_ampere == Verdict::Yes);
    CHECK(c.linear_type == Verdict::Yes);
    CHECK(c.sub_elliptic == Verdict::No);
    CHECK(c.low_n_caveat == (n < 3));
    CHECK(c.definitive());
}

Prepared fixture(const std::string& kind, int n = 3) { return prepare_workspace(make_fixture(kind, n)); }

}  // namespace

TEST_CASE("heat equation n = 2") { check_heat(2); }
TEST_CASE("heat equation n = 3") { check_heat(3); }

TEST_CASE("degenerate heat is sub-elliptic") {
    Prepared p = prepare_pde(load_pde("degenerate_heat_n3.toml"));
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(inv.a_sign == Sign::Zero);
    CHECK(p.zt->test(inv.a).status == ZeroStatus::Zero);
    CHECK(is_zero(inv.a_hat));
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.sub_elliptic == Verdict::Yes);
    CHECK(c.evolutionary == Verdict::No);
    CHECK(c.goursat == Verdict::Yes);
}

TEST_CASE("minors equation is Monge-Ampere but not linear") {
    Prepared p = prepare_pde(load_pde("minors_n3.toml"));
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_zero(inv.secondary));
    CHECK(is_zero(inv.secondary_residual));
    CHECK(is_nonzero(inv.tertiary));
    CHECK(is_zero(inv.tertiary_defect));
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.monge_ampere == Verdict::Yes);
    CHECK(c.linear_type == Verdict::No);
    CHECK(c.evolutionary == Verdict::Yes);
}

TEST_CASE("flat fixture has no torsion") {
    Prepared p = fixture("flat");
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_zero(inv.secondary));
    CHECK(is_zero(inv.secondary_residual));
    CHECK(is_zero(inv.tertiary));
    CHECK(is_zero(inv.a_hat));
    CHECK(inv.a_sign == Sign::Zero);
}

TEST_CASE("injected xi_1^0 lands in the primary slot") {
    // -pi_23 ^ theta_0 in d theta_1: V_1^{0jk} picks up the trace-free (2,3) pair
    Prepared p = fixture("xi10_pi23");
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    REQUIRE(is_nonzero(inv.primary_jk));
    CHECK(nonzero_labels(inv.primary_jk, *p.zt) == std::vector<std::string>{"V_1^023", "V_1^032"});
    CHECK_FALSE(inv.secondary.computed);
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.primary_vanish == Verdict::No);
    CHECK(c.monge_ampere == Verdict::No);

    Prepared q = fixture("xi10_pi11");
    InvariantSet inv2 = invariants_of(q);
    CHECK(is_nonzero(inv2.primary_jk));
}

TEST_CASE("injected xi_1^2 lands in the secondary slot") {
    Prepared p = fixture("xi12_pi12");
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_j0));
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_nonzero(inv.secondary));
    CHECK(is_nonzero(inv.secondary_residual));
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.monge_ampere == Verdict::No);
}

TEST_CASE("tertiary fixture has V = 1") {
    // d omega^i = -pi_ij ^ theta_j, so V is the unit coefficient by construction
    Prepared p = fixture("tertiary");
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.secondary));
    REQUIRE(inv.tertiary.entries.size() == 1);
    for (const Value& v : p.zt->values(inv.tertiary.entries[0])) CHECK(value_str(v) == "1");
    CHECK(is_zero(inv.tertiary_defect));
    Classification c = classify(inv, Verdict::Yes);
    CHECK(c.monge_ampere == Verdict::Yes);
    CHECK(c.linear_type == Verdict::No);
}

TEST_CASE("Sym^4_0 fixture leaves b2' residual") {
    Prepared p = fixture("sym4");
    InvariantSet inv = invariants_of(p);
    CHECK(is_zero(inv.primary_jk));
    CHECK(is_nonzero(inv.secondary_residual));
    CHECK(classify(inv, Verdict::Yes).monge_ampere == Verdict::No);
}

TEST_CASE("Goursat fixtures") {
    Prepared p = fixture("goursat_antisym");
    InvariantSet inv = invariants_of(p);
    CHECK(nonzero_labels(inv.a_hat, *p.zt) == std::vector<std::string>{"ahat_12"});
    CHECK(classify(inv, Verdict::Yes).evolutionary == Verdict::No);

    Prepared q = fixture("goursat_a");
    InvariantSet inv2 = invariants_of(q);
    CHECK(is_zero(inv2.a_hat));
    CHECK((inv2.a_sign == Sign::Positive || inv2.a_sign == Sign::Negative));
    CHECK(classify(inv2, Verdict::Yes).evolutionary == Verdict::Yes);
}

TEST_CASE("identity gauge changes nothing") {
    Prepared p = fixture("goursat_a");
    InvariantSet a = invariants_of(p);
    ParabolicCoframing g = apply_gauge(*p.cof, identity_gauge(3));
    InvariantSet b = compute_invariants(g, *p.zt);
    CHECK(goursat_factor(identity_gauge(3)) == 1);
    CHECK(p.zt->test(a.a - b.a).status == ZeroStatus::Zero);
}

TEST_CASE("a scales by B00 k_null / b^2 under random gauges") {
    Prepared p = prepare_pde(load_pde("heat_n3.toml"));
    InvariantSet base = invariants_of(p);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 3; ++t) {
        GaugeElement g = random_gauge(3, rng);
        ParabolicCoframing moved = apply_gauge(*p.cof, g);
        InvariantSet inv = compute_invariants(moved, *p.zt);
        CHECK(is_zero(inv.primary_jk));
        CHECK(is_zero(inv.a_hat));
        Expr expected = Expr(goursat_factor(g)) * base.a;
        CHECK(p.zt->test(inv.a - expected).status == ZeroStatus::Zero);
    }
}

TEST_CASE("n = 2 verdicts survive gauges") {
    Prepared p = prepare_pde(load_pde("heat_n2.toml"));
    std::mt19937_64 rng(5);
    for (int t = 0; t < 3; ++t) {
        InvariantSet inv = compute_invariants(apply_gauge(*p.cof, random_gauge(2, rng)), *p.zt);
        CHECK(is_zero(inv.tertiary));
        CHECK(classify(inv, Verdict::Yes).linear_type == Verdict::Yes);
    }
}

TEST_CASE("random rotations are orthogonal") {
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 4; ++n) {
        auto R = random_rotation(n, rng);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Rational s = 0;
                for (int k = 0; k < n; ++k) s += R[i][k] * R[j][k];
                CHECK(s == (i == j ? 1 : 0));
            }
    }
}

TEST_CASE("n = 1 is rejected") {
    auto run = [] {
        Prepared p = prepare_pde(make_problem(1, "p0 - p11"));
        compute_invariants(*p.cof, *p.zt);
    };
    CHECK_THROWS(run());
}

TEST_CASE("classification short-circuits") {
    InvariantSet inv;
    inv.n = 3;
    Classification np = classify(inv, Verdict::No);
    CHECK(np.monge_ampere == Verdict::NotApplicable);
    CHECK(np.definitive());
    inv.primary_jk.computed = true;
    inv.primary_jk.verdict.status = ZeroStatus::Inconclusive;
    inv.primary_j0.computed = true;
    Classification ic = classify(inv, Verdict::Yes);
    CHECK(ic.primary_vanish == Verdict::Inconclusive);
    CHECK_FALSE(ic.definitive());
}

TEST_CASE("json keys are stable") {
    Prepared p = prepare_pde(load_pde("heat_n2.toml"));
    InvariantSet inv = invariants_of(p);
    auto j = invariants_json(inv, *p.zt, 0);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"primary_V0j0", "primary_V0jk", "secondary_Vjkl", "secondary_sym4_residual",
                                           "tertiary_V", "tertiary_defect", "goursat"});
    auto c = classification_json(classify(inv, Verdict::Yes));
    CHECK(c["low_n_caveat"] == true);
}
