// Acceptance run: one PASS/FAIL line per criterion.
#include "eds/corpus.hpp"
#include "eds/matest.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace eds;
using namespace eds::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        pass = false;
        detail += (detail.empty() ? "" : "; ") + why;
    }
    void expect(bool ok, const std::string& why) {
        if (!ok) fail(why);
    }
};

bool all_zero(const Form& f, ZeroTester& zt) {
    for (const auto& [m, c] : f.terms)
        if (zt.test(c).status != ZeroStatus::Zero) return false;
    return true;
}

std::vector<const TensorInvariant*> tensors(const InvariantSet& inv) {
    return {&inv.primary_j0, &inv.primary_jk, &inv.secondary,   &inv.secondary_residual,
            &inv.tertiary,   &inv.tertiary_defect, &inv.a_hat};
}

const char* slot_names[] = {"primary_V0j0", "primary_V0jk", "secondary_Vjkl", "secondary_sym4_residual",
                            "tertiary_V",   "tertiary_defect", "ahat"};

std::set<std::string> nonzero_slots(const InvariantSet& inv, ZeroTester& zt) {
    std::set<std::string> out;
    auto ts = tensors(inv);
    for (std::size_t k = 0; k < ts.size(); ++k)
        if (ts[k]->computed && ts[k]->verdict.status != ZeroStatus::Zero) out.insert(slot_names[k]);
    if (inv.primary_zero() && zt.test(inv.a).status != ZeroStatus::Zero) out.insert("a");
    return out;
}

std::string verdict_key(const InvariantSet& inv) {
    std::ostringstream os;
    for (const auto* t : tensors(inv)) os << (t->computed ? status_name(t->verdict.status) : "-") << ",";
    os << (inv.a_sign == Sign::Zero ? "a=0" : "a!=0");
    return os.str();
}

bool all_exact(const InvariantSet& inv) {
    for (const auto* t : tensors(inv))
        if (t->computed && !t->verdict.exact) return false;
    return true;
}

// ---- criteria ----

Outcome heat() {
    Outcome o;
    for (int n : {2, 3}) {
        const std::string tag = "heat n=" + std::to_string(n);
        Prepared p = prepare_pde(load_pde("heat_n" + std::to_string(n) + ".toml"));
        InvariantSet inv = compute_invariants(*p.cof, *p.zt);
        o.expect(nonzero_slots(inv, *p.zt) == std::set<std::string>{"a"}, tag + ": only a may be nonzero");
        o.expect(inv.tertiary.computed, tag + ": tertiary computed");
        o.expect(all_exact(inv), tag + ": exact path");
        Classification c = classify(inv, Verdict::Yes);
        o.expect(c.evolutionary == Verdict::Yes && c.monge_ampere == Verdict::Yes && c.linear_type == Verdict::Yes,
                 tag + ": classification");
    }
    if (o.pass) o.detail = "n=2,3 invariants Zero on the exact path, a NonZero, evolutionary + MA + linear";
    return o;
}

Outcome degenerate() {
    Outcome o;
    Prepared p = prepare_pde(load_pde("degenerate_heat_n3.toml"));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    o.expect(is_zero(inv.primary_j0) && is_zero(inv.primary_jk), "primary Zero");
    o.expect(p.zt->test(inv.a).status == ZeroStatus::Zero && inv.a_sign == Sign::Zero, "a Zero");
    o.expect(is_zero(inv.a_hat), "ahat Zero");
    o.expect(classify(inv, Verdict::Yes).sub_elliptic == Verdict::Yes, "sub-elliptic");
    if (o.pass) o.detail = "a, ahat, primary Zero; sub-elliptic";
    return o;
}

Outcome flow() {
    Outcome o;
    Workspace ws = mcf_workspace(3);
    ZeroTester zt(ws.domain, TestParams{});
    ValidationReport vr = validate_workspace(ws, zt);
    o.expect(vr.pass, "validate_workspace");
    ParabolicCoframing cof = coframing_from_workspace(ws, zt);
    o.expect(check_coframing(cof, zt).pass, "structure equations");
    InvariantSet inv = compute_invariants(cof, zt);
    std::set<std::string> nz = nonzero_slots(inv, zt);
    nz.erase("a");
    o.expect(nz.empty(), "invariants Zero");
    LinearTypeReport lt = check_linear_type(cof, inv, zt);
    o.expect(lt.membership.verdict.status == ZeroStatus::Zero, "linear-type residual Zero");
    if (o.pass)
        o.detail = "validate pass (" + std::to_string(vr.checked) + " identities), invariants Zero, linear-type residual Zero";
    return o;
}

Outcome minors() {
    Outcome o;
    PdeProblem prob = load_pde("minors_n3.toml");
    prob.params.precision = 256;
    prob.params.tol_exp10 = -40;
    Prepared p = prepare_pde(prob);
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    o.expect(is_zero(inv.primary_j0) && is_zero(inv.primary_jk), "primary Zero");
    o.expect(is_zero(inv.secondary_residual), "V_sec in b2'");
    Upsilon2Report u = upsilon2(*p.cof, inv, *p.zt);
    o.expect(u.constructible, "upsilon2 constructible");
    o.expect(u.closure.verdict.status == ZeroStatus::Zero, "closure residual Zero");
    if (o.pass)
        o.detail = "primary Zero, b2' residual Zero, upsilon2 closes (" + std::to_string(u.closure.conditions) +
                   " conditions) at 256 bits, tol 1e-40";
    return o;
}

Outcome representations() {
    Outcome o;
    for (int n = 3; n <= 6; ++n) {
        o.expect(bianchi_basis(n, 1).dim() == n * (n + 1) / 2, "dim b_1 n=" + std::to_string(n));
        o.expect(bianchi_basis(n, 2).dim() == n * n * (n * n - 1) / 12, "dim b_2 n=" + std::to_string(n));
    }
    for (int n = 3; n <= 5; ++n)
        for (int r = 2; r <= std::min(4, n); ++r) {
            LinearMapMatrix f = map_f(n, r);
            o.expect(exact_rank(f.columns) == static_cast<int>(f.columns.size()),
                     "f_r injective n=" + std::to_string(n) + " r=" + std::to_string(r));
        }
    for (int n : {4, 5})
        for (int r : {3, 4}) {
            ExactnessReport e = check_exactness(n, r);
            o.expect(e.complex && e.exact, "exact n=" + std::to_string(n) + " r=" + std::to_string(r));
        }
    for (int n = 3; n <= 5; ++n) {
        ExactnessReport e = check_exactness(n, 2);
        o.expect(e.homology == sym4_traceless_dim(n), "r=2 homology n=" + std::to_string(n));
    }
    if (o.pass) o.detail = "dims for n=3..6, f_r injective, r=3,4 exact for n=4,5, r=2 homology = dim Sym^4_0";
    return o;
}

struct CorpusItem {
    std::string name;
    std::function<Prepared()> make;
};

std::vector<CorpusItem> corpus() {
    std::vector<CorpusItem> out;
    for (const char* f : {"heat_n2.toml", "heat_n3.toml", "degenerate_heat_n3.toml", "minors_n3.toml"})
        out.push_back({f, [f] { return prepare_pde(load_pde(f)); }});
    out.push_back({"mcf_n3", [] { return prepare_workspace(mcf_workspace(3)); }});
    return out;
}

Outcome gauges() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    int checked = 0;
    for (const auto& item : corpus()) {
        Prepared p = item.make();
        InvariantSet base = compute_invariants(*p.cof, *p.zt);
        const std::string key = verdict_key(base);
        const std::vector<Value> a0 = p.zt->values(base.a);
        for (int t = 0; t < 10; ++t) {
            GaugeElement g = random_gauge(p.cof->n, rng);
            InvariantSet moved = compute_invariants(apply_gauge(*p.cof, g), *p.zt);
            o.expect(verdict_key(moved) == key, item.name + ": verdicts changed under gauge " + std::to_string(t));
            const std::vector<Value> a1 = p.zt->values(moved.a);
            PrecisionScope ps(p.zt->params().precision);
            for (int k = 0; k < 5 && k < static_cast<int>(a0.size()); ++k) {
                Value want = value_mul(Value(goursat_factor(g)), a0[k]);
                Float err = abs(to_float(value_add(a1[k], value_neg(want))));
                o.expect(err <= p.zt->tol() * (1 + abs(to_float(want))),
                         item.name + ": a factor at sample " + std::to_string(k));
            }
            ++checked;
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " gauged runs, verdicts stable, a scales by B00 k_null / b^2";
    return o;
}

Outcome evolutionary() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    const int sizes[] = {2, 3, 3, 3, 4};
    for (int n : sizes) {
        PdeProblem prob = random_evolutionary(n, rng);
        Prepared p = prepare_pde(prob);
        InvariantSet inv = compute_invariants(*p.cof, *p.zt);
        o.expect(classify(inv, Verdict::Yes).evolutionary == Verdict::Yes, "not evolutionary: " + prob.F_text);
    }
    if (o.pass) o.detail = "5 random equations (n = 2, 3, 3, 3, 4) classify as evolutionary";
    return o;
}

struct FixtureExpectation {
    std::string kind;
    std::set<std::string> slots;
    // primary_vanish, monge_ampere, linear_type, goursat, evolutionary, sub_elliptic
    std::vector<Verdict> verdicts;
};

Outcome fixtures() {
    using V = Verdict;
    const std::vector<FixtureExpectation> table = {
        {"flat", {}, {V::Yes, V::Yes, V::Yes, V::Yes, V::No, V::Yes}},
        {"xi10_pi11", {"primary_V0jk"}, {V::No, V::No, V::No, V::NotApplicable, V::No, V::No}},
        {"xi10_pi23", {"primary_V0jk"}, {V::No, V::No, V::No, V::NotApplicable, V::No, V::No}},
        {"xi12_pi12", {"secondary_Vjkl", "secondary_sym4_residual"}, {V::Yes, V::No, V::No, V::Yes, V::No, V::Yes}},
        {"tertiary", {"tertiary_V"}, {V::Yes, V::Yes, V::No, V::Yes, V::No, V::Yes}},
        {"sym4", {"secondary_Vjkl", "secondary_sym4_residual"}, {V::Yes, V::No, V::No, V::Yes, V::No, V::Yes}},
        {"goursat_antisym", {"ahat"}, {V::Yes, V::Yes, V::Yes, V::Yes, V::No, V::No}},
        {"goursat_a", {"a"}, {V::Yes, V::Yes, V::Yes, V::No, V::Yes, V::No}},
    };
    Outcome o;
    for (const auto& e : table) {
        Prepared p = prepare_workspace(make_fixture(e.kind, 3));
        InvariantSet inv = compute_invariants(*p.cof, *p.zt);
        o.expect(nonzero_slots(inv, *p.zt) == e.slots, e.kind + ": nonzero slots");
        Classification c = classify(inv, Verdict::Yes);
        std::vector<Verdict> got{c.primary_vanish, c.monge_ampere, c.linear_type, c.goursat, c.evolutionary, c.sub_elliptic};
        o.expect(got == e.verdicts, e.kind + ": verdicts");
    }
    Prepared p = prepare_workspace(make_fixture("xi10_pi23", 3));
    InvariantSet inv = compute_invariants(*p.cof, *p.zt);
    o.expect(nonzero_labels(inv.primary_jk, *p.zt) == std::vector<std::string>{"V_1^023", "V_1^032"}, "xi10_pi23 labels");
    Prepared q = prepare_workspace(make_fixture("tertiary", 3));
    InvariantSet ter = compute_invariants(*q.cof, *q.zt);
    bool unit = !ter.tertiary.entries.empty();
    if (unit)
        for (const Value& v : q.zt->values(ter.tertiary.entries[0])) unit = unit && value_str(v) == "1";
    o.expect(unit, "tertiary V = 1");
    if (o.pass) o.detail = std::to_string(table.size()) + " fixtures hit exactly their declared slots and verdicts";
    return o;
}

Form random_form(std::mt19937_64& rng, int deg, int m, const std::vector<std::string>& vars) {
    Form f(deg);
    std::uniform_int_distribution<int> coef(-3, 3), pick(0, static_cast<int>(vars.size()) - 1), idx(0, m - 1);
    for (int t = 0; t < 3; ++t) {
        std::set<int> s;
        while (static_cast<int>(s.size()) < deg) s.insert(idx(rng));
        Expr c = Expr(coef(rng));
        for (int k = 0; k < 2; ++k) c = c + Expr(coef(rng)) * Expr::var(vars[pick(rng)]) * Expr::var(vars[pick(rng)]);
        f.add_term(mask_of({s.begin(), s.end()}), c);
    }
    return f;
}

Outcome kernel() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    std::vector<Workspace> spaces{build_contact_system(2), mcf_workspace(3)};
    int forms = 0;
    for (Workspace& ws : spaces) {
        Domain dom = ws.domain;
        dom.variables = workspace_variables(ws);
        ZeroTester zt(dom, TestParams{});
        const int m = ws.size();
        const auto vars = workspace_variables(ws);
        for (int t = 0; t < 50; ++t) {
            Form a = random_form(rng, t % 4, m, vars);
            o.expect(all_zero(exterior_derivative(ws, exterior_derivative(ws, a)), zt), ws.name + ": d^2");
            ++forms;
        }
        for (int t = 0; t < 10; ++t) {
            Form a = random_form(rng, 1 + t % 2, m, vars), b = random_form(rng, 1 + t % 3, m, vars),
                 c = random_form(rng, 1, m, vars);
            const Expr sign = Expr((a.degree * b.degree) % 2 ? -1 : 1);
            o.expect(all_zero(wedge(a, b) - sign * wedge(b, a), zt), ws.name + ": graded commutativity");
            o.expect(all_zero(wedge(wedge(a, b), c) - wedge(a, wedge(b, c)), zt), ws.name + ": associativity");
        }
    }
    {
        Workspace ws = build_contact_system(2);
        ContactForms cf = contact_forms(ws, 2);
        Domain dom;
        dom.variables = workspace_variables(ws);
        ZeroTester zt(dom, TestParams{});
        const auto vars = workspace_variables(ws);
        std::vector<Form> frame{cf.theta_null};
        for (const auto& f : cf.theta) frame.push_back(f);
        for (const auto& f : cf.omega) frame.push_back(f);
        for (int a = 0; a <= 2; ++a)
            for (int b = a; b <= 2; ++b) frame.push_back(cf.pi[a][b]);
        PfaffianIdeal I{{frame.begin(), frame.begin() + 4}, "contact"};
        for (int t = 0; t < 10; ++t) {
            Form a = random_form(rng, 1 + t % 3, ws.size(), vars);
            Form r1 = reduce_mod(a, I, ws.size(), zt);
            o.expect(all_zero(r1 - reduce_mod(r1, I, ws.size(), zt), zt), "reduce_mod idempotent");
            Form ex = expand_in_basis(ws, a, frame, zt);
            o.expect(all_zero(substitute(ex, frame) - a, zt), "expand_in_basis round trip");
        }
    }
    if (o.pass) o.detail = std::to_string(forms) + " d^2 checks, wedge laws, reduce_mod and expand_in_basis round trips";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, heat},      {2, degenerate}, {3, flow},      {4, minors},   {5, representations},
        {6, gauges},    {7, evolutionary}, {8, fixtures}, {9, kernel},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
