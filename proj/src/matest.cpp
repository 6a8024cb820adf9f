#include "eds/matest.hpp"

#include <map>

namespace eds {

namespace {

Mask theta_mask(const FrameLayout& L) {
    Mask m = 0;
    for (int a = 0; a <= L.n; ++a) m |= bit(L.theta(a));
    return m;
}

Mask g1_mask(const FrameLayout& L) {
    Mask m = theta_mask(L);
    for (int a = 0; a <= L.n; ++a) m |= bit(L.omega(a));
    return m;
}

// all submasks of `pool` with exactly k bits, in increasing numeric order
std::vector<Mask> submasks(Mask pool, int k) {
    std::vector<int> idx = mask_indices(pool);
    std::vector<Mask> out;
    const int n = static_cast<int>(idx.size());
    if (k < 0 || k > n) return out;
    std::vector<int> c(k);
    for (int i = 0; i < k; ++i) c[i] = i;
    while (true) {
        Mask m = 0;
        for (int i : c) m |= bit(idx[i]);
        out.push_back(m);
        int i = k - 1;
        while (i >= 0 && c[i] == n - k + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Form omitted_form(const FrameLayout& L, const std::vector<int>& J) {
    Mask all = 0, mj = 0;
    for (int a = 0; a <= L.n; ++a) all |= bit(L.omega(a));
    for (int a : J) {
        if (mj & bit(L.omega(a))) return Form(L.n + 1 - static_cast<int>(J.size()));
        mj |= bit(L.omega(a));
    }
    Form wj = Form::scalar(Expr(1));
    for (int a : J) wj = wedge(wj, Form::basis(L.omega(a)));
    Mask rest = all & ~mj;
    Form top = wedge(wj, Form::monomial(rest));
    Expr s = top.coeff(all);
    Form out = Form::monomial(rest, s);
    out.degree = mask_degree(rest);
    return out;
}

Form upsilon1(const FrameLayout& L) {
    Form u(L.n + 1);
    for (int i = 1; i <= L.n; ++i) u = u + wedge(Form::basis(L.theta(i)), omitted_form(L, {i}));
    return u;
}

Form contact_omega(const FrameLayout& L) {
    Form o(2);
    for (int a = 0; a <= L.n; ++a) o = o + wedge(Form::basis(L.theta(a)), Form::basis(L.omega(a)));
    return o;
}

Membership ideal_membership(const Form& target, const Form& ups, const FrameLayout& L, ZeroTester& zt, int max_theta) {
    for (const auto& [m, c] : ups.terms)
        if (!c.is_const()) throw MatestError("generator must have constant coefficients");
    const Mask G1 = g1_mask(L);
    const Mask TH = theta_mask(L);
    const Mask NUL = bit(L.theta_null());
    const int deg = target.degree;
    auto admissible = [&](Mask g) { return max_theta < 0 || mask_degree(g & TH) <= max_theta; };

    // phi_P, keyed by P then by G1 monomial
    std::map<Mask, std::map<Mask, Expr>> blocks;
    for (const auto& [m, c] : target.terms) {
        if (m & NUL) continue;
        Mask g = m & G1, p = m & ~G1;
        if (!admissible(g)) continue;
        blocks[p][g] = wedge_sign(p, g) > 0 ? c : -c;
    }
    const Form omega = contact_omega(L);

    struct Checks {
        std::vector<Mask> coords;
        std::vector<QVec> ys;
    };
    std::map<int, Checks> cache;
    auto checks_for = [&](int k) -> const Checks& {
        auto it = cache.find(k);
        if (it != cache.end()) return it->second;
        Checks ch;
        const int d = deg - k;
        for (Mask g : submasks(G1, d))
            if (admissible(g)) ch.coords.push_back(g);
        std::map<Mask, int> pos;
        for (std::size_t i = 0; i < ch.coords.size(); ++i) pos[ch.coords[i]] = static_cast<int>(i);
        std::vector<QVec> cols;
        auto add_col = [&](const Form& f) {
            QVec v;
            for (const auto& [m, c] : f.terms) {
                auto p = pos.find(m);
                if (p != pos.end()) v[p->second] += c.value();
            }
            for (auto x = v.begin(); x != v.end();) x = sgn(x->second) == 0 ? v.erase(x) : std::next(x);
            if (!v.empty()) cols.push_back(std::move(v));
        };
        for (Mask b : submasks(G1, d - 2)) add_col(wedge(Form::monomial(b), omega));
        if (k == 0 && ups.degree + 1 == d)
            for (int g : mask_indices(G1)) add_col(wedge(Form::basis(g), ups));
        if (k == 1 && ups.degree == d) add_col(ups);
        ch.ys = nullspace(cols, static_cast<int>(ch.coords.size()));
        return cache.emplace(k, std::move(ch)).first->second;
    };

    Membership res;
    for (const auto& [p, phi] : blocks) {
        if (phi.empty()) continue;
        ++res.blocks;
        const Checks& ch = checks_for(mask_degree(p));
        for (const auto& y : ch.ys) {
            std::vector<Expr> t;
            for (const auto& [i, q] : y) {
                auto f = phi.find(ch.coords[i]);
                if (f != phi.end()) t.push_back(Expr(q) * f->second);
            }
            if (t.empty()) continue;
            ++res.conditions;
            res.residuals.push_back(make_add(t));
        }
    }
    res.verdict = zt.test_all(res.residuals);
    return res;
}

LinearTypeReport check_linear_type(const ParabolicCoframing& cof, const InvariantSet& inv, ZeroTester& zt) {
    const FrameLayout& L = cof.layout;
    if (cof.n < 2) throw MatestError("linear-type test needs n >= 2");
    Workspace F = ma_adapted_frame(cof, inv.s);
    Form u = upsilon1(L);
    LinearTypeReport r;
    r.primitive = wedge(u, contact_omega(L)).empty() && wedge(u, Form::basis(L.omega(0))).empty();
    r.membership = ideal_membership(exterior_derivative(F, u), u, L, zt);
    switch (r.membership.verdict.status) {
        case ZeroStatus::Zero: r.linear_type = Verdict::Yes; break;
        case ZeroStatus::NonZero: r.linear_type = Verdict::No; break;
        default: r.linear_type = Verdict::Inconclusive; break;
    }
    return r;
}

Upsilon2Report upsilon2(const ParabolicCoframing& cof, const InvariantSet& inv, ZeroTester& zt) {
    const FrameLayout& L = cof.layout;
    const int n = cof.n;
    Upsilon2Report r;
    if (!inv.primary_zero()) {
        r.reason = "primary invariants do not vanish";
        return r;
    }
    r.applicable = true;
    if (inv.secondary_residual.verdict.status != ZeroStatus::Zero) {
        r.reason = "secondary tensor has a Sym^4_0 component";
        return r;
    }
    Tensor rhs = inv.v_sec;
    for (auto& e : rhs.data)
        if (!e.is_zero()) e = Expr(2) * e;
    r.A = solve_f2(rhs);
    r.constructible = true;
    Form u1 = upsilon1(L);
    FormAccumulator acc(n + 1);
    acc.add(u1);
    // one term per pair i < j, k < l; the sign matches omega_J ^ omega_(J) = omega^0 ^ ... ^ omega^n
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    const Expr& a = r.A.at({i, j, k, l});
                    if (a.is_zero()) continue;
                    Form t = wedge(wedge(Form::basis(L.theta(i + 1)), Form::basis(L.theta(j + 1))),
                                   omitted_form(L, {k + 1, l + 1}));
                    acc.add(t, -a);
                }
    r.upsilon2 = acc.build();
    Workspace F = ma_adapted_frame(cof, inv.s);
    // the A-part lies in Lambda^2 I, so ups2 and ups1 generate the same ideal modulo it
    r.closure = ideal_membership(exterior_derivative(F, r.upsilon2), u1, L, zt, 1);
    return r;
}

namespace {

nlohmann::ordered_json membership_json(const Membership& m) {
    nlohmann::ordered_json j;
    j["residual"] = status_name(m.verdict.status);
    j["blocks"] = m.blocks;
    j["conditions"] = m.conditions;
    return j;
}

}  // namespace

nlohmann::ordered_json linear_type_json(const LinearTypeReport& r) {
    nlohmann::ordered_json j;
    j["linear_type"] = verdict_name(r.linear_type);
    j["primitive"] = r.primitive;
    j["membership"] = membership_json(r.membership);
    return j;
}

nlohmann::ordered_json upsilon2_json(const Upsilon2Report& r) {
    nlohmann::ordered_json j;
    j["applicable"] = r.applicable;
    j["constructible"] = r.constructible;
    if (!r.reason.empty()) j["reason"] = r.reason;
    if (r.constructible) {
        int nz = 0;
        for (const auto& e : r.A.data) nz += e.is_zero() ? 0 : 1;
        j["A_nonzero_entries"] = nz;
        j["closure"] = membership_json(r.closure);
    }
    return j;
}

}  // namespace eds
