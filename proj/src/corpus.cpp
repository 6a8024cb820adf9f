#include "eds/corpus.hpp"

#include "eds/repso.hpp"

#include <sstream>

namespace eds {

namespace {

std::string two(int a, int b) { return std::to_string(a) + std::to_string(b); }

Form wedge_basis(int k, int l) { return wedge(Form::basis(k), Form::basis(l)); }

}  // namespace

Workspace mcf_workspace(int n) {
    if (n < 2 || n > 6) throw CorpusError("flow workspace supports 2 <= n <= 6");
    const int m = n + 1;
    Workspace ws;
    ws.name = "mcf_n" + std::to_string(n);
    ws.mode = Mode::Abstract;
    for (int a = 0; a < m; ++a) ws.coframe.push_back("eta" + std::to_string(a));
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) ws.coframe.push_back("eta" + two(a, b));
    ws.coframe.push_back("dt");
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) ws.coframe.push_back("dh" + two(a, b));

    auto eta = [&](int a) { return a; };
    auto eta2 = [&](int a, int b) -> Form {
        if (a == b) return Form(1);
        if (a < b) return Form::basis(ws.index_of("eta" + two(a, b)));
        return -Form::basis(ws.index_of("eta" + two(b, a)));
    };
    const int dt = ws.index_of("dt");
    auto dh = [&](int a, int b) { return ws.index_of("dh" + two(std::min(a, b), std::max(a, b))); };
    auto h = [&](int a, int b) { return Expr::var("h" + two(std::min(a, b), std::max(a, b))); };

    ws.functions.emplace("t", Form::basis(dt));
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) ws.functions.emplace("h" + two(a, b), Form::basis(dh(a, b)));

    ws.structure.assign(ws.coframe.size(), Form(2));
    for (int a = 0; a < m; ++a) {
        Form f(2);
        for (int b = 0; b < m; ++b)
            if (b != a) f = f - wedge(eta2(a, b), Form::basis(eta(b)));
        ws.structure[eta(a)] = f;
        for (int b = a + 1; b < m; ++b) {
            Form g(2);
            for (int c = 0; c < m; ++c)
                if (c != a && c != b) g = g - wedge(eta2(a, c), eta2(c, b));
            ws.structure[ws.index_of("eta" + two(a, b))] = g;
        }
    }

    std::vector<Expr> tr;
    for (int i = 1; i <= n; ++i) tr.push_back(h(i, i));
    const Expr H = make_add(tr);

    RoleFrame rf;
    rf.theta_null = Form::basis(eta(0)) - Form::basis(dt, H);
    {
        Form t0(1);
        for (int i = 1; i <= n; ++i) t0 = t0 + Form::basis(dh(i, i)) - Form::basis(eta(i), h(0, i));
        rf.theta.push_back(t0 - Form::basis(dt, h(0, 0)));
    }
    for (int i = 1; i <= n; ++i) {
        Form t = eta2(0, i) - Form::basis(dt, h(0, i));
        for (int j = 1; j <= n; ++j) t = t - Form::basis(eta(j), h(i, j));
        rf.theta.push_back(t);
    }
    rf.omega.push_back(Form::basis(dt));
    for (int i = 1; i <= n; ++i) rf.omega.push_back(Form::basis(eta(i)));
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            Form p = Form::basis(dh(i, j));
            for (int k = 1; k <= n; ++k) p = p - h(i, k) * eta2(k, j) - h(j, k) * eta2(k, i);
            rf.pi.emplace(std::make_pair(i, j), p);
        }
    // the H-terms carry + so that d theta_a = -pi_ab ^ omega^b holds exactly mod theta
    for (int i = 1; i <= n; ++i) {
        Form p = Form::basis(dh(0, i));
        for (int j = 1; j <= n; ++j) p = p - h(0, j) * eta2(j, i);
        for (int k = 1; k <= n; ++k) {
            std::vector<Expr> t;
            for (int j = 1; j <= n; ++j) t.push_back(h(i, j) * h(j, k));
            p = p + Form::basis(eta(k), H * make_add(t));
        }
        rf.pi.emplace(std::make_pair(0, i), p);
    }
    {
        Form p = Form::basis(dh(0, 0));
        for (int j = 1; j <= n; ++j) {
            std::vector<Expr> t;
            for (int i = 1; i <= n; ++i) t.push_back(h(0, i) * h(i, j));
            p = p + Form::basis(eta(j), H * make_add(t));
        }
        rf.pi.emplace(std::make_pair(0, 0), p);
    }
    ws.coframing = std::move(rf);
    ws.domain.variables = workspace_variables(ws);
    return ws;
}

std::vector<std::string> fixture_kinds() {
    return {"flat", "xi10_pi11", "xi10_pi23", "xi12_pi12", "tertiary", "sym4", "goursat_antisym", "goursat_a"};
}

Workspace make_fixture(const std::string& kind, int n) {
    if (n < 2 || n > 6) throw CorpusError("fixtures support 2 <= n <= 6");
    if (kind == "xi10_pi23" && n < 3) throw CorpusError("xi10_pi23 needs n >= 3");
    FrameLayout L;
    L.n = n;
    Workspace ws;
    ws.name = "fixture_" + kind + "_n" + std::to_string(n);
    ws.mode = Mode::Abstract;
    ws.coframe = L.names({});
    auto pi = [&](int a, int b) {
        int r = L.pi(a, b);
        if (r >= 0) return Form::basis(r);
        Form f(1);
        for (int i = 1; i < n; ++i) f = f - Form::basis(L.pi(i, i));
        return f;
    };
    ws.structure.assign(ws.coframe.size(), std::nullopt);
    {
        Form f(2);
        for (int a = 0; a <= n; ++a) f = f - wedge_basis(L.theta(a), L.omega(a));
        ws.structure[L.theta_null()] = f;
    }
    std::vector<Form> dth(n + 1, Form(2)), dom(n + 1, Form(2));
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) dth[a] = dth[a] - wedge(pi(a, b), Form::basis(L.omega(b)));
    auto th = [&](int a) { return Form::basis(L.theta(a)); };

    if (kind == "flat") {
    } else if (kind == "xi10_pi11") {
        dth[1] = dth[1] - wedge(pi(1, 1), th(0));
    } else if (kind == "xi10_pi23") {
        dth[1] = dth[1] - wedge(pi(2, 3), th(0));
    } else if (kind == "xi12_pi12") {
        dth[1] = dth[1] - wedge(pi(1, 2), th(2));
        dth[2] = dth[2] - wedge(pi(1, 2), th(1));
    } else if (kind == "tertiary") {
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) dom[i] = dom[i] - wedge(pi(i, j), th(j));
    } else if (kind == "sym4") {
        Tensor e(n, 4);
        e.at({0, 0, 0, 0}) = Expr(1);
        Tensor V = sym4_traceless(symmetrize4(e));
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                for (int k = 1; k <= n; ++k)
                    for (int l = 1; l <= n; ++l) {
                        const Expr& v = V.at({i - 1, j - 1, k - 1, l - 1});
                        if (!v.is_zero()) dth[i] = dth[i] - v * wedge(pi(k, l), th(j));
                    }
    } else if (kind == "goursat_antisym") {
        dth[1] = dth[1] + wedge_basis(L.omega(2), L.theta(0));
        dth[2] = dth[2] - wedge_basis(L.omega(1), L.theta(0));
    } else if (kind == "goursat_a") {
        for (int i = 1; i <= n; ++i) dth[i] = dth[i] + wedge_basis(L.omega(i), L.theta(0));
    } else {
        throw CorpusError("unknown fixture kind '" + kind + "'");
    }
    for (int a = 0; a <= n; ++a) {
        ws.structure[L.theta(a)] = dth[a];
        ws.structure[L.omega(a)] = dom[a];
    }
    RoleFrame rf;
    rf.theta_null = Form::basis(L.theta_null());
    for (int a = 0; a <= n; ++a) {
        rf.theta.push_back(th(a));
        rf.omega.push_back(Form::basis(L.omega(a)));
    }
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b) rf.pi.emplace(std::make_pair(a, b), pi(a, b));
    ws.coframing = std::move(rf);
    return ws;
}

PdeProblem random_evolutionary(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> small(-2, 2), diag(3, 5), pick(0, n);
    auto var = [&](int k) { return k == 0 ? std::string("u") : pa_name(k); };
    auto q = [](int num, int den) {
        Rational r(num, den);
        r.canonicalize();
        return "(" + r.get_str() + ")";
    };
    std::ostringstream F;
    F << "p0";
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            int base = i == j ? diag(rng) : small(rng);
            std::ostringstream c;
            c << q(base, i == j ? 1 : 4);
            int s1 = small(rng), s2 = small(rng);
            if (s1) c << " + " << q(s1, 40) << "*" << var(pick(rng));
            if (s2) c << " + " << q(s2, 40) << "*" << var(pick(rng)) << "*" << var(pick(rng));
            F << " - " << (i == j ? "" : "2*") << "(" << c.str() << ")*" << p_name(i, j);
        }
    int c1 = small(rng), c2 = small(rng);
    if (c1) F << " - " << q(c1, 1) << "*" << var(pick(rng)) << "*" << var(pick(rng));
    if (c2) F << " - " << q(c2, 3) << "*" << var(pick(rng));
    PdeProblem p = make_problem(n, F.str(), {}, std::string("p0"));
    p.name = "random_evolutionary_n" + std::to_string(n);
    // generic samples are unbounded; the symbol is only certified near the origin
    std::map<std::string, Rational> bp;
    for (const auto& v : p.domain.variables)
        if (v != "p0") bp[v] = 0;
    p.domain.base_point = bp;
    return p;
}

}  // namespace eds
