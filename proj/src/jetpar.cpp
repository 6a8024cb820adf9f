#include "eds/jetpar.hpp"

#include <algorithm>
#include <cmath>

namespace eds {

std::string x_name(int a) { return "x" + std::to_string(a); }
std::string pa_name(int a) { return "p" + std::to_string(a); }
std::string p_name(int a, int b) {
    if (a > b) std::swap(a, b);
    return "p" + std::to_string(a) + std::to_string(b);
}

std::vector<std::string> jet_coordinates(int n) {
    if (n < 1 || n > 9) throw JetError("n must be between 1 and 9");
    std::vector<std::string> c;
    for (int a = 0; a <= n; ++a) c.push_back(x_name(a));
    c.push_back("u");
    for (int a = 0; a <= n; ++a) c.push_back(pa_name(a));
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b) c.push_back(p_name(a, b));
    return c;
}

Workspace build_contact_system(int n) {
    Workspace ws;
    ws.name = "J2_n" + std::to_string(n);
    ws.mode = Mode::Coordinate;
    auto coords = jet_coordinates(n);
    for (std::size_t k = 0; k < coords.size(); ++k) {
        ws.coframe.push_back("d" + coords[k]);
        ws.functions.emplace(coords[k], Form::basis(static_cast<int>(k)));
    }
    ws.structure.assign(coords.size(), Form(2));
    ws.domain.variables = coords;
    return ws;
}

namespace {

Form dcoord(const Workspace& ws, const std::string& name) {
    int k = ws.index_of("d" + name);
    if (k >= 0) return Form::basis(k);
    auto it = ws.functions.find(name);
    if (it == ws.functions.end()) throw JetError("coordinate '" + name + "' missing from workspace");
    return it->second;
}

}  // namespace

ContactForms contact_forms(const Workspace& ws, int n) {
    ContactForms cf;
    cf.theta_null = dcoord(ws, "u");
    for (int a = 0; a <= n; ++a) cf.omega.push_back(dcoord(ws, x_name(a)));
    for (int a = 0; a <= n; ++a) cf.theta_null = cf.theta_null - Expr::var(pa_name(a)) * cf.omega[a];
    for (int a = 0; a <= n; ++a) {
        Form t = dcoord(ws, pa_name(a));
        for (int b = 0; b <= n; ++b) t = t - Expr::var(p_name(a, b)) * cf.omega[b];
        cf.theta.push_back(t);
    }
    cf.pi.assign(static_cast<std::size_t>(n + 1), std::vector<Form>(static_cast<std::size_t>(n + 1)));
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b) {
            Form p = dcoord(ws, p_name(a, b));
            cf.pi[a][b] = p;
            cf.pi[b][a] = p;
        }
    return cf;
}

// ---------- problems ----------

PdeProblem make_problem(int n, const std::string& F, const std::vector<std::string>& constraints,
                        std::optional<std::string> solved) {
    PdeProblem p;
    p.n = n;
    p.name = "pde";
    p.F_text = F;
    auto vars = jet_coordinates(n);
    p.F = parse_expr(F, vars);
    if (p.F.is_zero()) throw JetError("F is identically zero");
    p.solved_coordinate = std::move(solved);
    p.constraint_text = constraints;
    p.domain.variables = vars;
    for (const auto& c : constraints) p.domain.constraints.push_back(parse_expr(c, vars));
    return p;
}

PdeProblem problem_from_json(const nlohmann::json& j) {
    if (j.value("kind", std::string("pde")) != "pde") throw JetError("file kind is not 'pde'");
    if (!j.contains("n") || !j["n"].is_number_integer()) throw JetError("missing integer field 'n'");
    if (!j.contains("F") || !j["F"].is_string()) throw JetError("missing string field 'F'");
    std::vector<std::string> cons;
    std::optional<std::map<std::string, Rational>> bp;
    if (j.contains("domain")) {
        const auto& d = j["domain"];
        if (d.contains("constraints"))
            for (const auto& c : d["constraints"]) cons.push_back(c.get<std::string>());
        if (d.contains("base_point")) {
            bp.emplace();
            for (auto it = d["base_point"].begin(); it != d["base_point"].end(); ++it) {
                std::string txt = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
                (*bp)[it.key()] = parse_expr(txt, {}).value();
            }
        }
    }
    std::optional<std::string> solved;
    if (j.contains("solved_coordinate")) solved = j["solved_coordinate"].get<std::string>();
    PdeProblem p = make_problem(j["n"].get<int>(), j["F"].get<std::string>(), cons, solved);
    p.name = j.value("name", std::string("pde"));
    if (bp) {
        for (const auto& [k, v] : *bp)
            if (std::find(p.domain.variables.begin(), p.domain.variables.end(), k) == p.domain.variables.end())
                throw JetError("base_point names unknown coordinate '" + k + "'");
        p.domain.base_point = bp;
    }
    if (j.contains("seed")) p.params.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("run")) {
        const auto& r = j["run"];
        if (r.contains("trials")) p.params.trials = r["trials"].get<int>();
        if (r.contains("precision")) p.params.precision = r["precision"].get<unsigned>();
        if (r.contains("tol")) p.params.tol_exp10 = std::log10(r["tol"].get<double>());
    }
    return p;
}

namespace {

bool try_solved(const PdeProblem& prob, const std::string& q) {
    Domain d = prob.domain;
    d.solved = {SolvedVar{q, prob.F}};
    try {
        ZeroTester zt(d, prob.params);
        return zt.nonzero_everywhere(differentiate(prob.F, q));
    } catch (const ExprError&) {
        return false;
    }
}

}  // namespace

std::string detect_solved_coordinate(const PdeProblem& prob, ZeroTester&) {
    std::vector<std::string> cand{p_name(0, 0), pa_name(0)};
    for (int i = 1; i <= prob.n; ++i) cand.push_back(p_name(0, i));
    for (int a = 1; a <= prob.n; ++a)
        for (int b = a; b <= prob.n; ++b) cand.push_back(p_name(a, b));
    for (const auto& q : cand) {
        if (differentiate(prob.F, q).is_zero()) continue;
        if (try_solved(prob, q)) return q;
    }
    throw JetError("no coordinate can be eliminated: dF/dq is not certified nonzero for any candidate");
}

void prepare_problem(PdeProblem& prob) {
    std::string q;
    if (prob.solved_coordinate) {
        q = *prob.solved_coordinate;
        auto coords = jet_coordinates(prob.n);
        if (std::find(coords.begin(), coords.end(), q) == coords.end())
            throw JetError("solved_coordinate '" + q + "' is not a jet coordinate");
        if (differentiate(prob.F, q).is_zero() || !try_solved(prob, q))
            throw JetError("dF/d" + q + " is not certified nonzero on the domain");
    } else {
        Domain d = prob.domain;
        ZeroTester zt(d, prob.params);
        q = detect_solved_coordinate(prob, zt);
    }
    prob.solved_coordinate = q;
    prob.domain.solved = {SolvedVar{q, prob.F}};
}

Workspace restrict_to_equation(const PdeProblem& prob) {
    if (!prob.solved_coordinate) throw JetError("problem has no solved coordinate");
    const std::string& q = *prob.solved_coordinate;
    Workspace ws;
    ws.name = prob.name;
    ws.mode = Mode::Coordinate;
    auto coords = jet_coordinates(prob.n);
    for (const auto& c : coords) {
        if (c == q) continue;
        int k = ws.size();
        ws.coframe.push_back("d" + c);
        ws.functions.emplace(c, Form::basis(k));
    }
    Expr Fq = differentiate(prob.F, q);
    Expr inv = make_pow(Fq, -1);
    FormAccumulator acc(1);
    for (int k = 0; k < ws.size(); ++k) {
        const std::string c = ws.coframe[k].substr(1);
        Expr Fy = differentiate(prob.F, c);
        if (Fy.is_zero()) continue;
        acc.add(bit(k), -(Fy * inv));
    }
    ws.functions.emplace(q, acc.build());
    ws.structure.assign(ws.coframe.size(), Form(2));
    ws.domain = prob.domain;
    return ws;
}

// ---------- symbol ----------

Matrix symbol_matrix(PdeProblem& prob, ZeroTester& zt) {
    const int m = prob.n + 1;
    auto build = [&]() {
        Matrix S(m, std::vector<Expr>(m, Expr(0)));
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                Expr d = differentiate(prob.F, p_name(a, b));
                if (a == b)
                    S[a][a] = d;
                else
                    S[a][b] = S[b][a] = Expr(Rational(1, 2)) * d;
            }
        return S;
    };
    Matrix S = build();
    std::vector<Expr> tr;
    for (int i = 1; i < m; ++i) tr.push_back(S[i][i]);
    Expr trace = make_add(tr);
    int s = trace.is_zero() ? 0 : zt.sign_everywhere(trace);
    if (s == 0) throw JetError("cannot orient the symbol: spatial trace is not of one sign on the domain");
    if (s < 0) {
        prob.F = -prob.F;
        for (auto& sv : prob.domain.solved) sv.equation = prob.F;
        S = build();
    }
    return S;
}

namespace {

// PSD rank test at one point; returns rank or -1 if indefinite
int psd_rank(std::vector<std::vector<Value>> vals, const Float& tol) {
    const std::size_t m = vals.size();
    bool exact = true;
    for (const auto& r : vals)
        for (const auto& v : r)
            if (!std::holds_alternative<Rational>(v)) exact = false;
    std::vector<bool> done(m, false);
    int rank = 0;
    if (exact) {
        std::vector<std::vector<Rational>> a(m, std::vector<Rational>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a[i][j] = std::get<Rational>(vals[i][j]);
        while (true) {
            std::size_t p = m;
            for (std::size_t i = 0; i < m; ++i)
                if (!done[i] && sgn(a[i][i]) > 0) {
                    p = i;
                    break;
                }
            if (p == m) break;
            done[p] = true;
            ++rank;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (!done[i] && !done[j]) a[i][j] -= a[i][p] * a[p][j] / a[p][p];
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (!done[i] && !done[j] && sgn(a[i][j]) != 0) return -1;
        return rank;
    }
    std::vector<std::vector<Float>> a(m, std::vector<Float>(m));
    Float scale = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            a[i][j] = to_float(vals[i][j]);
            scale = std::max(scale, Float(abs(a[i][j])));
        }
    Float eps = tol * (scale == 0 ? Float(1) : scale);
    while (true) {
        std::size_t p = m;
        for (std::size_t i = 0; i < m; ++i)
            if (!done[i] && a[i][i] > eps && (p == m || a[i][i] > a[p][p])) p = i;
        if (p == m) break;
        done[p] = true;
        ++rank;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (!done[i] && !done[j]) a[i][j] -= a[i][p] * a[p][j] / a[p][p];
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (!done[i] && !done[j] && abs(a[i][j]) > eps) return -1;
    return rank;
}

Expr prune(const Expr& e, ZeroTester& zt) {
    if (e.is_const()) return e;
    return zt.test(e).status == ZeroStatus::Zero ? Expr(0) : e;
}

}  // namespace

Ldl symbolic_ldl(const Matrix& S, ZeroTester& zt) {
    const int m = static_cast<int>(S.size());
    Matrix M = S;
    std::vector<int> remaining;
    for (int i = 1; i < m; ++i) remaining.push_back(i);
    remaining.push_back(0);
    Ldl out;
    for (int k = 0; k < m - 1; ++k) {
        int p = -1;
        for (int i : remaining) {
            if (M[i][i].is_zero()) continue;
            if (zt.sign_everywhere(M[i][i]) > 0) {
                p = i;
                break;
            }
        }
        if (p < 0) throw JetError("LDL pivot not certifiably positive on the domain");
        Expr d = M[p][p];
        Expr dinv = make_pow(d, -1);
        std::vector<Expr> v(static_cast<std::size_t>(m), Expr(0));
        remaining.erase(std::find(remaining.begin(), remaining.end(), p));
        v[p] = Expr(1);
        for (int i : remaining) v[i] = prune(M[i][p] * dinv, zt);
        for (int i : remaining)
            for (int j : remaining) {
                if (v[i].is_zero() || v[j].is_zero()) continue;
                M[i][j] = prune(M[i][j] - d * v[i] * v[j], zt);
            }
        out.order.push_back(p);
        out.d.push_back(d);
        out.v.push_back(v);
    }
    int last = remaining.front();
    if (zt.test(M[last][last]).status != ZeroStatus::Zero) throw JetError("symbol has full rank: not parabolic");
    out.order.push_back(last);
    std::vector<Expr> x(static_cast<std::size_t>(m), Expr(0));
    x[last] = Expr(1);
    for (int k = m - 2; k >= 0; --k) {
        std::vector<Expr> t;
        for (int j = 0; j < m; ++j) {
            if (j == out.order[k] || out.v[k][j].is_zero() || x[j].is_zero()) continue;
            t.push_back(out.v[k][j] * x[j]);
        }
        x[out.order[k]] = t.empty() ? Expr(0) : prune(-make_add(t), zt);
    }
    out.kernel = x;
    return out;
}

ParabolicCheck check_parabolic(PdeProblem& prob, ZeroTester& zt) {
    ParabolicCheck res;
    Matrix S;
    try {
        S = symbol_matrix(prob, zt);
    } catch (const JetError& e) {
        res.reason = e.what();
        return res;
    }
    const int m = prob.n + 1;
    PrecisionScope ps(zt.params().precision);
    Float tol = zt.sqrt_tol();
    for (int i = 0; i < zt.size(); ++i) {
        std::vector<std::vector<Value>> vals(m, std::vector<Value>(m));
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) vals[a][b] = S[a][b].is_const() ? Value(S[a][b].value()) : zt.value_at(i, S[a][b]);
        int r = psd_rank(vals, tol);
        if (r != prob.n) {
            res.witness = i;
            res.reason = r < 0 ? "symbol is indefinite at sample " + std::to_string(i)
                               : "symbol has rank " + std::to_string(r) + " at sample " + std::to_string(i);
            return res;
        }
    }
    try {
        res.kernel = symbolic_ldl(S, zt).kernel;
    } catch (const JetError& e) {
        res.reason = e.what();
        return res;
    }
    res.parabolic = true;
    return res;
}

// ---------- frames ----------

namespace {
void normalize_impl(ParabolicCoframing& cof, ZeroTester& zt, const FrameBasis* via);
FrameBasis hat_basis(const Workspace& ws, int n, ZeroTester& zt);
}  // namespace

int FrameLayout::pi(int a, int b) const {
    if (a > b) std::swap(a, b);
    if (a == n && b == n) return -1;
    int idx = 0;
    for (int c = 0; c <= n; ++c)
        for (int d = c; d <= n; ++d) {
            if (c == a && d == b) return pi_start() + idx;
            ++idx;
        }
    return -1;
}

std::vector<std::string> FrameLayout::names(const std::vector<std::string>& extra_names) const {
    std::vector<std::string> v{"theta_null"};
    for (int a = 0; a <= n; ++a) v.push_back("theta" + std::to_string(a));
    for (int a = 0; a <= n; ++a) v.push_back("omega" + std::to_string(a));
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b)
            if (!(a == n && b == n)) v.push_back("pi" + std::to_string(a) + std::to_string(b));
    for (const auto& e : extra_names) v.push_back(e);
    return v;
}

std::vector<Form> ParabolicCoframing::frame_forms() const {
    std::vector<Form> f{roles.theta_null};
    for (const auto& t : roles.theta) f.push_back(t);
    for (const auto& o : roles.omega) f.push_back(o);
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b)
            if (!(a == n && b == n)) f.push_back(roles.pi.at({a, b}));
    for (const auto& c : complement) f.push_back(c);
    return f;
}

Expr coeff2(const Form& f, int r, int s) {
    if (r == s) return Expr(0);
    Expr c = f.coeff(bit(r) | bit(s));
    return r < s ? c : -c;
}

ParabolicCoframing adapt_coframe(PdeProblem& prob, ZeroTester& zt, const AdaptOptions& opt) {
    if (!prob.solved_coordinate) prepare_problem(prob);
    const int n = prob.n;
    const int m = n + 1;
    Matrix S = symbol_matrix(prob, zt);
    Ldl ldl = symbolic_ldl(S, zt);

    Matrix B(m, std::vector<Expr>(m, Expr(0)));
    for (int a = 0; a < m; ++a) B[a][0] = ldl.kernel[a];
    for (int k = 0; k < n; ++k) {
        Expr sd = make_sqrt(ldl.d[k]);
        for (int a = 0; a < m; ++a)
            if (!ldl.v[k][a].is_zero()) B[a][k + 1] = sd * ldl.v[k][a];
    }
    if (opt.rotation) {
        const auto& R = *opt.rotation;
        if (static_cast<int>(R.size()) != n) throw JetError("rotation has wrong size");
        Matrix B2 = B;
        for (int a = 0; a < m; ++a)
            for (int i = 0; i < n; ++i) {
                std::vector<Expr> t;
                for (int j = 0; j < n; ++j)
                    if (!B[a][j + 1].is_zero() && sgn(R[j][i]) != 0) t.push_back(Expr(R[j][i]) * B[a][j + 1]);
                B2[a][i + 1] = t.empty() ? Expr(0) : make_add(t);
            }
        B = B2;
    }
    Matrix Binv = symbolic_inverse(B, zt);

    ParabolicCoframing cof;
    cof.n = n;
    cof.ambient = restrict_to_equation(prob);
    ContactForms cf = contact_forms(cof.ambient, n);
    RoleFrame& r = cof.roles;
    r.theta_null = cf.theta_null;
    for (int a = 0; a < m; ++a) {
        FormAccumulator th(1), om(1);
        for (int b = 0; b < m; ++b) {
            th.add(cf.theta[b], B[b][a]);
            om.add(cf.omega[b], Binv[a][b]);
        }
        r.theta.push_back(th.build());
        r.omega.push_back(om.build());
    }
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            FormAccumulator p(1);
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) {
                    if (B[c][a].is_zero() || B[d][b].is_zero()) continue;
                    p.add(cf.pi[c][d], B[c][a] * B[d][b]);
                }
            r.pi.emplace(std::make_pair(a, b), p.build());
        }
    cof.B = B;
    FrameBasis hat = hat_basis(cof.ambient, n, zt);
    normalize_impl(cof, zt, &hat);
    return cof;
}

ParabolicCoframing coframing_from_workspace(const Workspace& ws, ZeroTester& zt) {
    if (!ws.coframing) throw JetError("workspace has no [coframing] section");
    ParabolicCoframing cof;
    cof.ambient = ws;
    cof.roles = *ws.coframing;
    cof.n = cof.roles.n();
    for (int a = 0; a <= cof.n; ++a)
        for (int b = a; b <= cof.n; ++b)
            if (!cof.roles.pi.count({a, b})) throw JetError("coframing lacks pi" + std::to_string(a) + std::to_string(b));
    normalize_and_frame(cof, zt);
    return cof;
}

namespace {

void normalize_impl(ParabolicCoframing& cof, ZeroTester& zt, const FrameBasis* via);

// d<coordinate> rewritten as contact-adapted forms: du -> theta_null, dp_a -> theta_a,
// dp_ab -> pi_ab, dx -> omega; unitriangular over the coordinate coframe
FrameBasis hat_basis(const Workspace& ws, int n, ZeroTester& zt) {
    ContactForms cf = contact_forms(ws, n);
    std::vector<Form> hat(static_cast<std::size_t>(ws.size()));
    for (int k = 0; k < ws.size(); ++k) {
        const std::string c = ws.coframe[k].substr(1);
        if (c == "u") {
            hat[k] = cf.theta_null;
        } else if (c[0] == 'x') {
            hat[k] = cf.omega[std::stoi(c.substr(1))];
        } else if (c.size() == 2) {
            hat[k] = cf.theta[c[1] - '0'];
        } else {
            hat[k] = cf.pi[c[1] - '0'][c[2] - '0'];
        }
    }
    return FrameBasis(hat, ws.size(), zt);
}

}  // namespace

void normalize_and_frame(ParabolicCoframing& cof, ZeroTester& zt) { normalize_impl(cof, zt, nullptr); }

namespace {

void normalize_impl(ParabolicCoframing& cof, ZeroTester& zt, const FrameBasis* via) {
    const int n = cof.n;
    const int m = n + 1;
    const int amb = cof.ambient.size();
    cof.layout.n = n;
    cof.complement.clear();
    cof.complement_names.clear();
    cof.layout.extra = 0;
    {
        std::vector<Form> base = cof.frame_forms();
        std::vector<int> comp = greedy_complement(base, amb, zt);
        for (int k : comp) {
            cof.complement.push_back(Form::basis(k));
            cof.complement_names.push_back(cof.ambient.coframe[k]);
        }
        cof.layout.extra = static_cast<int>(comp.size());
    }
    const FrameLayout& L = cof.layout;
    if (L.size() != amb) throw JetError("coframing does not span the workspace");
    auto fb = via ? std::make_shared<FrameBasis>(FrameBasis::through(*via, cof.frame_forms(), zt))
                  : std::make_shared<FrameBasis>(cof.frame_forms(), amb, zt);

    Form trace(1);
    for (int i = 1; i <= n; ++i) trace = trace + cof.roles.pi.at({i, i});
    Form tr = fb->expand(trace);
    std::vector<Expr> f_theta(m, Expr(0)), f_omega(m, Expr(0));
    Expr f_null(0);
    for (const auto& [mk, c] : tr.terms) {
        int k = __builtin_ctzll(mk);
        if (k == L.theta_null())
            f_null = prune(c, zt);
        else if (k >= L.theta(0) && k <= L.theta(n))
            f_theta[k - L.theta(0)] = prune(c, zt);
        else if (k >= L.omega(0) && k <= L.omega(n))
            f_omega[k - L.omega(0)] = prune(c, zt);
        else if (zt.test(c).status != ZeroStatus::Zero)
            throw JetError("sum of pi_ii is not congruent to zero modulo theta, omega: not parabolic");
    }

    // h = -T(f_spatial)/(n+2) - T(f_0 e_0)/n with T(v)_abc = v_a d_bc + v_b d_ac + v_c d_ab (spatial delta)
    auto delta = [](int a, int b) { return a == b && a != 0; };
    auto vsp = [&](int a) { return a == 0 ? Expr(0) : f_omega[a]; };
    auto v0 = [&](int a) { return a == 0 ? f_omega[0] : Expr(0); };
    auto T = [&](auto v, int a, int b, int c) {
        std::vector<Expr> t;
        if (delta(b, c)) t.push_back(v(a));
        if (delta(a, c)) t.push_back(v(b));
        if (delta(a, b)) t.push_back(v(c));
        return t.empty() ? Expr(0) : make_add(t);
    };
    const Expr c_sp = Expr(Rational(-1, n + 2));
    const Expr c_0 = Expr(Rational(-1, n));
    const Expr inv_n = Expr(Rational(1, n));

    // pi'_ab = pi_ab - (1/n) d_ab (f_null theta_null + f^c theta_c) + h_abc omega^c
    // expressed as new frame = M * old frame; old frame = Minv * new frame
    const int N = amb;
    Matrix Minv(N, std::vector<Expr>(N, Expr(0)));
    for (int k = 0; k < N; ++k) Minv[k][k] = Expr(1);
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b) {
            FormAccumulator corr(1);  // correction in frame indices
            if (delta(a, b)) {
                corr.add(bit(L.theta_null()), -(inv_n * f_null));
                for (int c = 0; c <= n; ++c) corr.add(bit(L.theta(c)), -(inv_n * f_theta[c]));
            }
            for (int c = 0; c <= n; ++c) {
                Expr h = c_sp * T(vsp, a, b, c) + c_0 * T(v0, a, b, c);
                corr.add(bit(L.omega(c)), h);
            }
            Form cf = corr.build();
            if (cf.empty()) continue;
            Form amb_corr = fb->reconstruct(cf);
            cof.roles.pi[{a, b}] = cof.roles.pi.at({a, b}) + amb_corr;
            int r = L.pi(a, b);
            if (r < 0) continue;
            for (const auto& [mk, c] : cf.terms) Minv[r][__builtin_ctzll(mk)] = -c;
        }
    // corrections only involve theta/omega, which are unchanged, so Minv is exact
    Matrix Gnew = mat_mul(fb->inverse(), Minv);
    cof.basis = std::make_shared<FrameBasis>(cof.frame_forms(), std::move(Gnew));
    cof.lambda = Expr(0);

    std::vector<int> with;
    for (int k = 0; k < L.pi_start(); ++k) with.push_back(k);
    cof.frame = reframe(cof.ambient, *cof.basis, L.names(cof.complement_names), with);
}

}  // namespace

CoframingCheck check_coframing(const ParabolicCoframing& cof, ZeroTester& zt) {
    CoframingCheck res;
    const FrameLayout& L = cof.layout;
    const int n = cof.n;
    auto pi_frame = [&](int a, int b) {
        int r = L.pi(a, b);
        if (r >= 0) return Form::basis(r);
        Form f(1);
        for (int i = 1; i < n; ++i) f = f - Form::basis(L.pi(i, i));
        return f;
    };
    auto compare = [&](const std::string& what, const Form& actual, const Form& target, Mask gens) {
        Form d = actual - target;
        for (const auto& [mk, c] : d.terms) {
            if (mk & gens) continue;
            if (zt.test(c).status != ZeroStatus::Zero) {
                res.pass = false;
                res.failures.push_back(what + ": coefficient on monomial " + std::to_string(mk));
            }
        }
    };
    const auto& st = cof.frame.structure;
    Form t0(2);
    for (int a = 0; a <= n; ++a) t0 = t0 - wedge(Form::basis(L.theta(a)), Form::basis(L.omega(a)));
    compare("d theta_null", *st[L.theta_null()], t0, bit(L.theta_null()));
    Mask gens = bit(L.theta_null());
    for (int b = 0; b <= n; ++b) gens |= bit(L.theta(b));
    for (int a = 0; a <= n; ++a) {
        Form ta(2);
        for (int b = 0; b <= n; ++b) ta = ta - wedge(pi_frame(a, b), Form::basis(L.omega(b)));
        compare("d theta" + std::to_string(a), *st[L.theta(a)], ta, gens);
    }
    Form trace(1);
    for (int i = 1; i <= n; ++i) trace = trace + cof.roles.pi.at({i, i});
    Form tr = cof.basis->expand(trace);
    compare("sum pi_ii", tr, cof.lambda.is_zero() ? Form(1) : cof.lambda * Form::basis(L.theta(0)), 0);
    return res;
}

}  // namespace eds
