#include "eds/invar.hpp"

#include <algorithm>

namespace eds {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::Mixed: return "mixed";
        case Verdict::Inconclusive: return "inconclusive";
        case Verdict::NotApplicable: return "not_applicable";
    }
    return "?";
}

const char* sign_name(Sign s) {
    switch (s) {
        case Sign::Zero: return "zero";
        case Sign::Positive: return "positive";
        case Sign::Negative: return "negative";
        case Sign::Mixed: return "mixed";
        case Sign::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

using QMat = std::vector<std::vector<Rational>>;

Expr prune(const Expr& e, ZeroTester& zt) {
    if (e.is_zero() || e.is_const()) return e;
    return zt.test(e).status == ZeroStatus::Zero ? Expr(0) : e;
}

Expr sum_of(std::vector<Expr> t) { return t.empty() ? Expr(0) : make_add(std::move(t)); }

QMat rat_inverse(QMat a) {
    const int n = static_cast<int>(a.size());
    QMat inv(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i) inv[i][i] = 1;
    for (int c = 0; c < n; ++c) {
        int p = c;
        while (p < n && sgn(a[p][c]) == 0) ++p;
        if (p == n) throw InvarError("singular constant matrix");
        std::swap(a[p], a[c]);
        std::swap(inv[p], inv[c]);
        Rational s = 1 / a[c][c];
        for (int k = 0; k < n; ++k) {
            a[c][k] *= s;
            inv[c][k] *= s;
        }
        for (int r = 0; r < n; ++r)
            if (r != c && sgn(a[r][c]) != 0) {
                Rational f = a[r][c];
                for (int k = 0; k < n; ++k) {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
    }
    return inv;
}

// row and column indices of a maximal nonsingular square block
std::pair<std::vector<int>, std::vector<int>> independent_block(QMat a) {
    const int nr = static_cast<int>(a.size());
    const int nc = nr ? static_cast<int>(a[0].size()) : 0;
    std::vector<int> rows, cols;
    std::vector<int> order(nr);
    for (int i = 0; i < nr; ++i) order[i] = i;
    int r = 0;
    for (int c = 0; c < nc && r < nr; ++c) {
        int p = r;
        while (p < nr && sgn(a[p][c]) == 0) ++p;
        if (p == nr) continue;
        std::swap(a[p], a[r]);
        std::swap(order[p], order[r]);
        for (int q = r + 1; q < nr; ++q)
            if (sgn(a[q][c]) != 0) {
                Rational f = a[q][c] / a[r][c];
                for (int k = c; k < nc; ++k) a[q][k] -= f * a[r][k];
            }
        rows.push_back(order[r]);
        cols.push_back(c);
        ++r;
    }
    std::sort(rows.begin(), rows.end());
    return {rows, cols};
}

std::string idx_label(const std::string& head, const std::vector<int>& low, const std::vector<int>& up) {
    std::string s = head;
    if (!low.empty()) {
        s += "_";
        for (int i : low) s += std::to_string(i);
    }
    if (!up.empty()) {
        s += "^";
        for (int i : up) s += std::to_string(i);
    }
    return s;
}

void finish(TensorInvariant& t, ZeroTester& zt) {
    for (auto& e : t.entries) e = prune(e, zt);
    t.verdict = zt.test_all(t.entries);
    t.computed = true;
}

// sym + trace-free in the first pair, then symmetrize the two pairs
Tensor pair_project(const Tensor& x) {
    const int n = x.n;
    const Expr half(Rational(1, 2));
    Tensor y(n, 4);
    for (std::size_t off = 0; off < x.data.size(); ++off) {
        auto i = x.index(off);
        y.data[off] = half * (x.data[off] + x.at({i[1], i[0], i[2], i[3]}));
    }
    y = traceless_project(y, 0, 1);
    Tensor z(n, 4);
    for (std::size_t off = 0; off < y.data.size(); ++off) {
        auto i = y.index(off);
        z.data[off] = half * (y.data[off] + y.at({i[2], i[3], i[0], i[1]}));
    }
    return z;
}

// change of W_i^{j,kl} under omega -> omega + s theta (spatial block, 0-based)
Tensor s_shift(const std::vector<std::vector<Expr>>& s, int n) {
    Tensor d(n, 4);
    const Expr half(Rational(1, 2));
    const Expr inv_n(Rational(1, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    std::vector<Expr> t;
                    if (i == k) t.push_back(-(half * s[l][j]));
                    if (i == l) t.push_back(-(half * s[k][j]));
                    if (k == l) t.push_back(inv_n * s[i][j]);
                    d.at({i, j, k, l}) = sum_of(t);
                }
    return d;
}

}  // namespace

Torsion extract_torsion(const Workspace& frame, const FrameLayout& L, ZeroTester& zt) {
    Torsion t;
    const int n = L.n;
    const int m = n + 1;
    t.n = n;
    t.W.assign(static_cast<std::size_t>(m) * m * m * m, Expr(0));
    const Expr inv_n(Rational(1, n));
    const Expr half(Rational(1, 2));
    for (int i = 1; i <= n; ++i) {
        const auto& st = frame.structure[L.theta(i)];
        if (!st) throw InvarError("frame lacks d theta" + std::to_string(i));
        for (int c = 0; c <= n; ++c) {
            for (int d = 0; d <= n; ++d)
                for (int e = d; e <= n; ++e) {
                    int r = L.pi(d, e);
                    if (r < 0) continue;
                    Expr coef = prune(coeff2(*st, r, L.theta(c)), zt);
                    if (coef.is_zero()) continue;
                    Expr w = d == e ? -coef : -(half * coef);
                    t.W[t.idx(i, c, d, e)] = w;
                    t.W[t.idx(i, c, e, d)] = w;
                }
            std::vector<Expr> diag;
            for (int j = 1; j <= n; ++j)
                if (!t.w(i, c, j, j).is_zero()) diag.push_back(t.w(i, c, j, j));
            if (diag.empty()) continue;
            Expr mean = inv_n * make_add(diag);
            for (int j = 1; j <= n; ++j) t.W[t.idx(i, c, j, j)] = prune(t.w(i, c, j, j) - mean, zt);
        }
    }
    t.a.assign(m, std::vector<Expr>(m, Expr(0)));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            t.a[i][j] = prune(coeff2(*frame.structure[L.theta(i)], L.omega(j), L.theta(0)), zt);
    return t;
}

bool InvariantSet::primary_zero() const {
    return primary_j0.computed && primary_jk.computed && primary_j0.verdict.status == ZeroStatus::Zero &&
           primary_jk.verdict.status == ZeroStatus::Zero;
}

bool InvariantSet::secondary_zero() const {
    return secondary.computed && secondary.verdict.status == ZeroStatus::Zero;
}

Workspace transform_frame(const Workspace& frame, const Matrix& A, const Matrix& Ainv, const std::vector<int>& with) {
    const int N = frame.size();
    std::vector<Form> images(static_cast<std::size_t>(N));
    for (int s = 0; s < N; ++s) {
        FormAccumulator acc(1);
        for (int t = 0; t < N; ++t)
            if (!Ainv[s][t].is_zero()) acc.add(bit(t), Ainv[s][t]);
        images[s] = acc.build();
    }
    Workspace out;
    out.name = frame.name;
    out.mode = Mode::Abstract;
    out.coframe = frame.coframe;
    out.domain = frame.domain;
    for (const auto& [name, df] : frame.functions) out.functions.emplace(name, substitute(df, images));
    out.structure.assign(static_cast<std::size_t>(N), std::nullopt);
    for (int r : with) {
        FormAccumulator acc(2);
        for (int s = 0; s < N; ++s) {
            const Expr& c = A[r][s];
            if (c.is_zero()) continue;
            if (!frame.structure[s]) throw InvarError("structure of " + frame.coframe[s] + " is unknown");
            acc.add(*frame.structure[s], c);
            if (!c.is_const()) {
                Form dc = differential(frame, c);
                acc.add(wedge(dc, Form::basis(s)));
            }
        }
        out.structure[r] = substitute(acc.build(), images);
    }
    return out;
}

Workspace ma_adapted_frame(const ParabolicCoframing& cof, const Matrix& s) {
    const FrameLayout& L = cof.layout;
    const int N = L.size();
    Matrix A(N, std::vector<Expr>(N, Expr(0)));
    Matrix Ainv = A;
    for (int k = 0; k < N; ++k) A[k][k] = Ainv[k][k] = Expr(1);
    for (int a = 0; a <= L.n; ++a)
        for (int b = 0; b <= L.n; ++b) {
            if (s[a][b].is_zero()) continue;
            A[L.omega(a)][L.theta(b)] = s[a][b];
            Ainv[L.omega(a)][L.theta(b)] = -s[a][b];
        }
    std::vector<int> with;
    for (int k = 0; k < L.pi_start(); ++k) with.push_back(k);
    return transform_frame(cof.frame, A, Ainv, with);
}

InvariantSet compute_invariants(const ParabolicCoframing& cof, ZeroTester& zt) {
    const int n = cof.n;
    if (n < 2) throw InvarError("invariants need n >= 2");
    const FrameLayout& L = cof.layout;
    const int m = n + 1;
    InvariantSet inv;
    inv.n = n;
    inv.s.assign(m, std::vector<Expr>(m, Expr(0)));
    Torsion tor = extract_torsion(cof.frame, L, zt);
    const Expr inv_n(Rational(1, n));
    const Expr half(Rational(1, 2));

    // primary: V_i^{0j0}
    {
        std::vector<Expr> tr;
        for (int i = 1; i <= n; ++i)
            if (!tor.w(i, 0, i, 0).is_zero()) tr.push_back(tor.w(i, 0, i, 0));
        Expr trace = sum_of(tr);
        inv.s[0][0] = prune(Expr(Rational(2, n)) * trace, zt);
        auto& P = inv.primary_j0;
        P.name = "primary_V0j0";
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                Expr v = tor.w(i, 0, j, 0);
                if (i == j && !trace.is_zero()) v = v - inv_n * trace;
                P.labels.push_back(idx_label("V", {i}, {0, j, 0}));
                P.entries.push_back(v);
            }
        finish(P, zt);
    }
    // primary: V_i^{0jk}
    {
        const Rational denom = Rational(n + 1) / 2 - Rational(1) / n;
        std::vector<Expr> sk(static_cast<std::size_t>(m), Expr(0));
        for (int k = 1; k <= n; ++k) {
            std::vector<Expr> t;
            for (int i = 1; i <= n; ++i)
                if (!tor.w(i, 0, i, k).is_zero()) t.push_back(tor.w(i, 0, i, k));
            sk[k] = prune(Expr(1 / denom) * sum_of(t), zt);
            inv.s[k][0] = inv.s[0][k] = sk[k];
        }
        auto& P = inv.primary_jk;
        P.name = "primary_V0jk";
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                for (int k = 1; k <= n; ++k) {
                    std::vector<Expr> t{tor.w(i, 0, j, k)};
                    if (i == j) t.push_back(-(half * sk[k]));
                    if (i == k) t.push_back(-(half * sk[j]));
                    if (j == k) t.push_back(inv_n * sk[i]);
                    P.labels.push_back(idx_label("V", {i}, {0, j, k}));
                    P.entries.push_back(sum_of(t));
                }
        finish(P, zt);
    }
    inv.secondary.name = "secondary_Vjkl";
    inv.secondary_residual.name = "secondary_sym4_residual";
    inv.tertiary.name = "tertiary_V";
    inv.tertiary_defect.name = "tertiary_defect";
    inv.a_hat.name = "extended_goursat_ahat";
    if (!inv.primary_zero()) return inv;

    // secondary
    {
        Tensor X(n, 4);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) X.at({i, j, k, l}) = tor.w(i + 1, j + 1, k + 1, l + 1);
        auto cross = [&](const Tensor& z, int j, int l) {
            std::vector<Expr> t;
            for (int i = 0; i < n; ++i)
                if (!z.at({i, j, i, l}).is_zero()) t.push_back(z.at({i, j, i, l}));
            return sum_of(t);
        };
        std::vector<std::pair<int, int>> pairs;
        for (int p = 0; p < n; ++p)
            for (int q = p; q < n; ++q) pairs.emplace_back(p, q);
        const int np = static_cast<int>(pairs.size());
        QMat Lm(np, std::vector<Rational>(np, Rational(0)));
        for (int u = 0; u < np; ++u) {
            std::vector<std::vector<Expr>> su(n, std::vector<Expr>(n, Expr(0)));
            su[pairs[u].first][pairs[u].second] = su[pairs[u].second][pairs[u].first] = Expr(1);
            Tensor z = pair_project(s_shift(su, n));
            for (int r = 0; r < np; ++r) Lm[r][u] = cross(z, pairs[r].first, pairs[r].second).value();
        }
        // the system is singular for n = 2; solve a maximal nonsingular block, free unknowns 0
        auto [rows, cols] = independent_block(Lm);
        QMat sub(rows.size(), std::vector<Rational>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t u = 0; u < cols.size(); ++u) sub[r][u] = Lm[rows[r]][cols[u]];
        QMat Linv = rat_inverse(sub);
        Tensor zx = pair_project(X);
        std::vector<Expr> rhs;
        for (int r : rows) rhs.push_back(-cross(zx, pairs[r].first, pairs[r].second));
        std::vector<std::vector<Expr>> s(n, std::vector<Expr>(n, Expr(0)));
        for (std::size_t ui = 0; ui < cols.size(); ++ui) {
            const int u = cols[ui];
            std::vector<Expr> t;
            for (std::size_t r = 0; r < rows.size(); ++r)
                if (sgn(Linv[ui][r]) != 0 && !rhs[r].is_zero()) t.push_back(Expr(Linv[ui][r]) * rhs[r]);
            Expr v = prune(sum_of(t), zt);
            s[pairs[u].first][pairs[u].second] = s[pairs[u].second][pairs[u].first] = v;
            inv.s[pairs[u].first + 1][pairs[u].second + 1] = inv.s[pairs[u].second + 1][pairs[u].first + 1] = v;
        }
        Tensor sh = s_shift(s, n);
        for (std::size_t k = 0; k < X.data.size(); ++k) X.data[k] = X.data[k] + sh.data[k];
        Tensor V = pair_project(X);
        for (auto& e : V.data) e = prune(e, zt);
        inv.v_sec = V;
        auto& S = inv.secondary;
        for (std::size_t off = 0; off < V.data.size(); ++off) {
            auto i = V.index(off);
            S.labels.push_back(idx_label("V", {i[0] + 1}, {i[1] + 1, i[2] + 1, i[3] + 1}));
            S.entries.push_back(V.data[off]);
        }
        finish(S, zt);
        B2Split split = b2prime_split(V);
        auto& Rr = inv.secondary_residual;
        for (std::size_t off = 0; off < V.data.size(); ++off) {
            auto i = V.index(off);
            Rr.labels.push_back(idx_label("R", {}, {i[0] + 1, i[1] + 1, i[2] + 1, i[3] + 1}));
            Rr.entries.push_back(split.residual.data[off]);
        }
        finish(Rr, zt);
    }

    // tertiary, in the Monge-Ampere adapted frame
    if (inv.secondary_zero()) {
        Workspace F = ma_adapted_frame(cof, inv.s);
        Tensor T(n, 4), M(n, 4);  // (i, l, j, k)
        for (int i = 1; i <= n; ++i) {
            const Form& dw = *F.structure[L.omega(i)];
            for (int l = 1; l <= n; ++l) {
                for (int j = 1; j <= n; ++j)
                    for (int k = j; k <= n; ++k) {
                        int r = L.pi(j, k);
                        if (r < 0) continue;
                        Expr c = prune(coeff2(dw, r, L.theta(l)), zt);
                        if (c.is_zero()) continue;
                        Expr w = j == k ? -c : -(half * c);
                        T.at({i - 1, l - 1, j - 1, k - 1}) = w;
                        T.at({i - 1, l - 1, k - 1, j - 1}) = w;
                    }
                for (int j = 1; j <= n; ++j)
                    for (int k = 1; k <= n; ++k) {
                        Rational v = 0;
                        if (i == j && l == k) v += Rational(1, 2);
                        if (i == k && l == j) v += Rational(1, 2);
                        M.at({i - 1, l - 1, j - 1, k - 1}) = Expr(v);
                    }
            }
        }
        T = traceless_project(T, 2, 3);
        M = traceless_project(M, 2, 3);
        Rational mm = 0;
        std::vector<Expr> tm;
        for (std::size_t k = 0; k < T.data.size(); ++k) {
            Rational w = M.data[k].value();
            mm += w * w;
            if (sgn(w) != 0 && !T.data[k].is_zero()) tm.push_back(Expr(w) * T.data[k]);
        }
        Expr V = prune(Expr(1 / mm) * sum_of(tm), zt);
        inv.tertiary.labels = {"V"};
        inv.tertiary.entries = {V};
        finish(inv.tertiary, zt);
        // for n = 2 the trace-free part of s is not fixed and leaks into this block
        if (n >= 3) {
            auto& D = inv.tertiary_defect;
            for (std::size_t off = 0; off < T.data.size(); ++off) {
                auto x = T.index(off);
                D.labels.push_back(idx_label("D", {x[0] + 1, x[1] + 1}, {x[2] + 1, x[3] + 1}));
                D.entries.push_back(T.data[off] - M.data[off] * V);
            }
            finish(D, zt);
        }
    }

    // Goursat
    {
        std::vector<Expr> tr;
        for (int i = 1; i <= n; ++i)
            if (!tor.a[i][i].is_zero()) tr.push_back(tor.a[i][i]);
        inv.a = prune(inv_n * sum_of(tr), zt);
        auto& H = inv.a_hat;
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                H.labels.push_back(idx_label("ahat", {i, j}, {}));
                H.entries.push_back(half * (tor.a[i][j] - tor.a[j][i]));
            }
        finish(H, zt);
        std::vector<Value> vals = zt.values(inv.a);
        ZeroVerdict zv = zt.classify(vals);
        if (zv.status == ZeroStatus::Zero) {
            inv.a_sign = Sign::Zero;
        } else if (zv.status == ZeroStatus::Inconclusive) {
            inv.a_sign = Sign::Inconclusive;
        } else {
            PrecisionScope ps(zt.params().precision);
            Float tol = zt.sqrt_tol();
            int pos = 0, neg = 0, zero = 0;
            for (const auto& v : vals) {
                Float f = to_float(v);
                if (abs(f) <= tol)
                    ++zero;
                else if (f > 0)
                    ++pos;
                else
                    ++neg;
            }
            if (zero == 0 && neg == 0)
                inv.a_sign = Sign::Positive;
            else if (zero == 0 && pos == 0)
                inv.a_sign = Sign::Negative;
            else
                inv.a_sign = Sign::Mixed;
        }
    }
    return inv;
}

// ---------- classification ----------

bool Classification::definitive() const {
    for (Verdict v : {parabolic, primary_vanish, monge_ampere, linear_type, goursat, evolutionary, sub_elliptic})
        if (v == Verdict::Mixed || v == Verdict::Inconclusive) return false;
    return true;
}

namespace {

Verdict zero_to_verdict(const TensorInvariant& t) {
    if (!t.computed) return Verdict::Inconclusive;
    switch (t.verdict.status) {
        case ZeroStatus::Zero: return Verdict::Yes;
        case ZeroStatus::NonZero: return Verdict::No;
        default: return Verdict::Inconclusive;
    }
}

}  // namespace

Classification classify(const InvariantSet& inv, Verdict parabolic) {
    Classification c;
    c.n = inv.n;
    c.parabolic = parabolic;
    c.low_n_caveat = inv.n < 3;
    if (c.low_n_caveat) c.notes.push_back("n < 3: the classification results are established for n >= 3");
    if (parabolic != Verdict::Yes) {
        c.primary_vanish = c.monge_ampere = c.linear_type = c.goursat = c.evolutionary = c.sub_elliptic =
            Verdict::NotApplicable;
        return c;
    }
    Verdict p1 = zero_to_verdict(inv.primary_j0), p2 = zero_to_verdict(inv.primary_jk);
    if (p1 == Verdict::No || p2 == Verdict::No)
        c.primary_vanish = Verdict::No;
    else if (p1 == Verdict::Yes && p2 == Verdict::Yes)
        c.primary_vanish = Verdict::Yes;
    else
        c.primary_vanish = Verdict::Inconclusive;

    if (c.primary_vanish == Verdict::No) {
        c.monge_ampere = c.linear_type = c.evolutionary = c.sub_elliptic = Verdict::No;
        c.goursat = Verdict::NotApplicable;
        c.notes.push_back("primary Monge-Ampere invariants do not vanish; later invariants are not defined");
        return c;
    }
    if (c.primary_vanish == Verdict::Inconclusive) {
        c.monge_ampere = c.linear_type = c.goursat = c.evolutionary = c.sub_elliptic = Verdict::Inconclusive;
        return c;
    }
    c.monge_ampere = zero_to_verdict(inv.secondary_residual);
    Verdict sec = zero_to_verdict(inv.secondary);
    Verdict ter = zero_to_verdict(inv.tertiary);
    // the defect block is only defined for n >= 3
    Verdict defect = inv.n < 3 ? Verdict::Yes : zero_to_verdict(inv.tertiary_defect);
    if (sec == Verdict::No || ter == Verdict::No)
        c.linear_type = Verdict::No;
    else if (sec == Verdict::Yes && ter == Verdict::Yes && defect == Verdict::Yes)
        c.linear_type = Verdict::Yes;
    else
        c.linear_type = Verdict::Inconclusive;
    if (defect == Verdict::No)
        c.notes.push_back("tertiary block of d omega is not a multiple of pi_ij ^ theta_j");

    Verdict ahat = zero_to_verdict(inv.a_hat);
    switch (inv.a_sign) {
        case Sign::Zero: c.goursat = Verdict::Yes; break;
        case Sign::Positive:
        case Sign::Negative: c.goursat = Verdict::No; break;
        case Sign::Mixed: c.goursat = Verdict::Mixed; break;
        case Sign::Inconclusive: c.goursat = Verdict::Inconclusive; break;
    }
    if (ahat == Verdict::No) {
        c.evolutionary = c.sub_elliptic = Verdict::No;
    } else if (ahat == Verdict::Inconclusive) {
        c.evolutionary = c.sub_elliptic = Verdict::Inconclusive;
    } else {
        switch (inv.a_sign) {
            case Sign::Zero:
                c.evolutionary = Verdict::No;
                c.sub_elliptic = Verdict::Yes;
                break;
            case Sign::Positive:
            case Sign::Negative:
                c.evolutionary = Verdict::Yes;
                c.sub_elliptic = Verdict::No;
                break;
            case Sign::Mixed:
                c.evolutionary = Verdict::Mixed;
                c.sub_elliptic = Verdict::No;
                break;
            case Sign::Inconclusive: c.evolutionary = c.sub_elliptic = Verdict::Inconclusive; break;
        }
    }
    return c;
}

// ---------- gauge ----------

GaugeElement identity_gauge(int n) {
    GaugeElement g;
    g.n = n;
    const int m = n + 1;
    g.k.assign(m, Rational(0));
    g.kup.assign(m, Rational(0));
    g.kab.assign(m, std::vector<Rational>(m, Rational(0)));
    g.Bj0.assign(n, Rational(0));
    g.R.assign(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i) g.R[i][i] = 1;
    g.S.assign(m, std::vector<Rational>(m, Rational(0)));
    g.D.assign(m, std::vector<std::vector<Rational>>(m, std::vector<Rational>(m, Rational(0))));
    g.T = g.D;
    return g;
}

namespace {

Rational small(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-4, 4), den(1, 4);
    Rational r(num(rng), den(rng));
    r.canonicalize();
    return r;
}

Rational scale(std::mt19937_64& rng, bool allow_negative) {
    std::uniform_int_distribution<int> num(1, 8), den(1, 4), sg(0, 1);
    Rational r(num(rng), den(rng));
    r.canonicalize();
    if (r > 2) r = 2;
    if (r < Rational(1, 2)) r = Rational(1, 2);
    if (allow_negative && sg(rng)) r = -r;
    return r;
}

void spatial_trace_free(std::vector<std::vector<Rational>>& x, int n) {
    Rational tr = 0;
    for (int i = 1; i <= n; ++i) tr += x[i][i];
    for (int i = 1; i <= n; ++i) x[i][i] -= tr / n;
}

}  // namespace

std::vector<std::vector<Rational>> random_rotation(int n, std::mt19937_64& rng) {
    QMat K(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            K[i][j] = small(rng);
            K[j][i] = -K[i][j];
        }
    QMat P = K, Q = K;  // P = I - K, Q = I + K
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            P[i][j] = (i == j ? 1 : 0) - K[i][j];
            Q[i][j] = (i == j ? 1 : 0) + K[i][j];
        }
    QMat Qi = rat_inverse(Q);
    QMat R(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) R[i][j] += P[i][k] * Qi[k][j];
    std::uniform_int_distribution<int> flip(0, 1);
    if (flip(rng))
        for (int i = 0; i < n; ++i) R[i][0] = -R[i][0];
    return R;
}

GaugeElement random_gauge(int n, std::mt19937_64& rng) {
    GaugeElement g = identity_gauge(n);
    const int m = n + 1;
    g.k_null = scale(rng, true);
    g.B00 = scale(rng, true);
    g.b = scale(rng, false);
    for (int a = 0; a < m; ++a) {
        g.k[a] = small(rng);
        g.kup[a] = small(rng);
    }
    for (int j = 0; j < n; ++j) g.Bj0[j] = small(rng);
    g.R = random_rotation(n, rng);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            g.kab[a][b] = g.kab[b][a] = small(rng);
            g.S[a][b] = g.S[b][a] = small(rng);
        }
    spatial_trace_free(g.kab, n);
    for (int c = 0; c < m; ++c) {
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) g.D[c][a][b] = g.D[c][b][a] = small(rng);
        spatial_trace_free(g.D[c], n);
    }
    // totally symmetric T with sum_i T_iic = 0, drawn from the constraint kernel
    std::vector<std::array<int, 3>> trip;
    std::map<std::array<int, 3>, int> pos;
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b)
            for (int c = b; c < m; ++c) {
                pos[{a, b, c}] = static_cast<int>(trip.size());
                trip.push_back({a, b, c});
            }
    auto key = [&](int a, int b, int c) {
        std::array<int, 3> t{a, b, c};
        std::sort(t.begin(), t.end());
        return pos.at(t);
    };
    std::vector<QVec> rows;
    for (int c = 0; c < m; ++c) {
        QVec r;
        for (int i = 1; i <= n; ++i) r[key(i, i, c)] += 1;
        rows.push_back(r);
    }
    std::vector<QVec> ker = nullspace(rows, static_cast<int>(trip.size()));
    std::vector<Rational> tv(trip.size(), Rational(0));
    for (const auto& v : ker) {
        Rational w = small(rng);
        for (const auto& [k, x] : v) tv[k] += w * x;
    }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) g.T[a][b][c] = tv[key(a, b, c)];
    return g;
}

Rational goursat_factor(const GaugeElement& g) { return g.B00 * g.k_null / (g.b * g.b); }

ParabolicCoframing apply_gauge(const ParabolicCoframing& cof, const GaugeElement& g) {
    const FrameLayout& L = cof.layout;
    const int n = cof.n;
    const int m = n + 1;
    const int N = L.size();
    if (g.n != n) throw InvarError("gauge element has the wrong n");
    QMat B(m, std::vector<Rational>(m, Rational(0)));
    B[0][0] = g.B00;
    for (int j = 1; j <= n; ++j) {
        B[j][0] = g.Bj0[j - 1];
        for (int i = 1; i <= n; ++i) B[j][i] = g.b * g.R[j - 1][i - 1];
    }
    QMat Binv = rat_inverse(B);
    QMat M(N, std::vector<Rational>(N, Rational(0)));
    M[L.theta_null()][L.theta_null()] = g.k_null;
    for (int a = 0; a < m; ++a) {
        M[L.theta(a)][L.theta_null()] = g.k[a];
        for (int b = 0; b < m; ++b) M[L.theta(a)][L.theta(b)] = B[b][a];
        auto& w = M[L.omega(a)];
        w[L.theta_null()] = g.kup[a];
        for (int b = 0; b < m; ++b) {
            w[L.omega(b)] += g.k_null * Binv[a][b];
            for (int c = 0; c < m; ++c) w[L.theta(c)] += Binv[a][b] * g.S[b][c];
        }
    }
    // pi_cd in old frame rows; pi_nn = -sum_{i<n} pi_ii
    auto add_pi = [&](std::vector<Rational>& row, int c, int d, const Rational& x) {
        int r = L.pi(c, d);
        if (r >= 0) {
            row[r] += x;
            return;
        }
        for (int i = 1; i < n; ++i) row[L.pi(i, i)] -= x;
    };
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            int r = L.pi(a, b);
            if (r < 0) continue;
            auto& row = M[r];
            row[L.theta_null()] += g.kab[a][b];
            for (int c = 0; c < m; ++c) {
                row[L.theta(c)] += g.D[c][a][b];
                if (sgn(g.T[a][b][c]) == 0) continue;
                for (int k = 0; k < N; ++k) row[k] += g.T[a][b][c] * M[L.omega(c)][k];
            }
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) {
                    Rational x = B[c][a] * B[d][b] / g.k_null;
                    if (sgn(x) != 0) add_pi(row, c, d, x);
                }
        }
    for (int j = 0; j < L.extra; ++j) M[L.comp(j)][L.comp(j)] = 1;
    QMat Mi = rat_inverse(M);

    // g . u uses the inverse matrix: f' = Mi f, f = M f'
    Matrix A(N, std::vector<Expr>(N, Expr(0))), Ainv = A;
    for (int r = 0; r < N; ++r)
        for (int s = 0; s < N; ++s) {
            if (sgn(Mi[r][s]) != 0) A[r][s] = Expr(Mi[r][s]);
            if (sgn(M[r][s]) != 0) Ainv[r][s] = Expr(M[r][s]);
        }
    ParabolicCoframing out = cof;
    std::vector<int> with;
    for (int k = 0; k < L.pi_start(); ++k) with.push_back(k);
    out.frame = transform_frame(cof.frame, A, Ainv, with);
    if (cof.basis) {
        const auto& old = cof.basis->frame();
        std::vector<Form> nf;
        for (int r = 0; r < N; ++r) {
            FormAccumulator acc(1);
            for (int s = 0; s < N; ++s)
                if (!A[r][s].is_zero()) acc.add(old[s], A[r][s]);
            nf.push_back(acc.build());
        }
        out.basis = std::make_shared<FrameBasis>(nf, mat_mul(cof.basis->inverse(), Ainv));
        out.roles.theta_null = nf[L.theta_null()];
        for (int a = 0; a < m; ++a) {
            out.roles.theta[a] = nf[L.theta(a)];
            out.roles.omega[a] = nf[L.omega(a)];
        }
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                int r = L.pi(a, b);
                if (r >= 0) {
                    out.roles.pi[{a, b}] = nf[r];
                } else {
                    Form f(1);
                    for (int i = 1; i < n; ++i) f = f - nf[L.pi(i, i)];
                    out.roles.pi[{a, b}] = f;
                }
            }
    }
    return out;
}

// ---------- reports ----------

namespace {

nlohmann::ordered_json tensor_json(const TensorInvariant& t, ZeroTester& zt, int dump_points) {
    nlohmann::ordered_json j;
    j["computed"] = t.computed;
    if (!t.computed) return j;
    j["verdict"] = status_name(t.verdict.status);
    nlohmann::ordered_json nz = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < t.entries.size(); ++k)
        if (!t.entries[k].is_zero()) nz.push_back(t.labels[k]);
    j["nonzero_entries"] = nz;
    if (dump_points > 0) {
        nlohmann::ordered_json samples = nlohmann::ordered_json::object();
        for (std::size_t k = 0; k < t.entries.size(); ++k) {
            if (t.entries[k].is_zero()) continue;
            nlohmann::ordered_json vals = nlohmann::ordered_json::array();
            for (int p = 0; p < std::min(dump_points, zt.size()); ++p)
                vals.push_back(value_str(zt.value_at(p, t.entries[k]), 20));
            samples[t.labels[k]] = vals;
        }
        j["samples"] = samples;
    }
    return j;
}

}  // namespace

nlohmann::ordered_json invariants_json(const InvariantSet& inv, ZeroTester& zt, int dump_points) {
    nlohmann::ordered_json j;
    j["primary_V0j0"] = tensor_json(inv.primary_j0, zt, dump_points);
    j["primary_V0jk"] = tensor_json(inv.primary_jk, zt, dump_points);
    j["secondary_Vjkl"] = tensor_json(inv.secondary, zt, dump_points);
    j["secondary_sym4_residual"] = tensor_json(inv.secondary_residual, zt, dump_points);
    j["tertiary_V"] = tensor_json(inv.tertiary, zt, dump_points);
    j["tertiary_defect"] = tensor_json(inv.tertiary_defect, zt, dump_points);
    nlohmann::ordered_json g;
    g["computed"] = inv.primary_zero();
    if (inv.primary_zero()) {
        g["a_sign"] = sign_name(inv.a_sign);
        if (dump_points > 0) {
            nlohmann::ordered_json vals = nlohmann::ordered_json::array();
            for (int p = 0; p < std::min(dump_points, zt.size()); ++p) vals.push_back(value_str(zt.value_at(p, inv.a), 20));
            g["a_samples"] = vals;
        }
        g["ahat"] = tensor_json(inv.a_hat, zt, dump_points);
    }
    j["goursat"] = g;
    return j;
}

nlohmann::ordered_json classification_json(const Classification& c) {
    nlohmann::ordered_json j;
    j["parabolic"] = verdict_name(c.parabolic);
    j["primary_vanish"] = verdict_name(c.primary_vanish);
    j["monge_ampere"] = verdict_name(c.monge_ampere);
    j["linear_type"] = verdict_name(c.linear_type);
    j["goursat"] = verdict_name(c.goursat);
    j["evolutionary"] = verdict_name(c.evolutionary);
    j["sub_elliptic"] = verdict_name(c.sub_elliptic);
    j["low_n_caveat"] = c.low_n_caveat;
    j["notes"] = c.notes;
    return j;
}

}  // namespace eds
