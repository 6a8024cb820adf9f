#include "eds/repso.hpp"

#include <algorithm>
#include <numeric>

namespace eds {

Tensor::Tensor(int n_, int rank_) : n(n_), rank(rank_) {
    std::size_t sz = 1;
    for (int k = 0; k < rank; ++k) sz *= static_cast<std::size_t>(n);
    data.assign(sz, Expr(0));
}

std::size_t Tensor::offset(const std::vector<int>& idx) const {
    std::size_t off = 0;
    for (int k = 0; k < rank; ++k) off = off * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[k]);
    return off;
}

std::vector<int> Tensor::index(std::size_t off) const {
    std::vector<int> idx(static_cast<std::size_t>(rank));
    for (int k = rank - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(off % static_cast<std::size_t>(n));
        off /= static_cast<std::size_t>(n);
    }
    return idx;
}

namespace {

Expr sum_of(std::vector<Expr>& t) { return t.empty() ? Expr(0) : make_add(std::move(t)); }

}  // namespace

Tensor traceless_project(const Tensor& t, int p, int q) {
    if (p == q || p < 0 || q < 0 || p >= t.rank || q >= t.rank) throw RepError("bad trace slots");
    Tensor out = t;
    const Expr inv_n(Rational(1, t.n));
    // group offsets by the remaining indices
    std::map<std::vector<int>, std::vector<Expr>> traces;
    for (std::size_t off = 0; off < t.data.size(); ++off) {
        auto idx = t.index(off);
        if (idx[p] != idx[q] || t.data[off].is_zero()) continue;
        idx[p] = idx[q] = -1;
        traces[idx].push_back(t.data[off]);
    }
    for (auto& [key, terms] : traces) {
        Expr tr = inv_n * sum_of(terms);
        for (int m = 0; m < t.n; ++m) {
            auto idx = key;
            idx[p] = idx[q] = m;
            out.at(idx) = out.at(idx) - tr;
        }
    }
    return out;
}

Tensor symmetrize4(const Tensor& t) {
    if (t.rank != 4) throw RepError("symmetrize4 needs a rank-4 tensor");
    Tensor out(t.n, 4);
    const Expr w(Rational(1, 24));
    for (std::size_t off = 0; off < t.data.size(); ++off) {
        auto idx = t.index(off);
        std::vector<int> perm{0, 1, 2, 3};
        std::vector<Expr> terms;
        do {
            const Expr& e = t.at({idx[perm[0]], idx[perm[1]], idx[perm[2]], idx[perm[3]]});
            if (!e.is_zero()) terms.push_back(e);
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.data[off] = w * sum_of(terms);
    }
    return out;
}

Tensor sym4_traceless(const Tensor& s) {
    const int n = s.n;
    Tensor tr1(n, 2);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            std::vector<Expr> t;
            for (int m = 0; m < n; ++m)
                if (!s.at({m, m, k, l}).is_zero()) t.push_back(s.at({m, m, k, l}));
            tr1.at({k, l}) = sum_of(t);
        }
    std::vector<Expr> t2;
    for (int m = 0; m < n; ++m)
        if (!tr1.at({m, m}).is_zero()) t2.push_back(tr1.at({m, m}));
    Expr tr2 = sum_of(t2);
    const Expr c1(Rational(1, n + 4));
    const Expr c2(Rational(1, (n + 2) * (n + 4)));
    Tensor out(n, 4);
    for (std::size_t off = 0; off < s.data.size(); ++off) {
        auto x = s.index(off);
        const int i = x[0], j = x[1], k = x[2], l = x[3];
        std::vector<Expr> d1;
        if (i == j) d1.push_back(tr1.at({k, l}));
        if (i == k) d1.push_back(tr1.at({j, l}));
        if (i == l) d1.push_back(tr1.at({j, k}));
        if (j == k) d1.push_back(tr1.at({i, l}));
        if (j == l) d1.push_back(tr1.at({i, k}));
        if (k == l) d1.push_back(tr1.at({i, j}));
        int dd = (i == j && k == l) + (i == k && j == l) + (i == l && j == k);
        std::vector<Expr> t{s.data[off]};
        if (!d1.empty()) t.push_back(-(c1 * make_add(d1)));
        if (dd) t.push_back(Expr(dd) * c2 * tr2);
        out.data[off] = make_add(t);
    }
    return out;
}

// ---------- exact linear algebra ----------

namespace {

void axpy(QVec& v, const Rational& a, const QVec& w) {
    for (const auto& [k, x] : w) {
        auto it = v.find(k);
        if (it == v.end()) {
            v.emplace(k, a * x);
        } else {
            it->second += a * x;
            if (sgn(it->second) == 0) v.erase(it);
        }
    }
}

// row echelon store: pivot column -> row normalized to 1 at the pivot
class Echelon {
public:
    bool insert(QVec v, bool reduce_back) {
        while (!v.empty()) {
            auto first = v.begin();
            auto it = piv_.find(first->first);
            if (it == piv_.end()) break;
            Rational a = -first->second;
            axpy(v, a, it->second);
        }
        // also clear later entries that hit existing pivots
        for (bool again = true; again && !v.empty();) {
            again = false;
            for (const auto& [k, x] : v) {
                auto it = piv_.find(k);
                if (it != piv_.end()) {
                    Rational a = -x;
                    axpy(v, a, it->second);
                    again = true;
                    break;
                }
            }
        }
        if (v.empty()) return false;
        int p = v.begin()->first;
        Rational inv = 1 / v.begin()->second;
        for (auto& [k, x] : v) x *= inv;
        if (reduce_back)
            for (auto& [q, row] : piv_) {
                auto it = row.find(p);
                if (it != row.end()) {
                    Rational a = -it->second;
                    axpy(row, a, v);
                }
            }
        piv_.emplace(p, std::move(v));
        return true;
    }
    int rank() const { return static_cast<int>(piv_.size()); }
    const std::map<int, QVec>& rows() const { return piv_; }

private:
    std::map<int, QVec> piv_;
};

// fast rank: only reduce on the leading entry
int leading_rank(const std::vector<QVec>& vecs) {
    std::map<int, QVec> piv;
    for (QVec v : vecs) {
        while (!v.empty()) {
            auto first = v.begin();
            auto it = piv.find(first->first);
            if (it == piv.end()) {
                Rational inv = 1 / first->second;
                for (auto& [k, x] : v) x *= inv;
                int p = v.begin()->first;
                piv.emplace(p, std::move(v));
                break;
            }
            Rational a = -first->second;
            axpy(v, a, it->second);
        }
    }
    return static_cast<int>(piv.size());
}

}  // namespace

int exact_rank(const std::vector<QVec>& vecs) { return leading_rank(vecs); }

std::vector<QVec> nullspace(const std::vector<QVec>& rows, int ncols) {
    Echelon e;
    for (const auto& r : rows) e.insert(r, true);
    std::vector<QVec> out;
    const auto& piv = e.rows();
    for (int f = 0; f < ncols; ++f) {
        if (piv.count(f)) continue;
        QVec x;
        x[f] = 1;
        for (const auto& [p, row] : piv) {
            auto it = row.find(f);
            if (it != row.end()) x[p] = -it->second;
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<std::vector<int>> subsets(int n, int r) {
    std::vector<std::vector<int>> out;
    if (r < 0 || r > n) return out;
    std::vector<int> cur(static_cast<std::size_t>(r));
    std::iota(cur.begin(), cur.end(), 0);
    while (true) {
        out.push_back(cur);
        int k = r - 1;
        while (k >= 0 && cur[k] == n - r + k) --k;
        if (k < 0) break;
        ++cur[k];
        for (int j = k + 1; j < r; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

namespace {

struct SubsetIndex {
    std::vector<std::vector<int>> list;
    std::map<std::vector<int>, int> pos;
    SubsetIndex(int n, int r) : list(subsets(n, r)) {
        for (std::size_t k = 0; k < list.size(); ++k) pos[list[k]] = static_cast<int>(k);
    }
    int size() const { return static_cast<int>(list.size()); }
    // sorted position and permutation sign of an ordered tuple; sign 0 on repeats
    std::pair<int, int> locate(std::vector<int> t) const {
        int sign = 1;
        for (std::size_t i = 1; i < t.size(); ++i)
            for (std::size_t j = i; j > 0 && t[j - 1] >= t[j]; --j) {
                if (t[j - 1] == t[j]) return {-1, 0};
                std::swap(t[j - 1], t[j]);
                sign = -sign;
            }
        return {pos.at(t), sign};
    }
};

std::vector<int> drop(const std::vector<int>& t, std::size_t s) {
    std::vector<int> out;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (k != s) out.push_back(t[k]);
    return out;
}

void check_nr(int n, int r, int rmin) {
    if (n < 1 || n > 8) throw RepError("n must be between 1 and 8");
    if (r < rmin || r > n) throw RepError("r out of range");
}

// Sym-peel: coordinates (I, J) of Lambda^r (x) Lambda^r -> (k, l, I', J'), symmetrized in k, l
std::map<long, Rational> peel(const QVec& v, int n, const SubsetIndex& lam, const SubsetIndex& lam1) {
    const int C = lam.size();
    const long C1 = lam1.size();
    std::map<long, Rational> out;
    const Rational half(1, 2);
    for (const auto& [coord, a] : v) {
        const auto& I = lam.list[coord / C];
        const auto& J = lam.list[coord % C];
        for (std::size_t s = 0; s < I.size(); ++s) {
            int k = I[s];
            int i1 = lam1.pos.at(drop(I, s));
            for (std::size_t t = 0; t < J.size(); ++t) {
                int l = J[t];
                int j1 = lam1.pos.at(drop(J, t));
                Rational c = a * half;
                if ((s + t) % 2) c = -c;
                out[((long(k) * n + l) * C1 + i1) * C1 + j1] += c;
                out[((long(l) * n + k) * C1 + i1) * C1 + j1] += c;
            }
        }
    }
    return out;
}

// traceless projection in the slot pair of a coordinate map, given how to split coordinates
template <class Split, class Join>
void project_pair(std::map<long, Rational>& v, int n, Split split, Join join) {
    std::map<long, Rational> traces;  // rest -> trace
    for (const auto& [c, x] : v) {
        auto [a, b, rest] = split(c);
        if (a == b) traces[rest] += x;
    }
    Rational inv_n(1, n);
    for (const auto& [rest, tr] : traces) {
        if (sgn(tr) == 0) continue;
        for (int m = 0; m < n; ++m) v[join(m, m, rest)] -= tr * inv_n;
    }
}

QVec compact(const std::map<long, Rational>& m) {
    QVec out;
    for (const auto& [k, x] : m)
        if (sgn(x) != 0) out.emplace(static_cast<int>(k), x);
    return out;
}

QVec apply_f_coords(const QVec& v, int n, int r, const SubsetIndex& lam, const SubsetIndex& lam1) {
    auto img = peel(v, n, lam, lam1);
    const long C1 = lam1.size();
    const long blk = C1 * C1;
    project_pair(
        img, n,
        [&](long c) { return std::make_tuple(int(c / blk / n), int(c / blk % n), c % blk); },
        [&](int a, int b, long rest) { return (long(a) * n + b) * blk + rest; });
    if (r == 2) {
        // second factor is Sym^2 W; project it as well
        project_pair(
            img, n,
            [&](long c) { return std::make_tuple(int(c / n % n), int(c % n), c / (long(n) * n)); },
            [&](int a, int b, long rest) { return rest * n * n + long(a) * n + b; });
    }
    return compact(img);
}

QVec apply_g_coords(const QVec& x, int n, int r) {
    std::map<long, Rational> z;
    if (r == 2) {
        for (const auto& [c, v] : x) {
            long k = c / (n * n * n), l = c / (n * n) % n, i = c / n % n, j = c % n;
            z[c] += v;
            z[((i * n + j) * n + k) * n + l] -= v;
        }
        return compact(z);
    }
    SubsetIndex lam1(n, r - 1), lam2(n, r - 2);
    const long C1 = lam1.size(), C2 = lam2.size();
    const long blk2 = C2 * C2;
    std::map<long, Rational> y;
    const Rational half(1, 2);
    for (const auto& [c, v] : x) {
        long kl = c / (C1 * C1);
        const auto& I = lam1.list[c / C1 % C1];
        const auto& J = lam1.list[c % C1];
        for (std::size_t s = 0; s < I.size(); ++s) {
            int k2 = I[s];
            long i2 = lam2.pos.at(drop(I, s));
            for (std::size_t t = 0; t < J.size(); ++t) {
                int l2 = J[t];
                long j2 = lam2.pos.at(drop(J, t));
                Rational w = v * half;
                if ((s + t) % 2) w = -w;
                y[((kl * n + k2) * n + l2) * blk2 + i2 * C2 + j2] += w;
                y[((kl * n + l2) * n + k2) * blk2 + i2 * C2 + j2] += w;
            }
        }
    }
    project_pair(
        y, n,
        [&](long c) {
            long q = c / blk2;
            return std::make_tuple(int(q / n % n), int(q % n), (q / (long(n) * n)) * blk2 + c % blk2);
        },
        [&](int a, int b, long rest) {
            long kl = rest / blk2;
            return ((kl * n + a) * n + b) * blk2 + rest % blk2;
        });
    for (const auto& [c, v] : y) {
        if (sgn(v) == 0) continue;
        long q = c / blk2;
        long rest = c % blk2;
        long kl = q / (long(n) * n), kl2 = q % (long(n) * n);
        z[c] += v;
        z[(kl2 * n * n + kl) * blk2 + rest] -= v;
    }
    return compact(z);
}

std::vector<QVec> sym0_basis(int n) {
    std::vector<QVec> out;
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) out.push_back(QVec{{k * n + l, 1}, {l * n + k, 1}});
    for (int k = 0; k + 1 < n; ++k) out.push_back(QVec{{k * n + k, 1}, {(n - 1) * n + n - 1, -1}});
    return out;
}

}  // namespace

BianchiSpace bianchi_basis(int n, int r) {
    check_nr(n, r, 1);
    BianchiSpace b;
    b.n = n;
    b.r = r;
    SubsetIndex lam(n, r), lamp(n, r + 1), lamm(n, r - 1);
    b.lam = lam.list;
    const int C = lam.size();
    std::vector<QVec> rows;
    for (const auto& K : lamp.list)
        for (const auto& Jm : lamm.list) {
            std::map<long, Rational> row;
            for (std::size_t s = 0; s < K.size(); ++s) {
                std::vector<int> J{K[s]};
                J.insert(J.end(), Jm.begin(), Jm.end());
                auto [jpos, sign] = lam.locate(J);
                if (sign == 0) continue;
                int ipos = lam.pos.at(drop(K, s));
                row[long(ipos) * C + jpos] += (s % 2 ? -sign : sign);
            }
            QVec q = compact(row);
            if (!q.empty()) rows.push_back(std::move(q));
        }
    b.basis = nullspace(rows, C * C);
    return b;
}

LinearMapMatrix map_f(int n, int r) {
    check_nr(n, r, 2);
    BianchiSpace b = bianchi_basis(n, r);
    SubsetIndex lam(n, r), lam1(n, r - 1);
    LinearMapMatrix m;
    m.domain = "b_" + std::to_string(r);
    m.codomain = r == 2 ? "Sym2_0 (x) Sym2_0" : "Sym2_0 (x) b_" + std::to_string(r - 1);
    m.rows = n * n * lam1.size() * lam1.size();
    for (const auto& v : b.basis) m.columns.push_back(apply_f_coords(v, n, r, lam, lam1));
    return m;
}

std::vector<QVec> g_domain_basis(int n, int r) {
    check_nr(n, r, 2);
    std::vector<QVec> first = sym0_basis(n);
    std::vector<QVec> second;
    int blk;
    if (r == 2) {
        second = sym0_basis(n);
        blk = n * n;
    } else {
        second = bianchi_basis(n, r - 1).basis;
        int c = static_cast<int>(subsets(n, r - 1).size());
        blk = c * c;
    }
    std::vector<QVec> out;
    for (const auto& a : first)
        for (const auto& b : second) {
            QVec v;
            for (const auto& [i, x] : a)
                for (const auto& [j, y] : b) v[i * blk + j] = x * y;
            out.push_back(std::move(v));
        }
    return out;
}

LinearMapMatrix map_g(int n, int r) {
    check_nr(n, r, 2);
    LinearMapMatrix m;
    m.domain = r == 2 ? "Sym2_0 (x) Sym2_0" : "Sym2_0 (x) b_" + std::to_string(r - 1);
    m.codomain = r == 2 ? "Lambda2(Sym2_0)" : "Lambda2(Sym2_0) (x) b_" + std::to_string(r - 2);
    for (const auto& v : g_domain_basis(n, r)) m.columns.push_back(apply_g_coords(v, n, r));
    return m;
}

ExactnessReport check_exactness(int n, int r) {
    check_nr(n, r, 2);
    ExactnessReport rep;
    rep.n = n;
    rep.r = r;
    LinearMapMatrix f = map_f(n, r);
    rep.dim_b = static_cast<int>(f.columns.size());
    rep.rank_f = exact_rank(f.columns);
    rep.injective = rep.rank_f == rep.dim_b;
    std::vector<QVec> dom = g_domain_basis(n, r);
    rep.dim_middle = exact_rank(dom);
    std::vector<QVec> both = dom;
    both.insert(both.end(), f.columns.begin(), f.columns.end());
    bool inside = exact_rank(both) == rep.dim_middle;
    bool gf_zero = true;
    for (const auto& c : f.columns)
        if (!apply_g_coords(c, n, r).empty()) gf_zero = false;
    rep.complex = inside && gf_zero;
    std::vector<QVec> g;
    for (const auto& v : dom) g.push_back(apply_g_coords(v, n, r));
    rep.rank_g = exact_rank(g);
    rep.dim_ker_g = rep.dim_middle - rep.rank_g;
    rep.homology = rep.dim_ker_g - rep.rank_f;
    rep.exact = rep.complex && rep.homology == 0;
    return rep;
}

int sym4_traceless_dim(int n) {
    if (n < 1 || n > 8) throw RepError("n must be between 1 and 8");
    std::vector<QVec> vecs;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k)
                for (int l = k; l < n; ++l) {
                    Tensor t(n, 4);
                    t.at({i, j, k, l}) = Expr(1);
                    Tensor h = sym4_traceless(symmetrize4(t));
                    QVec v;
                    for (std::size_t off = 0; off < h.data.size(); ++off)
                        if (!h.data[off].is_zero()) v[static_cast<int>(off)] = h.data[off].value();
                    vecs.push_back(std::move(v));
                }
    return exact_rank(vecs);
}

void check_pair_symmetric(const Tensor& V) {
    if (V.rank != 4) throw RepError("expected a rank-4 tensor");
    const int n = V.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const Expr& e = V.at({i, j, k, l});
                    if (e != V.at({j, i, k, l}) || e != V.at({i, j, l, k}) || e != V.at({k, l, i, j}))
                        throw RepError("tensor lacks pair symmetry");
                }
}

B2Split b2prime_split(const Tensor& V) {
    check_pair_symmetric(V);
    B2Split s;
    s.residual = sym4_traceless(symmetrize4(V));
    s.inside = Tensor(V.n, 4);
    for (std::size_t k = 0; k < V.data.size(); ++k) s.inside.data[k] = V.data[k] - s.residual.data[k];
    return s;
}

Tensor apply_f2(const Tensor& A) {
    const int n = A.n;
    Tensor F(n, 4);
    const Expr half(Rational(1, 2));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    std::vector<Expr> t;
                    for (const Expr& e : {A.at({k, i, l, j}), A.at({l, i, k, j})})
                        if (!e.is_zero()) t.push_back(e);
                    F.at({k, l, i, j}) = t.empty() ? Expr(0) : half * make_add(t);
                }
    return traceless_project(traceless_project(F, 0, 1), 2, 3);
}

Tensor solve_f2(const Tensor& rhs) {
    const int n = rhs.n;
    BianchiSpace b = bianchi_basis(n, 2);
    LinearMapMatrix f = map_f(n, 2);
    const int d = b.dim();
    // choose d independent codomain rows
    std::map<int, std::vector<Rational>> rowvals;
    for (int m = 0; m < d; ++m)
        for (const auto& [c, x] : f.columns[m]) {
            auto& rv = rowvals[c];
            if (rv.empty()) rv.assign(static_cast<std::size_t>(d), Rational(0));
            rv[m] = x;
        }
    std::vector<int> chosen;
    std::vector<QVec> acc;
    for (const auto& [c, rv] : rowvals) {
        QVec q;
        for (int m = 0; m < d; ++m)
            if (sgn(rv[m]) != 0) q[m] = rv[m];
        acc.push_back(q);
        if (exact_rank(acc) > static_cast<int>(chosen.size()))
            chosen.push_back(c);
        else
            acc.pop_back();
        if (static_cast<int>(chosen.size()) == d) break;
    }
    if (static_cast<int>(chosen.size()) != d) throw RepError("f_2 is not injective");
    // invert the square system by Gauss-Jordan
    std::vector<std::vector<Rational>> M(d, std::vector<Rational>(2 * d, Rational(0)));
    for (int r = 0; r < d; ++r) {
        for (int m = 0; m < d; ++m) M[r][m] = rowvals[chosen[r]][m];
        M[r][d + r] = 1;
    }
    for (int c = 0; c < d; ++c) {
        int p = c;
        while (sgn(M[p][c]) == 0) ++p;
        std::swap(M[p], M[c]);
        Rational inv = 1 / M[c][c];
        for (auto& x : M[c]) x *= inv;
        for (int r = 0; r < d; ++r)
            if (r != c && sgn(M[r][c]) != 0) {
                Rational a = M[r][c];
                for (int k = 0; k < 2 * d; ++k) M[r][k] -= a * M[c][k];
            }
    }
    std::vector<Expr> coef(static_cast<std::size_t>(d));
    for (int m = 0; m < d; ++m) {
        std::vector<Expr> t;
        for (int r = 0; r < d; ++r) {
            const Rational& w = M[m][d + r];
            const Expr& e = rhs.data[static_cast<std::size_t>(chosen[r])];
            if (sgn(w) != 0 && !e.is_zero()) t.push_back(Expr(w) * e);
        }
        coef[m] = sum_of(t);
    }
    SubsetIndex lam(n, 2);
    const int C = lam.size();
    Tensor A(n, 4);
    std::map<int, std::vector<Expr>> acc2;
    for (int m = 0; m < d; ++m) {
        if (coef[m].is_zero()) continue;
        for (const auto& [c, x] : b.basis[m]) acc2[c].push_back(Expr(x) * coef[m]);
    }
    for (auto& [c, terms] : acc2) {
        const auto& I = lam.list[c / C];
        const auto& J = lam.list[c % C];
        Expr v = sum_of(terms);
        for (int s1 = 0; s1 < 2; ++s1)
            for (int s2 = 0; s2 < 2; ++s2) {
                Expr w = (s1 + s2) % 2 ? -v : v;
                A.at({I[s1], I[1 - s1], J[s2], J[1 - s2]}) = w;
            }
    }
    return A;
}

}  // namespace eds
