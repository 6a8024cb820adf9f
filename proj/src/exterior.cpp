#include "eds/exterior.hpp"

#include "eds/io.hpp"

#include <toml.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace eds {

std::vector<int> mask_indices(Mask m) {
    std::vector<int> out;
    while (m) {
        out.push_back(__builtin_ctzll(m));
        m &= m - 1;
    }
    return out;
}

Mask mask_of(const std::vector<int>& idx) {
    Mask m = 0;
    for (int k : idx) m |= bit(k);
    return m;
}

int wedge_sign(Mask a, Mask b) {
    if (a & b) return 0;
    int inv = 0;
    Mask bb = b;
    while (bb) {
        int j = __builtin_ctzll(bb);
        bb &= bb - 1;
        Mask above = j >= 63 ? 0 : (~Mask(0) << (j + 1));
        inv += __builtin_popcountll(a & above);
    }
    return (inv & 1) ? -1 : 1;
}

// ---------- Form ----------

Form Form::scalar(const Expr& c) {
    Form f(0);
    if (!c.is_zero()) f.terms.emplace(0, c);
    return f;
}

Form Form::basis(int k, const Expr& c) {
    Form f(1);
    if (!c.is_zero()) f.terms.emplace(bit(k), c);
    return f;
}

Form Form::monomial(Mask m, const Expr& c) {
    Form f(mask_degree(m));
    if (!c.is_zero()) f.terms.emplace(m, c);
    return f;
}

Expr Form::coeff(Mask m) const {
    auto it = terms.find(m);
    return it == terms.end() ? Expr(0) : it->second;
}

void Form::add_term(Mask m, const Expr& c) {
    if (c.is_zero()) return;
    auto it = terms.find(m);
    if (it == terms.end()) {
        terms.emplace(m, c);
        return;
    }
    Expr s = it->second + c;
    if (s.is_zero())
        terms.erase(it);
    else
        it->second = s;
}

Form operator+(const Form& a, const Form& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    Form r = a;
    for (const auto& [m, c] : b.terms) r.add_term(m, c);
    return r;
}

Form operator-(const Form& a) {
    Form r(a.degree);
    for (const auto& [m, c] : a.terms) r.terms.emplace(m, -c);
    return r;
}

Form operator-(const Form& a, const Form& b) { return a + (-b); }

Form operator*(const Expr& c, const Form& a) {
    Form r(a.degree);
    if (c.is_zero()) return r;
    for (const auto& [m, x] : a.terms) {
        Expr p = c * x;
        if (!p.is_zero()) r.terms.emplace(m, p);
    }
    return r;
}

void FormAccumulator::add(Mask m, const Expr& c) {
    if (c.is_zero()) return;
    acc_[m].push_back(c);
}

void FormAccumulator::add(const Form& f, const Expr& scale) {
    if (scale.is_zero()) return;
    for (const auto& [m, c] : f.terms) add(m, scale.is_one() ? c : scale * c);
}

void FormAccumulator::add_wedge(Mask m, const Form& f, const Expr& scale) {
    if (scale.is_zero()) return;
    for (const auto& [fm, c] : f.terms) {
        int s = wedge_sign(m, fm);
        if (s == 0) continue;
        Expr t = scale.is_one() ? c : scale * c;
        add(m | fm, s > 0 ? t : -t);
    }
}

Form FormAccumulator::build() const {
    Form f(degree_);
    for (const auto& [m, v] : acc_) {
        Expr c = v.size() == 1 ? v[0] : make_add(v);
        if (!c.is_zero()) f.terms.emplace(m, c);
    }
    return f;
}

Form wedge(const Form& a, const Form& b) {
    FormAccumulator acc(a.degree + b.degree);
    for (const auto& [ma, ca] : a.terms) {
        for (const auto& [mb, cb] : b.terms) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            Expr t = ca * cb;
            acc.add(ma | mb, s > 0 ? t : -t);
        }
    }
    return acc.build();
}

Form wedge_all(const std::vector<Form>& fs) {
    Form r = Form::scalar(Expr(1));
    for (const Form& f : fs) r = wedge(r, f);
    return r;
}

std::string form_str(const Form& f, const std::vector<std::string>& names) {
    if (f.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : f.terms) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.str() << ")";
        for (int k : mask_indices(m)) os << "*" << (k < static_cast<int>(names.size()) ? names[k] : "e" + std::to_string(k));
    }
    return os.str();
}

// ---------- workspace and d ----------

int Workspace::index_of(const std::string& sym) const {
    for (int k = 0; k < size(); ++k)
        if (coframe[k] == sym) return k;
    return -1;
}

Form differential(const Workspace& ws, const Expr& f) {
    FormAccumulator acc(1);
    const VarSet& vs = f.node().vars;
    for (int v = 0; v < kMaxVars; ++v) {
        if (!vs.test(static_cast<std::size_t>(v))) continue;
        const std::string& name = var_name(v);
        auto it = ws.functions.find(name);
        if (it == ws.functions.end()) throw ExteriorError("undeclared function '" + name + "'");
        Expr dv = differentiate(f, v);
        if (dv.is_zero()) continue;
        acc.add(it->second, dv);
    }
    return acc.build();
}

Form exterior_derivative(const Workspace& ws, const Form& a) {
    FormAccumulator acc(a.degree + 1);
    for (const auto& [m, c] : a.terms) {
        if (!c.is_const()) {
            Form dc = differential(ws, c);
            for (const auto& [k, g] : dc.terms) {
                int s = wedge_sign(k, m);
                if (s == 0) continue;
                acc.add(k | m, s > 0 ? g : -g);
            }
        }
        int j = 0;
        for (int k : mask_indices(m)) {
            const auto& de = ws.structure.at(static_cast<std::size_t>(k));
            if (!de) throw ExteriorError("structure equation for '" + ws.coframe[k] + "' is unknown");
            Mask left = m & (bit(k) - 1);
            Mask right = m & ~(bit(k) | (bit(k) - 1));
            int base = (j & 1) ? -1 : 1;
            for (const auto& [dm, h] : de->terms) {
                int s1 = wedge_sign(left, dm);
                if (s1 == 0) continue;
                int s2 = wedge_sign(left | dm, right);
                if (s2 == 0) continue;
                int s = base * s1 * s2;
                Expr t = c.is_one() ? h : c * h;
                acc.add(left | dm | right, s > 0 ? t : -t);
            }
            ++j;
        }
    }
    return acc.build();
}

namespace {

Form substitute_cached(const Form& a, const std::vector<Form>& images, std::unordered_map<Mask, Form>& cache) {
    std::optional<FormAccumulator> acc;
    for (const auto& [m, c] : a.terms) {
        auto it = cache.find(m);
        if (it == cache.end()) {
            Form img = Form::scalar(Expr(1));
            for (int k : mask_indices(m)) img = wedge(img, images.at(static_cast<std::size_t>(k)));
            it = cache.emplace(m, std::move(img)).first;
        }
        if (!acc) acc.emplace(mask_degree(m));
        acc->add(it->second, c);
    }
    if (!acc) return Form(a.degree);
    return acc->build();
}

}  // namespace

Form substitute(const Form& a, const std::vector<Form>& images) {
    std::unordered_map<Mask, Form> cache;
    return substitute_cached(a, images, cache);
}

// ---------- linear algebra over Expr ----------

Matrix frame_matrix(const std::vector<Form>& frame, int m) {
    Matrix f(frame.size(), std::vector<Expr>(static_cast<std::size_t>(m), Expr(0)));
    for (std::size_t r = 0; r < frame.size(); ++r) {
        if (frame[r].degree != 1) throw ExteriorError("frame member is not a 1-form");
        for (const auto& [mk, c] : frame[r].terms) {
            int k = __builtin_ctzll(mk);
            if (k >= m) throw ExteriorError("frame member outside the ambient coframe");
            f[r][static_cast<std::size_t>(k)] = c;
        }
    }
    return f;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    Matrix c(n, std::vector<Expr>(m, Expr(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<Expr> t;
            for (std::size_t l = 0; l < k; ++l)
                if (!a[i][l].is_zero() && !b[l][j].is_zero()) t.push_back(a[i][l] * b[l][j]);
            if (!t.empty()) c[i][j] = make_add(std::move(t));
        }
    return c;
}

namespace {

Expr prune(const Expr& e, ZeroTester& zt) {
    if (e.is_const()) return e;
    return zt.test(e).status == ZeroStatus::Zero ? Expr(0) : e;
}

}  // namespace

Matrix symbolic_inverse(const Matrix& a, ZeroTester& zt) {
    // Gauss-Jordan with full pivoting: R F = P with P a permutation, so F^{-1} = P^T R.
    const std::size_t n = a.size();
    Matrix w = a;
    Matrix inv(n, std::vector<Expr>(n, Expr(0)));
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i].size() != n) throw ExteriorError("matrix is not square");
        inv[i][i] = Expr(1);
    }
    std::vector<bool> row_used(n, false), col_used(n, false);
    std::vector<std::size_t> row_of(n, n);
    for (std::size_t step = 0; step < n; ++step) {
        // constant pivots first, in the sparsest row; else the smallest certified entry
        std::size_t br = n, bc = n, best_cost = 0;
        bool best_const = false;
        for (std::size_t r = 0; r < n; ++r) {
            if (row_used[r]) continue;
            std::size_t nnz = 0;
            for (std::size_t c = 0; c < n; ++c)
                if (!col_used[c] && !w[r][c].is_zero()) ++nnz;
            for (std::size_t c = 0; c < n; ++c) {
                if (col_used[c] || w[r][c].is_zero() || !w[r][c].is_const()) continue;
                if (!best_const || nnz < best_cost) {
                    br = r;
                    bc = c;
                    best_cost = nnz;
                    best_const = true;
                }
            }
        }
        if (!best_const) {
            // Markowitz fill-in estimate, then expression size
            std::vector<std::size_t> rnz(n, 0), cnz(n, 0);
            for (std::size_t r = 0; r < n; ++r) {
                if (row_used[r]) continue;
                for (std::size_t c = 0; c < n; ++c)
                    if (!col_used[c] && !w[r][c].is_zero()) {
                        ++rnz[r];
                        ++cnz[c];
                    }
            }
            std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> cand;
            for (std::size_t r = 0; r < n; ++r) {
                if (row_used[r]) continue;
                for (std::size_t c = 0; c < n; ++c)
                    if (!col_used[c] && !w[r][c].is_zero())
                        cand.emplace_back((rnz[r] - 1) * (cnz[c] - 1), dag_size(w[r][c]), r, c);
            }
            std::sort(cand.begin(), cand.end());
            for (const auto& [fill, sz, r, c] : cand) {
                if (zt.nonzero_everywhere(w[r][c])) {
                    br = r;
                    bc = c;
                    break;
                }
            }
        }
        if (br == n) throw ExteriorError("frame not invertible (no certified pivot)");
        row_used[br] = true;
        col_used[bc] = true;
        row_of[bc] = br;
        if (!w[br][bc].is_one()) {
            Expr pinv = make_pow(w[br][bc], -1);
            for (std::size_t j = 0; j < n; ++j) {
                if (!w[br][j].is_zero()) w[br][j] = j == bc ? Expr(1) : prune(w[br][j] * pinv, zt);
                if (!inv[br][j].is_zero()) inv[br][j] = prune(inv[br][j] * pinv, zt);
            }
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == br || w[r][bc].is_zero()) continue;
            Expr f = w[r][bc];
            for (std::size_t j = 0; j < n; ++j) {
                if (!w[br][j].is_zero()) w[r][j] = j == bc ? Expr(0) : prune(w[r][j] - f * w[br][j], zt);
                if (!inv[br][j].is_zero()) inv[r][j] = prune(inv[r][j] - f * inv[br][j], zt);
            }
        }
    }
    Matrix out(n);
    for (std::size_t c = 0; c < n; ++c) out[c] = inv[row_of[c]];
    return out;
}

int value_rank(const std::vector<std::vector<Value>>& rows_in, const Float& tol) {
    if (rows_in.empty()) return 0;
    bool exact = true;
    for (const auto& r : rows_in)
        for (const auto& v : r)
            if (!std::holds_alternative<Rational>(v)) exact = false;
    const std::size_t cols = rows_in[0].size();
    int rank = 0;
    if (exact) {
        std::vector<std::vector<Rational>> m;
        for (const auto& r : rows_in) {
            std::vector<Rational> row;
            for (const auto& v : r) row.push_back(std::get<Rational>(v));
            m.push_back(std::move(row));
        }
        std::size_t row = 0;
        for (std::size_t c = 0; c < cols && row < m.size(); ++c) {
            std::size_t p = row;
            while (p < m.size() && sgn(m[p][c]) == 0) ++p;
            if (p == m.size()) continue;
            std::swap(m[p], m[row]);
            for (std::size_t r = row + 1; r < m.size(); ++r) {
                if (sgn(m[r][c]) == 0) continue;
                Rational f = m[r][c] / m[row][c];
                for (std::size_t j = c; j < cols; ++j) m[r][j] -= f * m[row][j];
            }
            ++row;
            ++rank;
        }
        return rank;
    }
    std::vector<std::vector<Float>> m;
    Float scale = 0;
    for (const auto& r : rows_in) {
        std::vector<Float> row;
        for (const auto& v : r) {
            row.push_back(to_float(v));
            scale = std::max(scale, Float(abs(row.back())));
        }
        m.push_back(std::move(row));
    }
    if (scale == 0) return 0;
    std::size_t row = 0;
    for (std::size_t c = 0; c < cols && row < m.size(); ++c) {
        std::size_t p = row;
        for (std::size_t r = row; r < m.size(); ++r)
            if (abs(m[r][c]) > abs(m[p][c])) p = r;
        if (abs(m[p][c]) <= tol * scale) continue;
        std::swap(m[p], m[row]);
        for (std::size_t r = row + 1; r < m.size(); ++r) {
            Float f = m[r][c] / m[row][c];
            for (std::size_t j = c; j < cols; ++j) m[r][j] -= f * m[row][j];
        }
        ++row;
        ++rank;
    }
    return rank;
}

int sampled_rank(const std::vector<Form>& forms, int m, ZeroTester& zt) {
    Matrix f = frame_matrix(forms, m);
    int best = 0;
    int pts = std::min(3, zt.size());
    PrecisionScope ps(zt.params().precision);
    Float tol = zt.sqrt_tol();
    for (int i = 0; i < pts; ++i) {
        std::vector<std::vector<Value>> rows;
        for (const auto& r : f) {
            std::vector<Value> row;
            for (const auto& e : r) row.push_back(e.is_const() ? Value(e.value()) : zt.value_at(i, e));
            rows.push_back(std::move(row));
        }
        best = std::max(best, value_rank(rows, tol));
    }
    return best;
}

FrameBasis::FrameBasis(std::vector<Form> frame, int ambient, ZeroTester& zt) : frame_(std::move(frame)) {
    if (static_cast<int>(frame_.size()) != ambient)
        throw ExteriorError("frame has " + std::to_string(frame_.size()) + " members, coframe has " + std::to_string(ambient));
    inv_ = symbolic_inverse(frame_matrix(frame_, ambient), zt);
    build_images();
}

FrameBasis::FrameBasis(std::vector<Form> frame, Matrix inv) : frame_(std::move(frame)), inv_(std::move(inv)) {
    if (inv_.size() != frame_.size()) throw ExteriorError("inverse has wrong size");
    build_images();
}

FrameBasis FrameBasis::through(const FrameBasis& via, std::vector<Form> frame, ZeroTester& zt) {
    const int m = static_cast<int>(via.frame().size());
    if (static_cast<int>(frame.size()) != m) throw ExteriorError("frame size does not match the intermediate basis");
    std::vector<Form> rel;
    for (const Form& f : frame) {
        Form r = via.expand(f);
        for (auto it = r.terms.begin(); it != r.terms.end();) {
            if (!it->second.is_const() && zt.test(it->second).status == ZeroStatus::Zero)
                it = r.terms.erase(it);
            else
                ++it;
        }
        rel.push_back(std::move(r));
    }
    // f = A h, h = H e  =>  e = H^{-1} A^{-1} f
    Matrix ainv = symbolic_inverse(frame_matrix(rel, m), zt);
    return FrameBasis(std::move(frame), mat_mul(via.inverse(), ainv));
}

void FrameBasis::build_images() {
    // F e = f, so e = F^{-1} f
    const std::size_t m = inv_.size();
    images_.assign(m, Form(1));
    for (std::size_t k = 0; k < m; ++k) {
        Form img(1);
        for (std::size_t r = 0; r < m; ++r)
            if (!inv_[k][r].is_zero()) img.terms.emplace(bit(static_cast<int>(r)), inv_[k][r]);
        images_[k] = std::move(img);
    }
}

Form FrameBasis::expand(const Form& a) const { return substitute(a, images_); }

Form expand_in_basis(const Workspace& ws, const Form& a, const std::vector<Form>& frame, ZeroTester& zt) {
    FrameBasis fb(frame, ws.size(), zt);
    return fb.expand(a);
}

std::vector<int> greedy_complement(const std::vector<Form>& gens, int m, ZeroTester& zt) {
    std::vector<Form> cur = gens;
    int rank = sampled_rank(cur, m, zt);
    if (rank < static_cast<int>(gens.size())) throw ExteriorError("dependent generators");
    std::vector<int> comp;
    for (int k = 0; k < m && rank < m; ++k) {
        cur.push_back(Form::basis(k));
        int r = sampled_rank(cur, m, zt);
        if (r > rank) {
            rank = r;
            comp.push_back(k);
        } else {
            cur.pop_back();
        }
    }
    return comp;
}

Form reduce_mod(const Form& a, const PfaffianIdeal& ideal, int m, ZeroTester& zt) {
    const auto& gens = ideal.generators;
    std::vector<int> comp = greedy_complement(gens, m, zt);
    std::vector<Form> frame = gens;
    for (int k : comp) frame.push_back(Form::basis(k));
    FrameBasis fb(frame, m, zt);
    Form ex = fb.expand(a);
    const int g = static_cast<int>(gens.size());
    const Mask gen_mask = g >= 64 ? ~Mask(0) : (bit(g) - 1);
    Form out(a.degree);
    for (const auto& [mk, c] : ex.terms) {
        if (mk & gen_mask) continue;
        Mask amb = 0;
        for (int r : mask_indices(mk)) amb |= bit(comp[static_cast<std::size_t>(r - g)]);
        Expr pc = prune(c, zt);
        if (!pc.is_zero()) out.terms.emplace(amb, pc);
    }
    return out;
}

ValidationReport validate_workspace(const Workspace& ws, ZeroTester& zt) {
    ValidationReport rep;
    auto check = [&](const std::string& where, const Form& dd) {
        ++rep.checked;
        for (const auto& [mk, c] : dd.terms) {
            if (zt.test(c).status != ZeroStatus::Zero) {
                rep.pass = false;
                std::string mono;
                for (int k : mask_indices(mk)) mono += (mono.empty() ? "" : "^") + ws.coframe[k];
                rep.failures.push_back({where, mono, c.str()});
            }
        }
    };
    for (int k = 0; k < ws.size(); ++k) {
        const auto& de = ws.structure[static_cast<std::size_t>(k)];
        if (!de) {
            rep.pass = false;
            rep.failures.push_back({"d(" + ws.coframe[k] + ")", "", "unknown structure equation"});
            continue;
        }
        try {
            check("d(d" + ws.coframe[k] + ")", exterior_derivative(ws, *de));
        } catch (const std::exception& e) {
            rep.pass = false;
            rep.failures.push_back({"d(d" + ws.coframe[k] + ")", "", e.what()});
        }
    }
    for (const auto& [name, df] : ws.functions) {
        try {
            check("d(d" + name + ")", exterior_derivative(ws, df));
        } catch (const std::exception& e) {
            rep.pass = false;
            rep.failures.push_back({"d(d" + name + ")", "", e.what()});
        }
    }
    return rep;
}

Workspace reframe(const Workspace& ws, const FrameBasis& fb, const std::vector<std::string>& names,
                  const std::vector<int>& with_structure) {
    Workspace out;
    out.name = ws.name;
    out.mode = Mode::Abstract;
    out.coframe = names;
    out.domain = ws.domain;
    for (const auto& [name, df] : ws.functions) out.functions.emplace(name, fb.expand(df));
    out.structure.assign(names.size(), std::nullopt);
    std::vector<int> which = with_structure;
    if (which.empty())
        for (int r = 0; r < static_cast<int>(names.size()); ++r) which.push_back(r);
    for (int r : which) {
        Form d = exterior_derivative(ws, fb.frame().at(static_cast<std::size_t>(r)));
        out.structure[static_cast<std::size_t>(r)] = fb.expand(d);
    }
    return out;
}

// ---------- workspace files ----------

std::vector<std::string> workspace_variables(const Workspace& ws) {
    std::vector<std::string> v;
    for (const auto& [name, df] : ws.functions) v.push_back(name);
    return v;
}

Form parse_form_terms(const std::vector<std::vector<std::string>>& terms, const Workspace& ws,
                      const std::vector<std::string>& vars) {
    std::optional<int> degree;
    std::map<Mask, std::vector<Expr>> acc;
    for (const auto& t : terms) {
        if (t.empty()) throw ExteriorError("empty form term");
        Expr c = parse_expr(t[0], vars);
        std::vector<int> idx;
        for (std::size_t i = 1; i < t.size(); ++i) {
            int k = ws.index_of(t[i]);
            if (k < 0) throw ExteriorError("unknown coframe symbol '" + t[i] + "'");
            idx.push_back(k);
        }
        int deg = static_cast<int>(idx.size());
        if (degree && *degree != deg) throw ExteriorError("mixed degrees in form");
        degree = deg;
        // sort with sign
        int sign = 1;
        bool repeated = false;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j + 1 < idx.size() - i; ++j) {
                if (idx[j] == idx[j + 1]) repeated = true;
                if (idx[j] > idx[j + 1]) {
                    std::swap(idx[j], idx[j + 1]);
                    sign = -sign;
                }
            }
        for (std::size_t j = 0; j + 1 < idx.size(); ++j)
            if (idx[j] == idx[j + 1]) repeated = true;
        if (repeated) continue;
        acc[mask_of(idx)].push_back(sign > 0 ? c : -c);
    }
    Form f(degree.value_or(0));
    for (auto& [m, v] : acc) {
        Expr c = make_add(v);
        if (!c.is_zero()) f.terms.emplace(m, c);
    }
    return f;
}

std::vector<std::vector<std::string>> form_terms(const Form& f, const std::vector<std::string>& names) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [m, c] : f.terms) {
        std::vector<std::string> t{c.str()};
        for (int k : mask_indices(m)) t.push_back(names.at(static_cast<std::size_t>(k)));
        out.push_back(std::move(t));
    }
    return out;
}

using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> json_terms(const json& j) {
    std::vector<std::vector<std::string>> out;
    if (!j.is_array()) throw ExteriorError("form must be an array of terms");
    for (const auto& t : j) {
        if (!t.is_array()) throw ExteriorError("form term must be an array of strings");
        std::vector<std::string> row;
        for (const auto& s : t) {
            if (!s.is_string()) throw ExteriorError("form term entries must be strings");
            row.push_back(s.get<std::string>());
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

Workspace workspace_from_json(const json& j) {
    Workspace ws;
    if (j.contains("kind") && j["kind"] != "workspace") throw ExteriorError("file kind is not 'workspace'");
    ws.name = j.value("name", std::string("workspace"));
    std::string mode = j.value("mode", std::string("abstract"));
    if (mode == "abstract")
        ws.mode = Mode::Abstract;
    else if (mode == "coordinate")
        ws.mode = Mode::Coordinate;
    else
        throw ExteriorError("unknown mode '" + mode + "'");
    if (!j.contains("coframe") || !j["coframe"].contains("symbols")) throw ExteriorError("missing [coframe] symbols");
    for (const auto& s : j["coframe"]["symbols"]) ws.coframe.push_back(s.get<std::string>());
    if (ws.size() > kMaxCoframe) throw ExteriorError("coframe larger than 64 symbols");
    std::set<std::string> uniq(ws.coframe.begin(), ws.coframe.end());
    if (uniq.size() != ws.coframe.size()) throw ExteriorError("duplicate coframe symbol");

    std::vector<std::string> vars;
    if (j.contains("functions"))
        for (auto it = j["functions"].begin(); it != j["functions"].end(); ++it) vars.push_back(it.key());
    if (j.contains("functions"))
        for (auto it = j["functions"].begin(); it != j["functions"].end(); ++it)
            ws.functions.emplace(it.key(), parse_form_terms(json_terms(it.value()), ws, vars));
    for (const auto& [name, df] : ws.functions)
        if (!df.empty() && df.degree != 1) throw ExteriorError("differential of '" + name + "' is not a 1-form");

    ws.structure.assign(ws.coframe.size(), std::nullopt);
    if (ws.mode == Mode::Coordinate)
        for (auto& s : ws.structure) s = Form(2);
    if (j.contains("structure")) {
        for (auto it = j["structure"].begin(); it != j["structure"].end(); ++it) {
            int k = ws.index_of(it.key());
            if (k < 0) throw ExteriorError("structure for unknown symbol '" + it.key() + "'");
            Form f = parse_form_terms(json_terms(it.value()), ws, vars);
            if (!f.empty() && f.degree != 2) throw ExteriorError("structure of '" + it.key() + "' is not a 2-form");
            f.degree = 2;
            ws.structure[static_cast<std::size_t>(k)] = f;
        }
    }
    auto one_form = [&](const json& x) {
        Form f = parse_form_terms(json_terms(x), ws, vars);
        if (!f.empty() && f.degree != 1) throw ExteriorError("coframing member is not a 1-form");
        f.degree = 1;
        return f;
    };
    if (j.contains("coframing")) {
        const json& c = j["coframing"];
        RoleFrame rf;
        rf.theta_null = one_form(c.at("theta_null"));
        for (const auto& t : c.at("theta")) rf.theta.push_back(one_form(t));
        for (const auto& t : c.at("omega")) rf.omega.push_back(one_form(t));
        if (rf.theta.size() != rf.omega.size() || rf.theta.size() < 2) throw ExteriorError("coframing theta/omega size mismatch");
        const int n = rf.n();
        if (n > 9) throw ExteriorError("coframing supports n <= 9");
        for (auto it = c.at("pi").begin(); it != c.at("pi").end(); ++it) {
            const std::string& key = it.key();
            if (key.size() != 2 || !std::isdigit(static_cast<unsigned char>(key[0])) || !std::isdigit(static_cast<unsigned char>(key[1])))
                throw ExteriorError("pi key must be two digits, got '" + key + "'");
            int a = key[0] - '0', b = key[1] - '0';
            if (a > b || b > n) throw ExteriorError("pi key out of range: '" + key + "'");
            rf.pi.emplace(std::make_pair(a, b), one_form(it.value()));
        }
        ws.coframing = std::move(rf);
    }
    Domain& d = ws.domain;
    d.variables = vars;
    if (j.contains("domain")) {
        const json& dj = j["domain"];
        if (dj.contains("constraints"))
            for (const auto& s : dj["constraints"]) d.constraints.push_back(parse_expr(s.get<std::string>(), vars));
        if (dj.contains("base_point")) {
            std::map<std::string, Rational> bp;
            for (auto it = dj["base_point"].begin(); it != dj["base_point"].end(); ++it) {
                Expr e = parse_expr(it.value().get<std::string>(), {});
                bp[it.key()] = e.value();
            }
            d.base_point = bp;
        }
    }
    return ws;
}

namespace {

json terms_json(const Form& f, const std::vector<std::string>& names) { return json(form_terms(f, names)); }

}  // namespace

json workspace_json(const Workspace& ws) {
    json j = json::object();
    j["kind"] = "workspace";
    j["name"] = ws.name;
    j["mode"] = ws.mode == Mode::Abstract ? "abstract" : "coordinate";
    j["coframe"]["symbols"] = ws.coframe;
    j["functions"] = json::object();
    for (const auto& [name, df] : ws.functions) j["functions"][name] = terms_json(df, ws.coframe);
    j["structure"] = json::object();
    for (int k = 0; k < ws.size(); ++k) {
        const auto& s = ws.structure[static_cast<std::size_t>(k)];
        if (!s) continue;
        if (ws.mode == Mode::Coordinate && s->empty()) continue;
        j["structure"][ws.coframe[k]] = terms_json(*s, ws.coframe);
    }
    if (ws.coframing) {
        const RoleFrame& rf = *ws.coframing;
        json c;
        c["theta_null"] = terms_json(rf.theta_null, ws.coframe);
        c["theta"] = json::array();
        for (const auto& t : rf.theta) c["theta"].push_back(terms_json(t, ws.coframe));
        c["omega"] = json::array();
        for (const auto& t : rf.omega) c["omega"].push_back(terms_json(t, ws.coframe));
        c["pi"] = json::object();
        for (const auto& [ab, f] : rf.pi) c["pi"][std::to_string(ab.first) + std::to_string(ab.second)] = terms_json(f, ws.coframe);
        j["coframing"] = c;
    }
    json d = json::object();
    json cons = json::array();
    for (const auto& e : ws.domain.constraints) cons.push_back(e.str());
    d["constraints"] = cons;
    if (ws.domain.base_point) {
        d["base_point"] = json::object();
        for (const auto& [k, v] : *ws.domain.base_point) d["base_point"][k] = v.get_str();
    }
    j["domain"] = d;
    return j;
}

json toml_to_json(const toml::node& n) {
    if (auto t = n.as_table()) {
        json o = json::object();
        for (const auto& [k, v] : *t) o[std::string(k.str())] = toml_to_json(v);
        return o;
    }
    if (auto a = n.as_array()) {
        json o = json::array();
        for (const auto& v : *a) o.push_back(toml_to_json(v));
        return o;
    }
    if (auto s = n.as_string()) return json(s->get());
    if (auto i = n.as_integer()) return json(i->get());
    if (auto f = n.as_floating_point()) return json(f->get());
    if (auto b = n.as_boolean()) return json(b->get());
    throw ExteriorError("unsupported TOML value type");
}

namespace {

std::string toml_quote(const std::string& s) {
    std::string o = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') o += '\\';
        o += c;
    }
    return o + "\"";
}

std::string toml_terms(const Form& f, const std::vector<std::string>& names) {
    std::string o = "[";
    bool first = true;
    for (const auto& t : form_terms(f, names)) {
        if (!first) o += ", ";
        first = false;
        o += "[";
        for (std::size_t i = 0; i < t.size(); ++i) o += (i ? ", " : "") + toml_quote(t[i]);
        o += "]";
    }
    return o + "]";
}

}  // namespace

Workspace load_workspace_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ExteriorError(std::string("JSON parse error: ") + e.what());
    }
    return workspace_from_json(j);
}

Workspace load_workspace_toml(const std::string& text) {
    toml::table tbl;
    try {
        tbl = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
        throw ExteriorError(os.str());
    }
    return workspace_from_json(toml_to_json(tbl));
}

json load_document_text(const std::string& text, bool is_json) {
    if (is_json) {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ExteriorError(std::string("JSON parse error: ") + e.what());
        }
    }
    try {
        return toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
        throw ExteriorError(os.str());
    }
}

json load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ExteriorError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    return load_document_text(ss.str(), is_json);
}

Workspace load_workspace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ExteriorError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return load_workspace_json(ss.str());
    return load_workspace_toml(ss.str());
}

std::string workspace_to_json(const Workspace& ws) { return workspace_json(ws).dump(2) + "\n"; }

std::string workspace_to_toml(const Workspace& ws) {
    std::ostringstream os;
    os << "kind = \"workspace\"\n";
    os << "name = " << toml_quote(ws.name) << "\n";
    os << "mode = \"" << (ws.mode == Mode::Abstract ? "abstract" : "coordinate") << "\"\n\n";
    os << "[coframe]\nsymbols = [";
    for (std::size_t i = 0; i < ws.coframe.size(); ++i) os << (i ? ", " : "") << toml_quote(ws.coframe[i]);
    os << "]\n\n[functions]\n";
    for (const auto& [name, df] : ws.functions) os << toml_quote(name) << " = " << toml_terms(df, ws.coframe) << "\n";
    os << "\n[structure]\n";
    for (int k = 0; k < ws.size(); ++k) {
        const auto& s = ws.structure[static_cast<std::size_t>(k)];
        if (!s) continue;
        if (ws.mode == Mode::Coordinate && s->empty()) continue;
        os << toml_quote(ws.coframe[k]) << " = " << toml_terms(*s, ws.coframe) << "\n";
    }
    if (ws.coframing) {
        const RoleFrame& rf = *ws.coframing;
        os << "\n[coframing]\ntheta_null = " << toml_terms(rf.theta_null, ws.coframe) << "\n";
        os << "theta = [\n";
        for (const auto& t : rf.theta) os << "  " << toml_terms(t, ws.coframe) << ",\n";
        os << "]\nomega = [\n";
        for (const auto& t : rf.omega) os << "  " << toml_terms(t, ws.coframe) << ",\n";
        os << "]\n\n[coframing.pi]\n";
        for (const auto& [ab, f] : rf.pi)
            os << "\"" << ab.first << ab.second << "\" = " << toml_terms(f, ws.coframe) << "\n";
    }
    os << "\n[domain]\nconstraints = [";
    for (std::size_t i = 0; i < ws.domain.constraints.size(); ++i)
        os << (i ? ", " : "") << toml_quote(ws.domain.constraints[i].str());
    os << "]\n";
    if (ws.domain.base_point) {
        os << "\n[domain.base_point]\n";
        for (const auto& [k, v] : *ws.domain.base_point) os << toml_quote(k) << " = " << toml_quote(v.get_str()) << "\n";
    }
    return os.str();
}

}  // namespace eds
