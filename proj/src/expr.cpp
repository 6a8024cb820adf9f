#include "eds/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <unordered_set>

namespace eds {

namespace {

// ---------- variable registry ----------

struct VarRegistry {
    std::mutex mu;
    std::vector<std::string> names;
    std::unordered_map<std::string, int> index;
};

VarRegistry& registry() {
    static VarRegistry r;
    return r;
}

std::uint64_t fnv(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

std::uint64_t hash_mpz(const mpz_class& z) {
    std::uint64_t h = static_cast<std::uint64_t>(mpz_sgn(z.get_mpz_t()) + 7);
    std::size_t n = mpz_size(z.get_mpz_t());
    h = mix(h, n);
    for (std::size_t i = 0; i < n && i < 4; ++i) h = mix(h, mpz_getlimbn(z.get_mpz_t(), i));
    return h;
}

std::uint64_t hash_q(const Rational& q) { return mix(hash_mpz(q.get_num()), hash_mpz(q.get_den())); }

// ---------- hash-consing table ----------

struct Entry {
    const Node* raw;
    std::weak_ptr<const Node> weak;
};

struct Table {
    std::mutex mu;
    std::unordered_multimap<std::uint64_t, Entry> map;
    std::uint64_t next_id = 1;
};

Table& table() {
    static Table* t = new Table;  // never destroyed: nodes may outlive static destruction
    return *t;
}

void release(const Node* n) {
    {
        Table& t = table();
        std::lock_guard<std::mutex> lk(t.mu);
        auto range = t.map.equal_range(n->hash);
        for (auto it = range.first; it != range.second; ++it) {
            if (it->second.raw == n) {
                t.map.erase(it);
                break;
            }
        }
    }
    delete n;
}

bool same_structure(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.var != b.var || a.exp != b.exp || a.ch.size() != b.ch.size()) return false;
    if (a.kind == Kind::Const && a.value != b.value) return false;
    for (std::size_t i = 0; i < a.ch.size(); ++i)
        if (a.ch[i] != b.ch[i]) return false;
    return true;
}

Expr intern(Node&& proto) {
    std::uint64_t h = static_cast<std::uint64_t>(proto.kind) * 0x100000001b3ull;
    switch (proto.kind) {
        case Kind::Const:
            h = mix(h, hash_q(proto.value));
            break;
        case Kind::Var:
            h = mix(h, fnv(var_name(proto.var)));
            proto.vars.set(proto.var);
            break;
        default:
            break;
    }
    h = mix(h, static_cast<std::uint64_t>(proto.exp));
    for (const Expr& c : proto.ch) {
        h = mix(h, c.node().hash);
        proto.vars |= c.node().vars;
        proto.has_sqrt = proto.has_sqrt || c.node().has_sqrt;
    }
    if (proto.kind == Kind::Sqrt) proto.has_sqrt = true;
    proto.hash = h;

    Table& t = table();
    std::lock_guard<std::mutex> lk(t.mu);
    auto range = t.map.equal_range(h);
    for (auto it = range.first; it != range.second; ++it) {
        if (same_structure(*it->second.raw, proto)) {
            if (auto sp = it->second.weak.lock()) return Expr(std::move(sp));
        }
    }
    proto.id = t.next_id++;
    Node* raw = new Node(std::move(proto));
    std::shared_ptr<const Node> sp(raw, [](const Node* n) { release(n); });
    t.map.emplace(h, Entry{raw, sp});
    return Expr(std::move(sp));
}

Expr make_const(const Rational& q) {
    Node n;
    n.kind = Kind::Const;
    n.value = q;
    n.value.canonicalize();
    return intern(std::move(n));
}

const Expr& zero_expr() {
    static const Expr* z = new Expr(make_const(Rational(0)));
    return *z;
}

const Expr& one_expr() {
    static const Expr* o = new Expr(make_const(Rational(1)));
    return *o;
}

int kind_rank(Kind k) { return static_cast<int>(k); }

// split c*rest
std::pair<Rational, Expr> split_coef(const Expr& e) {
    if (e.is_const()) return {e.value(), one_expr()};
    if (e.kind() == Kind::Mul && e.node().ch.front().is_const()) {
        const auto& ch = e.node().ch;
        if (ch.size() == 2) return {ch[0].value(), ch[1]};
        std::vector<Expr> rest(ch.begin() + 1, ch.end());
        Node n;
        n.kind = Kind::Mul;
        n.ch = std::move(rest);
        return {ch[0].value(), intern(std::move(n))};
    }
    return {Rational(1), e};
}

// split base^k
std::pair<Expr, long> split_pow(const Expr& e) {
    if (e.kind() == Kind::Pow) return {e.node().ch[0], e.node().exp};
    return {e, 1};
}

bool rational_sqrt(const Rational& q, Rational& out) {
    if (sgn(q) < 0) return false;
    mpz_class n = q.get_num(), d = q.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return false;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    out = Rational(rn, rd);
    out.canonicalize();
    return true;
}

Rational rational_pow(const Rational& q, long k) {
    if (k == 0) return Rational(1);
    if (k < 0) {
        if (sgn(q) == 0) throw EvalError("division by zero");
        Rational inv = 1 / q;
        return rational_pow(inv, -k);
    }
    mpz_class n, d;
    mpz_pow_ui(n.get_mpz_t(), q.get_num().get_mpz_t(), static_cast<unsigned long>(k));
    mpz_pow_ui(d.get_mpz_t(), q.get_den().get_mpz_t(), static_cast<unsigned long>(k));
    Rational r(n, d);
    r.canonicalize();
    return r;
}

}  // namespace

// ---------- registry API ----------

int var_index(const std::string& name) {
    VarRegistry& r = registry();
    std::lock_guard<std::mutex> lk(r.mu);
    auto it = r.index.find(name);
    if (it != r.index.end()) return it->second;
    if (static_cast<int>(r.names.size()) >= kMaxVars) throw ExprError("too many distinct variable names");
    int idx = static_cast<int>(r.names.size());
    r.names.push_back(name);
    r.index.emplace(name, idx);
    return idx;
}

const std::string& var_name(int idx) {
    VarRegistry& r = registry();
    std::lock_guard<std::mutex> lk(r.mu);
    return r.names.at(static_cast<std::size_t>(idx));
}

std::optional<int> find_var(const std::string& name) {
    VarRegistry& r = registry();
    std::lock_guard<std::mutex> lk(r.mu);
    auto it = r.index.find(name);
    if (it == r.index.end()) return std::nullopt;
    return it->second;
}

std::size_t live_nodes() {
    Table& t = table();
    std::lock_guard<std::mutex> lk(t.mu);
    return t.map.size();
}

// ---------- Expr basics ----------

Expr::Expr() : Expr(zero_expr()) {}
Expr::Expr(long v) : Expr(v == 0 ? zero_expr() : (v == 1 ? one_expr() : make_const(Rational(v)))) {}
Expr::Expr(const Rational& q) : Expr(make_const(q)) {}

Expr Expr::var(const std::string& name) {
    Node n;
    n.kind = Kind::Var;
    n.var = var_index(name);
    return intern(std::move(n));
}

Kind Expr::kind() const { return p_->kind; }
std::uint64_t Expr::id() const { return p_->id; }
bool Expr::is_const() const { return p_->kind == Kind::Const; }
bool Expr::is_zero() const { return p_->kind == Kind::Const && sgn(p_->value) == 0; }
bool Expr::is_one() const { return p_->kind == Kind::Const && p_->value == 1; }
const Rational& Expr::value() const {
    if (p_->kind != Kind::Const) throw ExprError("value() on non-constant");
    return p_->value;
}

// ---------- ordering ----------

int compare(const Expr& a, const Expr& b) {
    if (a == b) return 0;
    const Node& x = a.node();
    const Node& y = b.node();
    if (x.kind != y.kind) return kind_rank(x.kind) < kind_rank(y.kind) ? -1 : 1;
    switch (x.kind) {
        case Kind::Const:
            return cmp(x.value, y.value) < 0 ? -1 : 1;
        case Kind::Var: {
            const std::string& nx = var_name(x.var);
            const std::string& ny = var_name(y.var);
            return nx < ny ? -1 : (nx > ny ? 1 : 0);
        }
        case Kind::Pow: {
            int c = compare(x.ch[0], y.ch[0]);
            if (c != 0) return c;
            return x.exp < y.exp ? -1 : (x.exp > y.exp ? 1 : 0);
        }
        default:
            break;
    }
    if (x.hash != y.hash) return x.hash < y.hash ? -1 : 1;
    if (x.ch.size() != y.ch.size()) return x.ch.size() < y.ch.size() ? -1 : 1;
    for (std::size_t i = 0; i < x.ch.size(); ++i) {
        int c = compare(x.ch[i], y.ch[i]);
        if (c != 0) return c;
    }
    return 0;
}

namespace {

int term_compare(const Expr& a, const Expr& b) {
    auto [ca, ra] = split_coef(a);
    auto [cb, rb] = split_coef(b);
    int c = compare(ra, rb);
    if (c != 0) return c;
    return cmp(ca, cb) < 0 ? -1 : (cmp(ca, cb) > 0 ? 1 : 0);
}

}  // namespace

// ---------- constructors ----------

Expr make_add(std::vector<Expr> terms) {
    Rational constant(0);
    std::vector<std::pair<Expr, Rational>> acc;
    std::unordered_map<const Node*, std::size_t> pos;
    auto push = [&](const Expr& t) {
        if (t.is_const()) {
            constant += t.value();
            return;
        }
        auto [c, r] = split_coef(t);
        auto it = pos.find(r.get());
        if (it == pos.end()) {
            pos.emplace(r.get(), acc.size());
            acc.emplace_back(r, c);
        } else {
            acc[it->second].second += c;
        }
    };
    for (const Expr& t : terms) {
        if (t.kind() == Kind::Add) {
            for (const Expr& c : t.node().ch) push(c);
        } else {
            push(t);
        }
    }
    std::vector<Expr> out;
    out.reserve(acc.size() + 1);
    if (sgn(constant) != 0) out.push_back(Expr(constant));
    for (auto& [r, c] : acc) {
        if (sgn(c) == 0) continue;
        if (c == 1)
            out.push_back(r);
        else
            out.push_back(make_mul({Expr(c), r}));
    }
    if (out.empty()) return Expr(0);
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return term_compare(a, b) < 0; });
    Node n;
    n.kind = Kind::Add;
    n.ch = std::move(out);
    return intern(std::move(n));
}

Expr make_mul(std::vector<Expr> factors) {
    Rational coef(1);
    std::vector<std::pair<Expr, long>> acc;
    std::unordered_map<const Node*, std::size_t> pos;
    std::vector<std::pair<Expr, long>> work;
    for (const Expr& f : factors) {
        if (f.kind() == Kind::Mul) {
            for (const Expr& c : f.node().ch) work.emplace_back(c, 1);
        } else {
            work.emplace_back(f, 1);
        }
    }
    while (!work.empty()) {
        auto [f, mult] = work.back();
        work.pop_back();
        if (f.is_const()) {
            coef *= rational_pow(f.value(), mult);
            continue;
        }
        auto [b, k] = split_pow(f);
        k *= mult;
        auto it = pos.find(b.get());
        if (it == pos.end()) {
            pos.emplace(b.get(), acc.size());
            acc.emplace_back(b, k);
        } else {
            acc[it->second].second += k;
        }
    }
    if (sgn(coef) == 0) return Expr(0);
    std::vector<Expr> out;
    std::vector<std::pair<Expr, long>> extra;
    for (auto& [b, k] : acc) {
        if (k == 0) continue;
        if (b.kind() == Kind::Sqrt && (k >= 2 || k <= -2)) {
            long q = k / 2;  // truncates toward zero
            long r = k - 2 * q;
            extra.emplace_back(b.node().ch[0], q);
            if (r != 0) out.push_back(make_pow(b, r));
            continue;
        }
        out.push_back(make_pow(b, k));
    }
    if (!extra.empty()) {
        std::vector<Expr> again = out;
        for (auto& [b, k] : extra) again.push_back(make_pow(b, k));
        again.push_back(Expr(coef));
        return make_mul(std::move(again));
    }
    if (out.empty()) return Expr(coef);
    if (out.size() == 1 && coef == 1) return out[0];
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    if (coef != 1) out.insert(out.begin(), Expr(coef));
    Node n;
    n.kind = Kind::Mul;
    n.ch = std::move(out);
    return intern(std::move(n));
}

Expr make_pow(const Expr& base, long k) {
    if (k == 0) return Expr(1);
    if (k == 1) return base;
    if (base.is_const()) return Expr(rational_pow(base.value(), k));
    if (base.kind() == Kind::Pow) return make_pow(base.node().ch[0], base.node().exp * k);
    if (base.kind() == Kind::Mul) {
        std::vector<Expr> f;
        for (const Expr& c : base.node().ch) f.push_back(make_pow(c, k));
        return make_mul(std::move(f));
    }
    if (base.kind() == Kind::Sqrt && k % 2 == 0) return make_pow(base.node().ch[0], k / 2);
    if (base.kind() == Kind::Sqrt && (k > 2 || k < -2)) return make_mul({make_pow(base.node().ch[0], k / 2), make_pow(base, k % 2)});
    Node n;
    n.kind = Kind::Pow;
    n.exp = k;
    n.ch = {base};
    return intern(std::move(n));
}

Expr make_sqrt(const Expr& arg) {
    if (arg.is_const()) {
        if (sgn(arg.value()) < 0) throw EvalError("negative radicand");
        Rational r;
        if (rational_sqrt(arg.value(), r)) return Expr(r);
    }
    Node n;
    n.kind = Kind::Sqrt;
    n.ch = {arg};
    return intern(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return make_add({a, b});
}
Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    return make_add({a, make_mul({Expr(-1), b})});
}
Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr(0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return make_mul({a, b});
}
Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw EvalError("division by zero");
    if (a.is_zero()) return a;
    return make_mul({a, make_pow(b, -1)});
}
Expr operator-(const Expr& a) { return make_mul({Expr(-1), a}); }

// ---------- printing ----------

namespace {

std::string rat_str(const Rational& q) { return q.get_str(); }

void print(const Expr& e, std::ostringstream& os, int prec);

// prec: 0 = sum context, 1 = product context, 2 = power base
void print_mul_body(const Node& n, std::ostringstream& os, bool drop_sign) {
    Rational c(1);
    std::size_t start = 0;
    if (!n.ch.empty() && n.ch[0].is_const()) {
        c = n.ch[0].value();
        start = 1;
    }
    if (drop_sign) c = abs(c);
    std::vector<Expr> num, den;
    for (std::size_t i = start; i < n.ch.size(); ++i) {
        const Expr& f = n.ch[i];
        if (f.kind() == Kind::Pow && f.node().exp < 0)
            den.push_back(make_pow(f.node().ch[0], -f.node().exp));
        else
            num.push_back(f);
    }
    bool first = true;
    if (c != 1 || num.empty()) {
        if (c == -1 && !num.empty()) {
            os << "-";
        } else {
            if (sgn(c) < 0) os << "-";
            os << rat_str(abs(c));
            first = false;
        }
    }
    for (const Expr& f : num) {
        if (!first) os << "*";
        print(f, os, 1);
        first = false;
    }
    for (const Expr& f : den) {
        os << "/";
        bool simple = f.kind() == Kind::Pow && (f.node().ch[0].kind() == Kind::Var || f.node().ch[0].kind() == Kind::Sqrt);
        if (simple) {
            print(f, os, 1);
        } else {
            print(f, os, 2);
        }
    }
}

bool is_negative_term(const Expr& t) {
    if (t.is_const()) return sgn(t.value()) < 0;
    if (t.kind() == Kind::Mul && t.node().ch[0].is_const()) return sgn(t.node().ch[0].value()) < 0;
    return false;
}

void print(const Expr& e, std::ostringstream& os, int prec) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Const: {
            bool atomic = n.value.get_den() == 1 && sgn(n.value) >= 0;
            bool paren = prec >= 1 && !atomic;
            if (paren) os << "(";
            os << rat_str(n.value);
            if (paren) os << ")";
            return;
        }
        case Kind::Var:
            os << var_name(n.var);
            return;
        case Kind::Sqrt:
            os << "sqrt(";
            print(n.ch[0], os, 0);
            os << ")";
            return;
        case Kind::Pow: {
            if (n.exp < 0) {
                if (prec >= 1) os << "(";
                os << "1/";
                print(make_pow(n.ch[0], -n.exp), os, 2);
                if (prec >= 1) os << ")";
                return;
            }
            if (prec >= 2) os << "(";
            print(n.ch[0], os, 2);
            os << "^" << n.exp;
            if (prec >= 2) os << ")";
            return;
        }
        case Kind::Mul: {
            bool neg = is_negative_term(e);
            bool paren = prec >= 2 || (prec == 1 && neg);
            bool has_den = false;
            for (const Expr& f : n.ch)
                if (f.kind() == Kind::Pow && f.node().exp < 0) has_den = true;
            if (prec == 1 && has_den) paren = true;
            if (paren) os << "(";
            print_mul_body(n, os, false);
            if (paren) os << ")";
            return;
        }
        case Kind::Add: {
            bool paren = prec >= 1;
            if (paren) os << "(";
            bool first = true;
            for (const Expr& t : n.ch) {
                bool neg = is_negative_term(t);
                if (first) {
                    if (neg) os << "-";
                } else {
                    os << (neg ? " - " : " + ");
                }
                Expr body = neg ? make_mul({Expr(-1), t}) : t;
                print(body, os, body.kind() == Kind::Add ? 1 : 0);
                first = false;
            }
            if (paren) os << ")";
            return;
        }
    }
}

}  // namespace

std::string Expr::str() const {
    std::ostringstream os;
    print(*this, os, 0);
    return os.str();
}

// ---------- parsing ----------

namespace {

class Parser {
public:
    Parser(std::string_view s, const std::vector<std::string>& vars) : s_(s) {
        for (const auto& v : vars) allowed_.insert(v);
    }

    Expr parse() {
        Expr e = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected character '" + std::string(1, s_[i_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("syntax error at byte " + std::to_string(i_) + ": " + msg, i_);
    }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool accept(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    Expr expr() {
        std::vector<Expr> terms;
        skip();
        terms.push_back(term());
        while (true) {
            if (accept('+'))
                terms.push_back(term());
            else if (accept('-'))
                terms.push_back(-term());
            else
                break;
        }
        return terms.size() == 1 ? terms[0] : make_add(std::move(terms));
    }

    Expr term() {
        Expr acc = factor();
        while (true) {
            if (accept('*'))
                acc = acc * factor();
            else if (accept('/')) {
                std::size_t at = i_;
                Expr d = factor();
                if (d.is_zero()) throw ParseError("division by zero constant at byte " + std::to_string(at), at);
                acc = acc / d;
            } else
                break;
        }
        return acc;
    }

    Expr factor() {
        skip();
        if (accept('-')) return -factor();
        if (accept('+')) return factor();
        Expr b = base();
        if (accept('^')) {
            skip();
            bool neg = accept('-');
            skip();
            std::size_t st = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            if (st == i_) fail("expected integer exponent");
            long k = std::stol(std::string(s_.substr(st, i_ - st)));
            if (neg) k = -k;
            if (b.is_zero() && k < 0) throw ParseError("division by zero constant at byte " + std::to_string(st), st);
            return make_pow(b, k);
        }
        return b;
    }

    Expr base() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of input");
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            Expr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t st = i_;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
            std::string id(s_.substr(st, i_ - st));
            if (id == "sqrt") {
                if (!accept('(')) fail("expected '(' after sqrt");
                std::size_t at = i_;
                Expr e = expr();
                if (!accept(')')) fail("expected ')'");
                if (e.is_const() && sgn(e.value()) < 0)
                    throw ParseError("negative radicand at byte " + std::to_string(at), at);
                return make_sqrt(e);
            }
            if (!allowed_.count(id))
                throw ParseError("unknown identifier '" + id + "' at byte " + std::to_string(st), st);
            return Expr::var(id);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    Expr number() {
        std::size_t st = i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
        std::string ip(s_.substr(st, i_ - st));
        std::string fp;
        if (i_ < s_.size() && s_[i_] == '.') {
            ++i_;
            std::size_t fs = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            fp = std::string(s_.substr(fs, i_ - fs));
        }
        if (ip.empty() && fp.empty()) fail("malformed number");
        mpz_class num(ip.empty() ? "0" : ip);
        mpz_class den(1);
        for (char d : fp) {
            num = num * 10 + (d - '0');
            den *= 10;
        }
        return Expr(Rational(num, den));
    }

    std::string_view s_;
    std::size_t i_ = 0;
    std::unordered_set<std::string> allowed_;
};

}  // namespace

Expr parse_expr(std::string_view text, const std::vector<std::string>& vars) {
    Parser p(text, vars);
    return p.parse();
}

// ---------- differentiation ----------

namespace {

Expr diff_rec(const Expr& e, int v, std::unordered_map<std::uint64_t, Expr>& memo) {
    const Node& n = e.node();
    if (!n.vars.test(static_cast<std::size_t>(v))) return Expr(0);
    if (n.kind == Kind::Var) return Expr(1);
    auto it = memo.find(n.id);
    if (it != memo.end()) return it->second;
    Expr r;
    switch (n.kind) {
        case Kind::Add: {
            std::vector<Expr> t;
            for (const Expr& c : n.ch) {
                Expr dc = diff_rec(c, v, memo);
                if (!dc.is_zero()) t.push_back(dc);
            }
            r = t.empty() ? Expr(0) : make_add(std::move(t));
            break;
        }
        case Kind::Mul: {
            std::vector<Expr> t;
            for (std::size_t i = 0; i < n.ch.size(); ++i) {
                Expr dc = diff_rec(n.ch[i], v, memo);
                if (dc.is_zero()) continue;
                std::vector<Expr> f;
                f.reserve(n.ch.size());
                for (std::size_t j = 0; j < n.ch.size(); ++j) f.push_back(j == i ? dc : n.ch[j]);
                t.push_back(make_mul(std::move(f)));
            }
            r = t.empty() ? Expr(0) : make_add(std::move(t));
            break;
        }
        case Kind::Pow: {
            Expr db = diff_rec(n.ch[0], v, memo);
            r = make_mul({Expr(n.exp), make_pow(n.ch[0], n.exp - 1), db});
            break;
        }
        case Kind::Sqrt: {
            Expr da = diff_rec(n.ch[0], v, memo);
            r = make_mul({Expr(Rational(1, 2)), da, make_pow(e, -1)});
            break;
        }
        default:
            r = Expr(0);
    }
    memo.emplace(n.id, r);
    return r;
}

thread_local std::unordered_map<int, std::unordered_map<std::uint64_t, Expr>> g_diff_memo;
thread_local std::size_t g_diff_entries = 0;

}  // namespace

Expr differentiate(const Expr& e, int var) {
    if (var < 0 || var >= kMaxVars) return Expr(0);
    if (!e.node().vars.test(static_cast<std::size_t>(var))) return Expr(0);
    if (g_diff_entries > 3000000) {
        g_diff_memo.clear();
        g_diff_entries = 0;
    }
    auto& memo = g_diff_memo[var];
    std::size_t before = memo.size();
    Expr r = diff_rec(e, var, memo);
    g_diff_entries += memo.size() - before;
    return r;
}

Expr differentiate(const Expr& e, const std::string& v) {
    auto idx = find_var(v);
    if (!idx) return Expr(0);
    return differentiate(e, *idx);
}

std::size_t dag_size(const Expr& e) {
    std::unordered_set<const Node*> seen;
    std::vector<const Node*> st{e.get()};
    while (!st.empty()) {
        const Node* n = st.back();
        st.pop_back();
        if (!seen.insert(n).second) continue;
        for (const Expr& c : n->ch) st.push_back(c.get());
    }
    return seen.size();
}

// ---------- values ----------

unsigned digits10_for_bits(unsigned bits) { return static_cast<unsigned>(std::ceil(bits * 0.30102999566398)) + 2; }

PrecisionScope::PrecisionScope(unsigned bits) : old_(Float::default_precision()) {
    Float::default_precision(digits10_for_bits(bits));
}
PrecisionScope::~PrecisionScope() { Float::default_precision(old_); }

namespace {

Float q_to_float(const Rational& q) {
    Float f;
    mpfr_set_q(f.backend().data(), q.get_mpq_t(), MPFR_RNDN);
    return f;
}

}  // namespace

Float to_float(const Value& v) {
    if (auto q = std::get_if<Rational>(&v)) return q_to_float(*q);
    return std::get<Float>(v);
}

bool value_is_zero(const Value& v) {
    if (auto q = std::get_if<Rational>(&v)) return sgn(*q) == 0;
    return std::get<Float>(v) == 0;
}

int value_sign(const Value& v) {
    if (auto q = std::get_if<Rational>(&v)) return sgn(*q);
    const Float& f = std::get<Float>(v);
    return f > 0 ? 1 : (f < 0 ? -1 : 0);
}

std::string value_str(const Value& v, int digits) {
    if (auto q = std::get_if<Rational>(&v)) return q->get_str();
    const Float& f = std::get<Float>(v);
    if (f == 0) return "0";
    std::ostringstream os;
    os << std::scientific << std::setprecision(digits) << f;
    return os.str();
}

Value value_add(const Value& a, const Value& b) {
    auto qa = std::get_if<Rational>(&a);
    auto qb = std::get_if<Rational>(&b);
    if (qa && qb) return Rational(*qa + *qb);
    return Float(to_float(a) + to_float(b));
}

Value value_mul(const Value& a, const Value& b) {
    auto qa = std::get_if<Rational>(&a);
    auto qb = std::get_if<Rational>(&b);
    if (qa && qb) return Rational(*qa * *qb);
    if (qa && sgn(*qa) == 0) return Rational(0);
    if (qb && sgn(*qb) == 0) return Rational(0);
    return Float(to_float(a) * to_float(b));
}

Value value_neg(const Value& a) {
    if (auto q = std::get_if<Rational>(&a)) return Rational(-*q);
    return Float(-std::get<Float>(a));
}

Value value_inv(const Value& a) {
    if (auto q = std::get_if<Rational>(&a)) {
        if (sgn(*q) == 0) throw EvalError("division by zero");
        return Rational(1 / *q);
    }
    const Float& f = std::get<Float>(a);
    if (f == 0) throw EvalError("division by zero");
    return Float(1 / f);
}

// ---------- evaluator ----------

Evaluator::Evaluator(const Assignment& point, unsigned precision_bits) : asg_(point), bits_(precision_bits) {
    vals_.resize(kMaxVars);
    for (const auto& [name, v] : point) vals_[static_cast<std::size_t>(var_index(name))] = v;
}

Value Evaluator::eval(const Expr& e) {
    PrecisionScope ps(bits_);
    return eval_rec(e.get());
}

Value Evaluator::eval_rec(const Node* n) {
    switch (n->kind) {
        case Kind::Const:
            return n->value;
        case Kind::Var: {
            const auto& v = vals_[static_cast<std::size_t>(n->var)];
            if (!v) throw EvalError("unassigned variable '" + var_name(n->var) + "'");
            return *v;
        }
        default:
            break;
    }
    auto it = memo_.find(n->id);
    if (it != memo_.end()) return it->second;
    Value r;
    switch (n->kind) {
        case Kind::Add: {
            r = eval_rec(n->ch[0].get());
            for (std::size_t i = 1; i < n->ch.size(); ++i) r = value_add(r, eval_rec(n->ch[i].get()));
            break;
        }
        case Kind::Mul: {
            r = eval_rec(n->ch[0].get());
            for (std::size_t i = 1; i < n->ch.size(); ++i) r = value_mul(r, eval_rec(n->ch[i].get()));
            break;
        }
        case Kind::Pow: {
            Value b = eval_rec(n->ch[0].get());
            long k = n->exp;
            if (auto q = std::get_if<Rational>(&b)) {
                r = rational_pow(*q, k);
            } else {
                Float f = std::get<Float>(b);
                if (k < 0) {
                    if (f == 0) throw EvalError("division by zero");
                    f = 1 / f;
                    k = -k;
                }
                Float acc = 1;
                Float base = f;
                unsigned long uk = static_cast<unsigned long>(k);
                while (uk) {
                    if (uk & 1) acc *= base;
                    base *= base;
                    uk >>= 1;
                }
                r = acc;
            }
            break;
        }
        case Kind::Sqrt: {
            Value a = eval_rec(n->ch[0].get());
            if (value_sign(a) < 0) throw EvalError("negative radicand");
            Rational root;
            if (auto q = std::get_if<Rational>(&a); q && rational_sqrt(*q, root)) {
                r = root;
            } else {
                r = Float(boost::multiprecision::sqrt(to_float(a)));
            }
            break;
        }
        default:
            break;
    }
    memo_.emplace(n->id, r);
    return r;
}

Value evaluate(const Expr& e, const Assignment& point, unsigned precision_bits) {
    Evaluator ev(point, precision_bits);
    return ev.eval(e);
}

// ---------- zero testing ----------

const char* status_name(ZeroStatus s) {
    switch (s) {
        case ZeroStatus::Zero:
            return "Zero";
        case ZeroStatus::NonZero:
            return "NonZero";
        default:
            return "Inconclusive";
    }
}

namespace {

Rational random_rational(std::mt19937_64& rng, long num_bound, long den_bound) {
    std::uniform_int_distribution<long> num(-num_bound, num_bound);
    std::uniform_int_distribution<long> den(1, den_bound);
    Rational q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

// solve eq(var) = 0 for var; affine case exact, else Newton in mpfr
std::optional<Value> solve_for(const SolvedVar& sv, Assignment& asg, unsigned bits, const std::optional<Value>& guess) {
    int vi = var_index(sv.name);
    Expr deq = differentiate(sv.equation, vi);
    Expr dd = differentiate(deq, vi);
    bool affine = dd.is_zero();
    if (affine) {
        asg[sv.name] = Rational(0);
        Evaluator ev(asg, bits);
        Value c0 = ev.eval(sv.equation);
        Value c1 = ev.eval(deq);
        if (value_is_zero(c1)) return std::nullopt;
        return value_neg(value_mul(c0, value_inv(c1)));
    }
    PrecisionScope ps(bits);
    Float x = guess ? to_float(*guess) : Float(0);
    for (int it = 0; it < 200; ++it) {
        asg[sv.name] = x;
        Evaluator ev(asg, bits);
        Float f = to_float(ev.eval(sv.equation));
        Float fp = to_float(ev.eval(deq));
        if (fp == 0) return std::nullopt;
        Float step = f / fp;
        x -= step;
        if (abs(step) <= abs(x) * Float(std::pow(2.0, -static_cast<double>(bits) + 8)) || step == 0) {
            return Value(x);
        }
    }
    return std::nullopt;
}

}  // namespace

ZeroTester::ZeroTester(Domain dom, TestParams params) : dom_(std::move(dom)), params_(params) {
    if (params_.trials < 1) throw ExprError("trials must be >= 1");
    std::mt19937_64 rng(params_.seed);
    const long budget = 500L * params_.trials;
    long attempts = 0;
    std::vector<std::string> free_vars;
    for (const auto& v : dom_.variables) {
        bool solved = false;
        for (const auto& s : dom_.solved) solved = solved || s.name == v;
        if (!solved) free_vars.push_back(v);
    }
    while (static_cast<int>(evals_.size()) < params_.trials) {
        if (attempts++ >= budget) throw ExprError("constraint region appears empty after rejection sampling");
        Assignment asg;
        for (const auto& v : free_vars) {
            Rational q;
            if (dom_.base_point && dom_.base_point->count(v)) {
                std::uniform_int_distribution<long> num(-2500, 2500);
                q = dom_.base_point->at(v) + Rational(num(rng), 10000);
            } else {
                q = random_rational(rng, 10000, 10000);
            }
            q.canonicalize();
            asg[v] = q;
        }
        bool ok = true;
        try {
            for (const auto& s : dom_.solved) {
                std::optional<Value> guess;
                if (dom_.base_point && dom_.base_point->count(s.name)) guess = Value(dom_.base_point->at(s.name));
                auto val = solve_for(s, asg, params_.precision, guess);
                if (!val) {
                    ok = false;
                    break;
                }
                asg[s.name] = *val;
            }
            if (ok) {
                Evaluator ev(asg, params_.precision);
                for (const Expr& c : dom_.constraints) {
                    if (value_sign(ev.eval(c)) <= 0) {
                        ok = false;
                        break;
                    }
                }
            }
        } catch (const EvalError&) {
            ok = false;
        }
        if (ok) evals_.emplace_back(asg, params_.precision);
    }
}

Float ZeroTester::tol() const {
    PrecisionScope ps(params_.precision);
    return boost::multiprecision::pow(Float(10), Float(params_.tol_exp10));
}

Float ZeroTester::sqrt_tol() const {
    PrecisionScope ps(params_.precision);
    return boost::multiprecision::pow(Float(10), Float(params_.tol_exp10 / 2));
}

void ZeroTester::trim_caches() {
    for (auto& e : evals_) e.clear_cache();
}

std::vector<Value> ZeroTester::values(const Expr& e) {
    std::vector<Value> out;
    out.reserve(evals_.size());
    if (e.is_const()) {
        out.assign(evals_.size(), Value(e.value()));
        return out;
    }
    for (auto& ev : evals_) out.push_back(ev.eval(e));
    return out;
}

Value ZeroTester::value_at(int i, const Expr& e) { return evals_.at(static_cast<std::size_t>(i)).eval(e); }

ZeroVerdict ZeroTester::classify(const std::vector<Value>& vals) const {
    PrecisionScope ps(params_.precision);
    Float t = tol();
    Float st = sqrt_tol();
    ZeroVerdict v;
    bool all_small = true;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const Value& x = vals[i];
        if (auto q = std::get_if<Rational>(&x)) {
            if (sgn(*q) != 0) {
                v.status = ZeroStatus::NonZero;
                v.witness = static_cast<int>(i);
                return v;
            }
            continue;
        }
        v.exact = false;
        Float a = abs(std::get<Float>(x));
        if (a > st) {
            v.status = ZeroStatus::NonZero;
            v.witness = static_cast<int>(i);
            return v;
        }
        if (!(a < t)) all_small = false;
    }
    v.status = all_small ? ZeroStatus::Zero : ZeroStatus::Inconclusive;
    return v;
}

ZeroVerdict ZeroTester::test(const Expr& e) {
    if (e.is_const()) {
        ZeroVerdict v;
        if (!e.is_zero()) {
            v.status = ZeroStatus::NonZero;
            v.witness = 0;
        }
        return v;
    }
    return classify(values(e));
}

ZeroVerdict ZeroTester::test_all(const std::vector<Expr>& es) {
    ZeroVerdict agg;
    for (const Expr& e : es) {
        ZeroVerdict v = test(e);
        if (!v.exact) agg.exact = false;
        if (v.status == ZeroStatus::NonZero) return v;
        if (v.status == ZeroStatus::Inconclusive) agg.status = ZeroStatus::Inconclusive;
    }
    return agg;
}

int ZeroTester::sign_everywhere(const Expr& e) {
    auto vals = values(e);
    PrecisionScope ps(params_.precision);
    Float st = sqrt_tol();
    int s = 0;
    for (const Value& x : vals) {
        int sx = value_sign(x);
        if (std::holds_alternative<Float>(x) && abs(std::get<Float>(x)) <= st) return 0;
        if (sx == 0) return 0;
        if (s == 0)
            s = sx;
        else if (s != sx)
            return 0;
    }
    return s;
}

bool ZeroTester::nonzero_everywhere(const Expr& e) {
    if (e.is_const()) return !e.is_zero();
    auto vals = values(e);
    PrecisionScope ps(params_.precision);
    Float st = sqrt_tol();
    for (const Value& x : vals) {
        if (value_is_zero(x)) return false;
        if (std::holds_alternative<Float>(x) && abs(std::get<Float>(x)) <= st) return false;
    }
    return true;
}

ZeroVerdict is_zero(const Expr& e, const Domain& dom, const TestParams& params) {
    ZeroTester zt(dom, params);
    return zt.test(e);
}

}  // namespace eds
