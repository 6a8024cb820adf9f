#pragma once

#include <gmpxx.h>
#include <boost/multiprecision/mpfr.hpp>

#include <bitset>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace eds {

using Rational = mpq_class;
using Float = boost::multiprecision::mpfr_float;

struct ExprError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : ExprError {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off) : ExprError(msg), offset(off) {}
};

struct EvalError : ExprError {
    using ExprError::ExprError;
};

enum class Kind : std::uint8_t { Const, Var, Pow, Sqrt, Mul, Add };

constexpr int kMaxVars = 256;
using VarSet = std::bitset<kMaxVars>;

struct Node;

class Expr {
public:
    Expr();
    Expr(long v);
    Expr(int v) : Expr(static_cast<long>(v)) {}
    Expr(const Rational& q);

    static Expr var(const std::string& name);

    const Node& node() const { return *p_; }
    const Node* get() const { return p_.get(); }
    Kind kind() const;
    std::uint64_t id() const;

    bool is_const() const;
    bool is_zero() const;  // structural zero
    bool is_one() const;
    const Rational& value() const;  // only for Const

    std::string str() const;

    bool operator==(const Expr& o) const { return p_ == o.p_; }
    bool operator!=(const Expr& o) const { return p_ != o.p_; }

    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}

private:
    std::shared_ptr<const Node> p_;
};

struct Node {
    Kind kind;
    std::uint64_t id = 0;
    std::uint64_t hash = 0;
    Rational value;
    int var = -1;
    long exp = 0;
    std::vector<Expr> ch;
    VarSet vars;
    bool has_sqrt = false;
};

// variable registry
int var_index(const std::string& name);
const std::string& var_name(int idx);
std::optional<int> find_var(const std::string& name);

// canonical constructors
Expr make_add(std::vector<Expr> terms);
Expr make_mul(std::vector<Expr> factors);
Expr make_pow(const Expr& base, long k);
Expr make_sqrt(const Expr& arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

// total order used for canonical child ordering
int compare(const Expr& a, const Expr& b);

Expr parse_expr(std::string_view text, const std::vector<std::string>& vars);

Expr differentiate(const Expr& e, const std::string& v);
Expr differentiate(const Expr& e, int var);

std::size_t dag_size(const Expr& e);
std::size_t live_nodes();

// ---- evaluation ----

using Value = std::variant<Rational, Float>;

unsigned digits10_for_bits(unsigned bits);

// RAII: sets the working mpfr precision
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();

private:
    unsigned old_;
};

Float to_float(const Value& v);
bool value_is_zero(const Value& v);
int value_sign(const Value& v);
std::string value_str(const Value& v, int digits = 30);
Value value_add(const Value& a, const Value& b);
Value value_mul(const Value& a, const Value& b);
Value value_neg(const Value& a);
Value value_inv(const Value& a);

using Assignment = std::map<std::string, Value>;

class Evaluator {
public:
    Evaluator(const Assignment& point, unsigned precision_bits);
    Value eval(const Expr& e);
    const std::vector<std::optional<Value>>& point() const { return vals_; }
    const Assignment& assignment() const { return asg_; }
    void clear_cache() { memo_.clear(); }
    unsigned precision() const { return bits_; }

private:
    Value eval_rec(const Node* n);
    Assignment asg_;
    std::vector<std::optional<Value>> vals_;
    std::unordered_map<std::uint64_t, Value> memo_;
    unsigned bits_;
};

Value evaluate(const Expr& e, const Assignment& point, unsigned precision_bits = 256);

// ---- domains and zero testing ----

struct SolvedVar {
    std::string name;
    Expr equation;  // equation(name) = 0 determines the variable
};

struct Domain {
    std::vector<std::string> variables;
    std::vector<Expr> constraints;
    std::optional<std::map<std::string, Rational>> base_point;
    std::vector<SolvedVar> solved;
};

struct TestParams {
    int trials = 20;
    unsigned precision = 256;
    double tol_exp10 = -40;  // tol = 10^tol_exp10
    std::uint64_t seed = 20240601;
};

enum class ZeroStatus { Zero, NonZero, Inconclusive };
const char* status_name(ZeroStatus s);

struct ZeroVerdict {
    ZeroStatus status = ZeroStatus::Zero;
    int witness = -1;  // sample index
    bool exact = true;
};

class ZeroTester {
public:
    ZeroTester(Domain dom, TestParams params);

    ZeroVerdict test(const Expr& e);
    ZeroVerdict test_all(const std::vector<Expr>& es);
    std::vector<Value> values(const Expr& e);
    Value value_at(int i, const Expr& e);
    // +1 if positive at every sample, -1 if negative at every sample, 0 otherwise
    int sign_everywhere(const Expr& e);
    bool nonzero_everywhere(const Expr& e);
    ZeroVerdict classify(const std::vector<Value>& vals) const;

    int size() const { return static_cast<int>(evals_.size()); }
    const Assignment& point(int i) const { return evals_[i].assignment(); }
    const Domain& domain() const { return dom_; }
    const TestParams& params() const { return params_; }
    Float tol() const;
    Float sqrt_tol() const;
    void trim_caches();

private:
    Domain dom_;
    TestParams params_;
    std::vector<Evaluator> evals_;
};

ZeroVerdict is_zero(const Expr& e, const Domain& dom, const TestParams& params);

}  // namespace eds
