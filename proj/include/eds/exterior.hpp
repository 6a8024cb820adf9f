#pragma once

#include "eds/expr.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace eds {

// Basis monomials are bitmasks over at most 64 coframe symbols.
using Mask = std::uint64_t;
constexpr int kMaxCoframe = 64;

inline Mask bit(int k) { return Mask(1) << k; }
inline int mask_degree(Mask m) { return __builtin_popcountll(m); }
std::vector<int> mask_indices(Mask m);
Mask mask_of(const std::vector<int>& idx);
// sign of e^A ^ e^B when A, B disjoint; 0 when they overlap
int wedge_sign(Mask a, Mask b);

struct Form {
    int degree = 0;
    std::map<Mask, Expr> terms;

    Form() = default;
    explicit Form(int deg) : degree(deg) {}

    static Form scalar(const Expr& c);
    static Form basis(int k, const Expr& c = Expr(1));
    static Form monomial(Mask m, const Expr& c = Expr(1));

    bool empty() const { return terms.empty(); }
    Expr coeff(Mask m) const;
    void add_term(Mask m, const Expr& c);
};

Form operator+(const Form& a, const Form& b);
Form operator-(const Form& a, const Form& b);
Form operator-(const Form& a);
Form operator*(const Expr& c, const Form& a);
Form wedge(const Form& a, const Form& b);
Form wedge_all(const std::vector<Form>& fs);

// Collects terms per monomial and builds each coefficient sum once.
class FormAccumulator {
public:
    explicit FormAccumulator(int degree) : degree_(degree) {}
    void add(Mask m, const Expr& c);
    void add(const Form& f, const Expr& scale = Expr(1));
    // adds scale * (e^m ^ f)
    void add_wedge(Mask m, const Form& f, const Expr& scale);
    Form build() const;

private:
    int degree_;
    std::map<Mask, std::vector<Expr>> acc_;
};

std::string form_str(const Form& f, const std::vector<std::string>& names);

// ---- workspaces ----

enum class Mode { Coordinate, Abstract };

// Role-tagged frame as stored in workspace files.
struct RoleFrame {
    Form theta_null;
    std::vector<Form> theta;
    std::vector<Form> omega;
    std::map<std::pair<int, int>, Form> pi;  // a <= b
    int n() const { return static_cast<int>(theta.size()) - 1; }
};

struct Workspace {
    std::string name;
    Mode mode = Mode::Abstract;
    std::vector<std::string> coframe;
    std::map<std::string, Form> functions;     // name -> differential
    std::vector<std::optional<Form>> structure;  // de^k, nullopt = unknown
    Domain domain;
    std::optional<RoleFrame> coframing;

    int size() const { return static_cast<int>(coframe.size()); }
    int index_of(const std::string& sym) const;
};

struct ExteriorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Form differential(const Workspace& ws, const Expr& f);
Form exterior_derivative(const Workspace& ws, const Form& a);

// Replace each basis symbol k by the 1-form images[k].
Form substitute(const Form& a, const std::vector<Form>& images);

using Matrix = std::vector<std::vector<Expr>>;

// coefficient matrix F[r][k] of 1-forms over the ambient coframe
Matrix frame_matrix(const std::vector<Form>& frame, int m);
Matrix symbolic_inverse(const Matrix& a, ZeroTester& zt);
Matrix mat_mul(const Matrix& a, const Matrix& b);

// Rank of a matrix of values at one sample point.
int value_rank(const std::vector<std::vector<Value>>& rows, const Float& tol);
int sampled_rank(const std::vector<Form>& forms, int m, ZeroTester& zt);

// Expands ambient forms in a fixed frame.
class FrameBasis {
public:
    FrameBasis(std::vector<Form> frame, int ambient, ZeroTester& zt);
    // with a known inverse: e^k = sum_r inv[k][r] f_r
    FrameBasis(std::vector<Form> frame, Matrix inv);
    // inverts through an intermediate basis whose own inverse is already known
    static FrameBasis through(const FrameBasis& via, std::vector<Form> frame, ZeroTester& zt);
    Form expand(const Form& a) const;
    Form reconstruct(const Form& a) const { return substitute(a, frame_); }
    const std::vector<Form>& frame() const { return frame_; }
    const Matrix& inverse() const { return inv_; }

private:
    void build_images();
    std::vector<Form> frame_;
    Matrix inv_;
    std::vector<Form> images_;  // e^k in frame terms
};

Form expand_in_basis(const Workspace& ws, const Form& a, const std::vector<Form>& frame, ZeroTester& zt);

struct PfaffianIdeal {
    std::vector<Form> generators;
    std::string label;
};

// ambient indices completing `gens` to a coframe, chosen greedily in coframe order
std::vector<int> greedy_complement(const std::vector<Form>& gens, int m, ZeroTester& zt);

Form reduce_mod(const Form& a, const PfaffianIdeal& ideal, int m, ZeroTester& zt);

struct ValidationFailure {
    std::string where;
    std::string monomial;
    std::string coefficient;
};

struct ValidationReport {
    bool pass = true;
    int checked = 0;  // d^2 identities examined
    std::vector<ValidationFailure> failures;
};

ValidationReport validate_workspace(const Workspace& ws, ZeroTester& zt);

// AbstractMode workspace over `frame` (named `names`). Structure equations are
// computed for the frame members listed in `with_structure` (all if empty).
Workspace reframe(const Workspace& ws, const FrameBasis& fb, const std::vector<std::string>& names,
                  const std::vector<int>& with_structure);

// ---- workspace files ----

Form parse_form_terms(const std::vector<std::vector<std::string>>& terms, const Workspace& ws,
                      const std::vector<std::string>& vars);
std::vector<std::vector<std::string>> form_terms(const Form& f, const std::vector<std::string>& names);

Workspace load_workspace_toml(const std::string& text);
Workspace load_workspace_json(const std::string& text);
Workspace load_workspace_file(const std::string& path);
std::string workspace_to_toml(const Workspace& ws);
std::string workspace_to_json(const Workspace& ws);

// variables that may appear in coefficients: function names
std::vector<std::string> workspace_variables(const Workspace& ws);

}  // namespace eds
