#pragma once

#include "eds/exterior.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace eds {

struct JetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// x0..xn, u, p0..pn, pab (a <= b)
std::vector<std::string> jet_coordinates(int n);
std::string p_name(int a, int b);  // symmetric: p_name(2,1) == "p12"
std::string x_name(int a);
std::string pa_name(int a);

Workspace build_contact_system(int n);

// Contact forms over a workspace whose coframe is d<coordinate> (possibly with one
// coordinate eliminated, in which case its declared differential is used).
struct ContactForms {
    Form theta_null;
    std::vector<Form> theta;  // theta_a = dp_a - p_ab dx^b
    std::vector<Form> omega;  // dx^a
    std::vector<std::vector<Form>> pi;  // dp_ab, symmetric
};
ContactForms contact_forms(const Workspace& ws, int n);

struct PdeProblem {
    std::string name;
    int n = 0;
    std::string F_text;
    Expr F;
    std::optional<std::string> solved_coordinate;
    std::vector<std::string> constraint_text;
    Domain domain;  // variables = jet coordinates; solved filled by prepare_problem
    TestParams params;
};

PdeProblem problem_from_json(const nlohmann::json& j);
PdeProblem make_problem(int n, const std::string& F, const std::vector<std::string>& constraints = {},
                        std::optional<std::string> solved = std::nullopt);

// Picks (or validates) the eliminated coordinate and installs it in the domain.
// Throws JetError if no candidate is certified nonzero.
void prepare_problem(PdeProblem& prob);

// Candidate order p00, p0, p0i, then any second-order coordinate.
std::string detect_solved_coordinate(const PdeProblem& prob, ZeroTester& zt);

// M = F^{-1}(0): coordinate workspace without the solved coordinate's differential.
Workspace restrict_to_equation(const PdeProblem& prob);

// Spacetime symbol (n+1)x(n+1); flips the sign of prob.F if needed so the spatial
// trace is positive at every sample.
Matrix symbol_matrix(PdeProblem& prob, ZeroTester& zt);

struct ParabolicCheck {
    bool parabolic = false;
    std::vector<Expr> kernel;  // kernel direction, normalized with entry 1 at its last pivot
    int witness = -1;
    std::string reason;
};
ParabolicCheck check_parabolic(PdeProblem& prob, ZeroTester& zt);

struct Ldl {
    std::vector<int> order;              // pivot indices, kernel index last
    std::vector<Expr> d;                 // n pivots
    std::vector<std::vector<Expr>> v;    // S = sum d_k v_k v_k^T
    std::vector<Expr> kernel;
};
Ldl symbolic_ldl(const Matrix& S, ZeroTester& zt);

// ---- coframings ----

// Frame index layout: theta_null 0, theta_a 1+a, omega^a n+2+a, pi_ab (a<=b, not nn)
// from 2n+3 in lexicographic order, then complement directions.
struct FrameLayout {
    int n = 0;
    int extra = 0;
    int theta_null() const { return 0; }
    int theta(int a) const { return 1 + a; }
    int omega(int a) const { return n + 2 + a; }
    int pi(int a, int b) const;  // -1 for (n,n)
    int comp(int j) const { return pi_start() + pi_count() + j; }
    int pi_start() const { return 2 * n + 3; }
    int pi_count() const { return (n + 1) * (n + 2) / 2 - 1; }
    int size() const { return pi_start() + pi_count() + extra; }
    std::vector<std::string> names(const std::vector<std::string>& extra_names) const;
};

// A parabolic coframing together with its structure equations expressed in the frame.
struct ParabolicCoframing {
    int n = 0;
    Workspace ambient;            // M or the input workspace
    RoleFrame roles;              // over the ambient coframe (pi includes nn)
    std::vector<Form> complement; // ambient 1-forms completing the frame
    std::vector<std::string> complement_names;
    Matrix B;                     // adaptation matrix (jet mode)
    Expr lambda = Expr(0);
    FrameLayout layout;
    std::shared_ptr<FrameBasis> basis;
    Workspace frame;  // abstract workspace over the frame, structure for theta_null, theta, omega
    std::vector<Form> frame_forms() const;
};

struct AdaptOptions {
    // constant rotation composed into the spatial block of B (row-major n x n)
    std::optional<std::vector<std::vector<Rational>>> rotation;
};

ParabolicCoframing adapt_coframe(PdeProblem& prob, ZeroTester& zt, const AdaptOptions& opt = {});
ParabolicCoframing coframing_from_workspace(const Workspace& ws, ZeroTester& zt);

// Absorbs the trace of pi so that sum_i pi_ii = 0 exactly, then builds the frame workspace.
void normalize_and_frame(ParabolicCoframing& cof, ZeroTester& zt);

struct CoframingCheck {
    bool pass = true;
    std::vector<std::string> failures;
};
// dθ_∅ ≡ −θ_a∧ω^a mod θ_∅, dθ_a ≡ −π_ab∧ω^b mod {θ_∅, θ_b}, Σπ_ii = λθ_0
CoframingCheck check_coframing(const ParabolicCoframing& cof, ZeroTester& zt);

// coefficient of the frame 2-form f_r ^ f_s (any order) in a frame-expanded form
Expr coeff2(const Form& f, int r, int s);

}  // namespace eds
