#pragma once

#include "eds/jetpar.hpp"
#include "eds/repso.hpp"

#include <json.hpp>

#include <random>
#include <string>
#include <vector>

namespace eds {

struct InvarError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Verdict { Yes, No, Mixed, Inconclusive, NotApplicable };
const char* verdict_name(Verdict v);

struct TensorInvariant {
    std::string name;
    bool computed = false;
    std::vector<std::string> labels;
    std::vector<Expr> entries;
    ZeroVerdict verdict;
};

// Raw torsion of a 0-adapted frame. Indices run over 0..n.
struct Torsion {
    int n = 0;
    // W_i^{c,de}: double-sum coefficient so that d theta_i contains -W_i^{c,de} pi_de ^ theta_c,
    // spatial (d, e) diagonal taken trace-free
    std::vector<Expr> W;
    // a_ij: coefficient of omega^j ^ theta_0 in d theta_i
    Matrix a;
    const Expr& w(int i, int c, int d, int e) const { return W[idx(i, c, d, e)]; }
    std::size_t idx(int i, int c, int d, int e) const {
        const std::size_t m = static_cast<std::size_t>(n + 1);
        return ((static_cast<std::size_t>(i) * m + c) * m + d) * m + e;
    }
};
Torsion extract_torsion(const Workspace& frame, const FrameLayout& L, ZeroTester& zt);

enum class Sign { Zero, Positive, Negative, Mixed, Inconclusive };
const char* sign_name(Sign s);

struct InvariantSet {
    int n = 0;
    TensorInvariant primary_j0;  // V_i^{0j0}
    TensorInvariant primary_jk;  // V_i^{0jk}
    TensorInvariant secondary;   // V_i^{jkl}, cross traces absorbed
    TensorInvariant secondary_residual;
    Tensor v_sec;                // 0-based spatial indices
    TensorInvariant tertiary;    // single entry V
    TensorInvariant tertiary_defect;  // pi ^ theta block of d omega beyond -V pi_ij ^ theta_j
    Expr a = Expr(0);
    Sign a_sign = Sign::Zero;
    TensorInvariant a_hat;
    Matrix s;  // S-gauge of the Monge-Ampere adapted frame, (n+1) x (n+1)
    bool primary_zero() const;
    bool secondary_zero() const;
};

InvariantSet compute_invariants(const ParabolicCoframing& cof, ZeroTester& zt);

// New frame f' = A f with f = Ainv f'. Structure equations are recomputed for `with`.
Workspace transform_frame(const Workspace& frame, const Matrix& A, const Matrix& Ainv, const std::vector<int>& with);

// the frame after the S-gauge omega^a -> omega^a + s^{ab} theta_b
Workspace ma_adapted_frame(const ParabolicCoframing& cof, const Matrix& s);

struct Classification {
    int n = 0;
    Verdict parabolic = Verdict::Yes;
    Verdict primary_vanish = Verdict::Inconclusive;
    Verdict monge_ampere = Verdict::Inconclusive;
    Verdict linear_type = Verdict::Inconclusive;
    Verdict goursat = Verdict::Inconclusive;
    Verdict evolutionary = Verdict::Inconclusive;
    Verdict sub_elliptic = Verdict::Inconclusive;
    bool low_n_caveat = false;
    std::vector<std::string> notes;
    bool definitive() const;
};

Classification classify(const InvariantSet& inv, Verdict parabolic);

// ---- G_0 action ----

struct GaugeElement {
    int n = 0;
    Rational k_null = 1;
    std::vector<Rational> k;      // theta_a += k_a theta_null
    std::vector<Rational> kup;    // omega^a += k^a theta_null
    std::vector<std::vector<Rational>> kab;  // symmetric, spatial trace 0
    Rational B00 = 1;
    std::vector<Rational> Bj0;    // B^j_0, j = 1..n (index j-1)
    Rational b = 1;
    std::vector<std::vector<Rational>> R;   // rotation, n x n
    std::vector<std::vector<Rational>> S;   // symmetric (n+1) x (n+1)
    // D[c][a][b] symmetric in a, b with spatial trace 0; T[a][b][c] symmetric, spatial trace 0 in (a, b)
    std::vector<std::vector<std::vector<Rational>>> D;
    std::vector<std::vector<std::vector<Rational>>> T;
};

GaugeElement identity_gauge(int n);
GaugeElement random_gauge(int n, std::mt19937_64& rng);
// rational rotation by the Cayley transform of a random skew matrix
std::vector<std::vector<Rational>> random_rotation(int n, std::mt19937_64& rng);

// Right action g . u: the coframe is transformed by the inverse of the G_0 matrix of g.
ParabolicCoframing apply_gauge(const ParabolicCoframing& cof, const GaugeElement& g);
// Expected factor a(g.u) / a(u)
Rational goursat_factor(const GaugeElement& g);

// ---- reports ----

nlohmann::ordered_json invariants_json(const InvariantSet& inv, ZeroTester& zt, int dump_points);
nlohmann::ordered_json classification_json(const Classification& c);

}  // namespace eds
