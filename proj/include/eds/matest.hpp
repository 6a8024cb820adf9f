#pragma once

#include "eds/invar.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace eds {

struct MatestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// omega_(J): the (n+1-|J|)-form with omega_J ^ omega_(J) = omega^0 ^ ... ^ omega^n (frame indices)
Form omitted_form(const FrameLayout& L, const std::vector<int>& J);

// sum_i theta_i ^ omega_(i)
Form upsilon1(const FrameLayout& L);

// Omega = sum_a theta_a ^ omega^a, the part of -d theta_null that survives mod theta_null
Form contact_omega(const FrameLayout& L);

struct Membership {
    ZeroVerdict verdict;
    int blocks = 0;       // P-blocks that carried nonzero data
    int conditions = 0;   // scalar conditions tested
    std::vector<Expr> residuals;
};

// Decides target in <theta_null, d theta_null, ups> with constant-coefficient ups.
// max_theta >= 0 drops monomials with more than max_theta factors among theta_0..theta_n
// (membership modulo Lambda^{max_theta+1} of the contact ideal).
Membership ideal_membership(const Form& target, const Form& ups, const FrameLayout& L, ZeroTester& zt,
                            int max_theta = -1);

struct LinearTypeReport {
    Membership membership;
    bool primitive = true;  // ups ^ Omega = 0 and ups ^ omega^0 = 0
    Verdict linear_type = Verdict::Inconclusive;
};
LinearTypeReport check_linear_type(const ParabolicCoframing& cof, const InvariantSet& inv, ZeroTester& zt);

struct Upsilon2Report {
    bool applicable = false;     // primary invariants vanish
    bool constructible = false;  // V_sec in b2'
    std::string reason;
    Tensor A;                    // A_ij,kl with f_2(A) = 2 V_sec, 0-based spatial indices
    Form upsilon2;
    Membership closure;          // d ups2 mod theta_null, d theta_null, ups2, Lambda^2 I
};
Upsilon2Report upsilon2(const ParabolicCoframing& cof, const InvariantSet& inv, ZeroTester& zt);

nlohmann::ordered_json linear_type_json(const LinearTypeReport& r);
nlohmann::ordered_json upsilon2_json(const Upsilon2Report& r);

}  // namespace eds
