#pragma once

#include "eds/expr.hpp"

#include <map>
#include <string>
#include <vector>

namespace eds {

struct RepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense tensor over spatial indices 0..n-1 (callers map 1..n to 0..n-1).
struct Tensor {
    int n = 0;
    int rank = 0;
    std::vector<Expr> data;

    Tensor() = default;
    Tensor(int n_, int rank_);
    std::size_t offset(const std::vector<int>& idx) const;
    Expr& at(const std::vector<int>& idx) { return data[offset(idx)]; }
    const Expr& at(const std::vector<int>& idx) const { return data[offset(idx)]; }
    std::vector<int> index(std::size_t off) const;
};

// removes the delta multiple so the contraction over slots (p, q) vanishes
Tensor traceless_project(const Tensor& t, int p, int q);
// total symmetrization of a rank-4 tensor
Tensor symmetrize4(const Tensor& t);
// trace-free part of a totally symmetric rank-4 tensor
Tensor sym4_traceless(const Tensor& s);

// ---- exact linear algebra ----

using QVec = std::map<int, Rational>;  // sparse vector

int exact_rank(const std::vector<QVec>& vecs);
// basis of {x : <row, x> = 0 for all rows}
std::vector<QVec> nullspace(const std::vector<QVec>& rows, int ncols);

// increasing index tuples of size r from 0..n-1
std::vector<std::vector<int>> subsets(int n, int r);

// b_r inside Lambda^r W (x) Lambda^r W, coordinates I * C(n,r) + J
struct BianchiSpace {
    int n = 0;
    int r = 0;
    std::vector<std::vector<int>> lam;  // Lambda^r basis
    std::vector<QVec> basis;
    int dim() const { return static_cast<int>(basis.size()); }
};
BianchiSpace bianchi_basis(int n, int r);

struct LinearMapMatrix {
    std::string domain;
    std::string codomain;
    int rows = 0;
    std::vector<QVec> columns;  // images of the domain basis
};

// f_r : b_r -> Sym^2_0 W (x) b_{r-1}; for r = 2 the codomain is (Sym^2_0 W (x) Sym^2_0 W).
// Codomain coordinates: (k, l, I', J') with k, l in 0..n-1 and I', J' in Lambda^{r-1};
// for r = 2 they are the rank-4 offsets (k, l, i, j).
LinearMapMatrix map_f(int n, int r);
// g_r on the basis of Sym^2_0 W (x) b_{r-1} (r >= 3) or (Sym^2_0 W (x) Sym^2_0 W) (r = 2)
LinearMapMatrix map_g(int n, int r);
// the domain basis that map_g acts on, in f_r's codomain coordinates
std::vector<QVec> g_domain_basis(int n, int r);

struct ExactnessReport {
    int n = 0;
    int r = 0;
    int dim_b = 0;
    int rank_f = 0;
    int dim_middle = 0;
    int rank_g = 0;
    int dim_ker_g = 0;
    int homology = 0;
    bool injective = false;
    bool complex = false;  // g o f = 0 and im f inside the middle space
    bool exact = false;
};
ExactnessReport check_exactness(int n, int r);

// dim Sym^4_0 W by exact rank of the trace-free symmetrization
int sym4_traceless_dim(int n);

struct B2Split {
    Tensor inside;
    Tensor residual;
};
// V_(ij)(kl) with pair symmetry and trace-free pairs; residual is the Sym^4_0 component
B2Split b2prime_split(const Tensor& V);
// throws RepError unless V has the declared symmetries (entries compared structurally)
void check_pair_symmetric(const Tensor& V);

// A in b_2 (as a rank-4 tensor A_ij,kl) with f_2(A) = rhs, assuming rhs lies in the image
Tensor solve_f2(const Tensor& rhs);
// f_2 applied to a rank-4 tensor A_ij,kl (Expr entries)
Tensor apply_f2(const Tensor& A);

}  // namespace eds
