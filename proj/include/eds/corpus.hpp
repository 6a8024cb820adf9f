#pragma once

#include "eds/jetpar.hpp"

#include <random>
#include <string>
#include <vector>

namespace eds {

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Euclidean frame bundle x time x Sym^2, with the flow coframing installed as [coframing]
Workspace mcf_workspace(int n);

// Abstract 0-adapted structure with one injected torsion pattern.
// kinds: flat, xi10_pi11, xi10_pi23, xi12_pi12, tertiary, sym4, goursat_antisym, goursat_a
Workspace make_fixture(const std::string& kind, int n);
std::vector<std::string> fixture_kinds();

// p0 = sum c_ij p_ij + c with c_ij = A_ij + small terms in (u, p), A symmetric positive definite
PdeProblem random_evolutionary(int n, std::mt19937_64& rng);

}  // namespace eds
