#pragma once

#include "eds/corpus.hpp"
#include "eds/invar.hpp"
#include "eds/io.hpp"
#include "eds/jetpar.hpp"

#include <optional>
#include <string>

namespace eds::testing {

inline std::string example_path(const std::string& rel) { return std::string(EDS_EXAMPLES_DIR) + "/" + rel; }

inline PdeProblem load_pde(const std::string& rel) { return problem_from_json(load_document(example_path(rel))); }

// adapted coframing plus the tester that certified it
struct Prepared {
    std::optional<ZeroTester> zt;
    std::optional<ParabolicCoframing> cof;
};

inline Prepared prepare_pde(PdeProblem prob) {
    prepare_problem(prob);
    Prepared p;
    p.zt.emplace(prob.domain, prob.params);
    p.cof = adapt_coframe(prob, *p.zt);
    return p;
}

inline Prepared prepare_workspace(const Workspace& ws, TestParams params = {}) {
    Prepared p;
    p.zt.emplace(ws.domain, params);
    p.cof = coframing_from_workspace(ws, *p.zt);
    return p;
}

inline bool is_zero(const TensorInvariant& t) { return t.computed && t.verdict.status == ZeroStatus::Zero; }
inline bool is_nonzero(const TensorInvariant& t) { return t.computed && t.verdict.status == ZeroStatus::NonZero; }

inline std::vector<std::string> nonzero_labels(const TensorInvariant& t, ZeroTester& zt) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < t.entries.size(); ++k)
        if (zt.test(t.entries[k]).status == ZeroStatus::NonZero) out.push_back(t.labels[k]);
    return out;
}

}  // namespace eds::testing
