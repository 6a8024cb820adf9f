#pragma once

#include "eds/matest.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace eds {

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<unsigned> precision;
    std::optional<double> tol;  // absolute, e.g. 1e-40
    int dump_points = 0;
};

struct RunResult {
    nlohmann::ordered_json report;
    int exit_code = 0;  // 0 definitive, 1 inconclusive or mixed
};

// Parsed input: either a PDE problem or a workspace carrying a [coframing] section.
struct Pipeline {
    std::string name;
    std::string kind;  // pde | workspace
    int n = 0;
    TestParams params;
    std::optional<ZeroTester> zt;
    Verdict parabolic = Verdict::Inconclusive;
    nlohmann::ordered_json gates = nlohmann::ordered_json::object();
    std::optional<ParabolicCoframing> cof;
    std::vector<std::string> notes;
};

// Loads a problem or workspace file and runs everything up to the adapted coframing.
Pipeline prepare_pipeline(const std::string& path, const RunOptions& opt);

RunResult run_classify(const std::string& path, const RunOptions& opt);
RunResult run_invariants(const std::string& path, const RunOptions& opt);
RunResult run_matest(const std::string& path, const std::string& mode, const RunOptions& opt);
RunResult run_repcheck(int n, int r);

struct CorpusEntry {
    std::string file;
    std::string name;
    std::string kind;
    std::string description;
};
// top-level *.toml files of a directory, sorted by file name
std::vector<CorpusEntry> list_corpus(const std::string& dir);

// human-readable summary of a report
std::string summarize(const nlohmann::ordered_json& report);

}  // namespace eds
