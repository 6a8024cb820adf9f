#include "eds/report.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace eds;

int main(int argc, char** argv) {
    CLI::App app{"Classify scalar parabolic equations by their Monge-Ampere and Goursat invariants"};
    app.require_subcommand(1);
    app.fallthrough();

    RunOptions opt;
    std::uint64_t seed = 0;
    int trials = 0;
    unsigned precision = 0;
    double tol = 0;
    bool compact = false, pretty = false;
    auto* o_seed = app.add_option("--seed", seed, "random seed for sample points");
    auto* o_trials = app.add_option("--trials", trials, "number of sample points")->check(CLI::PositiveNumber);
    auto* o_prec = app.add_option("--precision", precision, "working precision in bits")->check(CLI::Range(64u, 1u << 16));
    auto* o_tol = app.add_option("--tol", tol, "zero tolerance, e.g. 1e-40")->check(CLI::PositiveNumber);
    app.add_flag("--json", compact, "single-line JSON");
    app.add_flag("--pretty", pretty, "human-readable summary instead of JSON");

    std::string file;
    auto* classify = app.add_subcommand("classify", "run the full classification");
    classify->add_option("file", file, "problem or workspace file")->required()->check(CLI::ExistingFile);

    int dump = 3;
    auto* invariants = app.add_subcommand("invariants", "report invariant tensors with samples");
    invariants->add_option("file", file, "problem or workspace file")->required()->check(CLI::ExistingFile);
    invariants->add_option("--dump-points", dump, "sample points to print")->check(CLI::Range(1, 1000));

    int rn = 0, rr = 0;
    auto* repcheck = app.add_subcommand("repcheck", "exactness of the branched sequence");
    repcheck->add_option("--n", rn, "dimension")->required()->check(CLI::Range(2, 8));
    repcheck->add_option("--r", rr, "degree")->required()->check(CLI::Range(1, 8));

    std::string mode;
    auto* matest = app.add_subcommand("matest", "differential-form tests for Monge-Ampere type");
    matest->add_option("--input", file, "problem or workspace file")->required()->check(CLI::ExistingFile);
    matest->add_option("--mode", mode, "linear-type or upsilon2")->required()->check(CLI::IsMember({"linear-type", "upsilon2"}));

    std::string dir = EDS_EXAMPLES_DIR;
    auto* examples = app.add_subcommand("examples", "list the shipped example corpus");
    examples->add_option("--dir", dir, "corpus directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (*o_seed) opt.seed = seed;
    if (*o_trials) opt.trials = trials;
    if (*o_prec) opt.precision = precision;
    if (*o_tol) opt.tol = tol;

    try {
        RunResult res;
        if (*classify) {
            res = run_classify(file, opt);
        } else if (*invariants) {
            opt.dump_points = dump;
            res = run_invariants(file, opt);
        } else if (*repcheck) {
            res = run_repcheck(rn, rr);
        } else if (*matest) {
            res = run_matest(file, mode, opt);
        } else {
            nlohmann::ordered_json list = nlohmann::ordered_json::array();
            for (const auto& e : list_corpus(dir)) {
                if (pretty) {
                    std::cout << e.file << "  [" << e.kind << "]  " << e.description << "\n";
                    continue;
                }
                nlohmann::ordered_json j;
                j["file"] = e.file;
                j["name"] = e.name;
                j["kind"] = e.kind;
                j["description"] = e.description;
                list.push_back(j);
            }
            if (!pretty) std::cout << (compact ? list.dump() : list.dump(2)) << "\n";
            return 0;
        }
        if (pretty)
            std::cout << summarize(res.report);
        else
            std::cout << (compact ? res.report.dump() : res.report.dump(2)) << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
