#include "eds/report.hpp"

#include "eds/io.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

namespace eds {

namespace {

using ojson = nlohmann::ordered_json;

void apply_run(TestParams& p, const nlohmann::json& doc, const RunOptions& opt) {
    if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("run")) {
        const auto& r = doc["run"];
        if (r.contains("trials")) p.trials = r["trials"].get<int>();
        if (r.contains("precision")) p.precision = r["precision"].get<unsigned>();
        if (r.contains("tol")) p.tol_exp10 = std::log10(r["tol"].get<double>());
    }
    if (opt.seed) p.seed = *opt.seed;
    if (opt.trials) p.trials = *opt.trials;
    if (opt.precision) p.precision = *opt.precision;
    if (opt.tol) p.tol_exp10 = std::log10(*opt.tol);
    if (p.trials < 1) throw std::invalid_argument("trials must be positive");
    if (p.precision < 64) throw std::invalid_argument("precision must be at least 64 bits");
}

ojson tolerances_json(const TestParams& p) {
    ojson t;
    t["precision_bits"] = p.precision;
    std::ostringstream os;
    os << "1e" << p.tol_exp10;
    t["tol"] = os.str();
    t["trials"] = p.trials;
    return t;
}

ojson envelope(const Pipeline& pl, ojson verdicts, ojson samples) {
    ojson j;
    j["verdicts"] = std::move(verdicts);
    j["invariant_samples"] = std::move(samples);
    j["seed"] = pl.params.seed;
    j["tolerances"] = tolerances_json(pl.params);
    j["gates"] = pl.gates;
    ojson in;
    in["name"] = pl.name;
    in["kind"] = pl.kind;
    in["n"] = pl.n;
    j["input"] = in;
    return j;
}

}  // namespace

Pipeline prepare_pipeline(const std::string& path, const RunOptions& opt) {
    nlohmann::json doc = load_document(path);
    Pipeline pl;
    pl.kind = doc.value("kind", std::string("pde"));
    if (pl.kind == "pde") {
        PdeProblem prob = problem_from_json(doc);
        apply_run(prob.params, doc, opt);
        pl.name = prob.name;
        pl.n = prob.n;
        pl.params = prob.params;
        pl.gates["validate"] = "not_applicable";
        prepare_problem(prob);
        pl.gates["solved_coordinate"] = prob.domain.solved.empty() ? "" : prob.domain.solved.front().name;
        pl.zt.emplace(prob.domain, prob.params);
        ParabolicCheck pc = check_parabolic(prob, *pl.zt);
        pl.parabolic = pc.parabolic ? Verdict::Yes : Verdict::No;
        pl.gates["parabolic"] = verdict_name(pl.parabolic);
        if (!pc.parabolic) {
            pl.gates["parabolic_reason"] = pc.reason;
            pl.gates["coframing"] = "not_applicable";
            return pl;
        }
        pl.cof = adapt_coframe(prob, *pl.zt);
    } else if (pl.kind == "workspace") {
        Workspace ws = workspace_from_json(doc);
        apply_run(pl.params, doc, opt);
        pl.name = ws.name;
        pl.zt.emplace(ws.domain, pl.params);
        bool want_validate = !(doc.contains("run") && doc["run"].contains("validate") && !doc["run"]["validate"].get<bool>());
        if (want_validate) {
            ValidationReport vr = validate_workspace(ws, *pl.zt);
            pl.gates["validate"] = vr.pass ? "pass" : "fail";
            if (!vr.pass) pl.notes.push_back("workspace fails validation (" + std::to_string(vr.failures.size()) + " failures)");
        } else {
            pl.gates["validate"] = "skipped";
        }
        if (!ws.coframing) throw std::invalid_argument("workspace has no [coframing] section");
        pl.n = ws.coframing->n();
        // a workspace is taken as parabolic once its coframing passes the structure checks
        pl.cof = coframing_from_workspace(ws, *pl.zt);
        pl.parabolic = Verdict::Yes;
        pl.gates["parabolic"] = "yes";
    } else {
        throw std::invalid_argument("unknown file kind '" + pl.kind + "'");
    }
    CoframingCheck ck = check_coframing(*pl.cof, *pl.zt);
    pl.gates["coframing"] = ck.pass ? "pass" : "fail";
    if (!ck.pass) {
        pl.parabolic = Verdict::Inconclusive;
        pl.notes.push_back("adapted coframing fails the 0-adapted structure checks");
    }
    return pl;
}

namespace {

struct Computed {
    Pipeline pl;
    std::optional<InvariantSet> inv;
    Classification cls;
};

Computed compute(const std::string& path, const RunOptions& opt) {
    Computed c{prepare_pipeline(path, opt), std::nullopt, {}};
    if (c.pl.cof && c.pl.parabolic == Verdict::Yes) {
        if (c.pl.n < 2) throw std::invalid_argument("invariants need n >= 2");
        c.inv = compute_invariants(*c.pl.cof, *c.pl.zt);
        c.cls = classify(*c.inv, Verdict::Yes);
    } else {
        InvariantSet empty;
        empty.n = c.pl.n;
        c.cls = classify(empty, c.pl.parabolic);
    }
    for (const auto& note : c.pl.notes) c.cls.notes.push_back(note);
    return c;
}

int exit_for(const Classification& cls, const Pipeline& pl) {
    if (!cls.definitive()) return 1;
    if (pl.gates.contains("validate") && pl.gates["validate"] == "fail") return 1;
    return 0;
}

}  // namespace

RunResult run_classify(const std::string& path, const RunOptions& opt) {
    Computed c = compute(path, opt);
    RunResult r;
    ojson samples = c.inv ? invariants_json(*c.inv, *c.pl.zt, opt.dump_points) : ojson::object();
    r.report = envelope(c.pl, classification_json(c.cls), samples);
    r.exit_code = exit_for(c.cls, c.pl);
    return r;
}

RunResult run_invariants(const std::string& path, const RunOptions& opt) {
    RunOptions o = opt;
    if (o.dump_points <= 0) o.dump_points = 3;
    return run_classify(path, o);
}

RunResult run_matest(const std::string& path, const std::string& mode, const RunOptions& opt) {
    if (mode != "linear-type" && mode != "upsilon2") throw std::invalid_argument("mode must be linear-type or upsilon2");
    Computed c = compute(path, opt);
    RunResult r;
    ojson v;
    v["mode"] = mode;
    if (!c.inv) {
        v["result"] = "not_applicable";
        r.report = envelope(c.pl, v, ojson::object());
        r.exit_code = c.pl.parabolic == Verdict::No ? 0 : 1;
        return r;
    }
    if (mode == "linear-type") {
        LinearTypeReport lt = check_linear_type(*c.pl.cof, *c.inv, *c.pl.zt);
        v["result"] = linear_type_json(lt);
        v["invariant_linear_type"] = verdict_name(c.cls.linear_type);
        v["agrees"] = lt.linear_type == c.cls.linear_type;
        r.exit_code = lt.linear_type == Verdict::Inconclusive ? 1 : 0;
    } else {
        Upsilon2Report u = upsilon2(*c.pl.cof, *c.inv, *c.pl.zt);
        v["result"] = upsilon2_json(u);
        v["invariant_monge_ampere"] = verdict_name(c.cls.monge_ampere);
        r.exit_code = 0;
        if (u.constructible && u.closure.verdict.status == ZeroStatus::Inconclusive) r.exit_code = 1;
        if (u.applicable && c.inv->secondary_residual.verdict.status == ZeroStatus::Inconclusive) r.exit_code = 1;
    }
    r.report = envelope(c.pl, v, invariants_json(*c.inv, *c.pl.zt, opt.dump_points));
    return r;
}

RunResult run_repcheck(int n, int r) {
    ExactnessReport e = check_exactness(n, r);
    RunResult res;
    ojson v;
    v["n"] = e.n;
    v["r"] = e.r;
    v["dim_b"] = e.dim_b;
    v["rank_f"] = e.rank_f;
    v["dim_middle"] = e.dim_middle;
    v["rank_g"] = e.rank_g;
    v["dim_ker_g"] = e.dim_ker_g;
    v["homology"] = e.homology;
    v["injective"] = e.injective;
    v["complex"] = e.complex;
    v["exact"] = e.exact;
    if (r == 2) v["sym4_traceless_dim"] = sym4_traceless_dim(n);
    ojson j;
    j["verdicts"] = v;
    j["invariant_samples"] = ojson::object();
    j["seed"] = nullptr;
    j["tolerances"] = "exact";
    j["gates"] = ojson::object();
    res.report = j;
    return res;
}

std::vector<CorpusEntry> list_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<CorpusEntry> out;
    if (!fs::is_directory(dir)) throw std::invalid_argument("no such directory '" + dir + "'");
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".toml") continue;
        nlohmann::json doc = load_document(e.path().string());
        CorpusEntry c;
        c.file = e.path().filename().string();
        c.kind = doc.value("kind", std::string("pde"));
        c.name = doc.value("name", e.path().stem().string());
        c.description = doc.value("description", std::string());
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.file < b.file; });
    return out;
}

std::string summarize(const nlohmann::ordered_json& report) {
    std::ostringstream os;
    if (report.contains("input")) {
        const auto& in = report["input"];
        os << in["name"].get<std::string>() << " (" << in["kind"].get<std::string>() << ", n=" << in["n"].get<int>() << ")\n";
    }
    auto line = [&](const std::string& k, const ojson& v) {
        os << "  " << k;
        for (std::size_t i = k.size(); i < 18; ++i) os << ' ';
        os << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    };
    if (report.contains("gates"))
        for (const auto& [k, v] : report["gates"].items()) line(k, v);
    for (const auto& [k, v] : report["verdicts"].items()) {
        if (k == "notes") {
            for (const auto& note : v) os << "  note: " << note.get<std::string>() << "\n";
            continue;
        }
        line(k, v);
    }
    return os.str();
}

}  // namespace eds
