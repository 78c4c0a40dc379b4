// calabi: validate instances, certify feasibility, and solve for circle radii
// whose vertex curvatures hit a target vector.
//
// Exit codes: 0 valid/feasible/converged, 1 invalid complex or infeasible,
// 2 parse or usage error, 3 diverged, 4 budget exhausted.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "calabi/complex.hpp"
#include "calabi/curvature.hpp"
#include "calabi/feasibility.hpp"
#include "calabi/flow.hpp"
#include "calabi/instance_io.hpp"
#include "calabi/oracle.hpp"

namespace fs = std::filesystem;
using namespace calabi;

namespace
{

enum Exit : int { kOk = 0, kNegative = 1, kUsage = 2, kDiverged = 3, kBudget = 4 };

struct SolveOptions {
    std::string method{"calabi"};
    std::string integrator{"rkf45"};
    double step{1e-2};
    double tol{1e-10};
    double maxTime{1e4};
    std::string tracePath;
    std::string solutionPath;
    bool reportGeometry{false};
    std::optional<std::uint64_t> seed;
    bool integratorGiven{false};
    bool stepGiven{false};
};

void printViolations(std::ostream& out, const SurfaceComplex& complex)
{
    for (const auto& v : complex.violations()) {
        out << "violation: " << v.message << '\n';
    }
}

void writeFile(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
    out << content;
}

int cmdValidate(const std::string& path, std::ostream& out)
{
    const auto inst = readInstance(path);
    const auto& c = inst.complex;
    if (!c.valid()) {
        out << "invalid\n";
        printViolations(out, c);
        return kNegative;
    }
    out << "valid, chi=" << c.eulerCharacteristic() << '\n';
    return kOk;
}

int cmdFormat(const std::string& path, std::ostream& out)
{
    out << serializeInstance(readInstance(path));
    return kOk;
}

int cmdCheck(const std::string& path, const std::string& method, std::ostream& out)
{
    const auto inst = readInstance(path);
    if (!inst.complex.valid()) {
        out << "invalid\n";
        printViolations(out, inst.complex);
        return kNegative;
    }
    if (!inst.lhat) {
        throw CLI::ValidationError("check", "instance has no 'lhat' prescription");
    }
    FeasibilityVerdict verdict;
    if (method == "brute-force") {
        verdict = checkBruteForce(inst.complex, *inst.lhat);
    } else if (method == "min-cut") {
        verdict = checkMinCut(inst.complex, *inst.lhat);
    } else {
        verdict = checkFeasibility(inst.complex, *inst.lhat);
    }
    out << (verdict.feasible ? "feasible" : "infeasible");
    if (verdict.boundary) {
        out << " (boundary)";
    }
    out << '\n'
        << "worst_subset " << formatSubset(inst.complex, verdict.worstSubset) << '\n'
        << "worst_margin " << formatNumber(verdict.worstMargin) << '\n'
        << "method " << toString(verdict.method) << '\n';
    return verdict.feasible ? kOk : kNegative;
}

FlowConfig makeConfig(const SolveOptions& opts)
{
    FlowConfig cfg;
    if (opts.method == "calabi") {
        cfg.method = FlowMethod::Calabi;
    } else if (opts.method == "curvature") {
        cfg.method = FlowMethod::Curvature;
    } else {
        cfg.method = FlowMethod::Newton;
    }
    cfg.integrator = opts.integrator == "rk4" ? Integrator::Rk4 : Integrator::Rkf45;
    cfg.step = opts.step;
    cfg.tolCurvature = opts.tol;
    cfg.maxTime = opts.maxTime;
    return cfg;
}

int solveOne(
    const std::string& path,
    const SolveOptions& opts,
    const std::string& tracePath,
    const std::string& solutionPath,
    std::ostream& out)
{
    const auto inst = readInstance(path);
    if (!inst.complex.valid()) {
        out << "invalid\n";
        printViolations(out, inst.complex);
        return kNegative;
    }
    if (!inst.lhat) {
        throw CLI::ValidationError("solve", "instance has no 'lhat' prescription");
    }
    Eigen::VectorXd K0 = inst.startK();
    if (opts.seed) {
        CounterRng rng(*opts.seed);
        K0 = rng.uniformVector(inst.complex.numVertices(), -1.5, 1.5);
    }

    const auto cfg = makeConfig(opts);
    FlowTrace trace;
    int code = kOk;
    try {
        trace = run(inst.complex, *inst.lhat, K0, cfg);
    } catch (const StepUnderflowError& e) {
        out << "error: " << e.what() << '\n';
        trace = e.partialTrace();
    }
    switch (trace.verdict) {
        case Verdict::Converged: code = kOk; break;
        case Verdict::Diverged: code = kDiverged; break;
        case Verdict::BudgetExhausted: code = kBudget; break;
    }

    const auto state = evaluate(inst.complex, trace.finalK());
    const auto& last = trace.samples.back();
    out << "verdict " << toString(trace.verdict) << " (" << trace.reason << ")\n"
        << "method " << toString(cfg.method) << '\n'
        << "time " << formatNumber(last.t) << '\n'
        << "residual_inf " << formatNumber(last.residual) << '\n'
        << "energy " << formatNumber(last.energy) << '\n'
        << "fitted_rate " << (trace.fittedRate ? formatNumber(*trace.fittedRate) : "none") << '\n';
    if (trace.certificate) {
        const auto& cert = *trace.certificate;
        out << "certificate " << (cert.feasible ? "feasible" : "infeasible") << ' '
            << formatSubset(inst.complex, cert.worstSubset) << " margin " << formatNumber(cert.worstMargin)
            << '\n';
    }
    for (Index v = 0; v < inst.complex.numVertices(); ++v) {
        out << "vertex " << inst.complex.vertexNames()[static_cast<std::size_t>(v)] << " r "
            << formatNumber(state.r(v)) << " K " << formatNumber(state.K(v)) << " L "
            << formatNumber(state.L(v)) << '\n';
    }
    if (opts.reportGeometry) {
        for (Index v = 0; v < inst.complex.numVertices(); ++v) {
            out << "cone_angle vertex " << inst.complex.vertexNames()[static_cast<std::size_t>(v)] << ' '
                << formatNumber(state.alphaV(v)) << '\n';
        }
        for (Index f = 0; f < inst.complex.numFaces(); ++f) {
            out << "cone_angle face " << f << ' ' << formatReal(state.alphaF(f)) << '\n';
        }
    }
    if (!tracePath.empty()) {
        writeFile(tracePath, serializeTrace(inst, trace));
    }
    if (!solutionPath.empty()) {
        writeFile(solutionPath, serializeSolution(inst, trace, state));
    }
    return code;
}

int runGuarded(const std::function<int(std::ostream&)>& body, std::ostream& out)
{
    try {
        return body(out);
    } catch (const ParseError& e) {
        out << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const CLI::ValidationError& e) {
        out << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        out << "input error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        out << "numerical error: " << e.what() << '\n';
        return kBudget;
    }
}

int cmdSolve(const std::string& path, const SolveOptions& opts)
{
    if (opts.method == "newton" && (opts.integratorGiven || opts.stepGiven)) {
        std::cerr << "usage error: --integrator/--step do not apply to --method newton\n";
        return kUsage;
    }
    if (!fs::is_directory(path)) {
        return runGuarded([&](std::ostream& out) { return solveOne(path, opts, opts.tracePath, opts.solutionPath, out); },
                          std::cout);
    }

    // Batch mode: every *.inst file in the directory, one worker each.
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".inst") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& dir : {opts.tracePath, opts.solutionPath}) {
        if (!dir.empty()) {
            fs::create_directories(dir);
        }
    }
    std::vector<std::future<std::pair<int, std::string>>> jobs;
    for (const auto& file : files) {
        jobs.push_back(std::async(std::launch::async, [&opts, file] {
            const auto stem = file.stem().string();
            const auto trace = opts.tracePath.empty() ? "" : (fs::path(opts.tracePath) / (stem + ".trace.csv")).string();
            const auto sol = opts.solutionPath.empty() ? "" : (fs::path(opts.solutionPath) / (stem + ".solution.txt")).string();
            std::ostringstream out;
            const int code = runGuarded([&](std::ostream& o) { return solveOne(file.string(), opts, trace, sol, o); }, out);
            return std::make_pair(code, out.str());
        }));
    }
    int worst = kOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto [code, text] = jobs[i].get();
        std::cout << "== " << files[i].filename().string() << " (exit " << code << ")\n" << text;
        worst = std::max(worst, code);
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spherical circle patterns: feasibility checks and curvature flows"};
    app.require_subcommand(1);

    std::string path;
    auto* validate = app.add_subcommand("validate", "Check the combinatorial invariants of an instance");
    validate->add_option("path", path, "Instance file")->required();

    auto* format = app.add_subcommand("format", "Print the instance in canonical form");
    format->add_option("path", path, "Instance file")->required();

    std::string checkMethod{"auto"};
    auto* check = app.add_subcommand("check", "Decide whether the prescription is attainable");
    check->add_option("path", path, "Instance file")->required();
    check->add_option("--method", checkMethod, "Feasibility method")
        ->check(CLI::IsMember({"auto", "brute-force", "min-cut"}));

    SolveOptions solveOpts;
    auto* solve = app.add_subcommand("solve", "Integrate a flow to the prescribed curvatures");
    solve->add_option("path", path, "Instance file or directory of *.inst files")->required();
    solve->add_option("--method", solveOpts.method, "calabi | curvature | newton")
        ->check(CLI::IsMember({"calabi", "curvature", "newton"}));
    auto* integratorOpt = solve->add_option("--integrator", solveOpts.integrator, "rk4 | rkf45")
                              ->check(CLI::IsMember({"rk4", "rkf45"}));
    auto* stepOpt = solve->add_option("--step", solveOpts.step, "Initial or fixed step")->check(CLI::PositiveNumber);
    solve->add_option("--tol", solveOpts.tol, "Curvature tolerance |L - Lhat|_inf")->check(CLI::PositiveNumber);
    solve->add_option("--max-time", solveOpts.maxTime, "Flow-time budget")->check(CLI::PositiveNumber);
    solve->add_option("--trace", solveOpts.tracePath, "Write the trace table here");
    solve->add_option("--solution", solveOpts.solutionPath, "Write the solution report here");
    solve->add_flag("--report-geometry", solveOpts.reportGeometry, "Print vertex and face cone angles");
    std::uint64_t seed = 0;
    auto* seedOpt = solve->add_option("--seed", seed, "Start from a seeded random K in [-1.5, 1.5]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (validate->parsed()) {
        return runGuarded([&](std::ostream& out) { return cmdValidate(path, out); }, std::cout);
    }
    if (format->parsed()) {
        return runGuarded([&](std::ostream& out) { return cmdFormat(path, out); }, std::cout);
    }
    if (check->parsed()) {
        return runGuarded([&](std::ostream& out) { return cmdCheck(path, checkMethod, out); }, std::cout);
    }
    solveOpts.integratorGiven = integratorOpt->count() > 0;
    solveOpts.stepGiven = stepOpt->count() > 0;
    if (seedOpt->count() > 0) {
        solveOpts.seed = seed;
    }
    return cmdSolve(path, solveOpts);
}
