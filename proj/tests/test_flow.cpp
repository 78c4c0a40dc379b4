#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "calabi/curvature.hpp"
#include "calabi/errors.hpp"
#include "calabi/flow.hpp"
#include "calabi/geometry.hpp"
#include "calabi/oracle.hpp"

using namespace calabi;

namespace
{
constexpr double kPi = std::numbers::pi;
constexpr double kRight = kPi / 2;

struct Tet {
    SurfaceComplex complex = fixtures::tetrahedron(kRight);
    Prescription lhat{curvatures(complex, Eigen::VectorXd::Zero(4))};
    Eigen::Vector4d start{1.0, -0.5, 0.3, 0.0};
};

Prescription loudVertex(const SurfaceComplex& c)
{
    Eigen::VectorXd l = curvatures(c, Eigen::VectorXd::Zero(c.numVertices()));
    l(0) = 10.0;
    return Prescription(l);
}
}  // namespace

TEST_CASE("right-hand sides vanish at the fixed point")
{
    const Tet t;
    CHECK(calabiRhs(t.complex, t.lhat, Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(curvatureRhsK(t.complex, t.lhat, Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(curvatureRhs(t.complex, t.lhat, Eigen::VectorXd::Constant(4, kPi / 4)).cwiseAbs().maxCoeff() == 0.0);

    CounterRng rng(3);
    const auto c = randomSphereComplex(rng, 7, 1, 0.3, kRight);
    const auto syn = makeSynthetic(c, 9);
    CHECK(calabiRhs(c, syn.lhat, syn.plantedK).norm() <= 1e-13);

    // J invertible: the rhs is nonzero away from the solution.
    CHECK(calabiRhs(c, syn.lhat, syn.plantedK.array() + 0.1).norm() > 1e-3);
}

TEST_CASE("Calabi field is minus J times the residual")
{
    CounterRng rng(12);
    const auto c = randomSphereComplex(rng, 8, 2, 0.2, kRight);
    const auto syn = makeSynthetic(c, 3);
    const Eigen::VectorXd K = rng.uniformVector(8, -1.0, 1.0);
    const auto s = evaluate(c, K);
    const Eigen::VectorXd expected = -s.J.transpose() * (s.L - syn.lhat.values());
    CHECK((calabiRhs(c, syn.lhat, K) - expected).cwiseAbs().maxCoeff() <= 1e-13);

    // Gradient of the prescribed energy is J^T (L - Lhat).
    const ScalarField energy = [&](const Eigen::VectorXd& x) {
        return prescribedCalabiEnergy(curvatures(c, x), syn.lhat);
    };
    CHECK(maxRelativeError(fdGradient(energy, K), -expected) <= 1e-6);
}

TEST_CASE("curvature flow in radii maps to K-space by the chain rule")
{
    CounterRng rng(55);
    const auto c = randomSphereComplex(rng, 9, 1, 0.1, kRight);
    const auto syn = makeSynthetic(c, 8);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd r = rng.uniformVector(9, 0.05, kRight - 0.05);
        Eigen::VectorXd K(9);
        for (Index v = 0; v < 9; ++v) {
            K(v) = rToK(r(v));
        }
        const Eigen::VectorXd drdt = curvatureRhs(c, syn.lhat, r);
        const Eigen::VectorXd dKdt = curvatureRhsK(c, syn.lhat, K);
        for (Index v = 0; v < 9; ++v) {
            const double mapped = -2.0 / std::sin(2 * r(v)) * drdt(v);
            CHECK(std::abs(mapped - dKdt(v)) <= 1e-10);
        }
    }

    Eigen::VectorXd r = Eigen::VectorXd::Constant(9, 0.7);
    r(2) = kRight - 1e-9;
    CHECK(std::abs(curvatureRhs(c, syn.lhat, r)(2)) < 1e-7);
    r(2) = kRight;
    CHECK_THROWS_AS(curvatureRhs(c, syn.lhat, r), DomainError);
}

TEST_CASE("Calabi flow on the tetrahedron")
{
    const Tet t;
    const auto trace = run(t.complex, t.lhat, t.start);
    REQUIRE((trace.verdict == Verdict::Converged));
    CHECK(trace.finalK().cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(trace.samples.back().residual < 1e-10);
    CHECK(trace.samples.front().t == 0.0);
    CHECK(trace.samples.front().K == t.start);

    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
        CHECK(trace.samples[i].t > trace.samples[i - 1].t);
        CHECK(trace.samples[i].energy <= trace.samples[i - 1].energy + 1e-9);
        CHECK(trace.samples[i].minEigenvalue > 0.0);
    }
    const double bound = velocityBound(t.complex, t.lhat);
    for (const auto& s : trace.samples) {
        CHECK(s.speed <= bound);
    }

    REQUIRE(trace.fittedRate.has_value());
    CHECK(*trace.fittedRate < 0.0);
    CHECK(*trace.fitRSquared >= 0.99);
    const auto fit = fitTrailingDecay(trace);
    CHECK(fit.slope == doctest::Approx(*trace.fittedRate));
    CHECK_FALSE(fit.degenerate);
}

TEST_CASE("the potential decreases along the Calabi flow")
{
    const Tet t;
    FlowConfig cfg;
    cfg.tolCurvature = 1e-6;
    const auto trace = run(t.complex, t.lhat, t.start, cfg);
    REQUIRE((trace.verdict == Verdict::Converged));
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.samples.size(); i += 5) {
        const double e = potential(t.complex, t.lhat, trace.samples[i].K);
        CHECK(e <= prev + 1e-9);
        prev = e;
    }
}

TEST_CASE("starting at the solution converges at time zero")
{
    const Tet t;
    for (auto method : {FlowMethod::Calabi, FlowMethod::Curvature, FlowMethod::Newton}) {
        FlowConfig cfg;
        cfg.method = method;
        const auto trace = run(t.complex, t.lhat, Eigen::VectorXd::Zero(4), cfg);
        CHECK((trace.verdict == Verdict::Converged));
        CHECK(trace.samples.size() == 1);
        CHECK(trace.samples.back().t == 0.0);
        CHECK_FALSE(trace.fittedRate.has_value());
    }
}

TEST_CASE("three methods agree")
{
    CounterRng rng(2);
    const auto c = withRandomPhi(fixtures::cube(kRight), rng, kPi / 4, kRight);
    const auto syn = makeSynthetic(c, 44);
    const Eigen::VectorXd K0 = rng.uniformVector(8, -1.5, 1.5);
    std::vector<Eigen::VectorXd> limits;
    for (auto method : {FlowMethod::Calabi, FlowMethod::Curvature, FlowMethod::Newton}) {
        FlowConfig cfg;
        cfg.method = method;
        cfg.maxTime = 1e6;
        const auto trace = run(c, syn.lhat, K0, cfg);
        CAPTURE(toString(method));
        REQUIRE((trace.verdict == Verdict::Converged));
        CHECK((trace.finalK() - syn.plantedK).cwiseAbs().maxCoeff() <= 1e-8);
        limits.push_back(trace.finalK());
    }
    CHECK((limits[0] - limits[1]).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((limits[0] - limits[2]).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((limits[1] - limits[2]).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fixed-step RK4 limit is step independent")
{
    const Tet t;
    FlowConfig cfg;
    cfg.integrator = Integrator::Rk4;
    cfg.step = 0.02;
    const auto coarse = run(t.complex, t.lhat, t.start, cfg);
    cfg.step = 0.01;
    const auto fine = run(t.complex, t.lhat, t.start, cfg);
    REQUIRE((coarse.verdict == Verdict::Converged));
    REQUIRE((fine.verdict == Verdict::Converged));
    CHECK((coarse.finalK() - fine.finalK()).cwiseAbs().maxCoeff() <= 1e-9);
    // Fixed step: samples are evenly spaced.
    CHECK(fine.samples[3].t == doctest::Approx(0.03));
}

TEST_CASE("infeasible prescription diverges with a certificate")
{
    const auto tet = fixtures::tetrahedron(kRight);
    const auto lhat = loudVertex(tet);
    for (auto method : {FlowMethod::Calabi, FlowMethod::Curvature}) {
        FlowConfig cfg;
        cfg.method = method;
        const auto trace = run(tet, lhat, Eigen::VectorXd::Zero(4), cfg);
        CAPTURE(toString(method));
        CHECK((trace.verdict == Verdict::Diverged));
        REQUIRE(trace.certificate.has_value());
        CHECK_FALSE(trace.certificate->feasible);
        CHECK(trace.certificate->worstMargin > 0.0);
        CHECK_FALSE(trace.fittedRate.has_value());
    }

    FlowConfig curv;
    curv.method = FlowMethod::Curvature;
    const auto trace = run(tet, lhat, Eigen::VectorXd::Zero(4), curv);
    CHECK(trace.finalK().cwiseAbs().maxCoeff() > curv.divergenceK);
    CHECK(trace.clamped);
}

TEST_CASE("budget exhaustion")
{
    const Tet t;
    FlowConfig cfg;
    cfg.maxTime = 0.5;
    auto trace = run(t.complex, t.lhat, t.start, cfg);
    CHECK((trace.verdict == Verdict::BudgetExhausted));
    CHECK(trace.samples.back().t <= 0.5 + 1e-12);

    cfg.maxTime = 1e4;
    cfg.maxIters = 3;
    trace = run(t.complex, t.lhat, t.start, cfg);
    CHECK((trace.verdict == Verdict::BudgetExhausted));
    CHECK(trace.iterations == 3);
}

TEST_CASE("configuration validation")
{
    const Tet t;
    FlowConfig cfg;
    cfg.step = 0.0;
    CHECK_THROWS_AS(run(t.complex, t.lhat, t.start, cfg), InputError);
    cfg = {};
    cfg.tolCurvature = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = {};
    cfg.maxIters = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    CHECK_THROWS_AS(run(t.complex, t.lhat, Eigen::VectorXd::Zero(3)), InputError);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
    bad(1) = std::nan("");
    CHECK_THROWS_AS(run(t.complex, t.lhat, bad), DomainError);
}

TEST_CASE("step underflow carries the partial trace")
{
    const Tet t;
    FlowConfig cfg;
    cfg.tolOde = 1e-300;
    try {
        (void)run(t.complex, t.lhat, t.start, cfg);
        FAIL("expected StepUnderflowError");
    } catch (const StepUnderflowError& e) {
        CHECK_FALSE(e.partialTrace().samples.empty());
        CHECK(e.partialTrace().samples.front().K == t.start);
    }
}

TEST_CASE("Newton")
{
    const Tet t;
    const auto flow = run(t.complex, t.lhat, t.start);
    const Eigen::VectorXd K = newtonSolve(t.complex, t.lhat, t.start);
    CHECK((K - flow.finalK()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((curvatures(t.complex, K) - t.lhat.values()).cwiseAbs().maxCoeff() <= 1e-10);

    const auto atSolution = newtonIterate(t.complex, t.lhat, Eigen::VectorXd::Zero(4), 1e-10);
    CHECK(atSolution.converged);
    CHECK(atSolution.iterations == 0);

    // Quadratic tail: e_{k+1} / e_k^2 stays bounded once close.
    const auto res = newtonIterate(t.complex, t.lhat, t.start, 1e-14);
    REQUIRE(res.converged);
    int tail = 0;
    for (std::size_t k = 0; k + 1 < res.iterates.size(); ++k) {
        const double ek = res.iterates[k].cwiseAbs().maxCoeff();
        const double ek1 = res.iterates[k + 1].cwiseAbs().maxCoeff();
        if (ek < 0.1 && ek1 > 1e-13) {
            CHECK(ek1 / (ek * ek) < 10.0);
            ++tail;
        }
    }
    CHECK(tail >= 1);

    const auto tet = fixtures::tetrahedron(kRight);
    CHECK_THROWS_AS(newtonSolve(tet, loudVertex(tet), Eigen::VectorXd::Zero(4)), NonConvergenceError);
    NewtonOptions few;
    few.maxIters = 1;
    try {
        (void)newtonSolve(t.complex, t.lhat, Eigen::VectorXd::Constant(4, 3.0), 1e-10, few);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.lastIterate().size() == 4);
    }
}

TEST_CASE("decay fit")
{
    FlowTrace trace;
    for (int i = 0; i < 40; ++i) {
        FlowSample s;
        s.t = 0.5 * i;
        s.energy = 3.0 * std::exp(-0.8 * s.t);
        trace.samples.push_back(s);
    }
    auto fit = fitDecayRate(trace, 20);
    CHECK(fit.slope == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(fit.rSquared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(fit.degenerate);

    for (auto& s : trace.samples) {
        s.energy = 0.25;
    }
    fit = fitDecayRate(trace, 20);
    CHECK(std::abs(fit.slope) <= 1e-12);
    CHECK(fit.degenerate);

    CHECK_THROWS_AS(fitDecayRate(trace, 5), InputError);
    CHECK_THROWS_AS(fitDecayRate(trace, 41), InputError);
    trace.samples.resize(8);
    CHECK_THROWS_AS(fitTrailingDecay(trace), InputError);
}

TEST_CASE("names")
{
    CHECK(toString(FlowMethod::Calabi) == "calabi");
    CHECK(toString(FlowMethod::Curvature) == "curvature");
    CHECK(toString(FlowMethod::Newton) == "newton");
    CHECK(toString(Integrator::Rk4) == "rk4");
    CHECK(toString(Integrator::Rkf45) == "rkf45");
    CHECK(toString(Verdict::BudgetExhausted) == "budget-exhausted");
}
