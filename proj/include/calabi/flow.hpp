#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "calabi/complex.hpp"
#include "calabi/errors.hpp"
#include "calabi/feasibility.hpp"

namespace calabi
{

enum class FlowMethod { Calabi, Curvature, Newton };
enum class Integrator { Rk4, Rkf45 };
enum class Verdict { Converged, Diverged, BudgetExhausted };

std::string toString(FlowMethod method);
std::string toString(Integrator integrator);
std::string toString(Verdict verdict);

/** @brief Integration and termination parameters */
struct FlowConfig {
    FlowMethod method{FlowMethod::Calabi};
    Integrator integrator{Integrator::Rkf45};
    /** Initial (rkf45) or fixed (rk4) step in flow time */
    double step{1e-2};
    /** Converged once |L - Lhat|_inf < tolCurvature */
    double tolCurvature{1e-10};
    /** Local error tolerance of the adaptive integrator (mixed absolute/relative) */
    double tolOde{1e-9};
    double maxTime{1e4};
    std::int64_t maxIters{2'000'000};
    /** Diverged once |K|_inf exceeds this */
    double divergenceK{50.0};
    /**
     * Plateau detector: after plateauMinTime, the run is declared diverged if
     * the Calabi energy fell by less than a factor plateauRatio over the
     * trailing half of the elapsed time while |K|_inf kept growing. Set
     * plateauMinTime to +inf to disable.
     */
    double plateauMinTime{200.0};
    double plateauRatio{0.999};
    /** Compute the smallest eigenvalue of J at every sample */
    bool probeEigenvalue{true};
    /** Attach a feasibility certificate to divergent runs */
    bool attachCertificate{true};

    /** Throws InputError unless every tolerance and step is positive */
    void validate() const;
};

struct FlowSample {
    double t{0.0};
    Eigen::VectorXd K;
    /** |L - Lhat|_inf */
    double residual{0.0};
    /** 1/2 |L - Lhat|^2 */
    double energy{0.0};
    /** |dK/dt|_2 of the configured flow */
    double speed{0.0};
    /** Smallest eigenvalue of J (NaN when not probed) */
    double minEigenvalue{0.0};
};

struct FlowTrace {
    FlowConfig config;
    std::vector<FlowSample> samples;
    Verdict verdict{Verdict::BudgetExhausted};
    /** Why the run stopped, e.g. "residual below tolerance" */
    std::string reason;
    /** Slope of ln(energy) over the trailing 30% of samples (converged runs only) */
    std::optional<double> fittedRate;
    std::optional<double> fitRSquared;
    /** Feasibility certificate for divergent runs */
    std::optional<FeasibilityVerdict> certificate;
    /** A radius was clamped to the open interval at some sample */
    bool clamped{false};
    std::int64_t iterations{0};

    [[nodiscard]] const Eigen::VectorXd& finalK() const { return samples.back().K; }
};

/** @brief Integrator step size fell below the representable minimum */
class StepUnderflowError : public NumericalError
{
public:
    StepUnderflowError(const std::string& msg, FlowTrace partial)
        : NumericalError(msg), partial_{std::move(partial)}
    {
    }
    [[nodiscard]] const FlowTrace& partialTrace() const { return partial_; }

private:
    FlowTrace partial_;
};

/** @brief Newton iteration did not reach its tolerance */
class NonConvergenceError : public NumericalError
{
public:
    NonConvergenceError(const std::string& msg, Eigen::VectorXd last)
        : NumericalError(msg), last_{std::move(last)}
    {
    }
    [[nodiscard]] const Eigen::VectorXd& lastIterate() const { return last_; }

private:
    Eigen::VectorXd last_;
};

/** @brief Combinatorial Calabi flow: dK/dt = -J^T (L(K) - Lhat) */
Eigen::VectorXd calabiRhs(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& K);

/** @brief Prescribed curvature flow in radii: dr_v/dt = (L_v - Lhat_v)/2 sin 2 r_v */
Eigen::VectorXd curvatureRhs(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& r);

/** @brief The curvature flow pushed through K = ln cot r: dK/dt = -(L(K) - Lhat) */
Eigen::VectorXd curvatureRhsK(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& K);

/**
 * @brief Integrate the configured flow (or run Newton) from K0.
 *
 * One sample is recorded per accepted step (per iteration for Newton),
 * including the initial state. Throws StepUnderflowError carrying the
 * partial trace if the adaptive step collapses.
 */
FlowTrace run(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    const FlowConfig& config = {});

struct NewtonOptions {
    int maxIters{100};
    int maxBacktracks{40};
    /** Largest accepted |Delta K|_inf per iteration */
    double maxStep{2.0};
    /** Abort once |K|_inf exceeds this */
    double divergenceK{50.0};
};

struct NewtonResult {
    Eigen::VectorXd K;
    int iterations{0};
    /** |L - Lhat|_inf at every iterate, starting with K0 */
    std::vector<double> residuals;
    /** Iterates, starting with K0 */
    std::vector<Eigen::VectorXd> iterates;
    bool converged{false};
    bool diverged{false};
};

/** @brief Damped Newton on the potential; reports instead of throwing */
NewtonResult newtonIterate(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    double tol,
    const NewtonOptions& opts = {});

/** @brief Damped Newton; throws NonConvergenceError on failure */
Eigen::VectorXd newtonSolve(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    double tol = 1e-10,
    const NewtonOptions& opts = {});

struct DecayFit {
    double slope{0.0};
    double rSquared{0.0};
    /** Non-negative slope or constant data: no decay observed */
    bool degenerate{false};
};

/**
 * @brief Least-squares line through (t, ln energy) over the last `window`
 *        samples with positive energy. Throws InputError if window < 10 or
 *        fewer than window such samples exist.
 */
DecayFit fitDecayRate(const FlowTrace& trace, std::size_t window);

/** @brief fitDecayRate over the trailing 30% of the trace (at least 10 samples) */
DecayFit fitTrailingDecay(const FlowTrace& trace);

}  // namespace calabi
