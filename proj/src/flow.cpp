#include "calabi/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "calabi/curvature.hpp"
#include "calabi/geometry.hpp"

namespace calabi
{

std::string toString(FlowMethod method)
{
    switch (method) {
        case FlowMethod::Calabi: return "calabi";
        case FlowMethod::Curvature: return "curvature";
        case FlowMethod::Newton: return "newton";
    }
    return "?";
}

std::string toString(Integrator integrator)
{
    return integrator == Integrator::Rk4 ? "rk4" : "rkf45";
}

std::string toString(Verdict verdict)
{
    switch (verdict) {
        case Verdict::Converged: return "converged";
        case Verdict::Diverged: return "diverged";
        case Verdict::BudgetExhausted: return "budget-exhausted";
    }
    return "?";
}

void FlowConfig::validate() const
{
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0)) {
            throw InputError(std::string(name) + " must be positive");
        }
    };
    positive(step, "step");
    positive(tolCurvature, "curvature tolerance");
    positive(tolOde, "ODE tolerance");
    positive(maxTime, "max time");
    positive(divergenceK, "divergence threshold");
    if (maxIters <= 0) {
        throw InputError("iteration budget must be positive");
    }
}

Eigen::VectorXd calabiRhs(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& K)
{
    const auto s = evaluate(complex, K);
    if (lhat.size() != s.L.size()) {
        throw InputError("prescription size does not match vertex count");
    }
    return -s.J.transpose() * (s.L - lhat.values());
}

Eigen::VectorXd curvatureRhs(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& r)
{
    complex.requireValid();
    if (r.size() != complex.numVertices() || lhat.size() != complex.numVertices()) {
        throw InputError("radius/prescription size does not match vertex count");
    }
    Eigen::VectorXd K(r.size());
    for (Index v = 0; v < r.size(); ++v) {
        K(v) = rToK(r(v));  // domain-checks r
    }
    const Eigen::VectorXd L = curvatures(complex, K);
    return ((L - lhat.values()).array() / 2.0 * (2.0 * r.array()).sin()).matrix();
}

Eigen::VectorXd curvatureRhsK(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::Ref<const Eigen::VectorXd>& K)
{
    if (lhat.size() != complex.numVertices()) {
        throw InputError("prescription size does not match vertex count");
    }
    return -(curvatures(complex, K) - lhat.values());
}

namespace
{

double minEigenvalue(const Eigen::MatrixXd& J)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Evaluates the configured vector field and records one sample.
class FlowField
{
public:
    FlowField(const SurfaceComplex& complex, const Prescription& lhat, const FlowConfig& config)
        : complex_{complex}, lhat_{lhat}, config_{config}
    {
    }

    Eigen::VectorXd rhs(const Eigen::VectorXd& K) const
    {
        if (config_.method == FlowMethod::Curvature) {
            return curvatureRhsK(complex_, lhat_, K);
        }
        const auto s = evaluate(complex_, K);
        return -s.J.transpose() * (s.L - lhat_.values());
    }

    /** Sample at K; also returns the field there for reuse as the first stage */
    FlowSample sample(double t, const Eigen::VectorXd& K, Eigen::VectorXd& field, bool& clamped) const
    {
        const auto s = evaluate(complex_, K);
        clamped = clamped || s.clamped;
        const Eigen::VectorXd diff = s.L - lhat_.values();
        field = config_.method == FlowMethod::Curvature ? Eigen::VectorXd(-diff)
                                                        : Eigen::VectorXd(-s.J.transpose() * diff);
        FlowSample out;
        out.t = t;
        out.K = K;
        out.residual = diff.lpNorm<Eigen::Infinity>();
        out.energy = 0.5 * diff.squaredNorm();
        out.speed = field.norm();
        out.minEigenvalue = config_.probeEigenvalue ? minEigenvalue(s.J)
                                                    : std::numeric_limits<double>::quiet_NaN();
        return out;
    }

private:
    const SurfaceComplex& complex_;
    const Prescription& lhat_;
    const FlowConfig& config_;
};

// Fehlberg 4(5) tableau; the fifth-order solution is propagated.
constexpr std::array<std::array<double, 5>, 6> kA{{
    {0, 0, 0, 0, 0},
    {1.0 / 4, 0, 0, 0, 0},
    {3.0 / 32, 9.0 / 32, 0, 0, 0},
    {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197, 0, 0},
    {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104, 0},
    {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40},
}};
constexpr std::array<double, 6> kB5{16.0 / 135, 0, 6656.0 / 12825, 28561.0 / 56430, -9.0 / 50, 2.0 / 55};
constexpr std::array<double, 6> kB4{25.0 / 216, 0, 1408.0 / 2565, 2197.0 / 4104, -1.0 / 5, 0};

struct StepResult {
    Eigen::VectorXd next;
    double errorNorm{0.0};
};

StepResult rkf45Step(const FlowField& field, const Eigen::VectorXd& y, const Eigen::VectorXd& k1, double h, double tol)
{
    std::array<Eigen::VectorXd, 6> k;
    k[0] = k1;
    for (std::size_t i = 1; i < 6; ++i) {
        Eigen::VectorXd yi = y;
        for (std::size_t j = 0; j < i; ++j) {
            yi += h * kA[i][j] * k[j];
        }
        k[i] = field.rhs(yi);
    }
    Eigen::VectorXd y5 = y;
    Eigen::VectorXd err = Eigen::VectorXd::Zero(y.size());
    for (std::size_t i = 0; i < 6; ++i) {
        y5 += h * kB5[i] * k[i];
        err += h * (kB5[i] - kB4[i]) * k[i];
    }
    const Eigen::ArrayXd scale = tol * (1.0 + y.array().abs().max(y5.array().abs()));
    return {y5, (err.array().abs() / scale).maxCoeff()};
}

Eigen::VectorXd rk4Step(const FlowField& field, const Eigen::VectorXd& y, const Eigen::VectorXd& k1, double h)
{
    const Eigen::VectorXd k2 = field.rhs(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = field.rhs(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = field.rhs(y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Index of the last sample with t <= target.
std::size_t sampleAtOrBefore(const std::vector<FlowSample>& samples, double target)
{
    auto it = std::upper_bound(samples.begin(), samples.end(), target,
                               [](double t, const FlowSample& s) { return t < s.t; });
    return it == samples.begin() ? 0 : static_cast<std::size_t>(it - samples.begin() - 1);
}

void attachCertificate(FlowTrace& trace, const SurfaceComplex& complex, const Prescription& lhat)
{
    if (trace.config.attachCertificate) {
        trace.certificate = checkFeasibility(complex, lhat);
    }
}

void finishTrace(FlowTrace& trace, const SurfaceComplex& complex, const Prescription& lhat)
{
    if (trace.verdict == Verdict::Diverged) {
        attachCertificate(trace, complex, lhat);
    }
    if (trace.verdict == Verdict::Converged) {
        try {
            const auto fit = fitTrailingDecay(trace);
            trace.fittedRate = fit.slope;
            trace.fitRSquared = fit.rSquared;
        } catch (const InputError&) {
            // Too few samples to fit (e.g. started at the fixed point).
        }
    }
}

FlowTrace runNewton(
    const SurfaceComplex& complex, const Prescription& lhat, const Eigen::VectorXd& K0, const FlowConfig& config)
{
    NewtonOptions opts;
    opts.divergenceK = config.divergenceK;
    opts.maxIters = static_cast<int>(std::min<std::int64_t>(config.maxIters, 1000));
    const auto result = newtonIterate(complex, lhat, K0, config.tolCurvature, opts);

    FlowTrace trace;
    trace.config = config;
    const FlowField field(complex, lhat, FlowConfig{config});
    for (std::size_t i = 0; i < result.iterates.size(); ++i) {
        Eigen::VectorXd rhs;
        auto s = field.sample(static_cast<double>(i), result.iterates[i], rhs, trace.clamped);
        // Newton "velocity" is the undamped Newton step.
        const auto st = evaluate(complex, result.iterates[i]);
        s.speed = st.J.ldlt().solve(st.L - lhat.values()).norm();
        trace.samples.push_back(std::move(s));
    }
    trace.iterations = result.iterations;
    if (result.converged) {
        trace.verdict = Verdict::Converged;
        trace.reason = "residual below tolerance";
    } else if (result.diverged) {
        trace.verdict = Verdict::Diverged;
        trace.reason = "|K|_inf exceeded divergence threshold";
    } else {
        trace.verdict = Verdict::BudgetExhausted;
        trace.reason = "newton iteration stalled or hit the iteration cap";
    }
    finishTrace(trace, complex, lhat);
    return trace;
}

}  // namespace

FlowTrace run(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    const FlowConfig& config)
{
    config.validate();
    complex.requireValid();
    if (K0.size() != complex.numVertices() || lhat.size() != complex.numVertices()) {
        throw InputError("initial K / prescription size does not match vertex count");
    }
    if (!K0.allFinite()) {
        throw DomainError("initial K must be finite");
    }
    if (config.method == FlowMethod::Newton) {
        return runNewton(complex, lhat, K0, config);
    }

    FlowTrace trace;
    trace.config = config;
    const FlowField field(complex, lhat, trace.config);

    Eigen::VectorXd K = K0;
    Eigen::VectorXd k1;
    double t = 0.0;
    double h = config.step;
    trace.samples.push_back(field.sample(t, K, k1, trace.clamped));

    auto terminated = [&]() {
        const auto& cur = trace.samples.back();
        if (cur.residual < config.tolCurvature) {
            trace.verdict = Verdict::Converged;
            trace.reason = "residual below tolerance";
            return true;
        }
        if (cur.K.lpNorm<Eigen::Infinity>() > config.divergenceK) {
            trace.verdict = Verdict::Diverged;
            trace.reason = "|K|_inf exceeded divergence threshold";
            return true;
        }
        if (cur.t >= config.plateauMinTime) {
            const auto& half = trace.samples[sampleAtOrBefore(trace.samples, 0.5 * cur.t)];
            if (cur.energy > config.plateauRatio * half.energy &&
                cur.K.lpNorm<Eigen::Infinity>() > half.K.lpNorm<Eigen::Infinity>()) {
                trace.verdict = Verdict::Diverged;
                trace.reason = "energy plateau with escaping coordinates";
                return true;
            }
        }
        if (cur.t >= config.maxTime || trace.iterations >= config.maxIters) {
            trace.verdict = Verdict::BudgetExhausted;
            trace.reason = "time or step budget exhausted";
            return true;
        }
        return false;
    };

    while (!terminated()) {
        h = std::min(h, config.maxTime - t);
        if (config.integrator == Integrator::Rk4) {
            K = rk4Step(field, K, k1, h);
        } else {
            // Energy decreases along both flows; a step that raises it is
            // rejected even if the local error estimate passes (near the fixed
            // point the absolute error test no longer constrains stability).
            const double residualFloor = 1e3 * std::numeric_limits<double>::epsilon() *
                                         std::max(1.0, lhat.values().lpNorm<Eigen::Infinity>());
            const double energyFloor = 0.5 * residualFloor * residualFloor;
            while (true) {
                const double minStep = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t);
                if (h < minStep) {
                    trace.verdict = Verdict::BudgetExhausted;
                    trace.reason = "step size underflow";
                    std::ostringstream os;
                    os << "adaptive step underflow at t = " << t;
                    throw StepUnderflowError(os.str(), std::move(trace));
                }
                auto [next, err] = rkf45Step(field, K, k1, h, config.tolOde);
                if (!next.allFinite()) {
                    err = std::numeric_limits<double>::infinity();
                }
                if (err > 1.0) {
                    h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5);
                    continue;
                }
                Eigen::VectorXd nextField;
                bool clamped = false;
                auto sample = field.sample(t + h, next, nextField, clamped);
                const double previous = trace.samples.back().energy;
                // Past the radius clamp the field is frozen and no longer a gradient flow.
                if (!clamped && sample.energy > previous * (1.0 + 64.0 * std::numeric_limits<double>::epsilon()) + energyFloor) {
                    h *= 0.5;
                    continue;
                }
                K = std::move(next);
                k1 = std::move(nextField);
                trace.clamped = trace.clamped || clamped;
                t += h;
                h *= std::clamp(err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0, 1.0, 5.0);
                ++trace.iterations;
                trace.samples.push_back(std::move(sample));
                break;
            }
            continue;
        }
        t += h;
        ++trace.iterations;
        trace.samples.push_back(field.sample(t, K, k1, trace.clamped));
    }
    finishTrace(trace, complex, lhat);
    return trace;
}

NewtonResult newtonIterate(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    double tol,
    const NewtonOptions& opts)
{
    if (lhat.size() != complex.numVertices()) {
        throw InputError("prescription size does not match vertex count");
    }
    NewtonResult result;
    result.K = K0;
    auto state = evaluate(complex, result.K);
    Eigen::VectorXd diff = state.L - lhat.values();
    result.iterates.push_back(result.K);
    result.residuals.push_back(diff.lpNorm<Eigen::Infinity>());

    while (result.residuals.back() > tol) {
        if (result.iterations >= opts.maxIters) {
            return result;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(state.J);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Jacobian is not positive definite at Newton iterate");
        }
        const Eigen::VectorXd dir = llt.solve(diff);
        const double merit = diff.norm();

        // Backtrack from the largest step s <= 1 whose K-increment stays within maxStep.
        double s = std::min(1.0, opts.maxStep / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300));
        bool accepted = false;
        for (int b = 0; b <= opts.maxBacktracks; ++b, s *= 0.5) {
            const Eigen::VectorXd trial = result.K - s * dir;
            auto trialState = evaluate(complex, trial);
            const Eigen::VectorXd trialDiff = trialState.L - lhat.values();
            if (trialDiff.norm() < merit) {
                result.K = trial;
                state = std::move(trialState);
                diff = trialDiff;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            return result;
        }
        ++result.iterations;
        result.iterates.push_back(result.K);
        result.residuals.push_back(diff.lpNorm<Eigen::Infinity>());
        if (result.K.lpNorm<Eigen::Infinity>() > opts.divergenceK) {
            result.diverged = true;
            return result;
        }
    }
    result.converged = true;
    return result;
}

Eigen::VectorXd newtonSolve(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K0,
    double tol,
    const NewtonOptions& opts)
{
    auto result = newtonIterate(complex, lhat, K0, tol, opts);
    if (!result.converged) {
        std::ostringstream os;
        os << "Newton iteration did not converge after " << result.iterations
           << " iterations (residual " << result.residuals.back() << ")";
        throw NonConvergenceError(os.str(), result.K);
    }
    return result.K;
}

DecayFit fitDecayRate(const FlowTrace& trace, std::size_t window)
{
    if (window < 10) {
        throw InputError("decay fit needs a window of at least 10 samples");
    }
    std::vector<std::pair<double, double>> pts;
    for (auto it = trace.samples.rbegin(); it != trace.samples.rend() && pts.size() < window; ++it) {
        if (it->energy > 0.0) {
            pts.emplace_back(it->t, std::log(it->energy));
        }
    }
    if (pts.size() < window) {
        throw InputError("trace has fewer than " + std::to_string(window) +
                         " samples with positive energy");
    }
    const auto n = static_cast<double>(pts.size());
    double mt = 0.0;
    double my = 0.0;
    for (const auto& [t, y] : pts) {
        mt += t;
        my += y;
    }
    mt /= n;
    my /= n;
    double stt = 0.0;
    double sty = 0.0;
    double syy = 0.0;
    for (const auto& [t, y] : pts) {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    DecayFit fit;
    if (stt == 0.0) {
        fit.degenerate = true;
        return fit;
    }
    fit.slope = sty / stt;
    if (syy == 0.0) {
        fit.rSquared = 0.0;
        fit.degenerate = true;
        return fit;
    }
    double ssRes = 0.0;
    for (const auto& [t, y] : pts) {
        const double pred = my + fit.slope * (t - mt);
        ssRes += (y - pred) * (y - pred);
    }
    fit.rSquared = 1.0 - ssRes / syy;
    fit.degenerate = !(fit.slope < 0.0);
    return fit;
}

DecayFit fitTrailingDecay(const FlowTrace& trace)
{
    const auto window = std::max<std::size_t>(10, (trace.samples.size() * 3 + 9) / 10);
    return fitDecayRate(trace, window);
}

}  // namespace calabi
