#include "calabi/curvature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "calabi/errors.hpp"
#include "calabi/geometry.hpp"

namespace calabi
{

namespace
{

void requireSize(const SurfaceComplex& complex, Index size, const char* what)
{
    if (size != complex.numVertices()) {
        throw InputError(std::string(what) + " has " + std::to_string(size) +
                         " entries but the complex has " +
                         std::to_string(complex.numVertices()) + " vertices");
    }
}

// Gauss-Legendre rule on [-1, 1] via Golub-Welsch.
struct GaussRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    explicit GaussRule(int n)
    {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double b = k / std::sqrt(4.0 * k * k - 1.0);
            T(k, k - 1) = b;
            T(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        nodes = es.eigenvalues();
        weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    }
};

const GaussRule& gauss10()
{
    static const GaussRule rule(10);
    return rule;
}

}  // namespace

CurvatureState evaluate(const SurfaceComplex& complex, const Eigen::Ref<const Eigen::VectorXd>& K)
{
    complex.requireValid();
    requireSize(complex, K.size(), "K");

    const Index n = complex.numVertices();
    const Index m = complex.numEdges();

    CurvatureState s;
    s.K = K;
    s.r.resize(n);
    for (Index v = 0; v < n; ++v) {
        s.r(v) = kToRClamped(K(v), s.clamped);
    }
    s.theta.resize(m, 2);
    s.L = Eigen::VectorXd::Zero(n);
    s.alphaV = Eigen::VectorXd::Zero(n);
    s.J = Eigen::MatrixXd::Zero(n, n);

    for (Index e = 0; e < m; ++e) {
        const auto [v, w] = complex.edge(e);
        const auto g = edgeSideGeometry(s.r(v), s.r(w), complex.phi()(e));
        s.theta(e, 0) = g.thetaV;
        s.theta(e, 1) = g.thetaW;
        s.L(v) += g.sideLV;
        s.L(w) += g.sideLW;
        s.alphaV(v) += g.thetaV;
        s.alphaV(w) += g.thetaW;
        s.J(v, v) += g.dOwnV();
        s.J(w, w) += g.dOwnW();
        s.J(v, w) += g.dCross;
        s.J(w, v) += g.dCross;
    }

    s.alphaF = Eigen::VectorXd::Zero(complex.numFaces());
    for (Index f = 0; f < complex.numFaces(); ++f) {
        for (auto e : complex.faces()[static_cast<std::size_t>(f)]) {
            s.alphaF(f) += std::numbers::pi - complex.phi()(e);
        }
    }
    return s;
}

Eigen::VectorXd curvatures(const SurfaceComplex& complex, const Eigen::Ref<const Eigen::VectorXd>& K)
{
    complex.requireValid();
    requireSize(complex, K.size(), "K");
    const Index n = complex.numVertices();
    Eigen::VectorXd r(n);
    bool clamped = false;
    for (Index v = 0; v < n; ++v) {
        r(v) = kToRClamped(K(v), clamped);
    }
    Eigen::VectorXd L = Eigen::VectorXd::Zero(n);
    for (Index e = 0; e < complex.numEdges(); ++e) {
        const auto [v, w] = complex.edge(e);
        const double phi = complex.phi()(e);
        L(v) += quadAngle(r(v), r(w), phi) * std::cos(r(v));
        L(w) += quadAngle(r(w), r(v), phi) * std::cos(r(w));
    }
    return L;
}

double calabiEnergy(const Eigen::Ref<const Eigen::VectorXd>& L) { return 0.5 * L.squaredNorm(); }

double prescribedCalabiEnergy(
    const Eigen::Ref<const Eigen::VectorXd>& L, const Eigen::Ref<const Eigen::VectorXd>& target)
{
    if (L.size() != target.size()) {
        throw InputError("curvature and prescription sizes differ");
    }
    return 0.5 * (L - target).squaredNorm();
}

double prescribedCalabiEnergy(const Eigen::Ref<const Eigen::VectorXd>& L, const Prescription& lhat)
{
    return prescribedCalabiEnergy(L, lhat.values());
}

double lineIntegral(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& from,
    const Eigen::Ref<const Eigen::VectorXd>& to,
    const QuadratureOptions& opts)
{
    complex.requireValid();
    requireSize(complex, from.size(), "base point");
    requireSize(complex, to.size(), "K");
    requireSize(complex, lhat.size(), "prescription");

    const Eigen::VectorXd dir = to - from;
    if (dir.squaredNorm() == 0.0) {
        return 0.0;
    }
    const auto& rule = gauss10();

    // Integrand in the path parameter s in [0, 1].
    auto integrand = [&](double s) {
        const Eigen::VectorXd K = from + s * dir;
        return (curvatures(complex, K) - lhat.values()).dot(dir);
    };
    auto panel = [&](double a, double b) {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double sum = 0.0;
        for (Index i = 0; i < rule.nodes.size(); ++i) {
            sum += rule.weights(i) * integrand(mid + half * rule.nodes(i));
        }
        return half * sum;
    };

    bool ok = true;
    auto adapt = [&](auto&& self, double a, double b, double whole, double tol, int depth) -> double {
        const double m = 0.5 * (a + b);
        const double left = panel(a, m);
        const double right = panel(m, b);
        const double refined = left + right;
        if (std::abs(refined - whole) <= tol) {
            return refined;
        }
        if (depth >= opts.maxDepth) {
            ok = false;
            return refined;
        }
        return self(self, a, m, left, 0.5 * tol, depth + 1) +
               self(self, m, b, right, 0.5 * tol, depth + 1);
    };

    const double value = adapt(adapt, 0.0, 1.0, panel(0.0, 1.0), opts.absTol, 0);
    if (!ok || !std::isfinite(value)) {
        std::ostringstream os;
        os.precision(17);
        os << "potential quadrature did not reach tolerance " << opts.absTol
           << "; achieved estimate " << value;
        throw NumericalError(os.str());
    }
    return value;
}

double potential(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K,
    const Eigen::Ref<const Eigen::VectorXd>& base,
    const QuadratureOptions& opts)
{
    return lineIntegral(complex, lhat, base, K, opts);
}

double potential(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K,
    const QuadratureOptions& opts)
{
    return lineIntegral(complex, lhat, Eigen::VectorXd::Zero(K.size()), K, opts);
}

double velocityBound(const SurfaceComplex& complex, const Prescription& lhat)
{
    complex.requireValid();
    requireSize(complex, lhat.size(), "prescription");
    const Index n = complex.numVertices();
    double angular = 0.0;
    double curvature = 0.0;
    for (Index v = 0; v < n; ++v) {
        const auto& inc = complex.incidentEdges(v);
        const auto d = static_cast<double>(inc.size());
        double cosecants = 0.0;
        for (auto e : inc) {
            cosecants += 1.0 / std::sin(complex.phi()(e));
        }
        angular = std::max(angular, d * std::numbers::pi + cosecants);
        curvature = std::max(curvature, 2.0 * d * std::numbers::pi + lhat[v]);
    }
    return 4.0 * std::sqrt(static_cast<double>(n)) * angular * curvature;
}

}  // namespace calabi
