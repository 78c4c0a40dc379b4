#include "calabi/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "calabi/curvature.hpp"
#include "calabi/errors.hpp"

namespace calabi
{

Eigen::VectorXd fdGradient(const ScalarField& f, const Eigen::VectorXd& K, double h)
{
    if (!(h > 0.0)) {
        throw DomainError("finite-difference step must be positive");
    }
    Eigen::VectorXd g(K.size());
    Eigen::VectorXd x = K;
    for (Index i = 0; i < K.size(); ++i) {
        x(i) = K(i) + h;
        const double fp = f(x);
        x(i) = K(i) - h;
        const double fm = f(x);
        x(i) = K(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fdJacobian(const SurfaceComplex& complex, const Eigen::VectorXd& K, double h)
{
    if (!(h > 0.0)) {
        throw DomainError("finite-difference step must be positive");
    }
    const Index n = K.size();
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd x = K;
    for (Index j = 0; j < n; ++j) {
        x(j) = K(j) + h;
        const Eigen::VectorXd Lp = curvatures(complex, x);
        x(j) = K(j) - h;
        const Eigen::VectorXd Lm = curvatures(complex, x);
        x(j) = K(j);
        J.col(j) = (Lp - Lm) / (2.0 * h);
    }
    return J;
}

double maxRelativeError(
    const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b, double floor)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InputError("shape mismatch in relative error");
    }
    const Eigen::ArrayXXd denom = b.array().abs().max(floor);
    return ((a - b).array().abs() / denom).maxCoeff();
}

SyntheticInstance makeSynthetic(const SurfaceComplex& complex, std::uint64_t seed, double kLo, double kHi)
{
    complex.requireValid();
    CounterRng rng(seed);
    Eigen::VectorXd planted = rng.uniformVector(complex.numVertices(), kLo, kHi);
    Prescription lhat(curvatures(complex, planted));
    return {complex, std::move(planted), std::move(lhat), seed};
}

SurfaceComplex withRandomPhi(const SurfaceComplex& complex, CounterRng& rng, double lo, double hi)
{
    Eigen::VectorXd phi(complex.numEdges());
    for (Index e = 0; e < phi.size(); ++e) {
        phi(e) = std::min(rng.uniform(lo, hi), hi);
    }
    return {complex.numVertices(), complex.edges(), complex.faces(), phi,
            complex.vertexNames(), complex.edgeNames()};
}

SurfaceComplex randomSphereComplex(CounterRng& rng, Index n, int bigons, double phiLo, double phiHi)
{
    if (n < 4) {
        throw InputError("random sphere complex needs at least 4 vertices");
    }
    std::vector<std::array<Index, 3>> triangles{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (Index x = 4; x < n; ++x) {
        const auto pick = static_cast<std::size_t>(rng.below(triangles.size()));
        const auto [a, b, c] = triangles[pick];
        triangles[pick] = {a, b, x};
        triangles.push_back({b, c, x});
        triangles.push_back({c, a, x});
    }

    std::vector<Edge> edges;
    std::map<std::pair<Index, Index>, Index> lookup;
    auto edgeId = [&](Index a, Index b) {
        const auto key = std::minmax(a, b);
        auto [it, inserted] = lookup.emplace(key, static_cast<Index>(edges.size()));
        if (inserted) {
            edges.push_back({key.first, key.second});
        }
        return it->second;
    };
    std::vector<std::vector<Index>> faces;
    for (const auto& [a, b, c] : triangles) {
        faces.push_back({edgeId(a, b), edgeId(b, c), edgeId(c, a)});
    }

    for (int k = 0; k < bigons; ++k) {
        const auto f = static_cast<std::size_t>(rng.below(faces.size()));
        auto& walk = faces[f];
        const auto slot = static_cast<std::size_t>(rng.below(walk.size()));
        const Index e = walk[slot];
        const auto twin = static_cast<Index>(edges.size());
        edges.push_back(edges[static_cast<std::size_t>(e)]);
        walk[slot] = twin;
        faces.push_back({e, twin});
    }

    Eigen::VectorXd phi(static_cast<Index>(edges.size()));
    for (Index e = 0; e < phi.size(); ++e) {
        phi(e) = std::min(rng.uniform(phiLo, phiHi), phiHi);
    }
    return {n, std::move(edges), std::move(faces), std::move(phi)};
}

}  // namespace calabi
