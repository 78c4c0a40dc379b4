#pragma once

// Independent checks used by the test and acceptance suites: central finite
// differences, a counter-based random source and planted-solution instances.

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "calabi/complex.hpp"

namespace calabi
{

/**
 * @brief Counter-based generator: draw i is a pure function of (seed, i).
 *
 * The mixer is the SplitMix64 finalizer applied to seed-keyed counters, so
 * sequences are bit-identical across platforms and standard libraries.
 */
class CounterRng
{
public:
    explicit CounterRng(std::uint64_t seed) : key_{mix(seed ^ 0x9E3779B97F4A7C15ULL)} {}

    std::uint64_t next() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /** Uniform in [lo, hi) with 53 random bits */
    double uniform(double lo, double hi)
    {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    /** Uniform integer in [0, bound) */
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    Eigen::VectorXd uniformVector(Index n, double lo, double hi)
    {
        Eigen::VectorXd x(n);
        for (Index i = 0; i < n; ++i) {
            x(i) = uniform(lo, hi);
        }
        return x;
    }

    [[nodiscard]] std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_{0};
};

inline constexpr double kDefaultFdStep = 1e-5;

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

/** @brief (f(K + h e_i) - f(K - h e_i)) / 2h for each i */
Eigen::VectorXd fdGradient(const ScalarField& f, const Eigen::VectorXd& K, double h = kDefaultFdStep);

/** @brief Central-difference Jacobian of L(K), column j = dL/dK_j */
Eigen::MatrixXd fdJacobian(const SurfaceComplex& complex, const Eigen::VectorXd& K, double h = kDefaultFdStep);

/** @brief max_i |a_i - b_i| / max(|b_i|, floor), elementwise over matrices or vectors */
double maxRelativeError(
    const Eigen::Ref<const Eigen::MatrixXd>& a,
    const Eigen::Ref<const Eigen::MatrixXd>& b,
    double floor = 1e-8);

/** @brief A feasible instance with a known solution: Lhat := L(plantedK) */
struct SyntheticInstance {
    SurfaceComplex complex;
    Eigen::VectorXd plantedK;
    Prescription lhat;
    std::uint64_t seed{0};
};

SyntheticInstance makeSynthetic(
    const SurfaceComplex& complex, std::uint64_t seed, double kLo = -1.5, double kHi = 1.5);

/**
 * @brief Random closed 2-cell embedding on the sphere with n >= 4 vertices.
 *
 * Starts from the tetrahedron, repeatedly splits a random triangle at a new
 * vertex, then inserts `bigons` parallel edges (each duplicating a random
 * edge inside one of its faces and creating a two-edge face).
 */
SurfaceComplex randomSphereComplex(CounterRng& rng, Index n, int bigons, double phiLo, double phiHi);

/** @brief Copy of complex with each Phi(e) drawn uniformly from [lo, hi] */
SurfaceComplex withRandomPhi(const SurfaceComplex& complex, CounterRng& rng, double lo, double hi);

}  // namespace calabi
