#pragma once

#include <string>
#include <vector>

#include "calabi/complex.hpp"

namespace calabi
{

/** Margins within this distance of zero are treated as violations and flagged */
inline constexpr double kBoundaryMargin = 1e-12;

/**
 * @brief Outcome of checking sum_{v in W} Lhat_v < 2 sum_{e in E(W)} Phi(e)
 *        over all nonempty vertex subsets W.
 *
 * worstSubset maximizes the margin f(W) = sum_W Lhat - 2 sum_{E(W)} Phi.
 * The prescription is feasible iff worstMargin < -kBoundaryMargin.
 */
struct FeasibilityVerdict {
    enum class Method { BruteForce, MinCut };

    bool feasible{false};
    /** |worstMargin| <= kBoundaryMargin */
    bool boundary{false};
    std::vector<Index> worstSubset;
    double worstMargin{0.0};
    Method method{Method::BruteForce};
};

std::string toString(FeasibilityVerdict::Method method);

/** @brief f(W) = sum_W Lhat - 2 sum_{E(W)} Phi */
double subsetMargin(
    const SurfaceComplex& complex, const Prescription& lhat, const std::vector<Index>& subset);

/** Largest |V| accepted by the exhaustive check */
inline constexpr Index kBruteForceMaxVertices = 24;

/** @brief Exhaustive maximization over all 2^n - 1 subsets; throws SizeError above the guard */
FeasibilityVerdict checkBruteForce(const SurfaceComplex& complex, const Prescription& lhat);

/** @brief Exact polynomial-time check through one min-cut per forced vertex */
FeasibilityVerdict checkMinCut(const SurfaceComplex& complex, const Prescription& lhat);

/** @brief Brute force when small enough, min-cut otherwise */
FeasibilityVerdict checkFeasibility(const SurfaceComplex& complex, const Prescription& lhat);

}  // namespace calabi
