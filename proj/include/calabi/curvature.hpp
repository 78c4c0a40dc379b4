#pragma once

#include <Eigen/Core>

#include "calabi/complex.hpp"

namespace calabi
{

/**
 * @brief Everything the solvers need about one point K of coordinate space.
 *
 * theta(e, 0) is the angle at edges()[e].v and theta(e, 1) the angle at
 * edges()[e].w.
 */
struct CurvatureState {
    Eigen::VectorXd K;
    Eigen::VectorXd r;
    Eigen::MatrixX2d theta;
    /** Total geodesic curvatures L_v */
    Eigen::VectorXd L;
    /** Cone angles at vertices */
    Eigen::VectorXd alphaV;
    /** Cone angles at face centres */
    Eigen::VectorXd alphaF;
    /** dL_i/dK_j, symmetric */
    Eigen::MatrixXd J;
    /** True if some radius had to be clamped away from 0 or pi/2 */
    bool clamped{false};
};

/** @brief Full evaluation at K: angles, curvatures, cone angles and the analytic Jacobian */
CurvatureState evaluate(const SurfaceComplex& complex, const Eigen::Ref<const Eigen::VectorXd>& K);

/** @brief Curvature vector L(K) only (no Jacobian) */
Eigen::VectorXd curvatures(const SurfaceComplex& complex, const Eigen::Ref<const Eigen::VectorXd>& K);

/** @brief 1/2 |L|^2 */
double calabiEnergy(const Eigen::Ref<const Eigen::VectorXd>& L);

/** @brief 1/2 |L - target|^2; throws InputError on size mismatch */
double prescribedCalabiEnergy(
    const Eigen::Ref<const Eigen::VectorXd>& L, const Eigen::Ref<const Eigen::VectorXd>& target);
double prescribedCalabiEnergy(const Eigen::Ref<const Eigen::VectorXd>& L, const Prescription& lhat);

/** @brief Adaptive Gauss-Legendre settings for the potential */
struct QuadratureOptions {
    double absTol{1e-10};
    int maxDepth{20};
};

/**
 * @brief Line integral of sum_i (L_i - Lhat_i) dK_i along the straight segment from -> to.
 *
 * Throws NumericalError (with the achieved estimate in the message) if the
 * tolerance is not met within maxDepth bisections.
 */
double lineIntegral(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& from,
    const Eigen::Ref<const Eigen::VectorXd>& to,
    const QuadratureOptions& opts = {});

/** @brief Convex potential with E(base) = 0; gradient L - Lhat, Hessian J */
double potential(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K,
    const Eigen::Ref<const Eigen::VectorXd>& base,
    const QuadratureOptions& opts = {});

/** @brief Potential relative to the coordinate origin K = 0 */
double potential(
    const SurfaceComplex& complex,
    const Prescription& lhat,
    const Eigen::Ref<const Eigen::VectorXd>& K,
    const QuadratureOptions& opts = {});

/**
 * @brief A priori ceiling on |dK/dt| along the Calabi flow:
 *   4 sqrt|V| max_v{d_v pi + sum_{e at v} 1/sin Phi(e)} max_v{2 d_v pi + Lhat_v}
 */
double velocityBound(const SurfaceComplex& complex, const Prescription& lhat);

}  // namespace calabi
