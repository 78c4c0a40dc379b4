#pragma once

// Spherical trigonometry of a single edge quadrilateral
//
//      v_f1
//     /    \        |v v_f| = r_v, |w v_f| = r_w,
//    v      w       angle at v_f1 and v_f2 = pi - Phi(e),
//     \    /        theta_(e,v) = angle v_f1 v v_f2.
//      v_f2
//
// All functions are templated on the scalar type and are pure.

#include <cmath>
#include <numbers>
#include <string>

#include "calabi/errors.hpp"

namespace calabi
{

template <class Scalar>
constexpr Scalar kHalfPi = std::numbers::pi_v<Scalar> / Scalar(2);

/** Radii entering from K-space are clamped into [kRadiusClamp, pi/2 - kRadiusClamp] */
template <class Scalar>
constexpr Scalar kRadiusClamp = Scalar(1e-12);

namespace detail
{
template <class Scalar>
void requireRadius(Scalar r, const char* what)
{
    if (!(r > Scalar(0) && r < kHalfPi<Scalar>)) {
        throw DomainError(std::string(what) + " must lie in (0, pi/2)");
    }
}

template <class Scalar>
void requirePhi(Scalar phi)
{
    if (!(phi > Scalar(0) && phi <= kHalfPi<Scalar>)) {
        throw DomainError("intersection angle must lie in (0, pi/2]");
    }
}
}  // namespace detail

/** @brief theta - sin(theta), with a series branch that avoids cancellation for small theta */
template <class Scalar>
Scalar thetaMinusSin(Scalar theta)
{
    using std::abs;
    using std::sin;
    if (abs(theta) < Scalar(0.05)) {
        const Scalar t2 = theta * theta;
        // theta^3/6 - theta^5/120 + theta^7/5040 - theta^9/362880
        return theta * t2 / Scalar(6) *
               (Scalar(1) - t2 / Scalar(20) * (Scalar(1) - t2 / Scalar(42) * (Scalar(1) - t2 / Scalar(72))));
    }
    return theta - sin(theta);
}

/** @brief K = ln cot r */
template <class Scalar>
Scalar rToK(Scalar r)
{
    using std::cos;
    using std::log;
    using std::sin;
    detail::requireRadius(r, "radius");
    return log(cos(r) / sin(r));
}

/**
 * @brief r = arccot(exp K)
 *
 * Evaluated as atan(exp(-K)) for K >= 0 and pi/2 - atan(exp(K)) otherwise so
 * that neither branch overflows for |K| up to ~700.
 */
template <class Scalar>
Scalar kToR(Scalar K)
{
    using std::atan;
    using std::exp;
    using std::isfinite;
    if (!isfinite(K)) {
        throw DomainError("K coordinate must be finite");
    }
    if (K >= Scalar(0)) {
        return atan(exp(-K));
    }
    return kHalfPi<Scalar> - atan(exp(K));
}

/** @brief kToR followed by clamping away from the open interval's ends; sets clamped if it bit */
template <class Scalar>
Scalar kToRClamped(Scalar K, bool& clamped)
{
    const Scalar r = kToR(K);
    const Scalar lo = kRadiusClamp<Scalar>;
    const Scalar hi = kHalfPi<Scalar> - kRadiusClamp<Scalar>;
    if (r < lo) {
        clamped = true;
        return lo;
    }
    if (r > hi) {
        clamped = true;
        return hi;
    }
    return r;
}

/**
 * @brief Angle theta_(e,v) at v in the edge quadrilateral.
 *
 * Cotangent 4-part formula:
 *   cot(theta/2) = (cot r_w sin r_v + cos r_v cos Phi) / sin Phi,
 * evaluated as a two-argument arctangent. Result lies in (0, pi).
 */
template <class Scalar>
Scalar quadAngle(Scalar rv, Scalar rw, Scalar phi)
{
    using std::atan2;
    using std::cos;
    using std::sin;
    using std::tan;
    detail::requireRadius(rv, "r_v");
    detail::requireRadius(rw, "r_w");
    detail::requirePhi(phi);
    const Scalar x = sin(rv) / tan(rw) + cos(rv) * cos(phi);
    return Scalar(2) * atan2(sin(phi), x);
}

/** @brief L_(e,v) = theta_(e,v) cos r_v */
template <class Scalar>
Scalar sideCurvature(Scalar theta, Scalar r)
{
    using std::cos;
    if (!(theta > Scalar(0) && theta < Scalar(2) * std::numbers::pi_v<Scalar>)) {
        throw DomainError("angle must lie in (0, 2 pi)");
    }
    detail::requireRadius(r, "radius");
    return theta * cos(r);
}

/** @brief Angles, side curvatures and the analytic K-derivatives of one edge */
template <class Scalar>
struct EdgeSideGeometry {
    Scalar thetaV{};
    Scalar thetaW{};
    Scalar sideLV{};
    Scalar sideLW{};
    /** dL_(e,v)/dK_w = dL_(e,w)/dK_v, strictly negative */
    Scalar dCross{};
    /** d(L_(e,v) + L_(e,w))/dK_v, strictly positive */
    Scalar dPairV{};
    /** d(L_(e,v) + L_(e,w))/dK_w, strictly positive */
    Scalar dPairW{};

    /** dL_(e,v)/dK_v */
    [[nodiscard]] Scalar dOwnV() const { return dPairV - dCross; }
    /** dL_(e,w)/dK_w */
    [[nodiscard]] Scalar dOwnW() const { return dPairW - dCross; }
};

template <class Scalar>
EdgeSideGeometry<Scalar> edgeSideGeometry(Scalar rv, Scalar rw, Scalar phi)
{
    using std::cos;
    using std::sin;
    EdgeSideGeometry<Scalar> g;
    g.thetaV = quadAngle(rv, rw, phi);
    g.thetaW = quadAngle(rw, rv, phi);
    const Scalar cv = cos(rv);
    const Scalar cw = cos(rw);
    const Scalar sv = sin(rv);
    const Scalar sw = sin(rw);
    g.sideLV = g.thetaV * cv;
    g.sideLW = g.thetaW * cw;
    g.dCross = Scalar(-2) * cv * cw * sin(g.thetaV / Scalar(2)) * sin(g.thetaW / Scalar(2)) /
               sin(phi);
    g.dPairV = sv * sv * cv * thetaMinusSin(g.thetaV);
    g.dPairW = sw * sw * cw * thetaMinusSin(g.thetaW);
    return g;
}

}  // namespace calabi
