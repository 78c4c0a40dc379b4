#pragma once

// Text formats used by the command-line tool.
//
// Instance file: one statement per line, '#' lines before the first
// statement are kept as a header comment, blank lines are ignored.
//
//   vertices a b c d
//   edge <name> <vertex> <vertex> <angle>
//   face <edge> <edge> ...              (boundary walk, cyclic order)
//   lhat <vertex> <value>               (all vertices or none)
//   k0 <vertex> <value>                 (optional initial K, all or none)
//   r0 <vertex> <value>                 (optional initial radius, all or none)
//
// Reals are plain decimals or exact multiples of pi: pi, pi/2, 3*pi/4.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "calabi/complex.hpp"
#include "calabi/curvature.hpp"
#include "calabi/errors.hpp"
#include "calabi/flow.hpp"

namespace calabi
{

/** @brief Malformed instance document; carries a 1-based line and column */
class ParseError : public InputError
{
public:
    ParseError(const std::string& msg, int line, int column);
    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct InstanceFile {
    std::vector<std::string> comments;
    SurfaceComplex complex;
    std::optional<Prescription> lhat;
    std::optional<Eigen::VectorXd> initialK;
    std::optional<Eigen::VectorXd> initialR;

    /** Initial K from k0/r0 statements, or zero */
    [[nodiscard]] Eigen::VectorXd startK() const;
};

/** @brief Parse a real or pi-multiple token; nullopt if malformed */
std::optional<double> parseReal(std::string_view token);

/** @brief Shortest round-trip decimal, or "p*pi/q" when the value is exactly such a multiple */
std::string formatReal(double value);

/** @brief Shortest round-trip decimal only */
std::string formatNumber(double value);

InstanceFile parseInstance(std::string_view text);
InstanceFile readInstance(const std::string& path);
std::string serializeInstance(const InstanceFile& instance);

/** @brief FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits */
std::string instanceDigest(const InstanceFile& instance);

/** @brief Delimiter-separated trace table with a '#' header block */
std::string serializeTrace(const InstanceFile& instance, const FlowTrace& trace);

/** @brief Solution document: per-vertex r, K, L, cone angle; per-face cone angle; summary */
std::string serializeSolution(const InstanceFile& instance, const FlowTrace& trace, const CurvatureState& state);

/** @brief "{a,b}" using vertex names */
std::string formatSubset(const SurfaceComplex& complex, const std::vector<Index>& subset);

}  // namespace calabi
