#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace calabi
{

using Index = Eigen::Index;

/** @brief An edge of the embedded multigraph; endpoints are vertex indices */
struct Edge {
    Index v{0};
    Index w{0};

    bool operator==(const Edge&) const = default;
};

/** @brief One failed invariant of a SurfaceComplex */
struct Violation {
    enum class Kind {
        NoVertices,
        EndpointOutOfRange,
        Loop,
        PhiOutOfRange,
        PhiSizeMismatch,
        FaceTooShort,
        UnknownEdgeInFace,
        FaceNotClosed,
        FaceNotSimple,
        EdgeCoverage,
        Disconnected,
        EulerCharacteristic,
    };

    Kind kind;
    /** Index of the offending vertex, edge or face (-1 when global) */
    Index element{-1};
    std::string message;
};

/**
 * @brief A finite loopless multigraph with a closed 2-cell embedding.
 *
 * The embedding is given by face boundary walks: each face is a cyclic
 * sequence of edge indices. Every edge carries an intersection angle
 * Phi(e) in (0, pi/2]. The object is immutable; invariants are checked once
 * at construction and the outcome is available through validate().
 *
 * Vertex and edge names are optional labels used for reporting and file
 * I/O. When omitted they default to "v<i>" and "e<i>".
 */
class SurfaceComplex
{
public:
    SurfaceComplex() = default;

    SurfaceComplex(
        Index numVertices,
        std::vector<Edge> edges,
        std::vector<std::vector<Index>> faces,
        Eigen::VectorXd phi,
        std::vector<std::string> vertexNames = {},
        std::vector<std::string> edgeNames = {});

    [[nodiscard]] Index numVertices() const { return numVertices_; }
    [[nodiscard]] Index numEdges() const { return static_cast<Index>(edges_.size()); }
    [[nodiscard]] Index numFaces() const { return static_cast<Index>(faces_.size()); }

    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
    [[nodiscard]] const Edge& edge(Index e) const { return edges_.at(static_cast<std::size_t>(e)); }
    [[nodiscard]] const std::vector<std::vector<Index>>& faces() const { return faces_; }
    [[nodiscard]] const Eigen::VectorXd& phi() const { return phi_; }

    [[nodiscard]] const std::vector<std::string>& vertexNames() const { return vertexNames_; }
    [[nodiscard]] const std::vector<std::string>& edgeNames() const { return edgeNames_; }

    /** @brief Edges incident to v, parallel edges listed separately */
    [[nodiscard]] const std::vector<Index>& incidentEdges(Index v) const;

    /** @brief |V| - |E| + |F| */
    [[nodiscard]] Index eulerCharacteristic() const
    {
        return numVertices() - numEdges() + numFaces();
    }

    [[nodiscard]] bool valid() const { return violations_.empty(); }
    [[nodiscard]] const std::vector<Violation>& violations() const { return violations_; }

    /** @brief Throws InputError listing the first violation if the complex is invalid */
    void requireValid() const;

    /** @brief Structural equality (topology, angles and names) */
    bool operator==(const SurfaceComplex& other) const;

private:
    void computeViolations();

    Index numVertices_{0};
    std::vector<Edge> edges_;
    std::vector<std::vector<Index>> faces_;
    Eigen::VectorXd phi_;
    std::vector<std::string> vertexNames_;
    std::vector<std::string> edgeNames_;
    std::vector<std::vector<Index>> incident_;
    std::vector<Violation> violations_;
};

/** @brief Validation report; empty iff the complex satisfies every invariant */
std::vector<Violation> validate(const SurfaceComplex& complex);

/** @brief E(W): edges with at least one endpoint in W, sorted ascending */
std::vector<Index> edgeNeighborhood(const SurfaceComplex& complex, const std::vector<Index>& subset);

/** @brief Number of edges at v, counting parallel edges separately */
Index degree(const SurfaceComplex& complex, Index v);

/** @brief Prescribed total geodesic curvatures, strictly positive and finite */
class Prescription
{
public:
    Prescription() = default;
    explicit Prescription(Eigen::VectorXd lhat);

    [[nodiscard]] const Eigen::VectorXd& values() const { return lhat_; }
    [[nodiscard]] Index size() const { return lhat_.size(); }
    [[nodiscard]] double operator[](Index v) const { return lhat_(v); }

private:
    Eigen::VectorXd lhat_;
};

namespace fixtures
{
/** Tetrahedron graph on the sphere, Phi constant */
SurfaceComplex tetrahedron(double phi);
/** Two vertices, two parallel edges, two bigon faces */
SurfaceComplex bigon(double phi);
/** Octahedron graph on the sphere; vertex i is opposite vertex 5 - i */
SurfaceComplex octahedron(double phi);
/** Cube graph on the sphere (8 vertices, 12 edges, 6 quads) */
SurfaceComplex cube(double phi);
/** rows x cols quadrangulation of the torus (rows, cols >= 3) */
SurfaceComplex torusGrid(Index rows, Index cols, double phi);
}  // namespace fixtures

}  // namespace calabi
