#include "calabi/complex.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

#include "calabi/errors.hpp"

namespace calabi
{

namespace
{

std::string edgeLabel(const SurfaceComplex& c, Index e)
{
    return c.edgeNames().at(static_cast<std::size_t>(e));
}

std::string vertexLabel(const SurfaceComplex& c, Index v)
{
    return c.vertexNames().at(static_cast<std::size_t>(v));
}

}  // namespace

SurfaceComplex::SurfaceComplex(
    Index numVertices,
    std::vector<Edge> edges,
    std::vector<std::vector<Index>> faces,
    Eigen::VectorXd phi,
    std::vector<std::string> vertexNames,
    std::vector<std::string> edgeNames)
    : numVertices_{std::max<Index>(numVertices, 0)}
    , edges_{std::move(edges)}
    , faces_{std::move(faces)}
    , phi_{std::move(phi)}
    , vertexNames_{std::move(vertexNames)}
    , edgeNames_{std::move(edgeNames)}
{
    if (vertexNames_.size() != static_cast<std::size_t>(numVertices_)) {
        vertexNames_.clear();
        for (Index v = 0; v < numVertices_; ++v) {
            vertexNames_.push_back("v" + std::to_string(v));
        }
    }
    if (edgeNames_.size() != edges_.size()) {
        edgeNames_.clear();
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            edgeNames_.push_back("e" + std::to_string(e));
        }
    }

    incident_.assign(static_cast<std::size_t>(numVertices_), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& [v, w] = edges_[e];
        if (v >= 0 && v < numVertices_) {
            incident_[static_cast<std::size_t>(v)].push_back(static_cast<Index>(e));
        }
        if (w != v && w >= 0 && w < numVertices_) {
            incident_[static_cast<std::size_t>(w)].push_back(static_cast<Index>(e));
        }
    }
    computeViolations();
}

const std::vector<Index>& SurfaceComplex::incidentEdges(Index v) const
{
    if (v < 0 || v >= numVertices_) {
        throw InputError("unknown vertex index " + std::to_string(v));
    }
    return incident_[static_cast<std::size_t>(v)];
}

void SurfaceComplex::requireValid() const
{
    if (!valid()) {
        throw InputError("invalid surface complex: " + violations_.front().message);
    }
}

bool SurfaceComplex::operator==(const SurfaceComplex& other) const
{
    return numVertices_ == other.numVertices_ && edges_ == other.edges_ &&
           faces_ == other.faces_ && phi_.size() == other.phi_.size() &&
           phi_ == other.phi_ && vertexNames_ == other.vertexNames_ &&
           edgeNames_ == other.edgeNames_;
}

void SurfaceComplex::computeViolations()
{
    auto report = [this](Violation::Kind kind, Index element, std::string msg) {
        violations_.push_back({kind, element, std::move(msg)});
    };
    const auto nE = numEdges();

    if (numVertices_ == 0) {
        report(Violation::Kind::NoVertices, -1, "complex has no vertices");
    }

    bool endpointsOk = true;
    for (Index e = 0; e < nE; ++e) {
        const auto& [v, w] = edges_[static_cast<std::size_t>(e)];
        if (v < 0 || v >= numVertices_ || w < 0 || w >= numVertices_) {
            endpointsOk = false;
            report(Violation::Kind::EndpointOutOfRange, e,
                   "edge " + edgeLabel(*this, e) + " has an endpoint outside the vertex range");
        } else if (v == w) {
            report(Violation::Kind::Loop, e,
                   "edge " + edgeLabel(*this, e) + " is a loop at vertex " + vertexLabel(*this, v));
        }
    }

    if (phi_.size() != nE) {
        report(Violation::Kind::PhiSizeMismatch, -1,
               "intersection angle count " + std::to_string(phi_.size()) +
                   " does not match edge count " + std::to_string(nE));
    } else {
        for (Index e = 0; e < nE; ++e) {
            const double p = phi_(e);
            if (!(p > 0.0 && p <= std::numbers::pi / 2)) {
                std::ostringstream os;
                os << "edge " << edgeLabel(*this, e) << " has intersection angle " << p
                   << " outside (0, pi/2]";
                report(Violation::Kind::PhiOutOfRange, e, os.str());
            }
        }
    }

    // Face walks: valid edge ids, closed and simple.
    std::vector<int> coverage(static_cast<std::size_t>(nE), 0);
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const auto& walk = faces_[f];
        const auto fi = static_cast<Index>(f);
        const auto label = "face " + std::to_string(f);
        if (walk.size() < 2) {
            report(Violation::Kind::FaceTooShort, fi, label + " has fewer than 2 edges");
        }
        bool idsOk = true;
        for (auto e : walk) {
            if (e < 0 || e >= nE) {
                idsOk = false;
                report(Violation::Kind::UnknownEdgeInFace, fi,
                       label + " references unknown edge id " + std::to_string(e));
            } else {
                ++coverage[static_cast<std::size_t>(e)];
            }
        }
        if (!idsOk || !endpointsOk || walk.size() < 2) {
            continue;
        }

        // Try both orientations of the first edge and follow the walk.
        auto trace = [&](Index start) -> std::vector<Index> {
            std::vector<Index> visited{start};
            Index cur = start;
            for (auto e : walk) {
                const auto& ed = edges_[static_cast<std::size_t>(e)];
                if (ed.v == cur) {
                    cur = ed.w;
                } else if (ed.w == cur) {
                    cur = ed.v;
                } else {
                    return {};
                }
                visited.push_back(cur);
            }
            if (cur != start) {
                return {};
            }
            return visited;
        };
        const auto& first = edges_[static_cast<std::size_t>(walk.front())];
        auto cycle = trace(first.v);
        if (cycle.empty()) {
            cycle = trace(first.w);
        }
        if (cycle.empty()) {
            report(Violation::Kind::FaceNotClosed, fi, label + " is not a closed edge walk");
            continue;
        }
        cycle.pop_back();
        auto sortedVerts = cycle;
        std::sort(sortedVerts.begin(), sortedVerts.end());
        auto sortedEdges = walk;
        std::sort(sortedEdges.begin(), sortedEdges.end());
        if (std::adjacent_find(sortedVerts.begin(), sortedVerts.end()) != sortedVerts.end() ||
            std::adjacent_find(sortedEdges.begin(), sortedEdges.end()) != sortedEdges.end()) {
            report(Violation::Kind::FaceNotSimple, fi,
                   label + " boundary is not a simple closed curve");
        }
    }

    for (Index e = 0; e < nE; ++e) {
        const int c = coverage[static_cast<std::size_t>(e)];
        if (c != 2) {
            report(Violation::Kind::EdgeCoverage, e,
                   "edge " + edgeLabel(*this, e) + " covered " + std::to_string(c) +
                       " times by face walks (expected 2)");
        }
    }

    if (numVertices_ > 0 && endpointsOk) {
        std::vector<bool> seen(static_cast<std::size_t>(numVertices_), false);
        std::queue<Index> queue;
        queue.push(0);
        seen[0] = true;
        Index reached = 1;
        while (!queue.empty()) {
            const Index v = queue.front();
            queue.pop();
            for (auto e : incident_[static_cast<std::size_t>(v)]) {
                const auto& ed = edges_[static_cast<std::size_t>(e)];
                const Index u = ed.v == v ? ed.w : ed.v;
                if (!seen[static_cast<std::size_t>(u)]) {
                    seen[static_cast<std::size_t>(u)] = true;
                    ++reached;
                    queue.push(u);
                }
            }
        }
        if (reached != numVertices_) {
            for (Index v = 0; v < numVertices_; ++v) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    report(Violation::Kind::Disconnected, v,
                           "graph is disconnected: vertex " + vertexLabel(*this, v) +
                               " is unreachable from " + vertexLabel(*this, 0));
                    break;
                }
            }
        }
    }

    if (eulerCharacteristic() > 2) {
        report(Violation::Kind::EulerCharacteristic, -1,
               "Euler characteristic " + std::to_string(eulerCharacteristic()) +
                   " exceeds 2");
    }
}

std::vector<Violation> validate(const SurfaceComplex& complex) { return complex.violations(); }

std::vector<Index> edgeNeighborhood(const SurfaceComplex& complex, const std::vector<Index>& subset)
{
    std::vector<Index> out;
    for (auto v : subset) {
        const auto& inc = complex.incidentEdges(v);
        out.insert(out.end(), inc.begin(), inc.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Index degree(const SurfaceComplex& complex, Index v)
{
    return static_cast<Index>(complex.incidentEdges(v).size());
}

Prescription::Prescription(Eigen::VectorXd lhat) : lhat_{std::move(lhat)}
{
    for (Index v = 0; v < lhat_.size(); ++v) {
        if (!std::isfinite(lhat_(v)) || !(lhat_(v) > 0.0)) {
            throw InputError("prescribed curvature at vertex " + std::to_string(v) +
                             " must be finite and strictly positive");
        }
    }
}

namespace fixtures
{

namespace
{

// Build face walks from vertex cycles by looking up the (unique) edge between
// consecutive vertices.
std::vector<std::vector<Index>> facesFromCycles(
    const std::vector<Edge>& edges, const std::vector<std::vector<Index>>& cycles)
{
    std::vector<std::vector<Index>> faces;
    for (const auto& cyc : cycles) {
        std::vector<Index> walk;
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            const Index a = cyc[i];
            const Index b = cyc[(i + 1) % cyc.size()];
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if ((edges[e].v == a && edges[e].w == b) || (edges[e].v == b && edges[e].w == a)) {
                    walk.push_back(static_cast<Index>(e));
                    break;
                }
            }
        }
        faces.push_back(std::move(walk));
    }
    return faces;
}

}  // namespace

SurfaceComplex tetrahedron(double phi)
{
    std::vector<Edge> edges{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    auto faces = facesFromCycles(edges, {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
    return {4, edges, faces, Eigen::VectorXd::Constant(6, phi)};
}

SurfaceComplex bigon(double phi)
{
    std::vector<Edge> edges{{0, 1}, {0, 1}};
    return {2, edges, {{0, 1}, {0, 1}}, Eigen::VectorXd::Constant(2, phi)};
}

SurfaceComplex octahedron(double phi)
{
    // Poles 0 and 5, equator 1-2-4-3.
    std::vector<Edge> edges{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {5, 1}, {5, 2},
                            {5, 3}, {5, 4}, {1, 2}, {2, 4}, {4, 3}, {3, 1}};
    auto faces = facesFromCycles(edges, {{0, 1, 2}, {0, 2, 4}, {0, 4, 3}, {0, 3, 1},
                                         {5, 1, 2}, {5, 2, 4}, {5, 4, 3}, {5, 3, 1}});
    return {6, edges, faces, Eigen::VectorXd::Constant(12, phi)};
}

SurfaceComplex cube(double phi)
{
    // Bottom square 0..3, top square 4..7.
    std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                            {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    auto faces = facesFromCycles(
        edges, {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}});
    return {8, edges, faces, Eigen::VectorXd::Constant(12, phi)};
}

SurfaceComplex torusGrid(Index rows, Index cols, double phi)
{
    if (rows < 3 || cols < 3) {
        throw InputError("torus grid needs at least 3 rows and 3 columns");
    }
    auto id = [cols](Index i, Index j) { return i * cols + j; };
    std::vector<Edge> edges;
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            edges.push_back({id(i, j), id(i, (j + 1) % cols)});
            edges.push_back({id(i, j), id((i + 1) % rows, j)});
        }
    }
    std::vector<std::vector<Index>> cycles;
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const Index i1 = (i + 1) % rows;
            const Index j1 = (j + 1) % cols;
            cycles.push_back({id(i, j), id(i, j1), id(i1, j1), id(i1, j)});
        }
    }
    auto faces = facesFromCycles(edges, cycles);
    const auto nE = static_cast<Index>(edges.size());
    return {rows * cols, std::move(edges), std::move(faces), Eigen::VectorXd::Constant(nE, phi)};
}

}  // namespace fixtures

}  // namespace calabi
