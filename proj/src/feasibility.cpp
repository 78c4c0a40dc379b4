#include "calabi/feasibility.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <queue>

#include "calabi/errors.hpp"

namespace calabi
{

namespace
{

void requireInputs(const SurfaceComplex& complex, const Prescription& lhat)
{
    complex.requireValid();
    if (lhat.size() != complex.numVertices()) {
        throw InputError("prescription size does not match vertex count");
    }
}

FeasibilityVerdict finish(FeasibilityVerdict v)
{
    std::sort(v.worstSubset.begin(), v.worstSubset.end());
    v.boundary = std::abs(v.worstMargin) <= kBoundaryMargin;
    v.feasible = v.worstMargin < -kBoundaryMargin;
    return v;
}

// Dinic max-flow on real capacities. Residuals at or below kEps count as saturated.
class MaxFlow
{
public:
    static constexpr double kEps = 1e-12;
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    explicit MaxFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

    void addArc(int from, int to, double cap)
    {
        adj_[from].push_back({to, static_cast<int>(adj_[to].size()), cap});
        adj_[to].push_back({from, static_cast<int>(adj_[from].size()) - 1, 0.0});
    }

    double run(int s, int t)
    {
        double total = 0.0;
        while (bfs(s, t)) {
            iter_.assign(adj_.size(), 0);
            while (true) {
                const double f = dfs(s, t, kInf);
                if (f <= kEps) {
                    break;
                }
                total += f;
            }
        }
        return total;
    }

    /** Nodes reachable from s in the residual graph after run() */
    std::vector<bool> sourceSide(int s) const
    {
        std::vector<bool> seen(adj_.size(), false);
        std::queue<int> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (const auto& a : adj_[u]) {
                if (a.cap > kEps && !seen[a.to]) {
                    seen[a.to] = true;
                    q.push(a.to);
                }
            }
        }
        return seen;
    }

private:
    struct Arc {
        int to;
        int rev;
        double cap;
    };

    bool bfs(int s, int t)
    {
        level_.assign(adj_.size(), -1);
        std::queue<int> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (const auto& a : adj_[u]) {
                if (a.cap > kEps && level_[a.to] < 0) {
                    level_[a.to] = level_[u] + 1;
                    q.push(a.to);
                }
            }
        }
        return level_[t] >= 0;
    }

    double dfs(int u, int t, double pushed)
    {
        if (u == t) {
            return pushed;
        }
        for (auto& i = iter_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
            auto& a = adj_[u][i];
            if (a.cap > kEps && level_[a.to] == level_[u] + 1) {
                const double d = dfs(a.to, t, std::min(pushed, a.cap));
                if (d > kEps) {
                    a.cap -= d;
                    adj_[a.to][a.rev].cap += d;
                    return d;
                }
            }
        }
        return 0.0;
    }

    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<int> iter_;
};

}  // namespace

std::string toString(FeasibilityVerdict::Method method)
{
    return method == FeasibilityVerdict::Method::BruteForce ? "brute-force" : "min-cut";
}

double subsetMargin(
    const SurfaceComplex& complex, const Prescription& lhat, const std::vector<Index>& subset)
{
    double sum = 0.0;
    for (auto v : subset) {
        sum += lhat[v];
    }
    for (auto e : edgeNeighborhood(complex, subset)) {
        sum -= 2.0 * complex.phi()(e);
    }
    return sum;
}

FeasibilityVerdict checkBruteForce(const SurfaceComplex& complex, const Prescription& lhat)
{
    requireInputs(complex, lhat);
    const Index n = complex.numVertices();
    if (n > kBruteForceMaxVertices) {
        throw SizeError("exhaustive feasibility check limited to " +
                        std::to_string(kBruteForceMaxVertices) + " vertices (got " +
                        std::to_string(n) + "); use the min-cut method");
    }

    // Gray-code walk over subsets; cover[e] counts endpoints of e inside W.
    std::vector<int> cover(static_cast<std::size_t>(complex.numEdges()), 0);
    std::vector<bool> in(static_cast<std::size_t>(n), false);
    double lhatSum = 0.0;
    double phiSum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t bestMask = 0;
    std::uint64_t gray = 0;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < count; ++k) {
        const int v = std::countr_zero(k);
        gray ^= std::uint64_t{1} << v;
        const bool adding = !in[v];
        in[v] = adding;
        lhatSum += adding ? lhat[v] : -lhat[v];
        for (auto e : complex.incidentEdges(v)) {
            auto& c = cover[static_cast<std::size_t>(e)];
            if (adding) {
                if (c++ == 0) {
                    phiSum += complex.phi()(e);
                }
            } else if (--c == 0) {
                phiSum -= complex.phi()(e);
            }
        }
        // Running sums drift; recompute exactly for candidates near the best.
        const double approx = lhatSum - 2.0 * phiSum;
        if (approx > best - 1e-9) {
            std::vector<Index> subset;
            for (Index u = 0; u < n; ++u) {
                if ((gray >> u) & 1U) {
                    subset.push_back(u);
                }
            }
            const double exact = subsetMargin(complex, lhat, subset);
            if (exact > best) {
                best = exact;
                bestMask = gray;
            }
        }
    }

    FeasibilityVerdict verdict;
    verdict.method = FeasibilityVerdict::Method::BruteForce;
    verdict.worstMargin = best;
    for (Index u = 0; u < n; ++u) {
        if ((bestMask >> u) & 1U) {
            verdict.worstSubset.push_back(u);
        }
    }
    return finish(std::move(verdict));
}

FeasibilityVerdict checkMinCut(const SurfaceComplex& complex, const Prescription& lhat)
{
    requireInputs(complex, lhat);
    const Index n = complex.numVertices();
    const Index m = complex.numEdges();

    // Nodes: 0 = source, 1 = sink, 2..n+1 vertices, n+2..n+m+1 edges.
    const int source = 0;
    const int sink = 1;
    auto vertexNode = [](Index v) { return static_cast<int>(2 + v); };
    auto edgeNode = [n](Index e) { return static_cast<int>(2 + n + e); };

    FeasibilityVerdict verdict;
    verdict.method = FeasibilityVerdict::Method::MinCut;
    verdict.worstMargin = -std::numeric_limits<double>::infinity();

    for (Index forced = 0; forced < n; ++forced) {
        MaxFlow net(static_cast<int>(2 + n + m));
        for (Index v = 0; v < n; ++v) {
            net.addArc(source, vertexNode(v), v == forced ? MaxFlow::kInf : lhat[v]);
        }
        for (Index e = 0; e < m; ++e) {
            const auto [v, w] = complex.edge(e);
            net.addArc(vertexNode(v), edgeNode(e), MaxFlow::kInf);
            net.addArc(vertexNode(w), edgeNode(e), MaxFlow::kInf);
            net.addArc(edgeNode(e), sink, 2.0 * complex.phi()(e));
        }
        net.run(source, sink);
        const auto side = net.sourceSide(source);

        std::vector<Index> subset;
        for (Index v = 0; v < n; ++v) {
            if (side[static_cast<std::size_t>(vertexNode(v))]) {
                subset.push_back(v);
            }
        }
        const double margin = subsetMargin(complex, lhat, subset);
        if (margin > verdict.worstMargin) {
            verdict.worstMargin = margin;
            verdict.worstSubset = std::move(subset);
        }
    }
    return finish(std::move(verdict));
}

FeasibilityVerdict checkFeasibility(const SurfaceComplex& complex, const Prescription& lhat)
{
    if (complex.numVertices() <= 16) {
        return checkBruteForce(complex, lhat);
    }
    return checkMinCut(complex, lhat);
}

}  // namespace calabi
