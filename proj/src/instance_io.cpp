#include "calabi/instance_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "calabi/geometry.hpp"

namespace calabi
{

ParseError::ParseError(const std::string& msg, int line, int column)
    : InputError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg)
    , line_{line}
    , column_{column}
{
}

namespace
{

struct Token {
    std::string_view text;
    int column;
};

std::vector<Token> tokenize(std::string_view line)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        if (i >= line.size()) {
            break;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

std::optional<long> parseInt(std::string_view s)
{
    long value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end || value <= 0) {
        return std::nullopt;
    }
    return value;
}

double piMultiple(long p, long q)
{
    return static_cast<double>(p) * std::numbers::pi / static_cast<double>(q);
}

constexpr long kMaxPiDenominator = 24;

}  // namespace

std::optional<double> parseReal(std::string_view token)
{
    const auto piPos = token.find("pi");
    if (piPos != std::string_view::npos) {
        long p = 1;
        long q = 1;
        const auto head = token.substr(0, piPos);
        const auto tail = token.substr(piPos + 2);
        if (!head.empty()) {
            if (head.back() != '*') {
                return std::nullopt;
            }
            const auto pv = parseInt(head.substr(0, head.size() - 1));
            if (!pv) {
                return std::nullopt;
            }
            p = *pv;
        }
        if (!tail.empty()) {
            if (tail.front() != '/') {
                return std::nullopt;
            }
            const auto qv = parseInt(tail.substr(1));
            if (!qv) {
                return std::nullopt;
            }
            q = *qv;
        }
        return piMultiple(p, q);
    }
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string formatNumber(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return {buf, ptr};
}

std::string formatReal(double value)
{
    if (value > 0.0) {
        for (long q = 1; q <= kMaxPiDenominator; ++q) {
            for (long p = 1; p <= 4 * q; ++p) {
                if (std::gcd(p, q) != 1 || piMultiple(p, q) != value) {
                    continue;
                }
                std::string s = p == 1 ? "pi" : std::to_string(p) + "*pi";
                if (q != 1) {
                    s += "/" + std::to_string(q);
                }
                return s;
            }
        }
    }
    return formatNumber(value);
}

Eigen::VectorXd InstanceFile::startK() const
{
    if (initialK) {
        return *initialK;
    }
    if (initialR) {
        Eigen::VectorXd K(initialR->size());
        for (Index v = 0; v < K.size(); ++v) {
            K(v) = rToK((*initialR)(v));
        }
        return K;
    }
    return Eigen::VectorXd::Zero(complex.numVertices());
}

InstanceFile parseInstance(std::string_view text)
{
    InstanceFile inst;
    std::vector<std::string> vertexNames;
    std::map<std::string, Index, std::less<>> vertexIds;
    std::vector<std::string> edgeNames;
    std::map<std::string, Index, std::less<>> edgeIds;
    std::vector<Edge> edges;
    std::vector<double> phi;
    std::vector<std::vector<Index>> faces;
    std::map<std::string, std::pair<std::vector<std::optional<double>>, int>> perVertex;
    bool sawVertices = false;
    bool sawStatement = false;
    int lastLine = 0;

    auto real = [](const Token& tok, int line) {
        const auto v = parseReal(tok.text);
        if (!v) {
            throw ParseError("expected a real number or pi multiple, got '" + std::string(tok.text) + "'",
                             line, tok.column);
        }
        return *v;
    };
    auto vertex = [&](const Token& tok, int line) {
        const auto it = vertexIds.find(tok.text);
        if (it == vertexIds.end()) {
            throw ParseError("unknown vertex '" + std::string(tok.text) + "'", line, tok.column);
        }
        return it->second;
    };

    std::size_t pos = 0;
    int lineNo = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineNo;
        if (!line.empty() && line.front() == '#') {
            if (!sawStatement) {
                inst.comments.emplace_back(line.substr(1));
            }
            continue;
        }
        const auto toks = tokenize(line);
        if (toks.empty()) {
            continue;
        }
        sawStatement = true;
        lastLine = lineNo;
        const auto kw = toks[0].text;
        auto need = [&](std::size_t count) {
            if (toks.size() != count) {
                throw ParseError("'" + std::string(kw) + "' expects " + std::to_string(count - 1) +
                                     " arguments, got " + std::to_string(toks.size() - 1),
                                 lineNo, toks[0].column);
            }
        };

        if (kw == "vertices") {
            if (sawVertices) {
                throw ParseError("duplicate 'vertices' statement", lineNo, toks[0].column);
            }
            if (toks.size() < 2) {
                throw ParseError("'vertices' needs at least one name", lineNo, toks[0].column);
            }
            sawVertices = true;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                std::string name(toks[i].text);
                if (!vertexIds.emplace(name, static_cast<Index>(vertexNames.size())).second) {
                    throw ParseError("duplicate vertex name '" + name + "'", lineNo, toks[i].column);
                }
                vertexNames.push_back(std::move(name));
            }
        } else if (!sawVertices) {
            throw ParseError("'vertices' must come first", lineNo, toks[0].column);
        } else if (kw == "edge") {
            need(5);
            std::string name(toks[1].text);
            if (!edgeIds.emplace(name, static_cast<Index>(edgeNames.size())).second) {
                throw ParseError("duplicate edge name '" + name + "'", lineNo, toks[1].column);
            }
            edgeNames.push_back(std::move(name));
            edges.push_back({vertex(toks[2], lineNo), vertex(toks[3], lineNo)});
            phi.push_back(real(toks[4], lineNo));
        } else if (kw == "face") {
            if (toks.size() < 2) {
                throw ParseError("'face' needs a boundary walk", lineNo, toks[0].column);
            }
            std::vector<Index> walk;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                const auto it = edgeIds.find(toks[i].text);
                if (it == edgeIds.end()) {
                    throw ParseError("unknown edge '" + std::string(toks[i].text) + "'", lineNo,
                                     toks[i].column);
                }
                walk.push_back(it->second);
            }
            faces.push_back(std::move(walk));
        } else if (kw == "lhat" || kw == "k0" || kw == "r0") {
            need(3);
            auto& [values, firstLine] = perVertex[std::string(kw)];
            if (values.empty()) {
                values.resize(vertexNames.size());
                firstLine = lineNo;
            }
            const Index v = vertex(toks[1], lineNo);
            if (values[static_cast<std::size_t>(v)]) {
                throw ParseError("duplicate '" + std::string(kw) + "' for vertex '" +
                                     std::string(toks[1].text) + "'",
                                 lineNo, toks[1].column);
            }
            values[static_cast<std::size_t>(v)] = real(toks[2], lineNo);
        } else {
            throw ParseError("unknown statement '" + std::string(kw) + "'", lineNo, toks[0].column);
        }
    }
    if (!sawVertices) {
        throw ParseError("missing 'vertices' statement", std::max(lastLine, 1), 1);
    }

    auto collect = [&](const std::string& kw) -> std::optional<Eigen::VectorXd> {
        const auto it = perVertex.find(kw);
        if (it == perVertex.end()) {
            return std::nullopt;
        }
        const auto& [values, firstLine] = it->second;
        Eigen::VectorXd out(static_cast<Index>(values.size()));
        for (std::size_t v = 0; v < values.size(); ++v) {
            if (!values[v]) {
                throw ParseError("'" + kw + "' missing for vertex '" + vertexNames[v] + "'", firstLine, 1);
            }
            out(static_cast<Index>(v)) = *values[v];
        }
        return out;
    };

    if (auto lhat = collect("lhat")) {
        try {
            inst.lhat = Prescription(std::move(*lhat));
        } catch (const InputError& e) {
            throw ParseError(e.what(), perVertex["lhat"].second, 1);
        }
    }
    inst.initialK = collect("k0");
    inst.initialR = collect("r0");
    if (inst.initialK && inst.initialR) {
        throw ParseError("give either k0 or r0, not both", perVertex["r0"].second, 1);
    }
    if (inst.initialR) {
        for (Index v = 0; v < inst.initialR->size(); ++v) {
            const double r = (*inst.initialR)(v);
            if (!(r > 0.0 && r < std::numbers::pi / 2)) {
                throw ParseError("initial radius must lie in (0, pi/2)", perVertex["r0"].second, 1);
            }
        }
    }

    Eigen::VectorXd phiVec = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Index>(phi.size()));
    const auto numVertices = static_cast<Index>(vertexNames.size());
    inst.complex = SurfaceComplex(numVertices, std::move(edges), std::move(faces),
                                  std::move(phiVec), std::move(vertexNames), std::move(edgeNames));
    return inst;
}

InstanceFile readInstance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read instance file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parseInstance(ss.str());
}

std::string serializeInstance(const InstanceFile& inst)
{
    const auto& c = inst.complex;
    std::ostringstream os;
    for (const auto& line : inst.comments) {
        os << '#' << line << '\n';
    }
    os << "vertices";
    for (const auto& name : c.vertexNames()) {
        os << ' ' << name;
    }
    os << '\n';
    for (Index e = 0; e < c.numEdges(); ++e) {
        const auto [v, w] = c.edge(e);
        os << "edge " << c.edgeNames()[static_cast<std::size_t>(e)] << ' '
           << c.vertexNames()[static_cast<std::size_t>(v)] << ' '
           << c.vertexNames()[static_cast<std::size_t>(w)] << ' ' << formatReal(c.phi()(e)) << '\n';
    }
    for (const auto& walk : c.faces()) {
        os << "face";
        for (auto e : walk) {
            os << ' ' << c.edgeNames()[static_cast<std::size_t>(e)];
        }
        os << '\n';
    }
    auto perVertex = [&](const char* kw, const Eigen::VectorXd& values) {
        for (Index v = 0; v < values.size(); ++v) {
            os << kw << ' ' << c.vertexNames()[static_cast<std::size_t>(v)] << ' ' << formatReal(values(v))
               << '\n';
        }
    };
    if (inst.lhat) {
        perVertex("lhat", inst.lhat->values());
    }
    if (inst.initialK) {
        perVertex("k0", *inst.initialK);
    }
    if (inst.initialR) {
        perVertex("r0", *inst.initialR);
    }
    return os.str();
}

std::string instanceDigest(const InstanceFile& instance)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serializeInstance(instance)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string formatSubset(const SurfaceComplex& complex, const std::vector<Index>& subset)
{
    std::string s = "{";
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (i > 0) {
            s += ',';
        }
        s += complex.vertexNames().at(static_cast<std::size_t>(subset[i]));
    }
    return s + "}";
}

std::string serializeTrace(const InstanceFile& instance, const FlowTrace& trace)
{
    const auto& cfg = trace.config;
    const auto& c = instance.complex;
    std::ostringstream os;
    os << "# calabi trace\n"
       << "# instance_digest: " << instanceDigest(instance) << '\n'
       << "# method: " << toString(cfg.method) << '\n'
       << "# integrator: " << toString(cfg.integrator) << '\n'
       << "# step: " << formatNumber(cfg.step) << '\n'
       << "# tol_curvature: " << formatNumber(cfg.tolCurvature) << '\n'
       << "# tol_ode: " << formatNumber(cfg.tolOde) << '\n'
       << "# max_time: " << formatNumber(cfg.maxTime) << '\n'
       << "# divergence_k: " << formatNumber(cfg.divergenceK) << '\n'
       << "# verdict: " << toString(trace.verdict) << '\n'
       << "# reason: " << trace.reason << '\n'
       << "# fitted_rate: " << (trace.fittedRate ? formatNumber(*trace.fittedRate) : "none") << '\n'
       << "# clamped: " << (trace.clamped ? "yes" : "no") << '\n';
    os << "t";
    for (const auto& name : c.vertexNames()) {
        os << ",K[" << name << ']';
    }
    os << ",residual_inf,energy,speed\n";
    for (const auto& s : trace.samples) {
        os << formatNumber(s.t);
        for (Index v = 0; v < s.K.size(); ++v) {
            os << ',' << formatNumber(s.K(v));
        }
        os << ',' << formatNumber(s.residual) << ',' << formatNumber(s.energy) << ','
           << formatNumber(s.speed) << '\n';
    }
    return os.str();
}

std::string serializeSolution(const InstanceFile& instance, const FlowTrace& trace, const CurvatureState& state)
{
    const auto& c = instance.complex;
    const auto& last = trace.samples.back();
    std::ostringstream os;
    os << "# calabi solution\n"
       << "instance_digest " << instanceDigest(instance) << '\n'
       << "method " << toString(trace.config.method) << '\n'
       << "verdict " << toString(trace.verdict) << '\n'
       << "time " << formatNumber(last.t) << '\n'
       << "iterations " << trace.iterations << '\n'
       << "residual_inf " << formatNumber(last.residual) << '\n'
       << "energy " << formatNumber(last.energy) << '\n'
       << "fitted_rate " << (trace.fittedRate ? formatNumber(*trace.fittedRate) : "none") << '\n';
    if (trace.certificate) {
        os << "certificate " << formatSubset(c, trace.certificate->worstSubset) << ' '
           << formatNumber(trace.certificate->worstMargin) << '\n';
    }
    for (Index v = 0; v < c.numVertices(); ++v) {
        os << "vertex " << c.vertexNames()[static_cast<std::size_t>(v)] << " r " << formatNumber(state.r(v))
           << " K " << formatNumber(state.K(v)) << " L " << formatNumber(state.L(v)) << " alpha "
           << formatNumber(state.alphaV(v)) << '\n';
    }
    for (Index f = 0; f < c.numFaces(); ++f) {
        os << "face " << f << " alpha " << formatReal(state.alphaF(f)) << '\n';
    }
    return os.str();
}

}  // namespace calabi
