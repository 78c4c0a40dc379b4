#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "calabi/curvature.hpp"
#include "calabi/instance_io.hpp"
#include "calabi/oracle.hpp"

using namespace calabi;

namespace
{
constexpr double kPi = std::numbers::pi;

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int parseErrorLine(std::string_view text)
{
    try {
        (void)parseInstance(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

const char* const kBigon = "vertices a b\n"
                           "edge x a b pi/2\n"
                           "edge y a b 1.25\n"
                           "face x y\n"
                           "face y x\n";
}  // namespace

TEST_CASE("real tokens")
{
    CHECK(parseReal("pi") == kPi);
    CHECK(parseReal("pi/2") == kPi / 2);
    CHECK(parseReal("3*pi/4") == 3 * kPi / 4);
    CHECK(parseReal("2*pi") == 2 * kPi);
    CHECK(parseReal("0.125") == 0.125);
    CHECK(parseReal("-1e-3") == -1e-3);
    CHECK_FALSE(parseReal("").has_value());
    CHECK_FALSE(parseReal("pi/0").has_value());
    CHECK_FALSE(parseReal("pi/").has_value());
    CHECK_FALSE(parseReal("3pi").has_value());
    CHECK_FALSE(parseReal("1.0x").has_value());
    CHECK_FALSE(parseReal("nan").has_value());
    CHECK_FALSE(parseReal("inf").has_value());

    CHECK(formatReal(kPi / 2) == "pi/2");
    CHECK(formatReal(kPi) == "pi");
    CHECK(formatReal(3 * kPi / 4) == "3*pi/4");
    CHECK(formatReal(0.1) == "0.1");
    CHECK(formatReal(-2.5) == "-2.5");
    CHECK(formatNumber(kPi / 2) == "1.5707963267948966");

    CounterRng rng(8);
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-1e3, 1e3);
        CHECK(parseReal(formatReal(x)) == x);
    }
}

TEST_CASE("parse a bigon document")
{
    const auto inst = parseInstance(kBigon);
    const auto& c = inst.complex;
    CHECK(c.valid());
    CHECK(c.numVertices() == 2);
    CHECK(c.vertexNames() == std::vector<std::string>{"a", "b"});
    CHECK(c.edgeNames() == std::vector<std::string>{"x", "y"});
    CHECK(c.phi()(0) == kPi / 2);
    CHECK(c.phi()(1) == 1.25);
    CHECK(c.faces()[1] == std::vector<Index>{1, 0});
    CHECK_FALSE(inst.lhat.has_value());
    CHECK(inst.startK().isZero());
}

TEST_CASE("initial states")
{
    std::string text = kBigon;
    text += "r0 a pi/4\nr0 b pi/6\n";
    const auto inst = parseInstance(text);
    CHECK(inst.startK()(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(inst.startK()(1) == doctest::Approx(std::log(std::sqrt(3.0))).epsilon(1e-14));

    std::string both = kBigon;
    both += "k0 a 1\nk0 b 1\nr0 a 1\nr0 b 1\n";
    CHECK_THROWS_AS(parseInstance(both), ParseError);

    std::string badR = kBigon;
    badR += "r0 a 2\nr0 b 1\n";
    CHECK_THROWS_AS(parseInstance(badR), ParseError);
}

TEST_CASE("parse errors carry positions")
{
    CHECK(parseErrorLine("vertices a b\nedge x a c pi/2\n") == 2);
    CHECK(parseErrorLine("edge x a b pi/2\n") == 1);
    CHECK(parseErrorLine("vertices a b\nedge x a b\n") == 2);
    CHECK(parseErrorLine("vertices a a\n") == 1);
    CHECK(parseErrorLine("vertices a b\nedge x a b 1\nedge x a b 1\n") == 3);
    CHECK(parseErrorLine("vertices a b\nface z\n") == 2);
    CHECK(parseErrorLine("vertices a b\n\n\nwibble\n") == 4);
    CHECK(parseErrorLine("vertices a b\nlhat a 1\nlhat a 2\nlhat b 1\n") == 3);
    CHECK(parseErrorLine("vertices a b\nlhat a 1\n") == 2);
    CHECK(parseErrorLine("vertices a b\nlhat a 1\nlhat b -1\n") == 2);
    CHECK(parseErrorLine("# only a comment\n") == 1);

    try {
        (void)parseInstance("vertices a b\nedge x a b right\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 12);
        CHECK(std::string(e.what()).find("right") != std::string::npos);
    }
}

TEST_CASE("structural problems are not parse errors")
{
    const auto inst = parseInstance("vertices a b\nedge x a a pi/2\nface x\nface x\n");
    CHECK_FALSE(inst.complex.valid());
}

TEST_CASE("serialization round trip")
{
    CounterRng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        InstanceFile inst;
        const auto n = static_cast<Index>(4 + rng.below(10));
        inst.complex = randomSphereComplex(rng, n, static_cast<int>(rng.below(3)), 0.1, kPi / 2);
        inst.comments = {" random instance " + std::to_string(trial)};
        inst.lhat = Prescription(rng.uniformVector(n, 0.1, 9.0));
        if (trial % 2 == 0) {
            inst.initialK = rng.uniformVector(n, -2.0, 2.0);
        }
        const auto text = serializeInstance(inst);
        const auto back = parseInstance(text);
        CHECK(back.complex == inst.complex);
        CHECK(back.lhat->values() == inst.lhat->values());
        CHECK(back.initialK.has_value() == inst.initialK.has_value());
        CHECK(back.comments == inst.comments);
        CHECK(serializeInstance(back) == text);
        CHECK(instanceDigest(back) == instanceDigest(inst));
    }
}

TEST_CASE("fixtures are in canonical form")
{
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(CALABI_FIXTURE_DIR)) {
        if (entry.path().extension() != ".inst" || entry.path().stem() == "malformed") {
            continue;
        }
        CAPTURE(entry.path().string());
        const auto text = slurp(entry.path());
        CHECK(serializeInstance(parseInstance(text)) == text);
        ++seen;
    }
    CHECK(seen >= 8);
}

TEST_CASE("digest")
{
    const auto a = parseInstance(kBigon);
    const auto digest = instanceDigest(a);
    CHECK(digest.size() == 16);
    std::string other = kBigon;
    other.replace(other.find("1.25"), 4, "1.26");
    CHECK(instanceDigest(parseInstance(other)) != digest);
}

TEST_CASE("trace and solution documents")
{
    auto inst = parseInstance(kBigon);
    inst.lhat = Prescription(curvatures(inst.complex, Eigen::Vector2d(0.2, -0.1)));
    FlowConfig cfg;
    const auto trace = run(inst.complex, *inst.lhat, inst.startK(), cfg);
    REQUIRE((trace.verdict == Verdict::Converged));

    const auto csv = serializeTrace(inst, trace);
    CHECK(csv.find("# instance_digest: " + instanceDigest(inst)) != std::string::npos);
    CHECK(csv.find("# verdict: converged") != std::string::npos);
    CHECK(csv.find("t,K[a],K[b],residual_inf,energy,speed\n") != std::string::npos);
    std::size_t rows = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line[0] != '#' && line[0] != 't') {
            ++rows;
        }
    }
    CHECK(rows == trace.samples.size());

    const auto doc = serializeSolution(inst, trace, evaluate(inst.complex, trace.finalK()));
    CHECK(doc.find("verdict converged") != std::string::npos);
    CHECK(doc.find("vertex a r ") != std::string::npos);
    CHECK(doc.find("face 1 alpha ") != std::string::npos);
    CHECK(doc.find("certificate") == std::string::npos);

    CHECK(formatSubset(inst.complex, {0, 1}) == "{a,b}");
    CHECK(formatSubset(inst.complex, {}) == "{}");
}
