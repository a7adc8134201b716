#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "jlgen/io.hpp"

using namespace jlgen;

namespace {

struct Run {
    int code = -1;
    std::string out;  // stdout and stderr, merged
};

Run run_tool(const std::string& args) {
    const std::string cmd = std::string(JLGEN_TOOL_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    Run r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int st = pclose(pipe);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() / "jlgen-cli-test";
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }
};

// One CSV row holding the basis vector e_j of length n.
std::string basis_csv(std::size_t n, std::size_t j) {
    std::ostringstream os;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) os << ',';
        os << (i == j ? '1' : '0');
    }
    os << '\n';
    return os.str();
}

// The working plan for most cases: n=64, eps=0.5, delta=0.25 -> a bare tail
// with s_out=23, independence 4, and a 44-bit seed (exactly 11 hex digits,
// no slack bits).
constexpr const char* kSeed44 = "123456789ab";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("plan output and plan files are byte-identical across runs") {
    TempDir tmp;
    const std::string p = tmp.path("p.json");
    const Run a = run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + p);
    const std::string text_a = read_text_file(p);
    std::filesystem::remove(p);
    const Run b = run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + p);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CHECK(text_a == read_text_file(p));
    CHECK(a.out.find("seed bits r:    44") != std::string::npos);
    CHECK(a.out.find("plan hash:") != std::string::npos);
}

TEST_CASE("invalid plan parameters exit with the usage code") {
    CHECK(run_tool("plan --n 0 --eps 0.5 --delta 0.25").code == 2);
    CHECK(run_tool("plan --n 16 --eps 1.5 --delta 0.25").code == 2);
    CHECK(run_tool("plan --n 16 --eps 0.5 --delta 0.25 --k-schedule tripling").code == 2);
    CHECK(run_tool("plan --n 16 --eps 0.5").code == 2);  // missing required flag
}

TEST_CASE("embed is deterministic and strict about the seed encoding") {
    TempDir tmp;
    const std::string plan = tmp.path("plan.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan).code == 0);

    const std::string in = tmp.path("in.csv");
    write_text_file(in, basis_csv(64, 17) + basis_csv(64, 0));

    const std::string out1 = tmp.path("out1.csv");
    const std::string out2 = tmp.path("out2.csv");
    const std::string base = "embed --plan " + plan + " --in " + in + " --seed " +
                             kSeed44 + " --format csv --out ";
    REQUIRE(run_tool(base + out1).code == 0);
    REQUIRE(run_tool(base + out2).code == 0);
    CHECK(read_text_file(out1) == read_text_file(out2));

    const auto rows = read_vectors(out1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].size() == 23);

    // Too many digits and too few digits both fail fast.
    CHECK(run_tool("embed --plan " + plan + " --in " + in + " --seed 123456789ab0" +
                   " --format csv --out " + tmp.path("x1.csv"))
              .code == 2);
    CHECK(run_tool("embed --plan " + plan + " --in " + in + " --seed 123456789a" +
                   " --format csv --out " + tmp.path("x2.csv"))
              .code == 2);

    // A 70-bit plan has two slack bits in its 18th hex digit; they must be
    // zero.
    const std::string plan70 = tmp.path("plan70.json");
    REQUIRE(run_tool("plan --n 256 --eps 0.5 --delta 0.1 --out " + plan70).code == 0);
    const std::string in256 = tmp.path("in256.csv");
    write_text_file(in256, basis_csv(256, 9));
    CHECK(run_tool("embed --plan " + plan70 + " --in " + in256 +
                   " --seed 123456789abcdef120 --format csv --out " +
                   tmp.path("x3.csv"))
              .code == 0);
    CHECK(run_tool("embed --plan " + plan70 + " --in " + in256 +
                   " --seed 123456789abcdef121 --format csv --out " +
                   tmp.path("x4.csv"))
              .code == 2);  // lowest bit of the final digit is past bit 70
}

TEST_CASE("embed rejects records of the wrong length") {
    TempDir tmp;
    const std::string plan = tmp.path("plan.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan).code == 0);
    const std::string in = tmp.path("short.csv");
    write_text_file(in, basis_csv(63, 5));
    const Run r = run_tool("embed --plan " + plan + " --in " + in + " --seed " +
                           kSeed44 + " --out " + tmp.path("y.jlvec"));
    CHECK(r.code == 2);
    CHECK(r.out.find("length") != std::string::npos);
}

TEST_CASE("embed refuses vectors stamped with a different plan's hash") {
    TempDir tmp;
    const std::string plan_a = tmp.path("a.json");
    const std::string plan_b = tmp.path("b.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan_a).code == 0);
    // A 48-bit plan: 12 hex digits with no slack, so any 12-digit seed parses.
    REQUIRE(run_tool("plan --n 64 --eps 0.4 --delta 0.25 --out " + plan_b).code == 0);

    const std::string in = tmp.path("in.csv");
    write_text_file(in, basis_csv(64, 3));
    const std::string mid = tmp.path("mid.csv");
    REQUIRE(run_tool("embed --plan " + plan_a + " --in " + in + " --seed " + kSeed44 +
                     " --format csv --out " + mid)
                .code == 0);

    // mid is stamped with plan A's hash; feeding it to plan B must refuse
    // before any arithmetic happens.
    const Run r = run_tool("embed --plan " + plan_b + " --in " + mid +
                           " --seed 123456789abc --out " + tmp.path("z.jlvec"));
    CHECK(r.code == 2);
    CHECK(r.out.find("different plan") != std::string::npos);
}

TEST_CASE("entry agrees with the embedded column and has the exact magnitude") {
    TempDir tmp;
    const std::string plan = tmp.path("plan.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan).code == 0);

    const std::string in = tmp.path("e17.csv");
    write_text_file(in, basis_csv(64, 17));
    const std::string out = tmp.path("col.csv");
    REQUIRE(run_tool("embed --plan " + plan + " --in " + in + " --seed " + kSeed44 +
                     " --format csv --out " + out)
                .code == 0);
    const auto rows = read_vectors(out);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].size() == 23);

    for (std::uint64_t r : {0ull, 3ull, 22ull}) {
        const Run res = run_tool("entry --plan " + plan + " --seed " + kSeed44 +
                                 " --row " + std::to_string(r) + " --col 17");
        REQUIRE(res.code == 0);
        const double v = std::strtod(res.out.c_str(), nullptr);
        CHECK(std::abs(v - rows[0][r]) <= 1e-12);
        CHECK(std::abs(std::abs(v) - 1.0 / std::sqrt(23.0)) <= 1e-15);
    }

    CHECK(run_tool("entry --plan " + plan + " --seed " + kSeed44 +
                   " --row 23 --col 0")
              .code == 2);  // row out of range
}

TEST_CASE("audit passes on the built-in corpus and reruns byte-identically") {
    TempDir tmp;
    const std::string plan = tmp.path("plan.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan).code == 0);

    const std::string rep1 = tmp.path("r1.json");
    const std::string rep2 = tmp.path("r2.json");
    const std::string h1 = tmp.path("h1.csv");
    const std::string h2 = tmp.path("h2.csv");
    const std::string base = "audit --plan " + plan +
                             " --trials 1000 --rng-seed 00ab --report ";
    const Run a = run_tool(base + rep1 + " --histogram " + h1);
    const Run b = run_tool(base + rep2 + " --histogram " + h2);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(read_text_file(rep1) == read_text_file(rep2));
    CHECK(read_text_file(h1) == read_text_file(h2));
    CHECK(read_text_file(h1).rfind("vector,bin_lo,bin_hi,count\n", 0) == 0);
    CHECK(a.out.find("PASS") != std::string::npos);
    CHECK(a.out.find("wall time:") != std::string::npos);
    // Reports must not embed timing, or the byte-equality above would flake.
    CHECK(read_text_file(rep1).find("wall_time") == std::string::npos);

    // All six corpus vectors are reported.
    const std::string rep = read_text_file(rep1);
    for (const char* name : {"basis", "two-point", "uniform", "geometric",
                             "alternating", "rotation-concentrator"})
        CHECK(rep.find(name) != std::string::npos);
}

TEST_CASE("audit validates the trial count") {
    TempDir tmp;
    const std::string plan = tmp.path("plan.json");
    REQUIRE(run_tool("plan --n 64 --eps 0.5 --delta 0.25 --out " + plan).code == 0);
    CHECK(run_tool("audit --plan " + plan + " --trials 10 --rng-seed 1").code == 2);
}

TEST_CASE("sampler audit enumerates the family and passes the averaging bound") {
    const Run r = run_tool(
        "sampler-audit --n 256 --s 64 --k 2 --b 1.0 --eps 0.25 --delta 0.5 "
        "--rng-seed 5");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("(exhaustive)") != std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);

    // Past the cap without --sample the request must fail cleanly.
    CHECK(run_tool("sampler-audit --n 8192 --s 16 --k 2 --eps 0.25 --delta 0.5 "
                   "--cap-bits 20 --rng-seed 5")
              .code == 2);
    // With --sample it runs and reports the sampled marker.
    const Run s = run_tool(
        "sampler-audit --n 8192 --s 16 --k 2 --eps 0.25 --delta 0.5 --cap-bits 20 "
        "--sample --trials 500 --rng-seed 5");
    REQUIRE(s.code == 0);
    CHECK(s.out.find("(sampled)") != std::string::npos);
}

TEST_CASE("regularity audit reports the vacuous bound case honestly") {
    const Run r = run_tool("regularity-audit --n 8 --k 2 --alpha 0.125 --rng-seed 3");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("(vacuous at this size)") != std::string::npos);
    CHECK(r.out.find("64 (exhaustive)") != std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);

    CHECK(run_tool("regularity-audit --n 12 --k 2 --alpha 0.125").code == 2);
}

TEST_CASE("help exits cleanly and unknown commands are usage errors") {
    CHECK(run_tool("--help").code == 0);
    CHECK(run_tool("plan --help").code == 0);
    CHECK(run_tool("frobnicate").code == 2);
    CHECK(run_tool("").code == 2);  // a subcommand is required
}

}  // TEST_SUITE
