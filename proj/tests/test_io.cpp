#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "jlgen/audit.hpp"
#include "jlgen/errors.hpp"
#include "jlgen/io.hpp"

using namespace jlgen;

namespace {

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() / "jlgen-io-test";
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }
};

const std::vector<double> kSpecials = {
    0.0, -0.0, 5e-324, -5e-324, 1.0 / 3.0, std::numbers::pi,
    1e308, -1.7976931348623157e308, -1e-308, 123456789.123456789,
};

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
            return false;
    return true;
}

AuditReport sample_report() {
    AuditReport r;
    r.params = "n=8 eps=0.5 delta=0.25";
    r.trials = 1000;
    r.failures = 35;
    r.failure_rate = 0.035;
    r.ci99 = wilson99(35, 1000);
    r.histogram.assign(kHistogramBins + 1, 0);
    r.histogram[0] = 900;
    r.histogram[3] = 65;
    r.histogram[kHistogramBins] = 35;
    r.histogram_bin_width = 0.0625;
    r.linf_exceed_rate = 0.001;
    r.baseline_failures = 20;
    r.baseline_failure_rate = 0.02;
    r.baseline_ci99 = wilson99(20, 1000);
    r.wall_time_seconds = 1.25;  // must never reach the serialized form
    return r;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("binary vector files round-trip bit for bit") {
    TempDir tmp;
    const std::string path = tmp.path("v.jlvec");
    {
        VectorWriter w(path, VecFormat::BinaryF64LittleEndian,
                       VectorFileHeader{0xdeadbeef12345678ull, "unit-test"});
        w.write(kSpecials);
        w.write(std::vector<double>{});  // empty record survives in binary
        w.write(std::vector<double>{42.5});
        w.close();
    }
    VectorReader r(path);
    CHECK(r.format() == VecFormat::BinaryF64LittleEndian);
    CHECK(r.header().plan_hash == 0xdeadbeef12345678ull);
    CHECK(r.header().producer == "unit-test");

    auto rec = r.next();
    REQUIRE(rec.has_value());
    CHECK(bitwise_equal(*rec, kSpecials));
    rec = r.next();
    REQUIRE(rec.has_value());
    CHECK(rec->empty());
    rec = r.next();
    REQUIRE(rec.has_value());
    CHECK(bitwise_equal(*rec, {42.5}));
    CHECK_FALSE(r.next().has_value());
    CHECK_FALSE(r.next().has_value());  // EOF is stable
}

TEST_CASE("csv vector files round-trip values exactly and carry the header") {
    TempDir tmp;
    const std::string path = tmp.path("v.csv");
    {
        VectorWriter w(path, VecFormat::Csv,
                       VectorFileHeader{0x0123456789abcdefull, "csv-test"});
        w.write(kSpecials);
        w.write(std::vector<double>{1.0, -2.0, 3.5});
        w.close();
    }
    VectorReader r(path);
    CHECK(r.format() == VecFormat::Csv);
    auto rec = r.next();  // comment lines are consumed here
    REQUIRE(rec.has_value());
    CHECK(bitwise_equal(*rec, kSpecials));
    CHECK(r.header().plan_hash == 0x0123456789abcdefull);
    CHECK(r.header().producer == "csv-test");
    rec = r.next();
    REQUIRE(rec.has_value());
    CHECK(bitwise_equal(*rec, {1.0, -2.0, 3.5}));
    CHECK_FALSE(r.next().has_value());
}

TEST_CASE("hand-written csv with whitespace and comments parses") {
    TempDir tmp;
    const std::string path = tmp.path("hand.csv");
    write_text_file(path,
                    "# a free comment\n"
                    "\n"
                    "  # plan_hash=00000000000000ff\n"
                    " 1.5, -2.25 ,3\n"
                    "4\n");
    const auto vecs = read_vectors(path);
    REQUIRE(vecs.size() == 2);
    CHECK(bitwise_equal(vecs[0], {1.5, -2.25, 3.0}));
    CHECK(bitwise_equal(vecs[1], {4.0}));

    VectorReader r(path);
    (void)r.next();
    CHECK(r.header().plan_hash == 0xffull);
}

TEST_CASE("format is sniffed from the magic bytes") {
    TempDir tmp;
    const std::string bin = tmp.path("a.jlvec");
    {
        VectorWriter w(bin, VecFormat::BinaryF64LittleEndian, {});
        w.write(std::vector<double>{1.0});
        w.close();
    }
    CHECK(VectorReader(bin).format() == VecFormat::BinaryF64LittleEndian);

    const std::string text = tmp.path("b.csv");
    write_text_file(text, "1,2,3\n");
    CHECK(VectorReader(text).format() == VecFormat::Csv);

    // A file shorter than the magic is just very short CSV.
    const std::string shorty = tmp.path("c.txt");
    write_text_file(shorty, "7\n");
    VectorReader r(shorty);
    CHECK(r.format() == VecFormat::Csv);
    CHECK(bitwise_equal(*r.next(), {7.0}));
}

TEST_CASE("malformed files raise format errors") {
    TempDir tmp;
    const std::string bad = tmp.path("bad.csv");
    write_text_file(bad, "1.5,abc,2\n");
    VectorReader r(bad);
    CHECK_THROWS_AS(r.next(), FileFormatError);

    const std::string good = tmp.path("good.jlvec");
    {
        VectorWriter w(good, VecFormat::BinaryF64LittleEndian, {});
        w.write(std::vector<double>{1.0, 2.0, 3.0});
        w.close();
    }
    const std::string full = read_text_file(good);

    // Cut inside the payload: the record promises 3 doubles but ends early.
    const std::string cut_payload = tmp.path("cut1.jlvec");
    write_text_file(cut_payload, full.substr(0, full.size() - 5));
    VectorReader rp(cut_payload);
    CHECK_THROWS_AS(rp.next(), FileFormatError);

    // Cut inside the record-count word.
    const std::string cut_count = tmp.path("cut2.jlvec");
    const std::size_t header_len = full.size() - (8 + 3 * 8);
    write_text_file(cut_count, full.substr(0, header_len + 3));
    VectorReader rc(cut_count);
    CHECK_THROWS_AS(rc.next(), FileFormatError);

    // Cut exactly after the header: a well-formed file with zero records.
    const std::string empty_ok = tmp.path("empty.jlvec");
    write_text_file(empty_ok, full.substr(0, header_len));
    VectorReader re(empty_ok);
    CHECK_FALSE(re.next().has_value());
}

TEST_CASE("missing files and unwritable paths raise io errors") {
    TempDir tmp;
    CHECK_THROWS_AS(VectorReader(tmp.path("absent.csv")), IoError);
    CHECK_THROWS_AS(read_text_file(tmp.path("absent.txt")), IoError);
    const std::string bad_dir = (tmp.dir / "no-such-dir" / "x.csv").string();
    CHECK_THROWS_AS(write_text_file(bad_dir, "x"), IoError);
    CHECK_THROWS_AS(VectorWriter(bad_dir, VecFormat::Csv, {}), IoError);
}

TEST_CASE("report serialization is stable, ordered, and time-free") {
    const AuditReport r = sample_report();
    const std::string a = report_to_json(r);
    const std::string b = report_to_json(sample_report());
    CHECK(a == b);
    CHECK(a.find("wall_time") == std::string::npos);

    const char* keys[] = {"\"params\"",
                          "\"trials\"",
                          "\"failures\"",
                          "\"failure_rate\"",
                          "\"ci99_lower\"",
                          "\"ci99_upper\"",
                          "\"histogram_bin_width\"",
                          "\"histogram\"",
                          "\"linf_exceed_rate\"",
                          "\"baseline_failures\"",
                          "\"baseline_failure_rate\"",
                          "\"baseline_ci99_lower\"",
                          "\"baseline_ci99_upper\""};
    std::size_t prev = 0;
    for (const char* k : keys) {
        const std::size_t pos = a.find(k);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > prev);
        prev = pos;
    }

    TempDir tmp;
    const std::string path = tmp.path("report.json");
    report_save(r, path);
    CHECK(read_text_file(path) == a);
}

TEST_CASE("histogram csv lists every bin with an open-ended overflow row") {
    const AuditReport r = sample_report();
    TempDir tmp;
    const std::string path = tmp.path("hist.csv");
    histogram_save_csv(r, path);
    const std::string text = read_text_file(path);

    std::istringstream ss(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    REQUIRE(lines.size() == 1 + kHistogramBins + 1);
    CHECK(lines[0] == "bin_lo,bin_hi,count");
    CHECK(lines[1] == "0,0.0625,900");
    CHECK(lines[4] == "0.1875,0.25,65");
    CHECK(lines.back() == "1,inf,35");
}

TEST_CASE("text files round-trip binary content") {
    TempDir tmp;
    const std::string path = tmp.path("blob.bin");
    std::string payload = "line\n";
    payload.push_back('\0');
    payload += "after-nul";
    write_text_file(path, payload);
    CHECK(read_text_file(path) == payload);
}

}  // TEST_SUITE
