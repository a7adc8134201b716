#include "jlgen/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace jlgen {

namespace {

constexpr char kMagic[8] = {'J', 'L', 'V', 'E', 'C', '0', '1', '\n'};

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t parse_hash_hex(const std::string& s) {
    if (s.empty()) return 0;
    return std::stoull(s, nullptr, 16);
}

void put_u32le(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64le(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f64le(std::ostream& out, double d) {
    put_u64le(out, std::bit_cast<std::uint64_t>(d));
}

bool get_u64le(std::istream& in, std::uint64_t& v) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return true;
}

// Shortest decimal that round-trips the double.
std::string fmt_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == d) {
        for (int prec = 1; prec < 17; ++prec) {
            char probe[40];
            std::snprintf(probe, sizeof probe, "%.*g", prec, d);
            std::sscanf(probe, "%lf", &back);
            if (back == d) return probe;
        }
    }
    return buf;
}

}  // namespace

// ----------------------------------------------------------------------------
// VectorWriter
// ----------------------------------------------------------------------------

VectorWriter::VectorWriter(const std::string& path, VecFormat format,
                           VectorFileHeader header)
    : path_(path), format_(format) {
    out_.open(path, format == VecFormat::BinaryF64LittleEndian
                        ? std::ios::binary | std::ios::out
                        : std::ios::out);
    if (!out_) throw IoError("cannot open for writing: " + path);
    if (format_ == VecFormat::BinaryF64LittleEndian) {
        nlohmann::ordered_json h;
        h["plan_hash"] = hash_hex(header.plan_hash);
        h["producer"] = header.producer;
        const std::string text = h.dump();
        out_.write(kMagic, sizeof kMagic);
        put_u32le(out_, static_cast<std::uint32_t>(text.size()));
        out_.write(text.data(), static_cast<std::streamsize>(text.size()));
    } else {
        out_ << "# plan_hash=" << hash_hex(header.plan_hash) << "\n";
        if (!header.producer.empty()) out_ << "# producer=" << header.producer << "\n";
    }
    if (!out_) throw IoError("write failure: " + path);
}

VectorWriter::~VectorWriter() {
    if (!closed_) out_.close();
}

void VectorWriter::write(std::span<const double> v) {
    if (closed_) throw IoError("write after close: " + path_);
    if (format_ == VecFormat::BinaryF64LittleEndian) {
        put_u64le(out_, v.size());
        for (double d : v) put_f64le(out_, d);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out_ << ',';
            out_ << fmt_double(v[i]);
        }
        out_ << '\n';
    }
    if (!out_) throw IoError("write failure: " + path_);
}

void VectorWriter::close() {
    if (closed_) return;
    out_.flush();
    if (!out_) throw IoError("write failure: " + path_);
    out_.close();
    closed_ = true;
}

// ----------------------------------------------------------------------------
// VectorReader
// ----------------------------------------------------------------------------

VectorReader::VectorReader(const std::string& path) : path_(path) {
    in_.open(path, std::ios::binary | std::ios::in);
    if (!in_) throw IoError("cannot open for reading: " + path);
    char magic[8] = {};
    in_.read(magic, sizeof magic);
    if (in_.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0) {
        format_ = VecFormat::BinaryF64LittleEndian;
        unsigned char lb[4];
        if (!in_.read(reinterpret_cast<char*>(lb), 4))
            throw FileFormatError("truncated header length: " + path);
        std::uint32_t len = 0;
        for (int i = 3; i >= 0; --i) len = (len << 8) | lb[i];
        std::string text(len, '\0');
        if (!in_.read(text.data(), len))
            throw FileFormatError("truncated header: " + path);
        try {
            const auto h = nlohmann::json::parse(text);
            header_.plan_hash = parse_hash_hex(h.value("plan_hash", std::string{}));
            header_.producer = h.value("producer", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw FileFormatError("bad header in " + path + ": " + e.what());
        }
    } else {
        format_ = VecFormat::Csv;
        in_.clear();
        in_.seekg(0);
        // Scan the leading comment block now so the header is available
        // before any record is read; the first data line is kept for next().
        std::string line;
        while (std::getline(in_, line)) {
            if (!consume_meta_line(line)) {
                pending_ = std::move(line);
                break;
            }
        }
    }
}

bool VectorReader::consume_meta_line(const std::string& line) {
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) return true;
    if (line[start] != '#') return false;
    const std::string body = line.substr(start + 1);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
        std::string key = body.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string val = body.substr(eq + 1);
        val.erase(0, val.find_first_not_of(" \t"));
        val.erase(val.find_last_not_of(" \t\r") + 1);
        try {
            if (key == "plan_hash") header_.plan_hash = parse_hash_hex(val);
            if (key == "producer") header_.producer = val;
        } catch (const std::exception&) {
            throw FileFormatError("bad plan_hash comment in " + path_);
        }
    }
    return true;
}

std::optional<std::vector<double>> VectorReader::next() {
    if (format_ == VecFormat::BinaryF64LittleEndian) {
        std::uint64_t count = 0;
        if (!get_u64le(in_, count)) {
            // A clean end of file reads zero bytes; a partial count word is a
            // truncated file.
            if (in_.eof() && in_.gcount() == 0) return std::nullopt;
            throw FileFormatError("truncated record count: " + path_);
        }
        std::vector<double> v(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            std::uint64_t raw = 0;
            if (!get_u64le(in_, raw))
                throw FileFormatError("truncated record payload: " + path_);
            v[i] = std::bit_cast<double>(raw);
        }
        return v;
    }
    std::string line;
    for (;;) {
        if (pending_) {
            line = std::move(*pending_);
            pending_.reset();
        } else if (!std::getline(in_, line)) {
            break;
        }
        if (consume_meta_line(line)) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            errno = 0;
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str())
                throw FileFormatError("bad number '" + cell + "' in " + path_);
            // Gradual underflow to a subnormal sets ERANGE but still returns
            // the correctly rounded value; only a true overflow is rejected.
            if (errno == ERANGE && std::isinf(x))
                throw FileFormatError("bad number '" + cell + "' in " + path_);
            std::size_t used = static_cast<std::size_t>(end - cell.c_str());
            while (used < cell.size() &&
                   (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
                ++used;
            if (used != cell.size())
                throw FileFormatError("bad number '" + cell + "' in " + path_);
            v.push_back(x);
        }
        if (!v.empty()) return v;
    }
    return std::nullopt;
}

std::vector<std::vector<double>> read_vectors(const std::string& path) {
    VectorReader reader(path);
    std::vector<std::vector<double>> out;
    while (auto v = reader.next()) out.push_back(std::move(*v));
    return out;
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

std::string report_to_json(const AuditReport& report) {
    nlohmann::ordered_json j;
    j["params"] = report.params;
    j["trials"] = report.trials;
    j["failures"] = report.failures;
    j["failure_rate"] = report.failure_rate;
    j["ci99_lower"] = report.ci99.lower;
    j["ci99_upper"] = report.ci99.upper;
    j["histogram_bin_width"] = report.histogram_bin_width;
    j["histogram"] = report.histogram;
    j["linf_exceed_rate"] = report.linf_exceed_rate;
    j["baseline_failures"] = report.baseline_failures;
    j["baseline_failure_rate"] = report.baseline_failure_rate;
    j["baseline_ci99_lower"] = report.baseline_ci99.lower;
    j["baseline_ci99_upper"] = report.baseline_ci99.upper;
    return j.dump(2) + "\n";
}

void report_save(const AuditReport& report, const std::string& path) {
    write_text_file(path, report_to_json(report));
}

void histogram_save_csv(const AuditReport& report, const std::string& path) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < report.histogram.size(); ++i) {
        const double lo = static_cast<double>(i) * report.histogram_bin_width;
        os << fmt_double(lo) << ',';
        if (i + 1 == report.histogram.size())
            os << "inf";
        else
            os << fmt_double(lo + report.histogram_bin_width);
        os << ',' << report.histogram[i] << '\n';
    }
    write_text_file(path, os.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure: " + path);
    return ss.str();
}

}  // namespace jlgen
