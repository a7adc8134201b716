#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jlgen/audit.hpp"
#include "jlgen/errors.hpp"

namespace jlgen {

// ============================================================================
// Vector interchange files.
//
// Binary format (bit-exact interchange):
//   bytes 0..7   magic "JLVEC01\n"
//   bytes 8..11  u32 little-endian header length L
//   bytes 12..   L bytes of JSON header: {"plan_hash": "<16 hex>",
//                "producer": "<free text>"}
//   then records, each: u64 little-endian element count, then that many
//   IEEE-754 doubles, 8-byte little-endian.
//
// CSV format (small inputs): one vector per line, comma-separated decimal
// reals; lines starting with '#' are comments.  The header travels in
// comments "# plan_hash=<16 hex>" and "# producer=<text>".
// ============================================================================

enum class VecFormat { BinaryF64LittleEndian, Csv };

struct VectorFileHeader {
    std::uint64_t plan_hash = 0;  // 0 = not tied to a plan
    std::string producer;
};

class VectorWriter {
public:
    VectorWriter(const std::string& path, VecFormat format, VectorFileHeader header);
    ~VectorWriter();
    VectorWriter(const VectorWriter&) = delete;
    VectorWriter& operator=(const VectorWriter&) = delete;

    void write(std::span<const double> v);

    // Flushes and verifies the stream; implied by destruction but only close()
    // reports failures (IoError).
    void close();

private:
    std::ofstream out_;
    std::string path_;
    VecFormat format_;
    bool closed_ = false;
};

class VectorReader {
public:
    // Opens `path`, sniffing the format from the magic bytes (anything that
    // is not the binary magic is treated as CSV).  Header metadata — the
    // binary header block or the leading CSV comment lines — is parsed here,
    // so header() is meaningful before the first record is pulled.
    explicit VectorReader(const std::string& path);

    VecFormat format() const { return format_; }
    const VectorFileHeader& header() const { return header_; }

    // Next record, or nullopt at end of file.  Malformed data throws
    // FileFormatError.
    std::optional<std::vector<double>> next();

private:
    // True when the line holds no record (blank or comment); comment
    // key=value pairs update the header as a side effect.
    bool consume_meta_line(const std::string& line);

    std::ifstream in_;
    std::string path_;
    VecFormat format_ = VecFormat::Csv;
    VectorFileHeader header_;
    std::optional<std::string> pending_;  // first CSV data line, pre-read
};

// Reads every record of a file (convenience for small inputs).
std::vector<std::vector<double>> read_vectors(const std::string& path);

// ----------------------------------------------------------------------------
// Audit report files: a JSON document with stable key order, and the
// histogram as a separate comma-separated file with lines
// "bin_lo,bin_hi,count" (the final overflow bin has bin_hi = inf).
// Wall-clock time is printed by the tool but never serialized, so report
// files are byte-identical across reruns of the same arguments.
// ----------------------------------------------------------------------------

std::string report_to_json(const AuditReport& report);
void report_save(const AuditReport& report, const std::string& path);
void histogram_save_csv(const AuditReport& report, const std::string& path);

// Writes a whole file at once, throwing IoError on any failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace jlgen
