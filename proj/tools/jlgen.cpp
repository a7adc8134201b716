// ============================================================================
// jlgen — command-line surface for the seeded norm-preserving embedding
// generator: build parameter schedules, apply maps to vector files, query
// single matrix entries, and run the statistical audits.
//
// Exit codes: 0 = pass, 1 = audit failure, 2 = usage or configuration error.
// ============================================================================

#include <algorithm>
#include <cstdio>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jlgen/audit.hpp"
#include "jlgen/io.hpp"
#include "jlgen/pipeline.hpp"
#include "jlgen/plan.hpp"

namespace {

using namespace jlgen;

std::string fmt17(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::uint64_t parse_hex_u64(const std::string& hex, const char* what) {
    std::string body = hex;
    if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0) body = body.substr(2);
    if (body.empty() || body.size() > 16 ||
        body.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
        throw InvalidParams(std::string(what) + ": expected up to 16 hex digits, got '" +
                            hex + "'");
    return std::stoull(body, nullptr, 16);
}

// Seed hex must be the minimal encoding of exactly `bits` bits (the final
// digit's slack bits, if any, must be zero).
BitString parse_seed_hex(const std::string& hex, std::uint64_t bits) {
    const BitString raw = BitString::from_hex(hex);
    const std::uint64_t want_digits = (bits + 3) / 4;
    if (raw.size() != want_digits * 4)
        throw BitsTooShort("seed: plan needs " + std::to_string(bits) + " bits = " +
                           std::to_string(want_digits) + " hex digits, got " +
                           std::to_string(raw.size() / 4));
    for (std::uint64_t i = bits; i < raw.size(); ++i)
        if (raw.bit(i))
            throw InvalidParams("seed: trailing pad bits beyond bit " +
                                std::to_string(bits) + " must be zero");
    return raw.slice(0, bits);
}

// Returns (tape, printable hex).  Draws from system entropy when absent.
std::pair<BitString, std::string> obtain_seed(const std::optional<std::string>& hex,
                                              std::uint64_t bits) {
    if (hex) return {parse_seed_hex(*hex, bits), *hex};
    BitString fresh = BitString::random(((bits + 3) / 4) * 4);
    std::vector<std::uint8_t> bytes = fresh.bytes();
    BitString padded(std::move(bytes), ((bits + 3) / 4) * 4);
    // Zero the slack so the printed hex round-trips through the strict parser.
    BitString trimmed = padded.slice(0, bits);
    std::vector<std::uint8_t> b2 = trimmed.bytes();
    BitString out(std::move(b2), ((bits + 3) / 4) * 4);
    return {trimmed, out.to_hex()};
}

std::uint64_t obtain_rng_key(const std::optional<std::string>& hex, std::ostream& log) {
    if (hex) return parse_hex_u64(*hex, "rng-seed");
    const BitString fresh = BitString::random(64);
    const std::uint64_t key = fresh.read_uint(0, 64);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key));
    log << "rng-seed: " << buf << " (drawn from system entropy)\n";
    return key;
}

struct ConstantFlags {
    Constants consts;

    void attach(CLI::App* cmd) {
        cmd->add_option("--regime-c", consts.regime_c,
                        "small-failure regime exponent c (delta >= 1/N^c)");
        cmd->add_option("--sampler-size-c", consts.sampler_size_c,
                        "subset size multiplier");
        cmd->add_option("--sampler-indep-c", consts.sampler_indep_c,
                        "subset independence multiplier");
        cmd->add_option("--tail-size-c", consts.tail_size_c,
                        "tail output-dimension multiplier");
        cmd->add_option("--tail-indep-c", consts.tail_indep_c,
                        "tail independence multiplier");
        cmd->add_option("--seed-bound-c", consts.seed_bound_c,
                        "seed-length budget constant");
        cmd->add_option("--k-schedule", consts.k_schedule,
                        "independence growth: doubling | delayed-doubling")
            ->check(CLI::IsMember({"doubling", "delayed-doubling"}));
    }
};

void print_schedule(const JlPlan& plan, std::ostream& os) {
    os << "input n:        " << plan.n_input << "\n"
       << "ambient N:      " << plan.ambient_dim << "\n"
       << "eps:            " << fmt17(plan.eps) << "\n"
       << "delta:          " << fmt17(plan.delta) << "\n"
       << "stages t:       " << plan.stage_count() << "\n";
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        const StageSpec& st = plan.stages[i];
        os << "  stage " << i << ":      n=" << st.n_stage << " s=" << st.s_stage
           << " sign_k=" << st.sign_k << " sampler_k=" << st.sampler_k
           << " bits=" << (st.sign_bits + st.sampler_bits) << "\n";
    }
    if (plan.tail)
        os << "tail:           s_out=" << plan.tail->s_out << " k=" << plan.tail->k
           << " bits=" << plan.tail->sign_bits << "\n";
    else
        os << "tail:           (none)\n";
    os << "output dim:     " << plan.output_dim << "\n"
       << "seed bits r:    " << plan.seed_length_bits << "\n"
       << "budget bound:   " << fmt17(plan.seed_bound_bits) << " bits\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(plan.hash()));
    os << "plan hash:      " << buf << "\n";
}

int cmd_plan(std::uint64_t n, double eps, double delta, const Constants& consts,
             const std::string& out_path) {
    const JlPlan plan = plan_build(n, eps, delta, consts);
    if (!out_path.empty()) plan_save(plan, out_path);
    print_schedule(plan, std::cout);
    if (!out_path.empty()) std::cout << "plan file:      " << out_path << "\n";
    return 0;
}

int cmd_embed(const std::string& plan_path, const std::optional<std::string>& seed_hex,
              const std::string& in_path, const std::string& out_path,
              const std::string& format, std::uint32_t jobs) {
    const JlPlan plan = plan_load(plan_path);
    auto [seed, printable] = obtain_seed(seed_hex, plan.seed_length_bits);
    if (!seed_hex) std::cout << "seed: " << printable << " (drawn from system entropy)\n";
    const MatrixHandle handle(plan, tape_partition(plan, seed));

    VectorReader reader(in_path);
    if (reader.header().plan_hash != 0 && reader.header().plan_hash != plan.hash())
        throw FileFormatError("input file was produced under a different plan (hash "
                              "mismatch); refusing to mix plans");

    VectorFileHeader header;
    header.plan_hash = plan.hash();
    header.producer = "jlgen embed n=" + std::to_string(plan.n_input) +
                      " out=" + std::to_string(plan.output_dim);
    VectorWriter writer(out_path,
                        format == "csv" ? VecFormat::Csv : VecFormat::BinaryF64LittleEndian,
                        header);

    const std::uint32_t workers =
        jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t count = 0;
    std::vector<std::vector<double>> batch;
    const auto flush = [&]() {
        std::vector<std::future<std::vector<double>>> results;
        results.reserve(batch.size());
        for (const auto& w : batch)
            results.push_back(std::async(std::launch::async,
                                         [&handle, &w]() { return handle.apply(w); }));
        for (auto& r : results) writer.write(r.get());
        count += batch.size();
        batch.clear();
    };
    while (auto v = reader.next()) {
        if (v->size() != plan.n_input)
            throw LengthMismatch("input record has length " + std::to_string(v->size()) +
                                 ", plan expects " + std::to_string(plan.n_input));
        batch.push_back(std::move(*v));
        if (batch.size() >= std::size_t{workers} * 4) flush();
    }
    flush();
    writer.close();
    std::cout << "embedded " << count << " vector(s) -> " << out_path << "\n";
    return 0;
}

int cmd_entry(const std::string& plan_path, const std::optional<std::string>& seed_hex,
              std::uint64_t row, std::uint64_t col) {
    const JlPlan plan = plan_load(plan_path);
    auto [seed, printable] = obtain_seed(seed_hex, plan.seed_length_bits);
    if (!seed_hex) std::cout << "seed: " << printable << " (drawn from system entropy)\n";
    const SeedTape tape = tape_partition(plan, seed);
    EntryQuery q{row, col};
    std::cout << fmt17(entry(plan, tape, q)) << "\n";
    return 0;
}

int cmd_audit(const std::string& plan_path, const std::string& vectors_path,
              std::uint64_t trials, const std::optional<std::string>& rng_hex,
              const std::string& report_path, const std::string& hist_path) {
    const JlPlan plan = plan_load(plan_path);
    const std::uint64_t key = obtain_rng_key(rng_hex, std::cout);

    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;
    if (vectors_path.empty()) {
        vectors = measurement_corpus(plan.n_input);
        labels = corpus_names();
    } else {
        vectors = read_vectors(vectors_path);
        for (std::size_t i = 0; i < vectors.size(); ++i)
            labels.push_back("vector-" + std::to_string(i));
    }
    if (vectors.empty()) throw InvalidParams("audit: no vectors to audit");

    bool pass = true;
    nlohmann::ordered_json bundle;
    bundle["delta"] = plan.delta;
    bundle["trials"] = trials;
    bundle["reports"] = nlohmann::ordered_json::array();
    std::ostringstream hist_csv;
    hist_csv << "vector,bin_lo,bin_hi,count\n";
    double wall_total = 0.0;

    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const AuditReport rep = distortion_audit(plan, vectors[i], trials, key);
        wall_total += rep.wall_time_seconds;
        const bool vec_pass = rep.ci99.lower <= plan.delta;
        pass = pass && vec_pass;
        nlohmann::ordered_json jr = nlohmann::ordered_json::parse(report_to_json(rep));
        jr["vector"] = labels[i];
        jr["pass"] = vec_pass;
        bundle["reports"].push_back(jr);
        for (std::size_t b = 0; b < rep.histogram.size(); ++b) {
            const double lo = static_cast<double>(b) * rep.histogram_bin_width;
            hist_csv << labels[i] << ',' << fmt17(lo) << ',';
            if (b + 1 == rep.histogram.size())
                hist_csv << "inf";
            else
                hist_csv << fmt17(lo + rep.histogram_bin_width);
            hist_csv << ',' << rep.histogram[b] << '\n';
        }
        std::cout << labels[i] << ": failures " << rep.failures << "/" << trials
                  << " rate " << fmt17(rep.failure_rate) << " ci99 ["
                  << fmt17(rep.ci99.lower) << ", " << fmt17(rep.ci99.upper)
                  << "] baseline " << fmt17(rep.baseline_failure_rate) << " -> "
                  << (vec_pass ? "pass" : "FAIL") << "\n";
    }
    bundle["pass"] = pass;
    if (!report_path.empty()) write_text_file(report_path, bundle.dump(2) + "\n");
    if (!hist_path.empty()) write_text_file(hist_path, hist_csv.str());
    std::cout << "wall time: " << fmt17(wall_total) << " s (not serialized)\n"
              << (pass ? "PASS" : "FAIL") << " against delta " << fmt17(plan.delta)
              << "\n";
    return pass ? 0 : 1;
}

int cmd_sampler_audit(std::uint64_t n, std::uint64_t s, std::uint32_t k, double b,
                      double eps, double delta, const std::string& f_path,
                      std::uint64_t cap_bits, bool allow_sampled, std::uint64_t trials,
                      const std::optional<std::string>& rng_hex) {
    const SubsetFamily family = make_family(n, s, k, b, eps, delta);
    std::vector<double> f;
    if (f_path.empty()) {
        // Default test function: a linear ramp over [0, B].
        f.resize(family.n);
        for (std::uint64_t i = 0; i < family.n; ++i)
            f[i] = family.n > 1
                       ? b * static_cast<double>(i) / static_cast<double>(family.n - 1)
                       : 0.0;
    } else {
        const auto rows = read_vectors(f_path);
        if (rows.size() != 1)
            throw InvalidParams("sampler-audit: function file must hold exactly one row");
        f = rows.front();
    }
    SamplerAuditOptions opts;
    opts.enumerate_cap_bits = cap_bits;
    opts.allow_sampled = allow_sampled;
    opts.sample_trials = trials;
    opts.rng_key = obtain_rng_key(rng_hex, std::cout);
    const SamplerAuditResult res = sampler_audit(family, f, opts);
    std::cout << "members checked: " << res.members_checked
              << (res.exhaustive ? " (exhaustive)" : " (sampled)") << "\n"
              << "failure fraction: " << fmt17(res.failure_fraction) << "\n"
              << "delta: " << fmt17(delta) << "\n";
    const bool pass = res.failure_fraction <= delta;
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_regularity_audit(std::uint64_t n, std::uint32_t k, double alpha,
                         const std::string& vec_path, std::uint64_t cap_bits,
                         std::uint64_t trials, const std::optional<std::string>& rng_hex) {
    std::vector<double> w;
    if (vec_path.empty()) {
        w.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
    } else {
        const auto rows = read_vectors(vec_path);
        if (rows.size() != 1)
            throw InvalidParams("regularity-audit: vector file must hold exactly one row");
        w = rows.front();
    }
    RegularityOptions opts;
    opts.enumerate_cap_bits = cap_bits;
    opts.sample_trials = trials;
    opts.rng_key = obtain_rng_key(rng_hex, std::cout);
    const RegularityReport rep = regularity_audit(n, k, w, alpha, opts);
    std::cout << "threshold:   " << fmt17(rep.threshold) << "\n"
              << "bound:       " << fmt17(rep.bound)
              << (rep.bound >= 1.0 ? " (vacuous at this size)" : "") << "\n"
              << "exceed rate: " << fmt17(rep.exceed_rate) << "\n"
              << "seeds:       " << rep.seeds
              << (rep.exhaustive ? " (exhaustive)" : " (sampled)") << "\n";
    const bool pass = rep.bound >= 1.0 || rep.exceed_rate <= rep.bound;
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seeded norm-preserving embedding generator"};
    app.require_subcommand(1);

    // ---- plan ----
    auto* plan_cmd = app.add_subcommand("plan", "build a parameter schedule");
    std::uint64_t n = 0;
    double eps = 0.0, delta = 0.0;
    std::string out_path;
    plan_cmd->add_option("--n", n, "input dimension")->required();
    plan_cmd->add_option("--eps", eps, "distortion bound")->required();
    plan_cmd->add_option("--delta", delta, "failure probability bound")->required();
    plan_cmd->add_option("--out", out_path, "plan file to write");
    ConstantFlags consts;
    consts.attach(plan_cmd);

    // ---- embed ----
    auto* embed_cmd = app.add_subcommand("embed", "apply the map to a vector file");
    std::string plan_path, in_path, embed_out, format = "binary";
    std::optional<std::string> seed_hex;
    std::uint32_t jobs = 0;
    embed_cmd->add_option("--plan", plan_path, "plan file")->required();
    embed_cmd->add_option("--seed", seed_hex, "seed as hex (minimal length for r bits)");
    embed_cmd->add_option("--in", in_path, "input vectors (binary or csv)")->required();
    embed_cmd->add_option("--out", embed_out, "output vectors file")->required();
    embed_cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"binary", "csv"}));
    embed_cmd->add_option("--jobs", jobs, "worker threads (default: hardware)");

    // ---- entry ----
    auto* entry_cmd = app.add_subcommand("entry", "print one matrix entry");
    std::string entry_plan;
    std::optional<std::string> entry_seed;
    std::uint64_t row = 0, col = 0;
    entry_cmd->add_option("--plan", entry_plan, "plan file")->required();
    entry_cmd->add_option("--seed", entry_seed, "seed as hex");
    entry_cmd->add_option("--row", row, "row index (output coordinate)")->required();
    entry_cmd->add_option("--col", col, "column index (input coordinate)")->required();

    // ---- audit ----
    auto* audit_cmd = app.add_subcommand("audit", "measure the distortion guarantee");
    std::string audit_plan, audit_vectors, report_path, hist_path;
    std::uint64_t trials = 10000;
    std::optional<std::string> rng_hex;
    audit_cmd->add_option("--plan", audit_plan, "plan file")->required();
    audit_cmd->add_option("--vectors", audit_vectors,
                          "vector file (default: built-in corpus)");
    audit_cmd->add_option("--trials", trials, "seeds per vector");
    audit_cmd->add_option("--rng-seed", rng_hex, "trial-derivation key as hex");
    audit_cmd->add_option("--report", report_path, "JSON report path");
    audit_cmd->add_option("--histogram", hist_path, "comma-separated histogram path");

    // ---- sampler-audit ----
    auto* samp_cmd =
        app.add_subcommand("sampler-audit", "measure a subset family's averaging error");
    std::uint64_t samp_n = 0, samp_s = 0, samp_cap = 24, samp_trials = 100000;
    std::uint32_t samp_k = 2;
    double samp_b = 1.0, samp_eps = 0.0, samp_delta = 0.0;
    std::string samp_f;
    bool samp_allow_sampled = false;
    std::optional<std::string> samp_rng;
    samp_cmd->add_option("--n", samp_n, "domain size")->required();
    samp_cmd->add_option("--s", samp_s, "slots per member")->required();
    samp_cmd->add_option("--k", samp_k, "family independence");
    samp_cmd->add_option("--b", samp_b, "range bound B");
    samp_cmd->add_option("--eps", samp_eps, "averaging tolerance")->required();
    samp_cmd->add_option("--delta", samp_delta, "allowed failing fraction")->required();
    samp_cmd->add_option("--f", samp_f, "function values file (one row, length n)");
    samp_cmd->add_option("--cap-bits", samp_cap, "exhaustive enumeration cap");
    samp_cmd->add_flag("--sample", samp_allow_sampled, "sample past the cap");
    samp_cmd->add_option("--trials", samp_trials, "sampled member count");
    samp_cmd->add_option("--rng-seed", samp_rng, "sampling key as hex");

    // ---- regularity-audit ----
    auto* reg_cmd = app.add_subcommand("regularity-audit",
                                       "measure spreading after the sign-flip rotation");
    std::uint64_t reg_n = 0, reg_cap = 24, reg_trials = 20000;
    std::uint32_t reg_k = 4;
    double reg_alpha = 0.25;
    std::string reg_vec;
    std::optional<std::string> reg_rng;
    reg_cmd->add_option("--n", reg_n, "dimension (power of two)")->required();
    reg_cmd->add_option("--k", reg_k, "sign independence");
    reg_cmd->add_option("--alpha", reg_alpha, "spreading exponent in (0, 1/2)");
    reg_cmd->add_option("--vector", reg_vec, "vector file (one row; default uniform)");
    reg_cmd->add_option("--cap-bits", reg_cap, "exhaustive enumeration cap");
    reg_cmd->add_option("--trials", reg_trials, "sampled seed count");
    reg_cmd->add_option("--rng-seed", reg_rng, "sampling key as hex");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (plan_cmd->parsed())
            return cmd_plan(n, eps, delta, consts.consts, out_path);
        if (embed_cmd->parsed())
            return cmd_embed(plan_path, seed_hex, in_path, embed_out, format, jobs);
        if (entry_cmd->parsed()) return cmd_entry(entry_plan, entry_seed, row, col);
        if (audit_cmd->parsed())
            return cmd_audit(audit_plan, audit_vectors, trials, rng_hex, report_path,
                             hist_path);
        if (samp_cmd->parsed())
            return cmd_sampler_audit(samp_n, samp_s, samp_k, samp_b, samp_eps, samp_delta,
                                     samp_f, samp_cap, samp_allow_sampled, samp_trials,
                                     samp_rng);
        if (reg_cmd->parsed())
            return cmd_regularity_audit(reg_n, reg_k, reg_alpha, reg_vec, reg_cap,
                                        reg_trials, reg_rng);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
