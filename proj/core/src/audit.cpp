#include "jlgen/audit.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "jlgen/gf2.hpp"
#include "jlgen/hadamard.hpp"
#include "jlgen/pipeline.hpp"

namespace jlgen {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

std::vector<double> unit_copy(std::span<const double> w, const char* who) {
    const double n2 = norm2(w);
    if (!(n2 > 0.0))
        throw InvalidParams(std::string(who) + ": input vector has zero norm");
    std::vector<double> out(w.begin(), w.end());
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : out) x *= inv;
    return out;
}

// eps as an exact dyadic rational num / 2^shift with num odd (doubles are
// dyadic, so this is lossless).
struct Dyadic {
    unsigned long long num;
    unsigned shift;
};

Dyadic dyadic_of(double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw InvalidParams("exhaustive_audit: eps must lie in (0, 1)");
    int expo = 0;
    const double frac = std::frexp(eps, &expo);       // eps = frac * 2^expo
    auto num = static_cast<unsigned long long>(std::ldexp(frac, 53));  // exact
    unsigned shift = static_cast<unsigned>(53 - expo);
    while ((num & 1ull) == 0 && shift > 0) {
        num >>= 1;
        --shift;
    }
    return {num, shift};
}

// Unnormalized in-place Walsh butterflies over integers.
void wht_int(std::vector<long long>& v) {
    const std::size_t n = v.size();
    for (std::size_t half = 1; half < n; half <<= 1) {
        for (std::size_t block = 0; block < n; block += half << 1) {
            for (std::size_t i = block; i < block + half; ++i) {
                const long long a = v[i];
                const long long b = v[i + half];
                v[i] = a + b;
                v[i + half] = a - b;
            }
        }
    }
}

using u128 = unsigned __int128;

// Strict comparison |q - scaled| > eps * scaled in exact integer arithmetic,
// where the true squared norm is q / denom and scaled = denom * w_norm2.
bool distortion_exceeds(u128 q, u128 scaled, const Dyadic& eps) {
    const u128 diff = (q > scaled) ? (q - scaled) : (scaled - q);
    if (diff == 0) return false;
    // diff * 2^shift > num * scaled, guarding the shift against overflow.
    unsigned hi = 0;
    u128 probe = diff;
    while (probe >> 64) {
        probe >>= 64;
        hi += 64;
    }
    while (probe) {
        probe >>= 1;
        ++hi;
    }
    if (hi + eps.shift > 126)
        throw InvalidParams("exhaustive_audit: eps too extreme for exact comparison");
    return (diff << eps.shift) > static_cast<u128>(eps.num) * scaled;
}

std::string summarize(const JlPlan& plan) {
    std::ostringstream os;
    os << "n=" << plan.n_input << " ambient=" << plan.ambient_dim
       << " eps=" << plan.eps << " delta=" << plan.delta
       << " stages=" << plan.stage_count()
       << " out=" << plan.output_dim
       << " seed_bits=" << plan.seed_length_bits
       << " corpus=" << kCorpusVersion;
    return os.str();
}

}  // namespace

WilsonInterval wilson99(std::uint64_t failures, std::uint64_t trials) {
    if (trials == 0) throw InvalidParams("wilson99: trials must be positive");
    if (failures > trials) throw InvalidParams("wilson99: failures exceed trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(failures) / n;
    const double z2 = kZ99 * kZ99;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half =
        kZ99 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval ci;
    // In exact arithmetic the interval always brackets p; rounding inside the
    // square root can pull an endpoint past it at p = 0 or p = 1, so restore
    // the containment before clamping to [0, 1].
    ci.lower = std::max(0.0, std::min(center - half, p));
    ci.upper = std::min(1.0, std::max(center + half, p));
    return ci;
}

std::vector<double> baseline_apply(std::uint64_t s, const BitString& seed,
                                   std::span<const double> w) {
    if (s == 0) throw InvalidParams("baseline_apply: s must be >= 1");
    const std::uint64_t n = w.size();
    if (seed.size() < s * n)
        throw BitsTooShort("baseline_apply: need " + std::to_string(s * n) +
                           " bits, got " + std::to_string(seed.size()));
    const std::vector<std::uint8_t>& bytes = seed.bytes();
    const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(s));
    std::vector<double> out(s);
    for (std::uint64_t r = 0; r < s; ++r) {
        double acc = 0.0;
        const std::uint64_t base = r * n;
        for (std::uint64_t j = 0; j < n; ++j) {
            const std::uint64_t b = base + j;
            const bool neg = (bytes[b >> 3] >> (7 - (b & 7))) & 1u;
            acc += neg ? -w[j] : w[j];
        }
        out[r] = inv_sqrt_s * acc;
    }
    return out;
}

AuditReport distortion_audit(const JlPlan& plan, std::span<const double> w,
                             std::uint64_t trials, std::uint64_t rng_key) {
    if (trials < 1000)
        throw InvalidParams("distortion_audit: need >= 1000 trials for a meaningful "
                            "confidence interval");
    if (w.size() != plan.n_input)
        throw LengthMismatch("distortion_audit: vector length " +
                             std::to_string(w.size()) + " != plan n_input " +
                             std::to_string(plan.n_input));
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> unit = unit_copy(w, "distortion_audit");

    AuditReport report;
    report.params = summarize(plan);
    report.trials = trials;
    report.histogram.assign(kHistogramBins + 1, 0);
    report.histogram_bin_width = 2.0 * plan.eps / static_cast<double>(kHistogramBins);

    const bool track_linf = !plan.stages.empty();
    const double linf_threshold =
        track_linf ? std::pow(static_cast<double>(plan.stages.front().n_stage), -0.375)
                   : 0.0;
    std::uint64_t linf_exceed = 0;

    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const SeedTape tape =
            tape_partition(plan, derive_bits(rng_key, 0, trial, plan.seed_length_bits));
        // Run the pipeline piecewise so the first stage's rotated vector is
        // observable for the spreading statistic.
        std::vector<double> v = pad_input(unit, plan);
        for (std::size_t i = 0; i < plan.stages.size(); ++i) {
            const StageSpec& st = plan.stages[i];
            v.resize(st.n_stage, 0.0);
            const SignTape signs = make_sign_tape(st.field_log, st.n_stage, tape.bits,
                                                  st.sign_offset, st.sign_k);
            PaddedVector pv;
            pv.data = std::move(v);
            pv.logical_len = pv.data.size();
            pv = regularize(std::move(pv), signs);
            if (i == 0 && track_linf) {
                double linf = 0.0;
                for (double x : pv.data) linf = std::max(linf, std::abs(x));
                if (linf > linf_threshold) ++linf_exceed;
            }
            const SubsetFamily fam = make_family(st.n_stage, st.s_stage, st.sampler_k);
            const BitString idx = tape.bits.slice(st.sampler_offset, st.sampler_bits);
            const std::vector<std::uint64_t> subset = subset_at(fam, idx);
            const double scale = std::sqrt(static_cast<double>(st.n_stage) /
                                           static_cast<double>(st.s_stage));
            std::vector<double> next(st.s_stage);
            for (std::uint64_t r = 0; r < st.s_stage; ++r)
                next[r] = scale * pv.data[subset[r]];
            v = std::move(next);
        }
        if (plan.tail) v = cw_apply(*plan.tail, tape, v);

        const double dist = std::abs(norm2(v) - 1.0);
        if (dist > plan.eps) ++report.failures;
        const auto bin = static_cast<std::size_t>(dist / report.histogram_bin_width);
        report.histogram[std::min(bin, kHistogramBins)] += 1;
    }
    report.failure_rate =
        static_cast<double>(report.failures) / static_cast<double>(trials);
    report.ci99 = wilson99(report.failures, trials);
    report.linf_exceed_rate =
        track_linf ? static_cast<double>(linf_exceed) / static_cast<double>(trials) : -1.0;

    // Matched-dimension i.i.d. baseline on the same vector.
    const std::uint64_t baseline_bits = plan.output_dim * unit.size();
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const BitString seed = derive_bits(rng_key, 1, trial, baseline_bits);
        const std::vector<double> y = baseline_apply(plan.output_dim, seed, unit);
        if (std::abs(norm2(y) - 1.0) > plan.eps) ++report.baseline_failures;
    }
    report.baseline_failure_rate =
        static_cast<double>(report.baseline_failures) / static_cast<double>(trials);
    report.baseline_ci99 = wilson99(report.baseline_failures, trials);

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RegularityReport regularity_audit(std::uint64_t n, std::uint32_t k,
                                  std::span<const double> w, double alpha,
                                  const RegularityOptions& opts) {
    if (n < 2 || !std::has_single_bit(n))
        throw NonPowerOfTwoLength("regularity_audit: n must be a power of two >= 2");
    if (!(alpha > 0.0) || !(alpha < 0.5))
        throw InvalidParams("regularity_audit: alpha must lie in (0, 1/2)");
    if (k < 1) throw InvalidParams("regularity_audit: k must be >= 1");
    if (w.size() > n)
        throw LengthMismatch("regularity_audit: vector longer than n");

    std::vector<double> unit = unit_copy(w, "regularity_audit");
    unit.resize(n, 0.0);

    const auto field_log = static_cast<unsigned>(std::countr_zero(n));
    const std::uint64_t seed_bits = std::uint64_t{k} * field_log;

    RegularityReport report;
    report.threshold = std::pow(static_cast<double>(n), -(0.5 - alpha));
    report.bound = std::pow(static_cast<double>(k), k / 2.0) /
                   std::pow(static_cast<double>(n), alpha * k - 1.0);

    const GfField& field = GfField::of(field_log);
    std::vector<std::uint64_t> coeffs(k);
    std::vector<double> scratch(n);

    const auto exceeds = [&]() {
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint64_t v = field.eval_poly(coeffs, i);
            scratch[i] = (v & 1u) ? -unit[i] : unit[i];
        }
        fwht_inplace(scratch);
        for (double x : scratch)
            if (std::abs(x) > report.threshold) return true;
        return false;
    };

    if (seed_bits <= std::min<std::uint64_t>(opts.enumerate_cap_bits, 48)) {
        const std::uint64_t total = std::uint64_t{1} << seed_bits;
        std::uint64_t count = 0;
        const std::uint64_t mask = (std::uint64_t{1} << field_log) - 1;
        for (std::uint64_t m = 0; m < total; ++m) {
            for (std::uint32_t d = 0; d < k; ++d)
                coeffs[d] = (m >> (std::uint64_t{k - 1 - d} * field_log)) & mask;
            if (exceeds()) ++count;
        }
        report.exceed_rate = std::ldexp(static_cast<double>(count),
                                        -static_cast<int>(seed_bits));
        report.exhaustive = true;
        report.seeds = total;
        return report;
    }

    // Sampled seeds (stream 3).
    std::uint64_t count = 0;
    for (std::uint64_t trial = 0; trial < opts.sample_trials; ++trial) {
        const BitString bits = derive_bits(opts.rng_key, 3, trial, seed_bits);
        for (std::uint32_t d = 0; d < k; ++d)
            coeffs[d] = bits.read_uint(std::uint64_t{d} * field_log, field_log);
        if (exceeds()) ++count;
    }
    report.exceed_rate =
        static_cast<double>(count) / static_cast<double>(opts.sample_trials);
    report.exhaustive = false;
    report.seeds = opts.sample_trials;
    return report;
}

ExhaustiveReport exhaustive_audit(const JlPlan& plan, std::span<const long long> w) {
    if (plan.seed_length_bits > 24)
        throw SeedSpaceTooLarge("exhaustive_audit: seed space 2^" +
                                std::to_string(plan.seed_length_bits) +
                                " exceeds the enumeration cap 2^24");
    if (w.size() != plan.n_input)
        throw LengthMismatch("exhaustive_audit: vector length " + std::to_string(w.size()) +
                             " != plan n_input " + std::to_string(plan.n_input));

    const Dyadic eps = dyadic_of(plan.eps);
    u128 w_norm2 = 0;
    for (long long x : w) w_norm2 += static_cast<u128>(static_cast<long long>(x) * x);

    // Product of the per-component scale denominators: each stage map is
    // (1/sqrt(s_stage)) * (integer matrix), the tail is (1/sqrt(s_out)) *
    // (integer matrix), so ||output||^2 * denom is an exact integer.
    u128 denom = 1;
    for (const StageSpec& st : plan.stages) denom *= st.s_stage;
    if (plan.tail) denom *= plan.tail->s_out;
    const u128 scaled = denom * w_norm2;

    const std::uint64_t total = std::uint64_t{1} << plan.seed_length_bits;
    ExhaustiveReport report;
    report.tapes = total;

    u128 mean_accum = 0;

    // Factored walk for a single stage with no tail: the seed splits into
    // independent sign and subset-index halves, so the rotated integer
    // vector is computed once per sign seed and reused across all members.
    if (plan.stages.size() == 1 && !plan.tail) {
        const StageSpec& st = plan.stages.front();
        const std::uint64_t sign_space = std::uint64_t{1} << st.sign_bits;
        const std::uint64_t samp_space = std::uint64_t{1} << st.sampler_bits;
        const SubsetFamily fam = make_family(st.n_stage, st.s_stage, st.sampler_k);

        std::vector<std::vector<std::uint64_t>> members(samp_space);
        for (std::uint64_t m = 0; m < samp_space; ++m)
            members[m] = subset_at(fam, BitString::from_uint(
                                            m, static_cast<unsigned>(st.sampler_bits)));

        std::vector<long long> base(w.begin(), w.end());
        base.resize(st.n_stage, 0);
        std::vector<long long> z(st.n_stage);
        for (std::uint64_t sg = 0; sg < sign_space; ++sg) {
            const SignTape signs =
                make_sign_tape(st.field_log, st.n_stage,
                               BitString::from_uint(sg, static_cast<unsigned>(st.sign_bits)),
                               0, st.sign_k);
            const std::vector<std::int8_t> x = sign_vector(signs);
            for (std::uint64_t i = 0; i < st.n_stage; ++i)
                z[i] = (x[i] < 0) ? -base[i] : base[i];
            wht_int(z);
            std::vector<u128> z2(st.n_stage);
            for (std::uint64_t i = 0; i < st.n_stage; ++i)
                z2[i] = static_cast<u128>(z[i] * z[i]);
            for (std::uint64_t m = 0; m < samp_space; ++m) {
                u128 q = 0;
                for (std::uint64_t slot : members[m]) q += z2[slot];
                mean_accum += q;
                if (distortion_exceeds(q, scaled, eps)) ++report.failures;
            }
        }
    } else {
        // Generic walk: run the integer pipeline for every tape.
        for (std::uint64_t seed = 0; seed < total; ++seed) {
            const SeedTape tape = tape_partition(
                plan, BitString::from_uint(seed,
                                           static_cast<unsigned>(plan.seed_length_bits)));
            std::vector<long long> v(w.begin(), w.end());
            v.resize(plan.ambient_dim, 0);
            for (const StageSpec& st : plan.stages) {
                v.resize(st.n_stage, 0);
                const SignTape signs = make_sign_tape(st.field_log, st.n_stage, tape.bits,
                                                      st.sign_offset, st.sign_k);
                const std::vector<std::int8_t> x = sign_vector(signs);
                for (std::uint64_t i = 0; i < st.n_stage; ++i)
                    if (x[i] < 0) v[i] = -v[i];
                wht_int(v);
                const SubsetFamily fam = make_family(st.n_stage, st.s_stage, st.sampler_k);
                const BitString idx = tape.bits.slice(st.sampler_offset, st.sampler_bits);
                const std::vector<std::uint64_t> subset = subset_at(fam, idx);
                std::vector<long long> next(st.s_stage);
                for (std::uint64_t r = 0; r < st.s_stage; ++r) next[r] = v[subset[r]];
                v = std::move(next);
            }
            if (plan.tail) {
                const TailSpec& tail = *plan.tail;
                const SignTape signs = make_sign_tape(tail.field_log,
                                                      tail.s_out * tail.m_in, tape.bits,
                                                      tail.sign_offset, tail.k);
                std::vector<long long> out(tail.s_out, 0);
                for (std::uint64_t r = 0; r < tail.s_out; ++r) {
                    long long acc = 0;
                    for (std::uint64_t j = 0; j < tail.m_in; ++j) {
                        const int sg = sign_at(signs, r * tail.m_in + j);
                        acc += (sg < 0) ? -v[j] : v[j];
                    }
                    out[r] = acc;
                }
                v = std::move(out);
            }
            u128 q = 0;
            for (long long x : v) q += static_cast<u128>(x * x);
            mean_accum += q;
            if (distortion_exceeds(q, scaled, eps)) ++report.failures;
        }
    }

    report.mean_exact = (mean_accum == static_cast<u128>(total) * scaled);
    report.failure_probability =
        std::ldexp(static_cast<double>(report.failures),
                   -static_cast<int>(plan.seed_length_bits));
    return report;
}

std::vector<std::string> corpus_names() {
    return {"basis", "two-point", "uniform", "geometric", "alternating",
            "rotation-concentrator"};
}

std::vector<std::vector<long long>> measurement_corpus_integer(std::uint64_t n) {
    if (n < 8 || n > 32 || !std::has_single_bit(n))
        throw InvalidParams("measurement_corpus_integer: n must be a power of two in "
                            "[8, 32] (exact corpus targets tiny instances)");
    std::vector<std::vector<long long>> out;
    // basis: e_1
    std::vector<long long> v(n, 0);
    v[1] = 1;
    out.push_back(v);
    // two-point mass
    std::fill(v.begin(), v.end(), 0);
    v[0] = 1;
    v[1] = 1;
    out.push_back(v);
    // uniform spread
    std::fill(v.begin(), v.end(), 1);
    out.push_back(v);
    // geometric decay: 2^(n-1), ..., 2, 1 (halving left to right)
    for (std::uint64_t i = 0; i < n; ++i)
        v[i] = 1ll << (n - 1 - i);
    out.push_back(v);
    // alternating signs
    for (std::uint64_t i = 0; i < n; ++i) v[i] = (i & 1u) ? -1 : 1;
    out.push_back(v);
    // rotation concentrator: the sign pattern of Walsh row 5; the rotation
    // sends it (up to sign flips) to a single coordinate, the extreme case
    // for the infinity norm.  ||H v||_inf = ||v||_2 exactly.
    for (std::uint64_t i = 0; i < n; ++i)
        v[i] = (std::popcount(std::uint64_t{5} & i) & 1) ? -1 : 1;
    out.push_back(v);
    return out;
}

std::vector<std::vector<double>> measurement_corpus(std::uint64_t n) {
    if (n < 8 || !std::has_single_bit(n))
        throw InvalidParams("measurement_corpus: n must be a power of two >= 8");
    std::vector<std::vector<double>> out;
    std::vector<double> v(n, 0.0);
    // basis: e_1
    v[1] = 1.0;
    out.push_back(v);
    // two-point mass
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0 / std::sqrt(2.0);
    v[1] = 1.0 / std::sqrt(2.0);
    out.push_back(v);
    // uniform spread
    const double u = 1.0 / std::sqrt(static_cast<double>(n));
    std::fill(v.begin(), v.end(), u);
    out.push_back(v);
    // geometric decay with ratio 1/2
    {
        double x = 1.0;
        double acc = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            v[i] = x;
            acc += x * x;
            x *= 0.5;
        }
        const double inv = 1.0 / std::sqrt(acc);
        for (std::uint64_t i = 0; i < n; ++i) v[i] *= inv;
    }
    out.push_back(v);
    // alternating signs
    for (std::uint64_t i = 0; i < n; ++i) v[i] = (i & 1u) ? -u : u;
    out.push_back(v);
    // rotation concentrator (see the integer corpus note)
    for (std::uint64_t i = 0; i < n; ++i)
        v[i] = (std::popcount(std::uint64_t{5} & i) & 1) ? -u : u;
    out.push_back(v);
    return out;
}

}  // namespace jlgen
