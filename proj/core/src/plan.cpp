#include "jlgen/plan.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace jlgen {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint32_t kMaxStages = 64;

// Largest ambient dimension the planner will schedule (the transform path
// allocates vectors of this length).
constexpr std::uint64_t kMaxAmbient = std::uint64_t{1} << 40;

struct BudgetSplit {
    double eps_each;
    double delta_each;
};

// Even split of the end-to-end budget over `components` factors: the
// per-component distortion solves (1 + eps_each)^components = 1 + eps
// exactly, and (1 - eps_each)^components >= 1 - eps, so the composition of
// `components` maps each within 1 +- eps_each stays within 1 +- eps; the
// failure budget splits additively (union bound).
BudgetSplit split_budget(double eps, double delta, std::uint32_t components) {
    return {std::pow(1.0 + eps, 1.0 / components) - 1.0,
            delta / components};
}

// Subset count for one stage at dimension n: the regularized vector is
// subsampled with range bound B = n^(1/4), so B^2 = sqrt(n).
std::uint64_t stage_subset_size(std::uint64_t n, double eps_b, double delta_b,
                                double size_c) {
    const double value =
        size_c * std::sqrt(static_cast<double>(n)) * std::log(1.0 / delta_b) /
        (eps_b * eps_b);
    return static_cast<std::uint64_t>(std::ceil(value));
}

std::uint32_t subset_indep(double delta_b, double indep_c) {
    const double value = indep_c * std::log(1.0 / delta_b);
    return std::max<std::uint32_t>(2, static_cast<std::uint32_t>(std::ceil(value)));
}

// Sign independence for stage i: the base level k0 grows geometrically (or
// with a one-stage lag), capped at n^(1/8), kept even and at least 4.
std::uint32_t stage_sign_k(std::uint64_t k0, std::uint32_t i, std::uint64_t n,
                           const std::string& schedule) {
    unsigned shift = (schedule == "delayed-doubling") ? (i == 0 ? 0 : i - 1) : i;
    if (shift > 40) shift = 40;
    const std::uint64_t raw = k0 << shift;
    const auto cap =
        static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(n), 0.125)));
    std::uint64_t k = std::min(raw, cap);
    k -= k & 1u;
    k = std::max<std::uint64_t>(4, k);
    return static_cast<std::uint32_t>(k);
}

// How many consecutive stages at least halve their dimension under a fixed
// per-component budget, starting from dimension N.
std::uint32_t halving_count(std::uint64_t N, double eps_b, double delta_b,
                            double size_c) {
    std::uint32_t count = 0;
    std::uint64_t n = N;
    while (count < kMaxStages) {
        const std::uint64_t s = stage_subset_size(n, eps_b, delta_b, size_c);
        if (s > n / 2) break;
        ++count;
        n = std::bit_ceil(s);
    }
    return count;
}

unsigned log2_of_pow2(std::uint64_t n) {
    return static_cast<unsigned>(std::countr_zero(n));
}

void validate_constants(const Constants& c) {
    if (c.regime_c <= 0 || c.sampler_size_c <= 0 || c.sampler_indep_c <= 0 ||
        c.tail_size_c <= 0 || c.tail_indep_c <= 0 || c.seed_bound_c <= 0)
        throw InvalidParams("plan constants must all be strictly positive");
    if (c.k_schedule != "doubling" && c.k_schedule != "delayed-doubling")
        throw InvalidParams("k_schedule must be \"doubling\" or \"delayed-doubling\", got \"" +
                            c.k_schedule + "\"");
}

TailSpec make_tail(std::uint64_t m_in, double eps_b, double delta_b,
                   const Constants& consts, std::uint64_t offset) {
    TailSpec tail;
    tail.m_in = m_in;
    const double log_term = std::log(1.0 / delta_b);
    tail.s_out = static_cast<std::uint64_t>(
        std::ceil(consts.tail_size_c * log_term / (eps_b * eps_b)));
    if (tail.s_out < 1) tail.s_out = 1;
    // Floor the independence at 4: the tail's concentration argument needs
    // exact fourth moments, and a sign polynomial of degree <= 2 over
    // GF(2^w) is additive (x and x^2 both commute with xor), which turns
    // every aligned index block into a single Walsh character and destroys
    // concentration.  Degree 3 is the first non-additive monomial.
    tail.k = std::max<std::uint32_t>(
        4, static_cast<std::uint32_t>(std::ceil(consts.tail_indep_c * log_term)));
    if (m_in != 0 && tail.s_out > (std::uint64_t{1} << 62) / m_in)
        throw InvalidParams("tail sign domain would exceed 2^62 entries");
    tail.field_log = log2_of_pow2(std::bit_ceil(tail.s_out * m_in));
    if (tail.field_log < 1) tail.field_log = 1;
    tail.eps_tail = eps_b;
    tail.delta_tail = delta_b;
    tail.sign_offset = offset;
    tail.sign_bits = std::uint64_t{tail.k} * tail.field_log;
    return tail;
}

ordered_json plan_to_doc(const JlPlan& plan) {
    ordered_json doc;
    doc["format"] = "jlgen-plan";
    doc["version"] = 1;
    doc["n_input"] = plan.n_input;
    doc["eps"] = plan.eps;
    doc["delta"] = plan.delta;
    ordered_json consts;
    consts["regime_c"] = plan.consts.regime_c;
    consts["sampler_size_c"] = plan.consts.sampler_size_c;
    consts["sampler_indep_c"] = plan.consts.sampler_indep_c;
    consts["tail_size_c"] = plan.consts.tail_size_c;
    consts["tail_indep_c"] = plan.consts.tail_indep_c;
    consts["seed_bound_c"] = plan.consts.seed_bound_c;
    consts["k_schedule"] = plan.consts.k_schedule;
    doc["constants"] = consts;
    doc["ambient_dim"] = plan.ambient_dim;
    doc["split_eps"] = plan.split_eps;
    doc["split_delta"] = plan.split_delta;
    doc["stage_count"] = plan.stage_count();
    ordered_json stages = ordered_json::array();
    for (const StageSpec& st : plan.stages) {
        ordered_json s;
        s["n_stage"] = st.n_stage;
        s["s_stage"] = st.s_stage;
        s["sign_k"] = st.sign_k;
        s["field_log"] = st.field_log;
        s["sampler_k"] = st.sampler_k;
        s["sampler_field_log"] = st.sampler_field_log;
        s["eps_stage"] = st.eps_stage;
        s["delta_stage"] = st.delta_stage;
        s["sign_offset"] = st.sign_offset;
        s["sign_bits"] = st.sign_bits;
        s["sampler_offset"] = st.sampler_offset;
        s["sampler_bits"] = st.sampler_bits;
        stages.push_back(std::move(s));
    }
    doc["stages"] = std::move(stages);
    if (plan.tail) {
        ordered_json t;
        t["m_in"] = plan.tail->m_in;
        t["s_out"] = plan.tail->s_out;
        t["k"] = plan.tail->k;
        t["field_log"] = plan.tail->field_log;
        t["eps_tail"] = plan.tail->eps_tail;
        t["delta_tail"] = plan.tail->delta_tail;
        t["sign_offset"] = plan.tail->sign_offset;
        t["sign_bits"] = plan.tail->sign_bits;
        doc["tail"] = std::move(t);
    } else {
        doc["tail"] = nullptr;
    }
    doc["output_dim"] = plan.output_dim;
    doc["seed_length_bits"] = plan.seed_length_bits;
    doc["seed_bound_bits"] = plan.seed_bound_bits;
    doc["schedule_rule_value"] = plan.schedule_rule_value;
    return doc;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

// Shared finishing pass: totals seed bits, evaluates the documented
// seed-length budget and the asymptotic stage-count reference value.
void finalize_plan(JlPlan& plan) {
    std::uint64_t bits = 0;
    for (const StageSpec& st : plan.stages) bits += st.sign_bits + st.sampler_bits;
    if (plan.tail) bits += plan.tail->sign_bits;
    plan.seed_length_bits = bits;

    const double ratio = static_cast<double>(plan.ambient_dim) / plan.delta;
    const double l1 = std::log2(ratio);
    const double l2 = std::log2(l1 / plan.eps);
    plan.seed_bound_bits = plan.consts.seed_bound_c * l1 * l2;

    const double logN = std::log2(static_cast<double>(plan.ambient_dim));
    plan.schedule_rule_value =
        (logN > 1.0) ? logN / (8.0 * std::log2(logN)) : 0.0;
}

}  // namespace

std::uint64_t JlPlan::hash() const {
    return fnv1a64(plan_to_doc(*this).dump());
}

JlPlan plan_build(std::uint64_t n, double eps, double delta, const Constants& consts) {
    if (n < 1) throw InvalidParams("plan_build: n must be >= 1");
    if (!(eps > 0.0) || !(eps < 1.0))
        throw InvalidParams("plan_build: eps must lie in (0, 1)");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw InvalidParams("plan_build: delta must lie in (0, 1)");
    validate_constants(consts);

    JlPlan plan;
    plan.n_input = n;
    plan.eps = eps;
    plan.delta = delta;
    plan.consts = consts;

    // Ambient dimension: pad past both the input length and the failure
    // budget so that 1/ambient_dim <= delta, then round to a power of two.
    const double inv_delta = std::ceil(1.0 / delta);
    std::uint64_t floor_dim = std::max<std::uint64_t>(n, 2);
    if (inv_delta > static_cast<double>(floor_dim)) {
        if (inv_delta > static_cast<double>(kMaxAmbient))
            throw InvalidParams("plan_build: delta so small that the padded dimension "
                                "would exceed 2^40");
        floor_dim = static_cast<std::uint64_t>(inv_delta);
    }
    if (floor_dim > kMaxAmbient)
        throw InvalidParams("plan_build: padded dimension would exceed 2^40");
    const std::uint64_t N = std::bit_ceil(floor_dim);
    plan.ambient_dim = N;

    // Effective failure-regime exponent: delta >= 1/N^c uses c as given;
    // smaller delta raises the exponent to log(1/delta)/log N.
    double c_eff = consts.regime_c;
    if (delta < std::pow(static_cast<double>(N), -consts.regime_c))
        c_eff = std::log(1.0 / delta) / std::log(static_cast<double>(N));
    std::uint64_t k0 = static_cast<std::uint64_t>(std::ceil(16.0 * (c_eff + 1.0)));
    k0 += k0 & 1u;

    // Stage count: the largest t such that, under the budget split into
    // t + 1 components, the first t stages each at least halve their
    // dimension.  The count is nonincreasing in t while the requirement
    // grows, so the maximum is well-defined.
    std::uint32_t t = 0;
    for (std::uint32_t cand = 0; cand <= kMaxStages; ++cand) {
        const BudgetSplit b = split_budget(eps, delta, cand + 1);
        if (halving_count(N, b.eps_each, b.delta_each, consts.sampler_size_c) >= cand)
            t = cand;
    }

    const BudgetSplit b = split_budget(eps, delta, t + 1);
    plan.split_eps = b.eps_each;
    plan.split_delta = b.delta_each;

    std::uint64_t offset = 0;
    std::uint64_t dim = N;
    for (std::uint32_t i = 0; i < t; ++i) {
        StageSpec st;
        st.n_stage = dim;
        st.field_log = log2_of_pow2(dim);
        st.sign_k = stage_sign_k(k0, i, dim, consts.k_schedule);
        st.s_stage = stage_subset_size(dim, b.eps_each, b.delta_each, consts.sampler_size_c);
        if (st.s_stage > dim / 2)
            throw Error("plan_build: stage " + std::to_string(i) +
                        " fails the halving rule; stage-count selection is inconsistent");
        st.sampler_k = subset_indep(b.delta_each, consts.sampler_indep_c);
        st.sampler_field_log = st.field_log;
        st.eps_stage = b.eps_each;
        st.delta_stage = b.delta_each;
        st.sign_offset = offset;
        st.sign_bits = std::uint64_t{st.sign_k} * st.field_log;
        offset += st.sign_bits;
        st.sampler_offset = offset;
        st.sampler_bits = std::uint64_t{st.sampler_k} * st.sampler_field_log;
        offset += st.sampler_bits;
        dim = std::bit_ceil(st.s_stage);
        plan.stages.push_back(st);
    }

    const std::uint64_t m_in = plan.stages.empty() ? N : plan.stages.back().s_stage;
    plan.tail = make_tail(m_in, b.eps_each, b.delta_each, consts, offset);
    plan.output_dim = plan.tail->s_out;

    finalize_plan(plan);
    return plan;
}

JlPlan plan_manual(std::uint64_t n_input, double eps, double delta,
                   const std::vector<ManualStage>& stages,
                   const std::optional<ManualTail>& tail,
                   const Constants& consts) {
    if (n_input < 1) throw InvalidParams("plan_manual: n_input must be >= 1");
    if (!(eps > 0.0) || !(eps < 1.0) || !(delta > 0.0) || !(delta < 1.0))
        throw InvalidParams("plan_manual: eps and delta must lie in (0, 1)");
    validate_constants(consts);
    if (stages.empty() && !tail)
        throw InvalidParams("plan_manual: a plan needs at least one component");

    JlPlan plan;
    plan.n_input = n_input;
    plan.eps = eps;
    plan.delta = delta;
    plan.consts = consts;

    const auto components = static_cast<std::uint32_t>(stages.size() + (tail ? 1 : 0));
    const BudgetSplit b = split_budget(eps, delta, components);
    plan.split_eps = b.eps_each;
    plan.split_delta = b.delta_each;

    std::uint64_t expect_dim = std::bit_ceil(std::max<std::uint64_t>(n_input, 2));
    plan.ambient_dim = stages.empty() ? expect_dim : stages.front().n_stage;
    if (plan.ambient_dim < n_input)
        throw InvalidParams("plan_manual: first stage dimension smaller than the input");
    if (!std::has_single_bit(plan.ambient_dim))
        throw InvalidParams("plan_manual: stage dimensions must be powers of two");

    std::uint64_t offset = 0;
    std::uint64_t dim = plan.ambient_dim;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const ManualStage& m = stages[i];
        if (m.n_stage != dim && i > 0)
            throw InvalidParams("plan_manual: stage " + std::to_string(i) +
                                " dimension " + std::to_string(m.n_stage) +
                                " does not continue the previous stage (expected " +
                                std::to_string(dim) + ")");
        if (!std::has_single_bit(m.n_stage))
            throw InvalidParams("plan_manual: stage dimensions must be powers of two");
        if (m.s_stage < 1 || m.s_stage > m.n_stage)
            throw InvalidParams("plan_manual: stage subset size must be in [1, n_stage]");
        if (m.sign_k < 4 || (m.sign_k & 1u))
            throw InvalidParams("plan_manual: stage sign independence must be even and >= 4");
        if (m.sampler_k < 1)
            throw InvalidParams("plan_manual: sampler independence must be >= 1");
        StageSpec st;
        st.n_stage = m.n_stage;
        st.field_log = log2_of_pow2(m.n_stage);
        st.sign_k = m.sign_k;
        st.s_stage = m.s_stage;
        st.sampler_k = m.sampler_k;
        st.sampler_field_log = st.field_log;
        st.eps_stage = b.eps_each;
        st.delta_stage = b.delta_each;
        st.sign_offset = offset;
        st.sign_bits = std::uint64_t{st.sign_k} * st.field_log;
        offset += st.sign_bits;
        st.sampler_offset = offset;
        st.sampler_bits = std::uint64_t{st.sampler_k} * st.sampler_field_log;
        offset += st.sampler_bits;
        dim = std::bit_ceil(st.s_stage);
        plan.stages.push_back(st);
    }

    if (tail) {
        const std::uint64_t m_in =
            plan.stages.empty() ? plan.ambient_dim : plan.stages.back().s_stage;
        if (tail->s_out < 1) throw InvalidParams("plan_manual: tail s_out must be >= 1");
        if (tail->k < 2) throw InvalidParams("plan_manual: tail independence must be >= 2");
        TailSpec ts;
        ts.m_in = m_in;
        ts.s_out = tail->s_out;
        ts.k = tail->k;
        ts.field_log = log2_of_pow2(std::bit_ceil(ts.s_out * m_in));
        if (ts.field_log < 1) ts.field_log = 1;
        ts.eps_tail = b.eps_each;
        ts.delta_tail = b.delta_each;
        ts.sign_offset = offset;
        ts.sign_bits = std::uint64_t{ts.k} * ts.field_log;
        offset += ts.sign_bits;
        plan.tail = ts;
        plan.output_dim = ts.s_out;
    } else {
        plan.output_dim = plan.stages.back().s_stage;
    }

    finalize_plan(plan);
    return plan;
}

std::string plan_to_json(const JlPlan& plan) {
    ordered_json doc = plan_to_doc(plan);
    doc["plan_hash"] = hash_hex(fnv1a64(doc.dump()));
    return doc.dump(2) + "\n";
}

JlPlan plan_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw FileFormatError(std::string("plan_from_json: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "jlgen-plan")
            throw FileFormatError("plan_from_json: not a plan document");
        JlPlan plan;
        plan.n_input = doc.at("n_input").get<std::uint64_t>();
        plan.eps = doc.at("eps").get<double>();
        plan.delta = doc.at("delta").get<double>();
        const auto& c = doc.at("constants");
        plan.consts.regime_c = c.at("regime_c").get<double>();
        plan.consts.sampler_size_c = c.at("sampler_size_c").get<double>();
        plan.consts.sampler_indep_c = c.at("sampler_indep_c").get<double>();
        plan.consts.tail_size_c = c.at("tail_size_c").get<double>();
        plan.consts.tail_indep_c = c.at("tail_indep_c").get<double>();
        plan.consts.seed_bound_c = c.at("seed_bound_c").get<double>();
        plan.consts.k_schedule = c.at("k_schedule").get<std::string>();
        plan.ambient_dim = doc.at("ambient_dim").get<std::uint64_t>();
        plan.split_eps = doc.at("split_eps").get<double>();
        plan.split_delta = doc.at("split_delta").get<double>();
        for (const auto& s : doc.at("stages")) {
            StageSpec st;
            st.n_stage = s.at("n_stage").get<std::uint64_t>();
            st.s_stage = s.at("s_stage").get<std::uint64_t>();
            st.sign_k = s.at("sign_k").get<std::uint32_t>();
            st.field_log = s.at("field_log").get<unsigned>();
            st.sampler_k = s.at("sampler_k").get<std::uint32_t>();
            st.sampler_field_log = s.at("sampler_field_log").get<unsigned>();
            st.eps_stage = s.at("eps_stage").get<double>();
            st.delta_stage = s.at("delta_stage").get<double>();
            st.sign_offset = s.at("sign_offset").get<std::uint64_t>();
            st.sign_bits = s.at("sign_bits").get<std::uint64_t>();
            st.sampler_offset = s.at("sampler_offset").get<std::uint64_t>();
            st.sampler_bits = s.at("sampler_bits").get<std::uint64_t>();
            plan.stages.push_back(st);
        }
        if (!doc.at("tail").is_null()) {
            const auto& tj = doc.at("tail");
            TailSpec ts;
            ts.m_in = tj.at("m_in").get<std::uint64_t>();
            ts.s_out = tj.at("s_out").get<std::uint64_t>();
            ts.k = tj.at("k").get<std::uint32_t>();
            ts.field_log = tj.at("field_log").get<unsigned>();
            ts.eps_tail = tj.at("eps_tail").get<double>();
            ts.delta_tail = tj.at("delta_tail").get<double>();
            ts.sign_offset = tj.at("sign_offset").get<std::uint64_t>();
            ts.sign_bits = tj.at("sign_bits").get<std::uint64_t>();
            plan.tail = ts;
        }
        plan.output_dim = doc.at("output_dim").get<std::uint64_t>();
        plan.seed_length_bits = doc.at("seed_length_bits").get<std::uint64_t>();
        plan.seed_bound_bits = doc.at("seed_bound_bits").get<double>();
        plan.schedule_rule_value = doc.at("schedule_rule_value").get<double>();

        const std::string stored = doc.at("plan_hash").get<std::string>();
        const std::string recomputed = hash_hex(plan.hash());
        if (stored != recomputed)
            throw PlanHashMismatch("plan_from_json: stored hash " + stored +
                                   " does not match recomputed " + recomputed);
        return plan;
    } catch (const ordered_json::exception& e) {
        throw FileFormatError(std::string("plan_from_json: ") + e.what());
    }
}

void plan_save(const JlPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("plan_save: cannot open " + path);
    out << plan_to_json(plan);
    if (!out) throw IoError("plan_save: write failed for " + path);
}

JlPlan plan_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("plan_load: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return plan_from_json(buf.str());
}

}  // namespace jlgen
