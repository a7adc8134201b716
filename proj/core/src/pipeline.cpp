#include "jlgen/pipeline.hpp"

#include <bit>
#include <cmath>

#include "jlgen/gf2.hpp"

namespace jlgen {

namespace {

// Largest tail sign matrix (entries) expanded into memory; larger tails are
// evaluated on the fly per application.
constexpr std::uint64_t kTailCacheCap = std::uint64_t{1} << 27;

std::vector<std::uint64_t> stage_subset(const StageSpec& spec, const SeedTape& tape) {
    const SubsetFamily fam = make_family(spec.n_stage, spec.s_stage, spec.sampler_k);
    const BitString idx = tape.bits.slice(spec.sampler_offset, spec.sampler_bits);
    return subset_at(fam, idx);
}

SignTape stage_signs(const StageSpec& spec, const SeedTape& tape) {
    return make_sign_tape(spec.field_log, spec.n_stage, tape.bits, spec.sign_offset,
                          spec.sign_k);
}

SignTape tail_signs_tape(const TailSpec& tail, const SeedTape& tape) {
    return make_sign_tape(tail.field_log, tail.s_out * tail.m_in, tape.bits,
                          tail.sign_offset, tail.k);
}

// Core of one stage once signs and subset are known: flip, rotate, gather.
std::vector<double> stage_core(const StageSpec& spec, std::span<const std::int8_t> signs,
                               std::span<const std::uint64_t> subset,
                               std::span<const double> v) {
    std::vector<double> u(v.begin(), v.end());
    for (std::size_t i = 0; i < u.size(); ++i)
        if (signs[i] < 0) u[i] = -u[i];
    fwht_inplace(u);
    const double scale =
        std::sqrt(static_cast<double>(spec.n_stage) / static_cast<double>(spec.s_stage));
    std::vector<double> out(spec.s_stage);
    for (std::uint64_t r = 0; r < spec.s_stage; ++r) out[r] = scale * u[subset[r]];
    return out;
}

}  // namespace

std::vector<double> pad_input(std::span<const double> w, const JlPlan& plan) {
    if (w.size() != plan.n_input)
        throw LengthMismatch("pad_input: vector length " + std::to_string(w.size()) +
                             " != plan n_input " + std::to_string(plan.n_input));
    std::vector<double> out(w.begin(), w.end());
    out.resize(plan.ambient_dim, 0.0);
    return out;
}

std::vector<double> stage_apply(const StageSpec& spec, const SeedTape& tape,
                                std::span<const double> v) {
    if (v.size() != spec.n_stage)
        throw LengthMismatch("stage_apply: vector length " + std::to_string(v.size()) +
                             " != stage dimension " + std::to_string(spec.n_stage));
    const std::vector<std::int8_t> signs = sign_vector(stage_signs(spec, tape));
    const std::vector<std::uint64_t> subset = stage_subset(spec, tape);
    return stage_core(spec, signs, subset, v);
}

std::vector<double> cw_apply(const TailSpec& tail, const SeedTape& tape,
                             std::span<const double> v) {
    if (v.size() != tail.m_in)
        throw LengthMismatch("cw_apply: vector length " + std::to_string(v.size()) +
                             " != tail input dimension " + std::to_string(tail.m_in));
    const SignTape signs = tail_signs_tape(tail, tape);
    const GfField& field = GfField::of(signs.field_log);
    const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(tail.s_out));
    std::vector<double> out(tail.s_out);
    for (std::uint64_t r = 0; r < tail.s_out; ++r) {
        double acc = 0.0;
        const std::uint64_t base = r * tail.m_in;
        for (std::uint64_t j = 0; j < tail.m_in; ++j) {
            const std::uint64_t value = field.eval_poly(signs.coefficients, base + j);
            acc += (value & 1u) ? -v[j] : v[j];
        }
        out[r] = inv_sqrt_s * acc;
    }
    return out;
}

std::vector<double> generate_apply(const JlPlan& plan, const SeedTape& tape,
                                   std::span<const double> w) {
    std::vector<double> v = pad_input(w, plan);
    for (const StageSpec& st : plan.stages) {
        if (v.size() > st.n_stage)
            throw LengthMismatch("generate_apply: stage expects dimension " +
                                 std::to_string(st.n_stage) + " but received " +
                                 std::to_string(v.size()));
        v.resize(st.n_stage, 0.0);
        v = stage_apply(st, tape, v);
    }
    if (plan.tail) return cw_apply(*plan.tail, tape, v);
    return v;
}

MatrixHandle::MatrixHandle(JlPlan plan, SeedTape tape)
    : plan_(std::move(plan)), tape_(std::move(tape)) {
    if (tape_.bits.size() < plan_.seed_length_bits)
        throw BitsTooShort("MatrixHandle: tape shorter than the plan's seed length");
    stages_.reserve(plan_.stages.size());
    for (const StageSpec& st : plan_.stages) {
        StageCache cache;
        cache.signs = sign_vector(stage_signs(st, tape_));
        cache.subset = stage_subset(st, tape_);
        stages_.push_back(std::move(cache));
    }
    if (plan_.tail) {
        tail_tape_ = tail_signs_tape(*plan_.tail, tape_);
        const std::uint64_t cells = plan_.tail->s_out * plan_.tail->m_in;
        if (cells <= kTailCacheCap) {
            tail_signs_ = sign_vector(tail_tape_);
            tail_cached_ = true;
        }
    }
}

std::vector<double> MatrixHandle::apply(std::span<const double> w) const {
    std::vector<double> v = pad_input(w, plan_);
    for (std::size_t i = 0; i < plan_.stages.size(); ++i) {
        const StageSpec& st = plan_.stages[i];
        if (v.size() > st.n_stage)
            throw LengthMismatch("MatrixHandle::apply: stage expects dimension " +
                                 std::to_string(st.n_stage) + " but received " +
                                 std::to_string(v.size()));
        v.resize(st.n_stage, 0.0);
        v = stage_core(st, stages_[i].signs, stages_[i].subset, v);
    }
    if (!plan_.tail) return v;

    const TailSpec& tail = *plan_.tail;
    const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(tail.s_out));
    std::vector<double> out(tail.s_out);
    if (tail_cached_) {
        for (std::uint64_t r = 0; r < tail.s_out; ++r) {
            double acc = 0.0;
            const std::int8_t* row = tail_signs_.data() + r * tail.m_in;
            for (std::uint64_t j = 0; j < tail.m_in; ++j)
                acc += static_cast<double>(row[j]) * v[j];
            out[r] = inv_sqrt_s * acc;
        }
        return out;
    }
    const GfField& field = GfField::of(tail_tape_.field_log);
    for (std::uint64_t r = 0; r < tail.s_out; ++r) {
        double acc = 0.0;
        const std::uint64_t base = r * tail.m_in;
        for (std::uint64_t j = 0; j < tail.m_in; ++j) {
            const std::uint64_t value = field.eval_poly(tail_tape_.coefficients, base + j);
            acc += (value & 1u) ? -v[j] : v[j];
        }
        out[r] = inv_sqrt_s * acc;
    }
    return out;
}

double MatrixHandle::entry(std::uint64_t row, std::uint64_t col) const {
    return jlgen::entry(plan_, tape_, EntryQuery{row, col});
}

}  // namespace jlgen
