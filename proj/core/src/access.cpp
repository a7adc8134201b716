#include "jlgen/access.hpp"

#include <bit>
#include <cmath>
#include <vector>

#include "jlgen/gf2.hpp"

namespace jlgen {

namespace {

// Working-cell census per recursion frame: loop counter, running sum,
// compensation term, hoisted subset slot, current term.  The leaf adds its
// hoisted sign and scale product.
constexpr std::uint64_t kCellsPerFrame = 5;
constexpr std::uint64_t kLeafCells = 2;

// Per-stage evaluation context.  The parsed polynomial coefficients mirror
// tape slices verbatim and are accounted as tape material, not working
// memory (the live-cell counter tracks only per-frame state).
struct StageCtx {
    const StageSpec* spec;
    const GfField* sign_field;
    const GfField* samp_field;
    std::vector<std::uint64_t> sign_coeffs;
    std::vector<std::uint64_t> samp_coeffs;
    double inv_sqrt_s;
};

struct TailCtx {
    const TailSpec* spec;
    const GfField* field;
    std::vector<std::uint64_t> coeffs;
    double inv_sqrt_s;
};

std::vector<std::uint64_t> parse_coeffs(const BitString& bits, std::uint64_t offset,
                                        std::uint32_t k, unsigned w) {
    std::vector<std::uint64_t> out(k);
    for (std::uint32_t d = 0; d < k; ++d)
        out[d] = bits.read_uint(offset + std::uint64_t{d} * w, w);
    return out;
}

inline int hadamard_sign(std::uint64_t a, std::uint64_t b) {
    return (std::popcount(a & b) & 1) ? -1 : +1;
}

// Neumaier-compensated accumulation of `term` into (sum, comp).
inline void accumulate(double& sum, double& comp, double term) {
    const double next = sum + term;
    if (std::abs(sum) >= std::abs(term))
        comp += (sum - next) + term;
    else
        comp += (term - next) + sum;
    sum = next;
}

struct Walker {
    const std::vector<StageCtx>& stages;
    std::uint64_t col;
    double leaf_sign_x;  // x_0(col), constant across the whole sum
    EntryCost* cost;
    std::uint64_t live_cells = 0;
    std::uint64_t peak_cells = 0;

    void note_depth(std::uint64_t extra) {
        if (live_cells + extra > peak_cells) peak_cells = live_cells + extra;
    }

    // Value of (A_{level} * ... * A_0)[i, col].
    double value(std::size_t level, std::uint64_t i) {
        const StageCtx& ctx = stages[level];
        if (level == 0) {
            cost->terms += 1;
            note_depth(kLeafCells);
            const std::uint64_t slot = ctx.samp_field->eval_poly(ctx.samp_coeffs, i);
            return ctx.inv_sqrt_s * hadamard_sign(slot, col) * leaf_sign_x;
        }
        live_cells += kCellsPerFrame;
        note_depth(0);
        const StageCtx& prev = stages[level - 1];
        const std::uint64_t slot = ctx.samp_field->eval_poly(ctx.samp_coeffs, i);
        double sum = 0.0, comp = 0.0;
        for (std::uint64_t j = 0; j < prev.spec->s_stage; ++j) {
            const std::uint64_t xv = ctx.sign_field->eval_poly(ctx.sign_coeffs, j);
            const double a = ctx.inv_sqrt_s * hadamard_sign(slot, j) *
                             ((xv & 1u) ? -1.0 : 1.0);
            accumulate(sum, comp, a * value(level - 1, j));
        }
        live_cells -= kCellsPerFrame;
        return sum + comp;
    }
};

}  // namespace

double stage_entry(const StageSpec& spec, const SeedTape& tape,
                   std::uint64_t r, std::uint64_t j) {
    if (r >= spec.s_stage)
        throw IndexOutOfRange("stage_entry: row " + std::to_string(r) + " >= " +
                              std::to_string(spec.s_stage));
    if (j >= spec.n_stage)
        throw IndexOutOfRange("stage_entry: column " + std::to_string(j) + " >= " +
                              std::to_string(spec.n_stage));
    const GfField& sign_field = GfField::of(spec.field_log);
    const GfField& samp_field = GfField::of(spec.sampler_field_log);
    const std::vector<std::uint64_t> sign_coeffs =
        parse_coeffs(tape.bits, spec.sign_offset, spec.sign_k, spec.field_log);
    const std::vector<std::uint64_t> samp_coeffs =
        parse_coeffs(tape.bits, spec.sampler_offset, spec.sampler_k, spec.sampler_field_log);
    const std::uint64_t slot = samp_field.eval_poly(samp_coeffs, r);
    const std::uint64_t xv = sign_field.eval_poly(sign_coeffs, j);
    // sqrt(n/s) * (+-1)/sqrt(n) * x_j collapses to (+-1) * x_j / sqrt(s).
    const double mag = 1.0 / std::sqrt(static_cast<double>(spec.s_stage));
    return mag * hadamard_sign(slot, j) * ((xv & 1u) ? -1.0 : 1.0);
}

double entry_counted(const JlPlan& plan, const SeedTape& tape, EntryQuery q,
                     EntryCost& cost) {
    if (q.row >= plan.output_dim)
        throw IndexOutOfRange("entry: row " + std::to_string(q.row) +
                              " >= output dimension " + std::to_string(plan.output_dim));
    if (q.col >= plan.n_input)
        throw IndexOutOfRange("entry: column " + std::to_string(q.col) +
                              " >= input dimension " + std::to_string(plan.n_input));
    if (tape.bits.size() < plan.seed_length_bits)
        throw BitsTooShort("entry: tape shorter than the plan's seed length");

    std::vector<StageCtx> stages;
    stages.reserve(plan.stages.size());
    for (const StageSpec& st : plan.stages) {
        StageCtx ctx;
        ctx.spec = &st;
        ctx.sign_field = &GfField::of(st.field_log);
        ctx.samp_field = &GfField::of(st.sampler_field_log);
        ctx.sign_coeffs = parse_coeffs(tape.bits, st.sign_offset, st.sign_k, st.field_log);
        ctx.samp_coeffs =
            parse_coeffs(tape.bits, st.sampler_offset, st.sampler_k, st.sampler_field_log);
        ctx.inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(st.s_stage));
        stages.push_back(std::move(ctx));
    }

    // Tail-only: a single sign, no intermediary sum.
    if (stages.empty()) {
        if (!plan.tail) throw Error("entry: plan has no components");
        const TailSpec& tail = *plan.tail;
        const GfField& field = GfField::of(tail.field_log);
        const std::vector<std::uint64_t> coeffs =
            parse_coeffs(tape.bits, tail.sign_offset, tail.k, tail.field_log);
        const std::uint64_t v = field.eval_poly(coeffs, q.row * tail.m_in + q.col);
        cost.terms += 1;
        cost.peak_aux_cells = std::max<std::uint64_t>(cost.peak_aux_cells, kLeafCells);
        return ((v & 1u) ? -1.0 : 1.0) / std::sqrt(static_cast<double>(tail.s_out));
    }

    Walker walker{stages, q.col, 0.0, &cost, 0, 0};
    {
        const StageCtx& first = stages.front();
        const std::uint64_t xv = first.sign_field->eval_poly(first.sign_coeffs, q.col);
        walker.leaf_sign_x = (xv & 1u) ? -1.0 : 1.0;
    }

    double result;
    if (plan.tail) {
        const TailSpec& tail = *plan.tail;
        const GfField& field = GfField::of(tail.field_log);
        const std::vector<std::uint64_t> coeffs =
            parse_coeffs(tape.bits, tail.sign_offset, tail.k, tail.field_log);
        const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(tail.s_out));
        const std::uint64_t base = q.row * tail.m_in;
        walker.live_cells += kCellsPerFrame;
        double sum = 0.0, comp = 0.0;
        for (std::uint64_t j = 0; j < tail.m_in; ++j) {
            const std::uint64_t v = field.eval_poly(coeffs, base + j);
            const double a = inv_sqrt_s * ((v & 1u) ? -1.0 : 1.0);
            accumulate(sum, comp, a * walker.value(stages.size() - 1, j));
        }
        walker.live_cells -= kCellsPerFrame;
        result = sum + comp;
    } else {
        result = walker.value(stages.size() - 1, q.row);
    }
    cost.peak_aux_cells = std::max(cost.peak_aux_cells, walker.peak_cells);
    return result;
}

double entry(const JlPlan& plan, const SeedTape& tape, EntryQuery q) {
    EntryCost cost;
    return entry_counted(plan, tape, q, cost);
}

}  // namespace jlgen
