#include "jlgen/tape.hpp"

#include "jlgen/gf2.hpp"
#include "jlgen/plan.hpp"

namespace jlgen {

const SliceRef& SeedTape::slice(SliceKind kind, std::uint32_t stage) const {
    for (const SliceRef& s : partition)
        if (s.kind == kind && s.stage == stage) return s;
    throw IndexOutOfRange("SeedTape::slice: no slice for component (kind=" +
                          std::to_string(static_cast<int>(kind)) + ", stage=" +
                          std::to_string(stage) + ")");
}

SeedTape tape_partition(const JlPlan& plan, BitString bits) {
    if (bits.size() < plan.seed_length_bits)
        throw BitsTooShort("tape_partition: plan needs " +
                           std::to_string(plan.seed_length_bits) + " bits, got " +
                           std::to_string(bits.size()));
    SeedTape tape;
    tape.bits = std::move(bits);
    std::uint64_t cursor = 0;
    for (std::uint32_t i = 0; i < plan.stages.size(); ++i) {
        const StageSpec& st = plan.stages[i];
        if (st.sign_offset != cursor)
            throw Error("tape_partition: stage sign slice offset disagrees with layout");
        tape.partition.push_back({SliceKind::StageSigns, i, st.sign_offset, st.sign_bits});
        cursor += st.sign_bits;
        if (st.sampler_offset != cursor)
            throw Error("tape_partition: stage sampler slice offset disagrees with layout");
        tape.partition.push_back({SliceKind::StageSampler, i, st.sampler_offset, st.sampler_bits});
        cursor += st.sampler_bits;
    }
    if (plan.tail) {
        if (plan.tail->sign_offset != cursor)
            throw Error("tape_partition: tail slice offset disagrees with layout");
        tape.partition.push_back({SliceKind::TailSigns, 0, plan.tail->sign_offset,
                                  plan.tail->sign_bits});
        cursor += plan.tail->sign_bits;
    }
    if (cursor != plan.seed_length_bits)
        throw Error("tape_partition: slice lengths sum to " + std::to_string(cursor) +
                    " but plan.seed_length_bits is " + std::to_string(plan.seed_length_bits));
    return tape;
}

SignTape make_sign_tape(unsigned field_log, std::uint64_t domain_size,
                        const BitString& bits, std::uint64_t offset, std::uint32_t k) {
    if (k == 0) throw InvalidParams("make_sign_tape: independence k must be >= 1");
    if (field_log < 1 || field_log > 63)
        throw InvalidParams("make_sign_tape: field log-size must be in [1, 63]");
    if (domain_size > (std::uint64_t{1} << field_log))
        throw InvalidParams("make_sign_tape: domain " + std::to_string(domain_size) +
                            " exceeds field size 2^" + std::to_string(field_log));
    SignTape tape;
    tape.field_log = field_log;
    tape.domain_size = domain_size;
    tape.coefficients.reserve(k);
    for (std::uint32_t d = 0; d < k; ++d)
        tape.coefficients.push_back(bits.read_uint(offset + std::uint64_t{d} * field_log,
                                                   field_log));
    return tape;
}

int sign_at(const SignTape& tape, std::uint64_t index) {
    if (index >= tape.domain_size)
        throw IndexOutOfRange("sign_at: index " + std::to_string(index) +
                              " >= domain " + std::to_string(tape.domain_size));
    const GfField& field = GfField::of(tape.field_log);
    const std::uint64_t value = field.eval_poly(tape.coefficients, index);
    return (value & 1u) ? -1 : +1;
}

std::vector<std::int8_t> sign_vector(const SignTape& tape) {
    const GfField& field = GfField::of(tape.field_log);
    std::vector<std::int8_t> out(tape.domain_size);
    for (std::uint64_t i = 0; i < tape.domain_size; ++i) {
        const std::uint64_t value = field.eval_poly(tape.coefficients, i);
        out[i] = (value & 1u) ? std::int8_t{-1} : std::int8_t{+1};
    }
    return out;
}

}  // namespace jlgen
