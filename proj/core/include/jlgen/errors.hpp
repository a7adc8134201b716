#pragma once

#include <stdexcept>
#include <string>

namespace jlgen {

// ============================================================================
// Error taxonomy.  Every throwing operation in the library raises one of
// these; the command-line driver maps them to exit code 2.
// ============================================================================

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter outside its admissible range (eps/delta not in (0,1), zero
// dimension, independence degree too small, ...).
struct InvalidParams : Error {
    using Error::Error;
};

// A seed or seed slice does not carry enough bits for the requested object.
struct BitsTooShort : Error {
    using Error::Error;
};

// An index (row, column, subset slot, tape position) is outside its domain.
struct IndexOutOfRange : Error {
    using Error::Error;
};

// An operation that requires a power-of-two length was handed something else.
struct NonPowerOfTwoLength : Error {
    using Error::Error;
};

// A sign source covers a smaller domain than the vector it is applied to.
struct SignDomainTooSmall : Error {
    using Error::Error;
};

// Vector length disagrees with what the map or file header expects.
struct LengthMismatch : Error {
    using Error::Error;
};

// The requested subset family cannot exist (subset size exceeds the domain
// in a way the construction cannot represent).
struct DegenerateRequest : Error {
    using Error::Error;
};

// Exhaustive enumeration was requested over a seed space too large to walk.
struct SeedSpaceTooLarge : Error {
    using Error::Error;
};

// An exhaustive family audit was requested past the enumeration cap.
struct FamilyTooLargeToEnumerate : Error {
    using Error::Error;
};

// Filesystem-level failure (open, read, write).
struct IoError : Error {
    using Error::Error;
};

// A serialized plan's integrity hash does not match its contents.
struct PlanHashMismatch : Error {
    using Error::Error;
};

// A vector file is malformed (bad magic, truncated record, bad header).
struct FileFormatError : Error {
    using Error::Error;
};

}  // namespace jlgen
