#pragma once

#include <stdexcept>
#include <string>

namespace herrlab {

// Error taxonomy for the whole engine.  Every failure with a contract name
// gets its own type so tests and the CLI can dispatch on it.

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define HERRLAB_ERROR(Name)                                                  \
    struct Name : Error {                                                    \
        explicit Name(const std::string& what = #Name) : Error(what) {}     \
    }

HERRLAB_ERROR(InvalidPolynomial);
HERRLAB_ERROR(PrecisionOverflow);
HERRLAB_ERROR(CtxMismatch);
HERRLAB_ERROR(NotUnit);
HERRLAB_ERROR(NotDivisible);
HERRLAB_ERROR(InsufficientGuard);
HERRLAB_ERROR(EmptyWindow);
HERRLAB_ERROR(CompositionUndefined);
HERRLAB_ERROR(NonInvertibleTail);
HERRLAB_ERROR(WindowTooNarrow);
HERRLAB_ERROR(NotAFrobeniusSeries);
HERRLAB_ERROR(PrecisionLoss);
HERRLAB_ERROR(NotEtale);
HERRLAB_ERROR(CommutationFailure);
HERRLAB_ERROR(TorsionNotCoprime);
HERRLAB_ERROR(NotAComplex);
HERRLAB_ERROR(NonCommuting);
HERRLAB_ERROR(NotAChainMap);
HERRLAB_ERROR(NotStabilizedError);
HERRLAB_ERROR(DualityMismatch);
HERRLAB_ERROR(LemmaViolation);
HERRLAB_ERROR(ParseError);
HERRLAB_ERROR(ValidationError);
HERRLAB_ERROR(IOError);

#undef HERRLAB_ERROR

}  // namespace herrlab
