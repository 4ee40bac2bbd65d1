#pragma once

#include <stdexcept>
#include <string>

namespace mwfock {

// Every failure raised by the library derives from mwfock::error so callers
// can catch the family at once and still dispatch on the concrete kind.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MWFOCK_DEFINE_ERROR(name)                                              \
    class name : public error {                                                \
    public:                                                                    \
        explicit name(const std::string& what) : error(#name ": " + what) {}   \
    }

MWFOCK_DEFINE_ERROR(InvalidSpec);
MWFOCK_DEFINE_ERROR(NumericalBreakdown);
MWFOCK_DEFINE_ERROR(QuadratureUnderResolved);
MWFOCK_DEFINE_ERROR(RefinementStalled);
MWFOCK_DEFINE_ERROR(SandwichViolated);
MWFOCK_DEFINE_ERROR(RegionTooSmall);
MWFOCK_DEFINE_ERROR(NotLatticePoint);
MWFOCK_DEFINE_ERROR(OverflowGuard);
MWFOCK_DEFINE_ERROR(CubeOutsideGrid);
MWFOCK_DEFINE_ERROR(PowerIterationStall);
MWFOCK_DEFINE_ERROR(SeriesDiverging);

#undef MWFOCK_DEFINE_ERROR

} // namespace mwfock
