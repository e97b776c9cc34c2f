#pragma once

#include <stdexcept>
#include <string>

namespace redlab {

// Base class for every failure the library reports. The `code` string is
// stable and machine-readable; CLI error JSON carries it verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

#define REDLAB_DEFINE_ERROR(NAME)                                    \
    class NAME : public Error {                                      \
    public:                                                          \
        explicit NAME(const std::string& what) : Error(#NAME, what) {} \
    }

REDLAB_DEFINE_ERROR(DimensionMismatch);
REDLAB_DEFINE_ERROR(NonHermitian);
REDLAB_DEFINE_ERROR(NonFinite);
REDLAB_DEFINE_ERROR(ZeroState);
REDLAB_DEFINE_ERROR(EigenFailure);
REDLAB_DEFINE_ERROR(PoleProximity);
REDLAB_DEFINE_ERROR(PoleEvaluation);
REDLAB_DEFINE_ERROR(BracketFailure);
REDLAB_DEFINE_ERROR(ChannelSolveFailure);
REDLAB_DEFINE_ERROR(AllZero);
REDLAB_DEFINE_ERROR(ParseError);
REDLAB_DEFINE_ERROR(SchemaError);
REDLAB_DEFINE_ERROR(CountMismatch);

#undef REDLAB_DEFINE_ERROR

}  // namespace redlab
