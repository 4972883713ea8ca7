#pragma once

#include <stdexcept>
#include <string>

namespace attune {

// Base of all contract-violation exceptions. kind() is the stable
// machine-readable name the CLI prints as `error: <kind>: <message>`.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ATTUNE_ERROR_TYPE(NAME, KIND)                              \
    class NAME : public Error {                                   \
    public:                                                        \
        explicit NAME(const std::string& message)                  \
            : Error(KIND, message) {}                              \
    }

ATTUNE_ERROR_TYPE(ZeroRowError, "ZeroRow");
ATTUNE_ERROR_TYPE(ShapeMismatchError, "ShapeMismatch");
ATTUNE_ERROR_TYPE(OverlapError, "OverlapError");
ATTUNE_ERROR_TYPE(TokenRangeError, "RangeError");
ATTUNE_ERROR_TYPE(EmptySubPromptError, "EmptySubPrompt");
ATTUNE_ERROR_TYPE(UnknownWordError, "UnknownWord");
ATTUNE_ERROR_TYPE(FormatError, "FormatError");
ATTUNE_ERROR_TYPE(NonContiguousIdsError, "NonContiguousIds");
ATTUNE_ERROR_TYPE(DimError, "DimError");
ATTUNE_ERROR_TYPE(BadIndexError, "BadIndex");
ATTUNE_ERROR_TYPE(BindingError, "BindingError");
ATTUNE_ERROR_TYPE(DimMismatchError, "DimMismatch");
ATTUNE_ERROR_TYPE(BadTokenError, "BadToken");
ATTUNE_ERROR_TYPE(EmptyRangeError, "EmptyRange");
ATTUNE_ERROR_TYPE(LayoutMismatchError, "LayoutMismatch");
ATTUNE_ERROR_TYPE(EmptyMaskError, "EmptyMask");

#undef ATTUNE_ERROR_TYPE

}  // namespace attune
