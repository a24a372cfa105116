#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlc {

enum class ErrorCode {
    NegativeKernel,
    DivergentMoment,
    NonFiniteSample,
    DimMismatch,
    PadInsufficient,
    AsymmetricA,
    NonFiniteReaction,
    StepDiverged,
    SolverSingular,
    UnsupportedFamily,
    TimeOrder,
    QuadratureUnderresolved,
    BoundFailed,
    NuInsufficient,
    IoFailure,
    Config,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library's error codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NegativeKernel: return "NEGATIVE_KERNEL";
    case ErrorCode::DivergentMoment: return "DIVERGENT_MOMENT";
    case ErrorCode::NonFiniteSample: return "NON_FINITE_SAMPLE";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::PadInsufficient: return "PAD_INSUFFICIENT";
    case ErrorCode::AsymmetricA: return "ASYMMETRIC_A";
    case ErrorCode::NonFiniteReaction: return "NON_FINITE_REACTION";
    case ErrorCode::StepDiverged: return "STEP_DIVERGED";
    case ErrorCode::SolverSingular: return "SOLVER_SINGULAR";
    case ErrorCode::UnsupportedFamily: return "UNSUPPORTED_FAMILY";
    case ErrorCode::TimeOrder: return "TIME_ORDER";
    case ErrorCode::QuadratureUnderresolved: return "QUADRATURE_UNDERRESOLVED";
    case ErrorCode::BoundFailed: return "BOUND_FAILED";
    case ErrorCode::NuInsufficient: return "NU_INSUFFICIENT";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::Config: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

} // namespace nlc
