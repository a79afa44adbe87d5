#pragma once

#include <stdexcept>
#include <string>

namespace abctorus {

/// Failure categories, aligned with the process exit codes used by the CLI:
/// bad configuration exits 2, numerical breakdown exits 3, and a violated
/// structural hypothesis (non-commuting family, missing hyperbolicity, ...)
/// exits 4.
enum class FailKind : int { Config = 2, Numerical = 3, Hypothesis = 4 };

class Error : public std::runtime_error {
public:
  Error(FailKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  FailKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
  FailKind kind_;
};

#define ABCTORUS_ERROR(NAME, KIND)                          \
  class NAME : public Error {                               \
  public:                                                   \
    explicit NAME(const std::string& w)                     \
        : Error(FailKind::KIND, std::string(#NAME ": ") + w) {} \
  }

// Configuration and input shape problems.
ABCTORUS_ERROR(ConfigInvalid, Config);
ABCTORUS_ERROR(DimensionMismatch, Config);

// Numerical breakdowns: the algorithm ran as specified but could not reach
// its contract on this input at this resolution/budget.
ABCTORUS_ERROR(GridTooCoarse, Numerical);
ABCTORUS_ERROR(NotInvertible, Numerical);
ABCTORUS_ERROR(SmallDivisorBreakdown, Numerical);
ABCTORUS_ERROR(DivergenceDetected, Numerical);
ABCTORUS_ERROR(IterationCap, Numerical);
ABCTORUS_ERROR(BudgetExceeded, Numerical);

// Violated hypotheses: the input does not satisfy what the method assumes.
ABCTORUS_ERROR(NotCommuting, Hypothesis);
ABCTORUS_ERROR(NotConstant, Hypothesis);
ABCTORUS_ERROR(NotContractive, Hypothesis);
ABCTORUS_ERROR(NoHyperbolicity, Hypothesis);
ABCTORUS_ERROR(FoliationNotInvariant, Hypothesis);
ABCTORUS_ERROR(NotGenerating, Hypothesis);
ABCTORUS_ERROR(Derogatory, Hypothesis);

#undef ABCTORUS_ERROR

}  // namespace abctorus
