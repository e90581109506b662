#ifndef ZUPT_ERROR_HPP_
#define ZUPT_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zupt
{

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, config, weight file).
class ParseError : public Error
{
public:
  ParseError(const std::string & what, std::size_t line)
  : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  explicit ParseError(const std::string & what) : Error(what) {}

  /// 1-based line number, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_{0};
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Caller broke an operation precondition.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Non-finite filter state during propagation.
class DivergenceError : public Error
{
public:
  DivergenceError(const std::string & what, std::size_t step)
  : Error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// Linear algebra breakdown (singular innovation, degenerate alignment).
class NumericalError : public Error
{
public:
  using Error::Error;
};

}  // namespace zupt

#endif  // ZUPT_ERROR_HPP_
