#pragma once
// Exception types shared across the library.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace defconv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed model, measure, path or flag input.
class InputError : public Error {
public:
    using Error::Error;
};

// A precondition of an operation does not hold (index out of range,
// mismatched structures, negative rate, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Quantifier enumeration would exceed the evaluation budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line, std::size_t column)
        : Error(msg + " at line " + std::to_string(line) + ", column " +
                std::to_string(column)),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace defconv
