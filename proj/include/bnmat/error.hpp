#pragma once

#include <stdexcept>
#include <string>

namespace bnmat {

// Exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    parse = 2,
    validation = 3,
    size_limit = 4,
    io = 5,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::usage; }
};

enum class ParseIssue {
    syntax,             // lexical or grammar error
    unknown_reference,  // undeclared variable or state
    row_count,          // probability rows or values do not match the cardinalities
    invalid_value,      // malformed or out-of-range number
};

class ParseError : public Error {
public:
    ParseError(ParseIssue issue, const std::string& msg, int line = 0, int column = 0)
        : Error(line > 0 ? msg + " at line " + std::to_string(line) + ", column " +
                               std::to_string(column)
                         : msg),
          issue_(issue), line_(line), column_(column) {}
    ParseIssue issue() const noexcept { return issue_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    ExitCode exit_code() const noexcept override { return ExitCode::parse; }

private:
    ParseIssue issue_;
    int line_;
    int column_;
};

class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

class SizeLimitError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::size_limit; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

// A caller broke a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

// Internal data became inconsistent (for example a corrupted usefulness profile).
class InvariantError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

}  // namespace bnmat
