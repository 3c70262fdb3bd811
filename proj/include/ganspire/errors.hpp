#pragma once

#include <stdexcept>
#include <string>

namespace ganspire {

// Caller supplied something unusable (empty corpus, k too large, bad file).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Shapes or sizes that disagree between two arguments.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Malformed record on disk. `where()` names the offending node/field.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

// Optimization produced a non-finite value.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ganspire
