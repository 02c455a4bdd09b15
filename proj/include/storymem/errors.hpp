#pragma once
#include <stdexcept>
#include <string>

namespace storymem {

enum class ErrorKind {
    Input,            // bad caller input (out-of-order turn, empty text, bad file)
    Invariant,        // internal contract breached; never silently computed over
    Parse,            // backend output did not match a declared parse contract
    BackendTransport, // network / timeout; retriable
    BackendAuth,      // credentials rejected; not retriable
    BackendProtocol,  // malformed or unexpected response body
    BackendBudget,    // per-round call budget exhausted
    CapacityOverflow, // capacity cannot be met because all remaining items are exempt
    StoreVersion,     // state document from an unknown future format
    StoreCorrupt,     // checksum mismatch or truncated document
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    bool retriable() const {
        return kind_ == ErrorKind::BackendTransport ||
               kind_ == ErrorKind::BackendProtocol;
    }

private:
    ErrorKind kind_;
};

// Turn rejected on ingest; carries the index the session expected next.
class InputError : public Error {
public:
    explicit InputError(const std::string& message, int expected_turn_index = -1)
        : Error(ErrorKind::Input, message), expected_turn_index_(expected_turn_index) {}

    int expected_turn_index() const { return expected_turn_index_; }

private:
    int expected_turn_index_;
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& message)
        : Error(ErrorKind::Invariant, message) {}
};

// Carries the raw backend output so callers can log or inspect it.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::string raw_output)
        : Error(ErrorKind::Parse, message), raw_output_(std::move(raw_output)) {}

    const std::string& raw_output() const { return raw_output_; }

private:
    std::string raw_output_;
};

class BackendError : public Error {
public:
    BackendError(ErrorKind kind, const std::string& message) : Error(kind, message) {}
};

class CapacityOverflowError : public Error {
public:
    explicit CapacityOverflowError(const std::string& message)
        : Error(ErrorKind::CapacityOverflow, message) {}
};

class StoreError : public Error {
public:
    StoreError(ErrorKind kind, const std::string& message) : Error(kind, message) {}
};

} // namespace storymem
