#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpseudo {

// Base for every error the library raises on bad input or environment failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KeyLengthError : public Error {
public:
    KeyLengthError(std::size_t got, std::size_t want)
        : Error("key length " + std::to_string(got) + " bytes, expected " + std::to_string(want)) {}
};

class EntropyUnavailable : public Error {
public:
    EntropyUnavailable() : Error("OS randomness source failed") {}
};

class UnknownSuite : public Error {
public:
    explicit UnknownSuite(const std::string& token) : Error("unknown suite '" + token + "'") {}
};

class AttributeTooLong : public Error {
public:
    explicit AttributeTooLong(std::size_t index)
        : Error("attribute " + std::to_string(index) + " exceeds 65535 bytes") {}
};

class TooManyAttributes : public Error {
public:
    explicit TooManyAttributes(std::size_t count)
        : Error(std::to_string(count) + " attributes given, at most 255 allowed") {}
};

class EmptyAttribute : public Error {
public:
    explicit EmptyAttribute(std::size_t index)
        : Error(index == static_cast<std::size_t>(-1) ? "identifier has no attributes"
                                                      : "attribute " + std::to_string(index) + " is empty") {}
};

class DomainLabelTooLong : public Error {
public:
    DomainLabelTooLong() : Error("domain label exceeds 65535 bytes") {}
};

class MalformedEncoding : public Error {
public:
    MalformedEncoding(std::size_t offset, const std::string& what)
        : Error("malformed identifier encoding at byte " + std::to_string(offset) + ": " + what) {}
};

class DuplicateIdentifier : public Error {
public:
    DuplicateIdentifier(std::size_t first, std::size_t second)
        : Error("identifiers " + std::to_string(first) + " and " + std::to_string(second) + " are identical") {}
};

class IndexOutOfRange : public Error {
public:
    IndexOutOfRange(std::size_t index, std::size_t count)
        : Error("identifier index " + std::to_string(index) + " out of range [0, " + std::to_string(count) + ")") {}
};

class MalformedProof : public Error {
public:
    MalformedProof(const std::string& field, const std::string& what)
        : Error("malformed proof at '" + field + "': " + what) {}
};

class MalformedPseudonym : public Error {
public:
    MalformedPseudonym(const std::string& field, const std::string& what)
        : Error("malformed pseudonym at '" + field + "': " + what) {}
};

class DuplicateLabel : public Error {
public:
    explicit DuplicateLabel(const std::string& label) : Error("key label '" + label + "' already exists") {}
};

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(const std::string& label) : Error("no key with label '" + label + "'") {}
};

class StorageFailure : public Error {
public:
    explicit StorageFailure(const std::string& what) : Error("keystore: " + what) {}
};

class ScenarioError : public Error {
public:
    ScenarioError(std::size_t step, const std::string& what)
        : Error("scenario step " + std::to_string(step) + ": " + what), step_(step) {}
    explicit ScenarioError(const std::string& what) : Error("scenario: " + what), step_(npos) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace mpseudo
