#pragma once

#include <stdexcept>
#include <string>

namespace benchup {

/// Base class for every error this toolkit raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// corpus
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte " + std::to_string(byte_offset) + ")"),
          byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class MissingRationaleError : public Error {
public:
    using Error::Error;
};

// promptkit
class TemplateError : public Error {
public:
    using Error::Error;
};

// llm gateway
class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class BackendRejected : public Error {
public:
    BackendRejected(const std::string& what, int status, std::string body_excerpt)
        : Error(what), status(status), body_excerpt(std::move(body_excerpt)) {}
    int status;
    std::string body_excerpt;
};

// validators
class HintParseError : public Error {
public:
    HintParseError(const std::string& what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"),
          position(position) {}
    std::size_t position;
};

class EvalError : public Error {
public:
    using Error::Error;
};

// evaluator
class JudgeParseError : public Error {
public:
    JudgeParseError(const std::string& what, std::string raw)
        : Error(what), raw(std::move(raw)) {}
    std::string raw;
};

class EmptyEvaluation : public Error {
public:
    using Error::Error;
};

class PopularityUnknown : public Error {
public:
    using Error::Error;
};

}  // namespace benchup
