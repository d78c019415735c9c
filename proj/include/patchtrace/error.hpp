#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace patchtrace {

// Machine-readable error kinds. The names returned by error_kind_name are
// stable and appear verbatim in CLI/service error payloads.
enum class ErrorKind {
    malformed_signature,
    lex_error,
    parse_error,
    duplicate_construct,
    load_error,
    runtime_error,
    sink_error,
    unknown_entry,
    store_format_error,
    no_prior_revision,
    unknown_revision,
    io_error,
    index_format_error,
    malformed_record,
    unknown_app,
    unknown_vuln,
    no_change_list,
    state_corrupt,
    bind_error,
};

inline std::string_view error_kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::malformed_signature: return "MalformedSignature";
    case ErrorKind::lex_error: return "LexError";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::duplicate_construct: return "DuplicateConstruct";
    case ErrorKind::load_error: return "LoadError";
    case ErrorKind::runtime_error: return "RuntimeError";
    case ErrorKind::sink_error: return "SinkError";
    case ErrorKind::unknown_entry: return "UnknownEntry";
    case ErrorKind::store_format_error: return "StoreFormatError";
    case ErrorKind::no_prior_revision: return "NoPriorRevision";
    case ErrorKind::unknown_revision: return "UnknownRevision";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::index_format_error: return "IndexFormatError";
    case ErrorKind::malformed_record: return "MalformedRecord";
    case ErrorKind::unknown_app: return "UnknownApp";
    case ErrorKind::unknown_vuln: return "UnknownVuln";
    case ErrorKind::no_change_list: return "NoChangeList";
    case ErrorKind::state_corrupt: return "StateCorrupt";
    case ErrorKind::bind_error: return "BindError";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message)
        , kind_(kind)
        , message_(message)
    {}

    ErrorKind kind() const { return kind_; }
    const std::string& message() const { return message_; }
    std::string_view kind_name() const { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
    std::string message_;
};

[[noreturn]] inline void raise(ErrorKind kind, std::string message)
{
    throw Error(kind, std::move(message));
}

} // namespace patchtrace
