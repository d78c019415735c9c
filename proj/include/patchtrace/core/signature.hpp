#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "patchtrace/error.hpp"

namespace patchtrace {

enum class ConstructKind { func, meth, cons };

inline std::string_view to_string(ConstructKind kind)
{
    switch (kind) {
    case ConstructKind::func: return "FUNC";
    case ConstructKind::meth: return "METH";
    case ConstructKind::cons: return "CONS";
    }
    return "FUNC";
}

// Globally unique identity of a programming construct (function, method or
// constructor). Canonical text form:
//
//     package.Container1.Container2.name/arity
//
// The kind is never spelled out; it is recoverable from the shape:
// CONS iff the name is "init" inside a class, METH for any other enclosed
// name, FUNC otherwise. Container segments start with an uppercase letter
// and package segments do not, which is what makes the dotted prefix
// unambiguous when parsing the canonical form back.
struct ConstructSignature {
    std::string package;                // dotted, possibly empty
    std::vector<std::string> container; // enclosing classes, outermost first
    std::string name;
    ConstructKind kind = ConstructKind::func;
    int arity = 0;

    bool operator==(const ConstructSignature&) const = default;
};

inline bool is_identifier(std::string_view text)
{
    if (text.empty())
        return false;
    unsigned char first = static_cast<unsigned char>(text[0]);
    if (!std::isalpha(first) && first != '_')
        return false;
    for (char c : text.substr(1)) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (!std::isalnum(uc) && uc != '_')
            return false;
    }
    return true;
}

// Package segments must not look like class names.
inline bool is_package_segment(std::string_view seg)
{
    return is_identifier(seg) && !std::isupper(static_cast<unsigned char>(seg[0]));
}

inline bool is_container_segment(std::string_view seg)
{
    return is_identifier(seg) && std::isupper(static_cast<unsigned char>(seg[0]));
}

inline ConstructKind infer_construct_kind(bool has_container, std::string_view name)
{
    if (has_container && name == "init")
        return ConstructKind::cons;
    if (has_container)
        return ConstructKind::meth;
    return ConstructKind::func;
}

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            return parts;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

inline void validate_signature(const ConstructSignature& sig)
{
    if (!sig.package.empty()) {
        for (const auto& seg : detail::split(sig.package, '.')) {
            if (!is_package_segment(seg))
                raise(ErrorKind::malformed_signature,
                      "invalid package segment '" + seg + "'");
        }
    }
    for (const auto& seg : sig.container) {
        if (!is_container_segment(seg))
            raise(ErrorKind::malformed_signature,
                  "container segment '" + seg + "' must start with an uppercase letter");
    }
    if (!is_identifier(sig.name))
        raise(ErrorKind::malformed_signature, "invalid name '" + sig.name + "'");
    if (sig.arity < 0)
        raise(ErrorKind::malformed_signature, "negative arity");
    if (sig.kind != infer_construct_kind(!sig.container.empty(), sig.name))
        raise(ErrorKind::malformed_signature,
              "kind does not match the shape of '" + sig.name + "'");
}

inline std::string render_signature(const ConstructSignature& sig)
{
    std::string out;
    if (!sig.package.empty()) {
        out += sig.package;
        out += '.';
    }
    for (const auto& seg : sig.container) {
        out += seg;
        out += '.';
    }
    out += sig.name;
    out += '/';
    out += std::to_string(sig.arity);
    return out;
}

inline ConstructSignature parse_signature(std::string_view text)
{
    std::size_t slash = text.find('/');
    if (slash == std::string_view::npos || text.find('/', slash + 1) != std::string_view::npos)
        raise(ErrorKind::malformed_signature,
              "expected exactly one '/arity' suffix in '" + std::string(text) + "'");

    std::string_view qualified = text.substr(0, slash);
    std::string_view arity_text = text.substr(slash + 1);
    if (arity_text.empty() || arity_text.size() > 9)
        raise(ErrorKind::malformed_signature, "bad arity in '" + std::string(text) + "'");
    int arity = 0;
    for (char c : arity_text) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            raise(ErrorKind::malformed_signature, "non-numeric arity in '" + std::string(text) + "'");
        arity = arity * 10 + (c - '0');
    }

    auto segments = detail::split(qualified, '.');
    for (const auto& seg : segments) {
        if (!is_identifier(seg))
            raise(ErrorKind::malformed_signature,
                  "invalid segment '" + seg + "' in '" + std::string(text) + "'");
    }

    ConstructSignature sig;
    sig.name = segments.back();
    segments.pop_back();
    sig.arity = arity;

    // Leading run of lowercase segments is the package; the rest must all be
    // container (class) segments.
    std::size_t i = 0;
    std::string package;
    while (i < segments.size() && is_package_segment(segments[i])) {
        if (!package.empty())
            package += '.';
        package += segments[i];
        ++i;
    }
    for (; i < segments.size(); ++i) {
        if (!is_container_segment(segments[i]))
            raise(ErrorKind::malformed_signature,
                  "package segment '" + segments[i] + "' after a class segment in '"
                      + std::string(text) + "'");
        sig.container.push_back(segments[i]);
    }
    sig.package = std::move(package);
    sig.kind = infer_construct_kind(!sig.container.empty(), sig.name);
    return sig;
}

} // namespace patchtrace
