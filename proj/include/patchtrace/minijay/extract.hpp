#pragma once

#include <set>
#include <string>
#include <vector>

#include "patchtrace/core/signature.hpp"
#include "patchtrace/minijay/ast.hpp"
#include "patchtrace/minijay/parser.hpp"

namespace patchtrace::minijay {

struct ExtractedConstruct {
    ConstructSignature signature;
    std::vector<std::string> body_tokens; // normalized: no comments, no whitespace
    std::string source_path;
    std::uint32_t start_line = 0;
};

// Drops trivia from a body span; what is left is compared by exact sequence
// equality. String literals keep their source bytes untouched.
inline std::vector<std::string> normalize_body(const SourceUnit& unit, const BodySpan& span)
{
    std::vector<std::string> out;
    for (std::size_t i = span.first_token; i <= span.last_token; ++i) {
        const Token& tok = unit.tokens[i];
        if (!is_trivia(tok))
            out.push_back(tok.text);
    }
    return out;
}

namespace detail {

inline void extract_from_class(const SourceUnit& unit, const ClassDecl& decl,
                               std::vector<std::string>& container,
                               std::vector<ExtractedConstruct>& out);

inline void extract_function(const SourceUnit& unit, const FunctionDecl& fn,
                             const std::vector<std::string>& container,
                             std::vector<ExtractedConstruct>& out)
{
    ExtractedConstruct construct;
    construct.signature.package = unit.package;
    construct.signature.container = container;
    construct.signature.name = fn.name;
    construct.signature.arity = static_cast<int>(fn.params.size());
    construct.signature.kind = infer_construct_kind(!container.empty(), fn.name);
    validate_signature(construct.signature);
    construct.body_tokens = normalize_body(unit, fn.span);
    construct.source_path = unit.path;
    construct.start_line = fn.line;
    out.push_back(std::move(construct));
}

inline void extract_from_class(const SourceUnit& unit, const ClassDecl& decl,
                               std::vector<std::string>& container,
                               std::vector<ExtractedConstruct>& out)
{
    container.push_back(decl.name);
    for (const auto& member : decl.members) {
        switch (member.kind) {
        case ClassMember::Kind::function:
            extract_function(unit, member.function, container, out);
            break;
        case ClassMember::Kind::nested_class:
            extract_from_class(unit, *member.nested, container, out);
            break;
        case ClassMember::Kind::field:
            break; // fields are not constructs
        }
    }
    container.pop_back();
}

} // namespace detail

// One construct per function, method and constructor, in source order.
inline std::vector<ExtractedConstruct> extract_constructs(const SourceUnit& unit)
{
    std::vector<ExtractedConstruct> out;
    std::vector<std::string> container;
    for (const auto& decl : unit.declarations) {
        if (decl.kind == TopLevel::Kind::function)
            detail::extract_function(unit, decl.function, container, out);
        else
            detail::extract_from_class(unit, *decl.class_decl, container, out);
    }

    std::set<std::string> seen;
    for (const auto& construct : out) {
        std::string rendered = render_signature(construct.signature);
        if (!seen.insert(rendered).second)
            raise(ErrorKind::duplicate_construct,
                  "'" + rendered + "' is declared more than once in " + unit.path);
    }
    return out;
}

} // namespace patchtrace::minijay
