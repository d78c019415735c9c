#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "patchtrace/minijay/extract.hpp"
#include "patchtrace/minijay/parser.hpp"

namespace patchtrace::minijay {

namespace detail {

struct Insertion {
    std::size_t offset; // byte position the text goes before
    std::string text;
};

inline void collect_instrumentation(const SourceUnit& unit, const FunctionDecl& fn,
                                    const std::vector<std::string>& container,
                                    std::string_view digest, std::vector<Insertion>& out)
{
    // A body that already starts with a __trace call keeps its existing probe.
    std::size_t i = fn.span.first_token + 1;
    while (i < fn.span.last_token && is_trivia(unit.tokens[i]))
        ++i;
    if (i + 1 < fn.span.last_token && unit.tokens[i].kind == TokenKind::identifier
        && unit.tokens[i].text == "__trace" && unit.tokens[i + 1].text == "(")
        return;

    ConstructSignature sig;
    sig.package = unit.package;
    sig.container = container;
    sig.name = fn.name;
    sig.arity = static_cast<int>(fn.params.size());
    sig.kind = infer_construct_kind(!container.empty(), fn.name);

    std::string text = " __trace(\"" + render_signature(sig) + "\", \"" + std::string(digest)
        + "\");";
    if (fn.span.open_offset + 1 < unit.source.size()
        && unit.source[fn.span.open_offset + 1] == '}')
        text += ' ';
    out.push_back(Insertion{fn.span.open_offset + 1, std::move(text)});
}

inline void collect_class_instrumentation(const SourceUnit& unit, const ClassDecl& decl,
                                          std::vector<std::string>& container,
                                          std::string_view digest, std::vector<Insertion>& out)
{
    container.push_back(decl.name);
    for (const auto& member : decl.members) {
        if (member.kind == ClassMember::Kind::function)
            collect_instrumentation(unit, member.function, container, digest, out);
        else if (member.kind == ClassMember::Kind::nested_class)
            collect_class_instrumentation(unit, *member.nested, container, digest, out);
    }
    container.pop_back();
}

} // namespace detail

// Static instrumentation: inserts `__trace("SIG", "DIGEST");` as the first
// statement of every construct body, leaving every other byte untouched.
// Passing an empty digest marks application-own code. Re-running over
// already-instrumented source is a no-op.
inline std::string instrument_source(std::string_view source, std::string path,
                                     std::string_view archive_digest = {})
{
    SourceUnit unit = parse_unit(source, std::move(path));

    std::vector<detail::Insertion> insertions;
    std::vector<std::string> container;
    for (const auto& decl : unit.declarations) {
        if (decl.kind == TopLevel::Kind::function)
            detail::collect_instrumentation(unit, decl.function, container, archive_digest,
                                            insertions);
        else
            detail::collect_class_instrumentation(unit, *decl.class_decl, container,
                                                  archive_digest, insertions);
    }
    std::sort(insertions.begin(), insertions.end(),
              [](const auto& a, const auto& b) { return a.offset < b.offset; });

    std::string out;
    out.reserve(source.size() + insertions.size() * 48);
    std::size_t cursor = 0;
    for (const auto& ins : insertions) {
        out.append(source.substr(cursor, ins.offset - cursor));
        out.append(ins.text);
        cursor = ins.offset;
    }
    out.append(source.substr(cursor));
    return out;
}

} // namespace patchtrace::minijay
