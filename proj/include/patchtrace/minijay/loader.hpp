#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "patchtrace/core/fs.hpp"
#include "patchtrace/core/model.hpp"
#include "patchtrace/minijay/extract.hpp"
#include "patchtrace/minijay/parser.hpp"
#include "patchtrace/resolve/digest.hpp"

namespace patchtrace::minijay {

constexpr int kAppOrigin = -1;

struct LoadedConstruct {
    ConstructSignature signature;
    std::string rendered;
    const FunctionDecl* decl = nullptr;
    int origin = kAppOrigin; // index into ProgramBundle::archives, or kAppOrigin
};

struct ClassInfo {
    std::string qualified; // package.Outer.Inner
    std::string package;
    const ClassDecl* decl = nullptr;
    std::vector<const FieldDecl*> fields; // declaration order
    std::map<std::pair<std::string, int>, const LoadedConstruct*> methods;
    std::map<int, const LoadedConstruct*> ctors; // keyed by arity
    int origin = kAppOrigin;
};

struct LoadedArchive {
    std::filesystem::path dir;
    std::string digest;
    std::vector<std::string> constructs; // rendered signatures
};

// A fully loaded program: the application tree plus every bundled archive,
// with one flat construct namespace. Signature collisions are load errors.
struct ProgramBundle {
    std::vector<std::unique_ptr<SourceUnit>> units;
    std::vector<LoadedArchive> archives;
    std::map<std::string, LoadedConstruct> constructs; // rendered signature ->
    std::map<std::pair<std::string, int>, const LoadedConstruct*> functions;
    std::map<std::string, ClassInfo> classes; // qualified name ->
    std::set<std::string> app_constructs;     // rendered signatures (S_a of the sources)

    std::string origin_label(int origin) const
    {
        return origin == kAppOrigin ? "application sources"
                                    : archives[static_cast<std::size_t>(origin)].dir.string();
    }
};

namespace detail {

inline std::vector<std::unique_ptr<SourceUnit>>
parse_source_tree(const std::filesystem::path& dir)
{
    auto files = patchtrace::detail::mj_files(dir);
    if (files.empty())
        raise(ErrorKind::load_error, "no .mj files under " + dir.string());
    std::vector<std::unique_ptr<SourceUnit>> units;
    for (const auto& rel : files) {
        try {
            units.push_back(std::make_unique<SourceUnit>(
                parse_unit(patchtrace::detail::read_file_bytes(dir / rel), rel)));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::io_error)
                throw;
            raise(ErrorKind::load_error, dir.string() + "/" + rel + ": " + e.message());
        }
    }
    return units;
}

struct RegistryBuilder {
    ProgramBundle& bundle;
    int origin;

    void add_unit(const SourceUnit& unit)
    {
        std::vector<std::string> container;
        for (const auto& decl : unit.declarations) {
            if (decl.kind == TopLevel::Kind::function)
                add_function(unit, decl.function, container, nullptr);
            else
                add_class(unit, *decl.class_decl, container);
        }
    }

    void add_class(const SourceUnit& unit, const ClassDecl& decl,
                   std::vector<std::string>& container)
    {
        container.push_back(decl.name);
        std::string qualified = qualified_name(unit.package, container);
        auto [it, inserted] = bundle.classes.emplace(qualified, ClassInfo{});
        if (!inserted)
            raise(ErrorKind::load_error,
                  "class '" + qualified + "' is declared in both "
                      + bundle.origin_label(it->second.origin) + " and "
                      + bundle.origin_label(origin));
        ClassInfo& info = it->second;
        info.qualified = qualified;
        info.package = unit.package;
        info.decl = &decl;
        info.origin = origin;

        for (const auto& member : decl.members) {
            switch (member.kind) {
            case ClassMember::Kind::field:
                info.fields.push_back(&member.field);
                break;
            case ClassMember::Kind::function:
                add_function(unit, member.function, container, &info);
                break;
            case ClassMember::Kind::nested_class:
                add_class(unit, *member.nested, container);
                break;
            }
        }
        container.pop_back();
    }

    void add_function(const SourceUnit& unit, const FunctionDecl& fn,
                      const std::vector<std::string>& container, ClassInfo* owner)
    {
        LoadedConstruct construct;
        construct.signature.package = unit.package;
        construct.signature.container = container;
        construct.signature.name = fn.name;
        construct.signature.arity = static_cast<int>(fn.params.size());
        construct.signature.kind = infer_construct_kind(!container.empty(), fn.name);
        validate_signature(construct.signature);
        construct.rendered = render_signature(construct.signature);
        construct.decl = &fn;
        construct.origin = origin;

        auto [it, inserted] = bundle.constructs.emplace(construct.rendered, construct);
        if (!inserted)
            raise(ErrorKind::load_error,
                  "construct '" + construct.rendered + "' is declared in both "
                      + bundle.origin_label(it->second.origin) + " and "
                      + bundle.origin_label(origin));
        const LoadedConstruct* stored = &it->second;

        if (owner) {
            if (fn.is_ctor)
                owner->ctors.emplace(construct.signature.arity, stored);
            else
                owner->methods.emplace(
                    std::make_pair(fn.name, construct.signature.arity), stored);
        } else {
            std::string qualified = unit.package.empty() ? fn.name
                                                         : unit.package + "." + fn.name;
            bundle.functions.emplace(std::make_pair(qualified, construct.signature.arity),
                                     stored);
        }
        if (origin == kAppOrigin)
            bundle.app_constructs.insert(construct.rendered);
        else
            bundle.archives[static_cast<std::size_t>(origin)].constructs.push_back(
                construct.rendered);
    }

    static std::string qualified_name(const std::string& package,
                                      const std::vector<std::string>& container)
    {
        std::string out = package;
        for (const auto& seg : container) {
            if (!out.empty())
                out += '.';
            out += seg;
        }
        return out;
    }
};

} // namespace detail

// Extracts an archive's constructs and computes its content digest.
inline std::pair<std::vector<ExtractedConstruct>, std::string>
load_archive(const std::filesystem::path& dir, DigestAlgo algo = DigestAlgo::sha1)
{
    auto units = detail::parse_source_tree(dir);
    std::vector<ExtractedConstruct> constructs;
    for (const auto& unit : units) {
        auto extracted = extract_constructs(*unit);
        constructs.insert(constructs.end(), std::make_move_iterator(extracted.begin()),
                          std::make_move_iterator(extracted.end()));
    }
    std::string digest;
    try {
        digest = archive_digest(dir, algo);
    } catch (const Error& e) {
        raise(ErrorKind::load_error, e.message());
    }
    return {std::move(constructs), std::move(digest)};
}

// Builds a bundle straight from source text, bypassing the filesystem; used
// heavily by the randomized suites. Library digests are supplied by the
// caller.
struct MemorySource {
    std::string path;
    std::string source;
};

struct MemoryArchive {
    std::string digest;
    std::vector<MemorySource> sources;
};

inline ProgramBundle load_bundle_from_memory(const std::vector<MemorySource>& app,
                                             const std::vector<MemoryArchive>& libs = {})
{
    ProgramBundle bundle;
    detail::RegistryBuilder app_builder{bundle, kAppOrigin};
    for (const auto& file : app) {
        auto unit = std::make_unique<SourceUnit>(parse_unit(file.source, file.path));
        app_builder.add_unit(*unit);
        bundle.units.push_back(std::move(unit));
    }
    for (const auto& lib : libs) {
        LoadedArchive archive;
        archive.digest = lib.digest;
        bundle.archives.push_back(std::move(archive));
        int origin = static_cast<int>(bundle.archives.size()) - 1;
        detail::RegistryBuilder lib_builder{bundle, origin};
        for (const auto& file : lib.sources) {
            auto unit = std::make_unique<SourceUnit>(parse_unit(file.source, file.path));
            lib_builder.add_unit(*unit);
            bundle.units.push_back(std::move(unit));
        }
    }
    return bundle;
}

inline ProgramBundle load_bundle(const std::filesystem::path& app_dir,
                                 const std::vector<std::filesystem::path>& lib_dirs,
                                 DigestAlgo algo = DigestAlgo::sha1)
{
    ProgramBundle bundle;

    auto app_units = detail::parse_source_tree(app_dir);
    detail::RegistryBuilder app_builder{bundle, kAppOrigin};
    for (auto& unit : app_units) {
        app_builder.add_unit(*unit);
        bundle.units.push_back(std::move(unit));
    }

    for (const auto& lib_dir : lib_dirs) {
        LoadedArchive archive;
        archive.dir = lib_dir;
        try {
            archive.digest = archive_digest(lib_dir, algo);
        } catch (const Error& e) {
            raise(ErrorKind::load_error, e.message());
        }
        bundle.archives.push_back(std::move(archive));
        int origin = static_cast<int>(bundle.archives.size()) - 1;

        auto lib_units = detail::parse_source_tree(lib_dir);
        detail::RegistryBuilder lib_builder{bundle, origin};
        for (auto& unit : lib_units) {
            lib_builder.add_unit(*unit);
            bundle.units.push_back(std::move(unit));
        }
    }
    return bundle;
}

} // namespace patchtrace::minijay
