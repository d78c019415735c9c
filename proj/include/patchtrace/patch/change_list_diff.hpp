#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "patchtrace/core/fs.hpp"
#include "patchtrace/core/model.hpp"
#include "patchtrace/minijay/extract.hpp"
#include "patchtrace/patch/revision_store.hpp"

namespace patchtrace {

// All constructs of a source tree, keyed by rendered signature.
inline std::map<std::string, minijay::ExtractedConstruct>
extract_tree_constructs(const std::filesystem::path& dir, const std::string& label)
{
    std::map<std::string, minijay::ExtractedConstruct> constructs;
    for (const auto& rel : detail::mj_files(dir)) {
        minijay::SourceUnit unit;
        try {
            unit = minijay::parse_unit(detail::read_file_bytes(dir / rel), rel);
        } catch (const Error& e) {
            raise(e.kind(), label + ": " + e.message());
        }
        for (auto& construct : minijay::extract_constructs(unit)) {
            std::string rendered = render_signature(construct.signature);
            if (!constructs.emplace(rendered, std::move(construct)).second)
                raise(ErrorKind::duplicate_construct,
                      "'" + rendered + "' is declared more than once in " + label);
        }
    }
    return constructs;
}

// ADD for constructs only in the patched snapshot, DEL for constructs only
// in the vulnerable one, MOD where both exist with different normalized
// bodies.
inline ChangeList diff_construct_maps(
    const std::map<std::string, minijay::ExtractedConstruct>& vulnerable,
    const std::map<std::string, minijay::ExtractedConstruct>& patched, const LibraryId& library,
    const std::string& vuln_id, const std::string& fix_revision)
{
    ChangeList change_list;
    change_list.library = library;
    change_list.vuln_id = vuln_id;
    change_list.fix_revision = fix_revision;

    for (const auto& [sig, construct] : patched) {
        auto old = vulnerable.find(sig);
        if (old == vulnerable.end())
            change_list.entries.push_back(ChangeEntry{construct.signature, ChangeKind::add});
        else if (old->second.body_tokens != construct.body_tokens)
            change_list.entries.push_back(ChangeEntry{construct.signature, ChangeKind::mod});
    }
    for (const auto& [sig, construct] : vulnerable) {
        if (patched.find(sig) == patched.end())
            change_list.entries.push_back(ChangeEntry{construct.signature, ChangeKind::del});
    }

    std::sort(change_list.entries.begin(), change_list.entries.end(),
              [](const ChangeEntry& a, const ChangeEntry& b) {
                  return render_signature(a.signature) < render_signature(b.signature);
              });
    return change_list;
}

// The change-list of a single fix revision against its immediate ancestor.
inline ChangeList compute_change_list(const RevisionStore& store, const std::string& fix_revision,
                                      const LibraryId& library, const std::string& vuln_id)
{
    std::string vulnerable_revision = prior_revision(store, fix_revision);
    auto vulnerable = extract_tree_constructs(store.snapshot_dir(vulnerable_revision),
                                              store.store_id + "@" + vulnerable_revision);
    auto patched = extract_tree_constructs(store.snapshot_dir(fix_revision),
                                           store.store_id + "@" + fix_revision);
    return diff_construct_maps(vulnerable, patched, library, vuln_id, fix_revision);
}

// Multi-commit fixes: the union of per-revision diffs, each against its own
// prior revision. The first revision's kind wins when a signature repeats.
inline ChangeList compute_change_list_union(const RevisionStore& store,
                                            const std::vector<std::string>& fix_revisions,
                                            const LibraryId& library, const std::string& vuln_id)
{
    ChangeList merged;
    merged.library = library;
    merged.vuln_id = vuln_id;

    std::map<std::string, ChangeEntry> by_signature;
    for (const auto& revision : fix_revisions) {
        ChangeList part = compute_change_list(store, revision, library, vuln_id);
        for (auto& entry : part.entries)
            by_signature.emplace(render_signature(entry.signature), std::move(entry));
        if (!merged.fix_revision.empty())
            merged.fix_revision += ',';
        merged.fix_revision += revision;
    }
    for (auto& [sig, entry] : by_signature)
        merged.entries.push_back(std::move(entry));
    return merged;
}

} // namespace patchtrace
