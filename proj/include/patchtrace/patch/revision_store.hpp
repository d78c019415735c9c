#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"

namespace patchtrace {

// Deterministic on-disk model of a library's linear version history:
//   log.tsv    revId<TAB>ISO8601<TAB>message   (ancestor-first)
//   tags.tsv   tagName<TAB>revId<TAB>version
//   revisions/<revId>/**/*.mj  full snapshots
struct LogEntry {
    std::string revision;
    std::int64_t timestamp = 0;
    std::string message;
};

struct StoreTag {
    std::string name;
    std::string revision;
    std::string version;
};

struct RevisionStore {
    std::string store_id;
    std::filesystem::path root;
    std::vector<LogEntry> log; // ancestor-first
    std::vector<StoreTag> tags;
    std::map<std::string, std::size_t> log_index;

    bool has_revision(const std::string& revision) const
    {
        return log_index.find(revision) != log_index.end();
    }

    std::size_t index_of(const std::string& revision) const
    {
        auto it = log_index.find(revision);
        if (it == log_index.end())
            raise(ErrorKind::unknown_revision,
                  "revision '" + revision + "' is not in the log of store " + store_id);
        return it->second;
    }

    std::filesystem::path snapshot_dir(const std::string& revision) const
    {
        return root / "revisions" / revision;
    }
};

namespace detail {

// Messages are single rows; literal tabs are stored as \t, backslashes as \\.
inline std::string unescape_tsv(const std::string& text, const std::string& where)
{
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\') {
            out += text[i];
            continue;
        }
        if (i + 1 >= text.size())
            raise(ErrorKind::store_format_error, where + ": dangling backslash");
        char next = text[++i];
        if (next == 't')
            out += '\t';
        else if (next == '\\')
            out += '\\';
        else
            raise(ErrorKind::store_format_error,
                  where + ": unknown escape '\\" + std::string(1, next) + "'");
    }
    return out;
}

inline std::vector<std::vector<std::string>> read_tsv_rows(const std::filesystem::path& path,
                                                           std::size_t fields)
{
    std::ifstream in(path);
    if (!in)
        raise(ErrorKind::store_format_error, "missing " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto cols = split(line, '\t');
        if (cols.size() != fields)
            raise(ErrorKind::store_format_error,
                  path.string() + ":" + std::to_string(line_no) + ": expected "
                      + std::to_string(fields) + " tab-separated fields");
        rows.push_back(std::move(cols));
    }
    return rows;
}

} // namespace detail

inline RevisionStore load_revision_store(const std::filesystem::path& path)
{
    namespace fs = std::filesystem;
    RevisionStore store;
    store.root = path;
    store.store_id = path.filename().string();

    auto log_rows = detail::read_tsv_rows(path / "log.tsv", 3);
    for (std::size_t i = 0; i < log_rows.size(); ++i) {
        auto& row = log_rows[i];
        LogEntry entry;
        entry.revision = row[0];
        if (entry.revision.empty())
            raise(ErrorKind::store_format_error, "empty revision id in log.tsv");
        try {
            entry.timestamp = parse_utc(row[1]);
        } catch (const Error& e) {
            raise(ErrorKind::store_format_error, "log.tsv: " + e.message());
        }
        entry.message = detail::unescape_tsv(row[2], "log.tsv row " + std::to_string(i + 1));
        if (!store.log_index.emplace(entry.revision, store.log.size()).second)
            raise(ErrorKind::store_format_error,
                  "revision '" + entry.revision + "' appears twice in log.tsv");
        store.log.push_back(std::move(entry));
    }

    auto tag_rows = detail::read_tsv_rows(path / "tags.tsv", 3);
    for (auto& row : tag_rows) {
        StoreTag tag{row[0], row[1], row[2]};
        if (tag.name.empty() || tag.version.empty())
            raise(ErrorKind::store_format_error, "tags.tsv: empty tag name or version");
        if (!store.has_revision(tag.revision))
            raise(ErrorKind::store_format_error,
                  "tag '" + tag.name + "' references unknown revision '" + tag.revision + "'");
        store.tags.push_back(std::move(tag));
    }

    for (const auto& entry : store.log) {
        if (!fs::is_directory(store.snapshot_dir(entry.revision)))
            raise(ErrorKind::store_format_error,
                  "revision '" + entry.revision + "' has no snapshot directory under "
                      + (path / "revisions").string());
    }
    return store;
}

// The revision immediately preceding `revision` in the log.
inline std::string prior_revision(const RevisionStore& store, const std::string& revision)
{
    std::size_t index = store.index_of(revision);
    if (index == 0)
        raise(ErrorKind::no_prior_revision,
              "revision '" + revision + "' is the first entry of store " + store.store_id);
    return store.log[index - 1].revision;
}

// Versions tagged strictly before the fix are affected; versions tagged at
// or after the fix already contain the patch.
inline TagVersionEvidence affected_versions_by_tags(const RevisionStore& store,
                                                    const std::string& fix_revision)
{
    std::size_t fix_index = store.index_of(fix_revision);
    TagVersionEvidence evidence;
    for (const auto& tag : store.tags) {
        if (store.index_of(tag.revision) < fix_index)
            evidence.affected.push_back(tag.version);
        else
            evidence.fixed.push_back(tag.version);
    }
    auto by_version = [](const std::string& a, const std::string& b) {
        return version_less(a, b);
    };
    std::sort(evidence.affected.begin(), evidence.affected.end(), by_version);
    std::sort(evidence.fixed.begin(), evidence.fixed.end(), by_version);
    return evidence;
}

} // namespace patchtrace
