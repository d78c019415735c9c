#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"

namespace patchtrace {

// Local stand-in for a central package repository: digest -> release rows
// plus the known version list per library.
struct PackageIndex {
    std::map<std::string, LibraryRelease> rows;          // keyed by digest
    std::map<LibraryId, std::vector<std::string>> by_library; // versions, ascending

    bool empty() const { return rows.empty(); }
};

inline PackageIndex build_package_index(std::vector<LibraryRelease> releases)
{
    PackageIndex index;
    for (auto& release : releases) {
        if (!is_hex_digest(release.digest))
            raise(ErrorKind::index_format_error,
                  "'" + release.digest + "' is not a lowercase hex digest");
        auto [it, inserted] = index.rows.emplace(release.digest, release);
        if (!inserted && it->second != release)
            raise(ErrorKind::index_format_error,
                  "digest " + release.digest + " maps to two different releases");
        auto& versions = index.by_library[release.library];
        if (std::find(versions.begin(), versions.end(), release.version) == versions.end())
            versions.push_back(release.version);
    }
    for (auto& [library, versions] : index.by_library)
        std::sort(versions.begin(), versions.end(),
                  [](const std::string& a, const std::string& b) { return version_less(a, b); });
    return index;
}

// index.tsv rows: digest<TAB>group<TAB>artifact<TAB>version
inline PackageIndex load_package_index(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        raise(ErrorKind::io_error, "cannot read " + path.string());

    std::vector<LibraryRelease> releases;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() != 4)
            raise(ErrorKind::index_format_error,
                  path.string() + ":" + std::to_string(line_no)
                      + ": expected digest<TAB>group<TAB>artifact<TAB>version");
        if (fields[1].empty() || fields[2].empty() || fields[3].empty())
            raise(ErrorKind::index_format_error,
                  path.string() + ":" + std::to_string(line_no) + ": empty field");
        releases.push_back(LibraryRelease{LibraryId{fields[1], fields[2]}, fields[3], fields[0]});
    }
    return build_package_index(std::move(releases));
}

struct DigestLookup {
    LibraryRelease release;
    std::vector<std::string> known_versions; // every indexed version of the library
};

// Exact-match lookup; a miss is a value (the caller highlights it).
inline std::optional<DigestLookup> lookup_digest(const PackageIndex& index,
                                                 const std::string& digest)
{
    auto it = index.rows.find(digest);
    if (it == index.rows.end())
        return std::nullopt;
    DigestLookup hit;
    hit.release = it->second;
    auto versions = index.by_library.find(it->second.library);
    if (versions != index.by_library.end())
        hit.known_versions = versions->second;
    return hit;
}

} // namespace patchtrace
