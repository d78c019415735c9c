#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "patchtrace/core/signature.hpp"
#include "patchtrace/core/time.hpp"
#include "patchtrace/core/version.hpp"
#include "patchtrace/error.hpp"

namespace patchtrace {

// ---------------------------------------------------------------------------
// Application and library identity

struct AppId {
    std::string group;
    std::string artifact;
    std::string version;

    std::string canonical() const { return group + ":" + artifact + ":" + version; }
    bool operator==(const AppId&) const = default;
    auto operator<=>(const AppId&) const = default;
};

inline AppId parse_app_id(std::string_view text)
{
    auto parts = detail::split(text, ':');
    if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty())
        raise(ErrorKind::malformed_record,
              "application id '" + std::string(text) + "' is not group:artifact:version");
    return AppId{std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

struct LibraryId {
    std::string group;
    std::string artifact;

    std::string canonical() const { return group + ":" + artifact; }
    bool operator==(const LibraryId&) const = default;
    auto operator<=>(const LibraryId&) const = default;
};

inline LibraryId parse_library_id(std::string_view text)
{
    auto parts = detail::split(text, ':');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
        raise(ErrorKind::malformed_record,
              "library id '" + std::string(text) + "' is not group:artifact");
    return LibraryId{std::move(parts[0]), std::move(parts[1])};
}

enum class DigestAlgo { sha1, sha256 };

inline std::size_t digest_hex_length(DigestAlgo algo)
{
    return algo == DigestAlgo::sha1 ? 40 : 64;
}

inline std::string_view to_string(DigestAlgo algo)
{
    return algo == DigestAlgo::sha1 ? "sha1" : "sha256";
}

inline DigestAlgo parse_digest_algo(std::string_view text)
{
    if (text == "sha1")
        return DigestAlgo::sha1;
    if (text == "sha256")
        return DigestAlgo::sha256;
    raise(ErrorKind::malformed_record, "unknown digest algorithm '" + std::string(text) + "'");
}

inline bool is_hex_digest(std::string_view text)
{
    if (text.size() != 40 && text.size() != 64)
        return false;
    for (char c : text) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok)
            return false;
    }
    return true;
}

struct LibraryRelease {
    LibraryId library;
    std::string version;
    std::string digest; // lowercase hex

    bool operator==(const LibraryRelease&) const = default;
};

// ---------------------------------------------------------------------------
// Change-lists (the C_ij sets)

enum class ChangeKind { add, mod, del };

inline std::string_view to_string(ChangeKind kind)
{
    switch (kind) {
    case ChangeKind::add: return "ADD";
    case ChangeKind::mod: return "MOD";
    case ChangeKind::del: return "DEL";
    }
    return "MOD";
}

inline ChangeKind parse_change_kind(std::string_view text)
{
    if (text == "ADD")
        return ChangeKind::add;
    if (text == "MOD")
        return ChangeKind::mod;
    if (text == "DEL")
        return ChangeKind::del;
    raise(ErrorKind::malformed_record, "unknown change kind '" + std::string(text) + "'");
}

struct ChangeEntry {
    ConstructSignature signature;
    ChangeKind kind = ChangeKind::mod;

    bool operator==(const ChangeEntry&) const = default;
};

struct ChangeList {
    LibraryId library;
    std::string vuln_id;
    std::string fix_revision;
    std::vector<ChangeEntry> entries; // unique per signature, sorted by rendered form
};

// ---------------------------------------------------------------------------
// Traces (the T_a sets)

struct TraceRecord {
    AppId app;
    ConstructSignature signature;
    std::optional<std::string> digest; // nullopt for the application's own code
    std::int64_t first_seen = 0;       // epoch seconds, UTC
    std::string run_id;
};

// Earliest observation wins; ties broken by run id. Makes ingestion
// order-independent.
inline bool trace_record_precedes(const TraceRecord& a, const TraceRecord& b)
{
    return std::tie(a.first_seen, a.run_id) < std::tie(b.first_seen, b.run_id);
}

// ---------------------------------------------------------------------------
// Vulnerability records and CPE names

struct CpeName {
    char part = 'a'; // a = application, o = OS, h = hardware
    std::string vendor;
    std::string product;
    std::optional<std::string> version;
    std::optional<std::string> version_end_excluding; // "before X" semantics

    std::string uri() const
    {
        std::string out = "cpe:/";
        out += part;
        out += ':' + vendor + ':' + product;
        if (version)
            out += ':' + *version;
        return out;
    }

    bool operator==(const CpeName&) const = default;
};

// URI binding form: cpe:/a:vendor:product[:version]
inline CpeName parse_cpe(std::string_view uri,
                         std::optional<std::string> version_end_excluding = std::nullopt)
{
    constexpr std::string_view prefix = "cpe:/";
    if (uri.substr(0, prefix.size()) != prefix)
        raise(ErrorKind::malformed_record, "CPE '" + std::string(uri) + "' must start with cpe:/");
    auto parts = detail::split(uri.substr(prefix.size()), ':');
    if (parts.size() < 3 || parts.size() > 4)
        raise(ErrorKind::malformed_record,
              "CPE '" + std::string(uri) + "' is not cpe:/part:vendor:product[:version]");
    if (parts[0].size() != 1 || (parts[0][0] != 'a' && parts[0][0] != 'o' && parts[0][0] != 'h'))
        raise(ErrorKind::malformed_record, "CPE part must be one of a, o, h");
    if (parts[1].empty() || parts[2].empty())
        raise(ErrorKind::malformed_record, "CPE vendor and product must be non-empty");

    CpeName cpe;
    cpe.part = parts[0][0];
    cpe.vendor = std::move(parts[1]);
    cpe.product = std::move(parts[2]);
    if (parts.size() == 4 && !parts[3].empty())
        cpe.version = std::move(parts[3]);
    cpe.version_end_excluding = std::move(version_end_excluding);
    return cpe;
}

inline bool is_valid_vuln_id(std::string_view id)
{
    static const std::regex pattern(R"(CVE-\d{4}-\d{4,}|VULN-\w+)");
    return std::regex_match(id.begin(), id.end(), pattern);
}

struct VulnerabilityRecord {
    std::string vuln_id;
    std::string description;
    std::vector<std::string> references;
    std::vector<CpeName> affected_cpes;
    // Optional explicit (storeId, revisionId) pairs naming the fix commits.
    std::vector<std::pair<std::string, std::string>> fix_revisions;
};

// Tag-derived version sets for one (library, vulnerability) pair.
struct TagVersionEvidence {
    std::vector<std::string> affected; // tag versions applied before the fix
    std::vector<std::string> fixed;    // tag versions at or after the fix
};

// ---------------------------------------------------------------------------
// Verdicts

enum class VerdictStatus {
    relevant_traced,
    affected_not_traced,
    not_affected_version,
    unknown_version,
};

inline std::string_view to_string(VerdictStatus status)
{
    switch (status) {
    case VerdictStatus::relevant_traced: return "RELEVANT_TRACED";
    case VerdictStatus::affected_not_traced: return "AFFECTED_NOT_TRACED";
    case VerdictStatus::not_affected_version: return "NOT_AFFECTED_VERSION";
    case VerdictStatus::unknown_version: return "UNKNOWN_VERSION";
    }
    return "UNKNOWN_VERSION";
}

struct EvidenceItem {
    ConstructSignature signature;
    ChangeKind kind = ChangeKind::mod;
    std::int64_t first_seen = 0;

    bool operator==(const EvidenceItem&) const = default;
};

struct Verdict {
    AppId app;
    std::string vuln_id;
    std::optional<LibraryRelease> library_in_use;
    VerdictStatus status = VerdictStatus::unknown_version;
    std::vector<EvidenceItem> evidence; // non-empty iff status == relevant_traced
    std::optional<std::string> latest_non_vulnerable;
};

// ---------------------------------------------------------------------------
// Declared archives (build-time dependency statements)

struct DeclaredArchive {
    LibraryId library;
    std::string version;
    std::string digest;
    // Total construct count of the archive, when the declarer knows it;
    // feeds the per-archive coverage denominator.
    std::optional<std::int64_t> construct_total;

    bool operator==(const DeclaredArchive&) const = default;
};

} // namespace patchtrace
