#pragma once

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "patchtrace/core/model.hpp"
#include "patchtrace/patch/revision_store.hpp"

namespace patchtrace {

enum class DiscoveryMethod { explicit_record, reference_pattern, commit_log_search };

inline std::string_view to_string(DiscoveryMethod m)
{
    switch (m) {
    case DiscoveryMethod::explicit_record: return "EXPLICIT";
    case DiscoveryMethod::reference_pattern: return "REFERENCE_PATTERN";
    case DiscoveryMethod::commit_log_search: return "COMMIT_LOG_SEARCH";
    }
    return "EXPLICIT";
}

struct FixDiscovery {
    std::string vuln_id;
    std::vector<std::pair<std::string, DiscoveryMethod>> hits; // deduplicated, EXPLICIT first
};

namespace detail {

inline bool contains_case_insensitive(const std::string& haystack, const std::string& needle)
{
    if (needle.empty())
        return false;
    auto lower = [](const std::string& s) {
        std::string out = s;
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    };
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

} // namespace detail

// Vulnerability databases rarely link fix commits in a machine-readable way;
// these are the two heuristics plus the explicit escape hatch. Empty hits are
// a valid result meaning manual input is needed.
inline FixDiscovery discover_fix_revisions(const VulnerabilityRecord& vuln,
                                           const RevisionStore& store)
{
    FixDiscovery discovery;
    discovery.vuln_id = vuln.vuln_id;
    std::set<std::string> seen;

    auto add = [&](const std::string& revision, DiscoveryMethod method) {
        if (!store.has_revision(revision))
            return;
        if (seen.insert(revision).second)
            discovery.hits.emplace_back(revision, method);
    };

    for (const auto& [store_id, revision] : vuln.fix_revisions) {
        if (store_id == store.store_id)
            add(revision, DiscoveryMethod::explicit_record);
    }

    static const std::regex svn_revision(R"(/r(\d+)$)");
    static const std::regex commit_hash(R"(commit/([0-9a-fA-F]{7,40}))");
    for (const auto& reference : vuln.references) {
        std::smatch m;
        if (std::regex_search(reference, m, svn_revision))
            add(m[1].str(), DiscoveryMethod::reference_pattern);
        if (std::regex_search(reference, m, commit_hash))
            add(m[1].str(), DiscoveryMethod::reference_pattern);
    }

    for (const auto& entry : store.log) {
        if (detail::contains_case_insensitive(entry.message, vuln.vuln_id))
            add(entry.revision, DiscoveryMethod::commit_log_search);
    }

    return discovery;
}

} // namespace patchtrace
