#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "patchtrace/core/model.hpp"

namespace patchtrace {

enum class CpeConfidence { exact, token_subset, none };

inline std::string_view to_string(CpeConfidence c)
{
    switch (c) {
    case CpeConfidence::exact: return "EXACT";
    case CpeConfidence::token_subset: return "TOKEN_SUBSET";
    case CpeConfidence::none: return "NONE";
    }
    return "NONE";
}

struct CpeMatch {
    CpeName cpe;
    LibraryId library;
    CpeConfidence confidence = CpeConfidence::none;
    bool ambiguous = false; // single-token subset matches need a human eye
};

namespace detail {

// Lowercase and split on '-', '_' and '.'.
inline std::vector<std::string> name_tokens(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (c == '-' || c == '_' || c == '.') {
            if (!current.empty())
                tokens.push_back(std::move(current));
            current.clear();
        } else {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

inline std::string joined(const std::vector<std::string>& tokens)
{
    std::string out;
    for (const auto& t : tokens)
        out += t;
    return out;
}

} // namespace detail

// CPE product names rarely map cleanly onto package coordinates; this is the
// deterministic token heuristic. Uncertain matches are flagged, never
// silently accepted.
inline CpeMatch match_cpe(const CpeName& cpe, const LibraryId& library)
{
    CpeMatch match;
    match.cpe = cpe;
    match.library = library;

    auto product = detail::name_tokens(cpe.product);
    auto artifact = detail::name_tokens(library.artifact);
    auto group = detail::name_tokens(library.group);

    std::vector<std::string> housing = group;
    housing.insert(housing.end(), artifact.begin(), artifact.end());
    std::sort(housing.begin(), housing.end());

    bool subset = !product.empty()
        && std::all_of(product.begin(), product.end(), [&](const std::string& token) {
               return std::binary_search(housing.begin(), housing.end(), token);
           });

    if (subset && detail::joined(product) == detail::joined(artifact)) {
        match.confidence = CpeConfidence::exact;
    } else if (subset) {
        match.confidence = CpeConfidence::token_subset;
        match.ambiguous = product.size() == 1;
    } else {
        match.confidence = CpeConfidence::none;
    }
    return match;
}

enum class VersionAffected { affected, not_affected, unknown };

inline std::string_view to_string(VersionAffected v)
{
    switch (v) {
    case VersionAffected::affected: return "AFFECTED";
    case VersionAffected::not_affected: return "NOT_AFFECTED";
    case VersionAffected::unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

// Tag evidence wins whenever present; CPE ranges are the fallback only.
inline VersionAffected is_version_affected(const VulnerabilityRecord& vuln,
                                           const LibraryRelease& release,
                                           const std::optional<TagVersionEvidence>& tags)
{
    auto same_version = [&](const std::string& v) {
        return compare_versions(v, release.version) == Ordering::eq;
    };

    if (tags) {
        if (std::any_of(tags->affected.begin(), tags->affected.end(), same_version))
            return VersionAffected::affected;
        if (std::any_of(tags->fixed.begin(), tags->fixed.end(), same_version))
            return VersionAffected::not_affected;
        return VersionAffected::unknown;
    }

    bool any_family_match = false;
    for (const auto& cpe : vuln.affected_cpes) {
        if (cpe.part != 'a')
            continue;
        if (match_cpe(cpe, release.library).confidence == CpeConfidence::none)
            continue;
        any_family_match = true;
        if (cpe.version && same_version(*cpe.version))
            return VersionAffected::affected;
        if (cpe.version_end_excluding
            && compare_versions(*cpe.version_end_excluding, release.version) == Ordering::gt)
            return VersionAffected::affected;
    }
    if (any_family_match)
        return VersionAffected::not_affected;
    return VersionAffected::unknown;
}

} // namespace patchtrace
