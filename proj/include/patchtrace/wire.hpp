#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"

namespace patchtrace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Trace wire format: one JSON object per line,
// {"app":"g:a:v","sig":"...","digest":"...|null","firstSeen":"ISO8601","runId":"..."}

inline OrderedJson trace_to_json(const TraceRecord& record)
{
    OrderedJson j;
    j["app"] = record.app.canonical();
    j["sig"] = render_signature(record.signature);
    j["digest"] = record.digest ? Json(*record.digest) : Json(nullptr);
    j["firstSeen"] = format_utc(record.first_seen);
    j["runId"] = record.run_id;
    return j;
}

inline std::string format_trace_line(const TraceRecord& record)
{
    return trace_to_json(record).dump();
}

namespace detail {

inline const Json& require_field(const Json& j, const char* key, const char* what)
{
    auto it = j.find(key);
    if (it == j.end())
        raise(ErrorKind::malformed_record, std::string(what) + " is missing field '" + key + "'");
    return *it;
}

inline std::string require_string(const Json& j, const char* key, const char* what)
{
    const Json& field = require_field(j, key, what);
    if (!field.is_string())
        raise(ErrorKind::malformed_record,
              std::string(what) + " field '" + key + "' must be a string");
    return field.get<std::string>();
}

} // namespace detail

inline TraceRecord parse_trace_record(const Json& j)
{
    if (!j.is_object())
        raise(ErrorKind::malformed_record, "trace record must be a JSON object");
    TraceRecord record;
    record.app = parse_app_id(detail::require_string(j, "app", "trace record"));
    try {
        record.signature = parse_signature(detail::require_string(j, "sig", "trace record"));
    } catch (const Error& e) {
        raise(ErrorKind::malformed_record, e.message());
    }
    const Json& digest = detail::require_field(j, "digest", "trace record");
    if (digest.is_null()) {
        record.digest = std::nullopt;
    } else if (digest.is_string()) {
        record.digest = digest.get<std::string>();
        if (!is_hex_digest(*record.digest))
            raise(ErrorKind::malformed_record,
                  "'" + *record.digest + "' is not a lowercase hex digest");
    } else {
        raise(ErrorKind::malformed_record, "trace record field 'digest' must be string or null");
    }
    record.first_seen = parse_utc(detail::require_string(j, "firstSeen", "trace record"));
    record.run_id = detail::require_string(j, "runId", "trace record");
    if (record.run_id.empty())
        raise(ErrorKind::malformed_record, "trace record has an empty runId");
    return record;
}

inline TraceRecord parse_trace_line(std::string_view line)
{
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
        raise(ErrorKind::malformed_record, "trace line is not valid JSON");
    return parse_trace_record(j);
}

// ---------------------------------------------------------------------------
// Change-lists. The optional affected/fixed version arrays carry tag evidence
// computed at patch-analysis time.

inline Json change_list_to_json(const ChangeList& change_list,
                                const std::optional<TagVersionEvidence>& tags = std::nullopt)
{
    Json entries = Json::array();
    for (const auto& entry : change_list.entries)
        entries.push_back(Json{{"sig", render_signature(entry.signature)},
                               {"kind", std::string(to_string(entry.kind))}});
    Json j{
        {"library", change_list.library.canonical()},
        {"vuln", change_list.vuln_id},
        {"fixRevision", change_list.fix_revision},
        {"entries", std::move(entries)},
    };
    if (tags) {
        j["affectedVersions"] = tags->affected;
        j["fixedVersions"] = tags->fixed;
    }
    return j;
}

inline std::pair<ChangeList, std::optional<TagVersionEvidence>>
change_list_from_json(const Json& j)
{
    if (!j.is_object())
        raise(ErrorKind::malformed_record, "change-list must be a JSON object");
    ChangeList change_list;
    change_list.library = parse_library_id(detail::require_string(j, "library", "change-list"));
    change_list.vuln_id = detail::require_string(j, "vuln", "change-list");
    if (!is_valid_vuln_id(change_list.vuln_id))
        raise(ErrorKind::malformed_record,
              "'" + change_list.vuln_id + "' is not a valid vulnerability id");
    change_list.fix_revision = detail::require_string(j, "fixRevision", "change-list");

    const Json& entries = detail::require_field(j, "entries", "change-list");
    if (!entries.is_array())
        raise(ErrorKind::malformed_record, "change-list field 'entries' must be an array");
    std::set<std::string> seen;
    for (const Json& item : entries) {
        ChangeEntry entry;
        try {
            entry.signature = parse_signature(detail::require_string(item, "sig", "change entry"));
        } catch (const Error& e) {
            raise(ErrorKind::malformed_record, e.message());
        }
        entry.kind = parse_change_kind(detail::require_string(item, "kind", "change entry"));
        if (!seen.insert(render_signature(entry.signature)).second)
            raise(ErrorKind::malformed_record,
                  "change-list lists '" + render_signature(entry.signature) + "' twice");
        change_list.entries.push_back(std::move(entry));
    }
    std::sort(change_list.entries.begin(), change_list.entries.end(),
              [](const ChangeEntry& a, const ChangeEntry& b) {
                  return render_signature(a.signature) < render_signature(b.signature);
              });

    std::optional<TagVersionEvidence> tags;
    if (j.contains("affectedVersions") || j.contains("fixedVersions")) {
        TagVersionEvidence evidence;
        for (const char* key : {"affectedVersions", "fixedVersions"}) {
            if (!j.contains(key))
                continue;
            if (!j[key].is_array())
                raise(ErrorKind::malformed_record,
                      std::string("change-list field '") + key + "' must be an array");
            for (const Json& v : j[key]) {
                if (!v.is_string())
                    raise(ErrorKind::malformed_record, "version entries must be strings");
                (std::string_view(key) == "affectedVersions" ? evidence.affected : evidence.fixed)
                    .push_back(v.get<std::string>());
            }
        }
        tags = std::move(evidence);
    }
    return {std::move(change_list), std::move(tags)};
}

// ---------------------------------------------------------------------------
// Verdicts

inline Json library_release_to_json(const LibraryRelease& release)
{
    return Json{
        {"group", release.library.group},
        {"artifact", release.library.artifact},
        {"version", release.version},
        {"digest", release.digest},
    };
}

inline Json verdict_to_json(const Verdict& verdict)
{
    Json evidence = Json::array();
    for (const auto& item : verdict.evidence)
        evidence.push_back(Json{{"sig", render_signature(item.signature)},
                                {"kind", std::string(to_string(item.kind))},
                                {"firstSeen", format_utc(item.first_seen)}});
    return Json{
        {"app", verdict.app.canonical()},
        {"vuln", verdict.vuln_id},
        {"status", std::string(to_string(verdict.status))},
        {"library",
         verdict.library_in_use ? library_release_to_json(*verdict.library_in_use) : Json(nullptr)},
        {"evidence", std::move(evidence)},
        {"latestNonVulnerable",
         verdict.latest_non_vulnerable ? Json(*verdict.latest_non_vulnerable) : Json(nullptr)},
    };
}

// ---------------------------------------------------------------------------
// Declared archives

inline Json declared_archive_to_json(const DeclaredArchive& archive)
{
    Json j{
        {"group", archive.library.group},
        {"artifact", archive.library.artifact},
        {"version", archive.version},
        {"digest", archive.digest},
    };
    if (archive.construct_total)
        j["constructs"] = *archive.construct_total;
    return j;
}

inline DeclaredArchive declared_archive_from_json(const Json& j)
{
    DeclaredArchive archive;
    archive.library.group = detail::require_string(j, "group", "declared archive");
    archive.library.artifact = detail::require_string(j, "artifact", "declared archive");
    archive.version = detail::require_string(j, "version", "declared archive");
    archive.digest = detail::require_string(j, "digest", "declared archive");
    if (!is_hex_digest(archive.digest))
        raise(ErrorKind::malformed_record,
              "'" + archive.digest + "' is not a lowercase hex digest");
    if (j.contains("constructs")) {
        if (!j["constructs"].is_number_integer() || j["constructs"].get<std::int64_t>() < 0)
            raise(ErrorKind::malformed_record,
                  "declared archive field 'constructs' must be a non-negative integer");
        archive.construct_total = j["constructs"].get<std::int64_t>();
    }
    return archive;
}

// ---------------------------------------------------------------------------
// Vulnerability records (one JSON file per record)

inline Json vulnerability_to_json(const VulnerabilityRecord& record)
{
    Json cpes = Json::array();
    for (const auto& cpe : record.affected_cpes) {
        Json item{{"uri", cpe.uri()}};
        if (cpe.version_end_excluding)
            item["versionEndExcluding"] = *cpe.version_end_excluding;
        cpes.push_back(std::move(item));
    }
    Json fixes = Json::array();
    for (const auto& [store, revision] : record.fix_revisions)
        fixes.push_back(Json{{"store", store}, {"revision", revision}});
    return Json{
        {"vulnId", record.vuln_id},
        {"description", record.description},
        {"references", record.references},
        {"affectedCpes", std::move(cpes)},
        {"fixRevisions", std::move(fixes)},
    };
}

inline VulnerabilityRecord vulnerability_from_json(const Json& j)
{
    VulnerabilityRecord record;
    record.vuln_id = detail::require_string(j, "vulnId", "vulnerability record");
    if (!is_valid_vuln_id(record.vuln_id))
        raise(ErrorKind::malformed_record,
              "'" + record.vuln_id + "' is not a valid vulnerability id");
    if (j.contains("description")) {
        if (!j["description"].is_string())
            raise(ErrorKind::malformed_record, "vulnerability description must be a string");
        record.description = j["description"].get<std::string>();
    }
    if (j.contains("references")) {
        for (const Json& ref : j["references"]) {
            if (!ref.is_string())
                raise(ErrorKind::malformed_record, "vulnerability references must be strings");
            record.references.push_back(ref.get<std::string>());
        }
    }
    if (j.contains("affectedCpes")) {
        for (const Json& item : j["affectedCpes"]) {
            if (item.is_string()) {
                record.affected_cpes.push_back(parse_cpe(item.get<std::string>()));
            } else if (item.is_object()) {
                std::optional<std::string> end_excluding;
                if (item.contains("versionEndExcluding"))
                    end_excluding = item["versionEndExcluding"].get<std::string>();
                record.affected_cpes.push_back(
                    parse_cpe(detail::require_string(item, "uri", "CPE entry"),
                              std::move(end_excluding)));
            } else {
                raise(ErrorKind::malformed_record, "CPE entries must be strings or objects");
            }
        }
    }
    if (j.contains("fixRevisions")) {
        for (const Json& item : j["fixRevisions"]) {
            record.fix_revisions.emplace_back(
                detail::require_string(item, "store", "fix revision"),
                detail::require_string(item, "revision", "fix revision"));
        }
    }
    return record;
}

} // namespace patchtrace
