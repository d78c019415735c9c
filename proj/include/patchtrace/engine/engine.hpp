#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "patchtrace/core/fs.hpp"
#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"
#include "patchtrace/resolve/cpe_match.hpp"
#include "patchtrace/resolve/package_index.hpp"
#include "patchtrace/wire.hpp"

namespace patchtrace {

struct CoverageCount {
    std::int64_t covered = 0;
    std::int64_t total = 0;

    bool operator==(const CoverageCount&) const = default;
};

struct CoverageReport {
    std::map<std::string, CoverageCount> per_package; // app constructs, T_a ∩ S_a
    std::map<std::string, CoverageCount> per_archive; // keyed by digest
    CoverageCount overall;                            // sums over per_package
    bool no_constructs = false;

    double overall_ratio() const
    {
        return overall.total == 0 ? 0.0
                                  : static_cast<double>(overall.covered)
                / static_cast<double>(overall.total);
    }
};

struct ArchiveRow {
    std::string digest;
    bool declared = false;
    bool traced = false;
    std::optional<LibraryRelease> release;  // from the package index
    std::vector<std::string> highlights;    // UNKNOWN_DIGEST, UNDECLARED_BUT_TRACED
};

struct TraceIngestOutcome {
    std::size_t accepted = 0; // well-formed records, duplicates included
    std::vector<std::pair<std::size_t, std::string>> errors; // 1-based line, message
};

// Splits a newline-separated batch of trace lines; bad lines become errors,
// good ones are returned with their 1-based line numbers.
struct ParsedTraceLines {
    std::vector<std::pair<std::size_t, TraceRecord>> records;
    std::vector<std::pair<std::size_t, std::string>> errors;
};

inline ParsedTraceLines parse_trace_lines(std::string_view body)
{
    ParsedTraceLines out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t end = body.find('\n', start);
        std::string_view line = end == std::string_view::npos
            ? body.substr(start)
            : body.substr(start, end - start);
        ++line_no;
        if (!line.empty()) {
            try {
                out.records.emplace_back(line_no, parse_trace_line(line));
            } catch (const Error& e) {
                out.errors.emplace_back(line_no, std::string(e.what()));
            }
        }
        if (end == std::string_view::npos)
            break;
        start = end + 1;
    }
    return out;
}

// Central store of S_a, T_a, all C_ij, declared archives, the package index
// and the vulnerability records; computes verdicts, coverage and archive
// views. Single writer; all operations are idempotent upserts.
class AssessmentEngine {
public:
    // --- ingestion ----------------------------------------------------------

    // PUT semantics: replaces S_a wholesale. Rejects the whole set if any
    // signature is malformed.
    void upsert_app_constructs(const AppId& app, const std::vector<std::string>& signatures)
    {
        std::set<std::string> parsed;
        for (const auto& text : signatures)
            parsed.insert(render_signature(parse_signature(text)));
        apps_[app.canonical()] = std::move(parsed);
    }

    // First observation wins per (app, signature); replays and duplicates are
    // accepted but change nothing.
    std::size_t ingest_traces(const std::vector<TraceRecord>& records)
    {
        for (const auto& record : records) {
            auto& per_app = traces_[record.app.canonical()];
            std::string key = render_signature(record.signature);
            auto [it, inserted] = per_app.emplace(key, record);
            if (!inserted && trace_record_precedes(record, it->second))
                it->second = record;
        }
        return records.size();
    }

    TraceIngestOutcome ingest_trace_body(std::string_view body)
    {
        ParsedTraceLines parsed = parse_trace_lines(body);
        std::vector<TraceRecord> records;
        records.reserve(parsed.records.size());
        for (auto& [line, record] : parsed.records) {
            (void)line;
            records.push_back(std::move(record));
        }
        TraceIngestOutcome outcome;
        outcome.accepted = ingest_traces(records);
        outcome.errors = std::move(parsed.errors);
        return outcome;
    }

    void upsert_change_list(ChangeList change_list,
                            std::optional<TagVersionEvidence> tags = std::nullopt)
    {
        auto key = std::make_pair(change_list.library.canonical(), change_list.vuln_id);
        if (tags)
            tag_evidence_[key] = std::move(*tags);
        change_lists_[key] = std::move(change_list);
    }

    void upsert_declared_archives(const AppId& app, std::vector<DeclaredArchive> archives)
    {
        std::sort(archives.begin(), archives.end(),
                  [](const DeclaredArchive& a, const DeclaredArchive& b) {
                      return a.digest < b.digest;
                  });
        declared_[app.canonical()] = std::move(archives);
    }

    void upsert_vulnerability(VulnerabilityRecord record)
    {
        vulns_[record.vuln_id] = std::move(record);
    }

    void set_package_index(PackageIndex index) { index_ = std::move(index); }

    // --- assessment -----------------------------------------------------------

    Verdict assess(const AppId& app, const std::string& vuln_id) const
    {
        auto vuln = vulns_.find(vuln_id);
        if (vuln == vulns_.end())
            raise(ErrorKind::unknown_vuln, "no vulnerability record for '" + vuln_id + "'");

        std::vector<const ChangeList*> lists;
        for (const auto& [key, change_list] : change_lists_) {
            if (key.second == vuln_id)
                lists.push_back(&change_list);
        }
        if (lists.empty())
            raise(ErrorKind::no_change_list,
                  "no change-list has been uploaded for '" + vuln_id + "'");

        Verdict verdict;
        bool first = true;
        for (const ChangeList* change_list : lists) {
            Verdict candidate = assess_library(app, vuln->second, *change_list);
            if (first || severity(candidate.status) > severity(verdict.status)) {
                verdict = std::move(candidate);
                first = false;
            }
        }
        return verdict;
    }

    // Every vulnerability with at least one change-list, in id order.
    std::vector<Verdict> assess_all(const AppId& app) const
    {
        require_known(app);
        std::set<std::string> assessable;
        for (const auto& [key, change_list] : change_lists_) {
            (void)change_list;
            if (vulns_.count(key.second))
                assessable.insert(key.second);
        }
        std::vector<Verdict> verdicts;
        for (const auto& vuln_id : assessable)
            verdicts.push_back(assess(app, vuln_id));
        return verdicts;
    }

    CoverageReport coverage(const AppId& app) const
    {
        require_known(app);
        CoverageReport report;

        const std::set<std::string>* own = nullptr;
        if (auto it = apps_.find(app.canonical()); it != apps_.end())
            own = &it->second;
        const std::map<std::string, TraceRecord>* traced = nullptr;
        if (auto it = traces_.find(app.canonical()); it != traces_.end())
            traced = &it->second;

        if (own) {
            for (const auto& sig_text : *own) {
                ConstructSignature sig = parse_signature(sig_text);
                auto& entry = report.per_package[sig.package];
                entry.total += 1;
                if (traced && traced->count(sig_text))
                    entry.covered += 1;
            }
        }
        for (const auto& [package, entry] : report.per_package) {
            (void)package;
            report.overall.covered += entry.covered;
            report.overall.total += entry.total;
        }
        report.no_constructs = !own || own->empty();

        // Archive-level coverage: covered = traced constructs per digest,
        // total from the declared construct count when available.
        if (traced) {
            for (const auto& [sig_text, record] : *traced) {
                (void)sig_text;
                if (record.digest)
                    report.per_archive[*record.digest].covered += 1;
            }
        }
        if (auto it = declared_.find(app.canonical()); it != declared_.end()) {
            for (const auto& archive : it->second) {
                auto& entry = report.per_archive[archive.digest];
                if (archive.construct_total)
                    entry.total = *archive.construct_total;
            }
        }
        for (auto& [digest, entry] : report.per_archive) {
            (void)digest;
            entry.total = std::max(entry.total, entry.covered);
        }
        return report;
    }

    std::vector<ArchiveRow> archives_view(const AppId& app) const
    {
        require_known(app);
        std::map<std::string, ArchiveRow> rows;

        if (auto it = declared_.find(app.canonical()); it != declared_.end()) {
            for (const auto& archive : it->second) {
                ArchiveRow& row = rows[archive.digest];
                row.digest = archive.digest;
                row.declared = true;
            }
        }
        if (auto it = traces_.find(app.canonical()); it != traces_.end()) {
            for (const auto& [sig_text, record] : it->second) {
                (void)sig_text;
                if (!record.digest)
                    continue;
                ArchiveRow& row = rows[*record.digest];
                row.digest = *record.digest;
                row.traced = true;
            }
        }

        std::vector<ArchiveRow> out;
        for (auto& [digest, row] : rows) {
            if (auto hit = lookup_digest(index_, digest))
                row.release = hit->release;
            else
                row.highlights.push_back("UNKNOWN_DIGEST");
            if (row.traced && !row.declared)
                row.highlights.push_back("UNDECLARED_BUT_TRACED");
            out.push_back(std::move(row));
        }
        return out;
    }

    // --- accessors ------------------------------------------------------------

    bool app_known(const AppId& app) const
    {
        const std::string key = app.canonical();
        return apps_.count(key) || traces_.count(key) || declared_.count(key);
    }

    const std::map<std::string, std::set<std::string>>& apps() const { return apps_; }
    const std::map<std::string, std::map<std::string, TraceRecord>>& traces() const
    {
        return traces_;
    }
    const std::map<std::pair<std::string, std::string>, ChangeList>& change_lists() const
    {
        return change_lists_;
    }
    const std::map<std::string, VulnerabilityRecord>& vulnerabilities() const { return vulns_; }
    const PackageIndex& package_index() const { return index_; }

    // --- persistence ------------------------------------------------------------

    Json snapshot() const
    {
        Json apps = Json::object();
        for (const auto& [app, sigs] : apps_)
            apps[app] = std::vector<std::string>(sigs.begin(), sigs.end());

        Json traces = Json::object();
        for (const auto& [app, per_app] : traces_) {
            Json list = Json::array();
            for (const auto& [sig, record] : per_app) {
                (void)sig;
                list.push_back(Json(trace_to_json(record)));
            }
            traces[app] = std::move(list);
        }

        Json change_lists = Json::array();
        for (const auto& [key, change_list] : change_lists_) {
            std::optional<TagVersionEvidence> tags;
            if (auto it = tag_evidence_.find(key); it != tag_evidence_.end())
                tags = it->second;
            change_lists.push_back(change_list_to_json(change_list, tags));
        }

        Json declared = Json::object();
        for (const auto& [app, archives] : declared_) {
            Json list = Json::array();
            for (const auto& archive : archives)
                list.push_back(declared_archive_to_json(archive));
            declared[app] = std::move(list);
        }

        Json index = Json::array();
        for (const auto& [digest, release] : index_.rows) {
            (void)digest;
            index.push_back(library_release_to_json(release));
        }

        Json vulns = Json::object();
        for (const auto& [id, record] : vulns_)
            vulns[id] = vulnerability_to_json(record);

        return Json{
            {"apps", std::move(apps)},
            {"traces", std::move(traces)},
            {"changeLists", std::move(change_lists)},
            {"declaredArchives", std::move(declared)},
            {"index", std::move(index)},
            {"vulns", std::move(vulns)},
        };
    }

    std::string snapshot_text() const { return snapshot().dump(2) + "\n"; }

    // Atomic replace: write a temp file in the same directory, then rename.
    void save(const std::filesystem::path& path) const
    {
        namespace fs = std::filesystem;
        fs::path tmp = path;
        tmp += ".tmp";
        detail::write_file_bytes(tmp, snapshot_text());
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec)
            raise(ErrorKind::io_error,
                  "cannot replace " + path.string() + ": " + ec.message());
    }

    static AssessmentEngine from_snapshot(const Json& j)
    {
        if (!j.is_object())
            raise(ErrorKind::state_corrupt, "snapshot is not a JSON object");
        AssessmentEngine engine;
        try {
            if (j.contains("apps")) {
                for (const auto& [app, sigs] : j["apps"].items()) {
                    std::vector<std::string> list;
                    for (const Json& sig : sigs)
                        list.push_back(sig.get<std::string>());
                    engine.upsert_app_constructs(parse_app_id(app), list);
                }
            }
            if (j.contains("traces")) {
                for (const auto& [app, records] : j["traces"].items()) {
                    (void)app;
                    std::vector<TraceRecord> list;
                    for (const Json& record : records)
                        list.push_back(parse_trace_record(record));
                    engine.ingest_traces(list);
                }
            }
            if (j.contains("changeLists")) {
                for (const Json& item : j["changeLists"]) {
                    auto [change_list, tags] = change_list_from_json(item);
                    engine.upsert_change_list(std::move(change_list), std::move(tags));
                }
            }
            if (j.contains("declaredArchives")) {
                for (const auto& [app, archives] : j["declaredArchives"].items()) {
                    std::vector<DeclaredArchive> list;
                    for (const Json& archive : archives)
                        list.push_back(declared_archive_from_json(archive));
                    engine.upsert_declared_archives(parse_app_id(app), std::move(list));
                }
            }
            if (j.contains("index")) {
                std::vector<LibraryRelease> releases;
                for (const Json& row : j["index"]) {
                    LibraryRelease release;
                    release.library.group = detail::require_string(row, "group", "index row");
                    release.library.artifact =
                        detail::require_string(row, "artifact", "index row");
                    release.version = detail::require_string(row, "version", "index row");
                    release.digest = detail::require_string(row, "digest", "index row");
                    releases.push_back(std::move(release));
                }
                engine.set_package_index(build_package_index(std::move(releases)));
            }
            if (j.contains("vulns")) {
                for (const auto& [id, record] : j["vulns"].items()) {
                    (void)id;
                    engine.upsert_vulnerability(vulnerability_from_json(record));
                }
            }
        } catch (const Error& e) {
            raise(ErrorKind::state_corrupt, std::string("snapshot: ") + e.message());
        }
        return engine;
    }

    static AssessmentEngine load(const std::filesystem::path& path)
    {
        Json j = Json::parse(detail::read_file_bytes(path), nullptr, false);
        if (j.is_discarded())
            raise(ErrorKind::state_corrupt, path.string() + " is not valid JSON");
        return from_snapshot(j);
    }

    static AssessmentEngine load_or_empty(const std::filesystem::path& path)
    {
        if (!std::filesystem::exists(path))
            return AssessmentEngine{};
        return load(path);
    }

private:
    void require_known(const AppId& app) const
    {
        if (!app_known(app))
            raise(ErrorKind::unknown_app, "no data for application '" + app.canonical() + "'");
    }

    static int severity(VerdictStatus status)
    {
        switch (status) {
        case VerdictStatus::relevant_traced: return 3;
        case VerdictStatus::affected_not_traced: return 2;
        case VerdictStatus::unknown_version: return 1;
        case VerdictStatus::not_affected_version: return 0;
        }
        return 0;
    }

    struct ReleaseCandidate {
        LibraryRelease release;
        bool traced = false;
    };

    Verdict assess_library(const AppId& app, const VulnerabilityRecord& vuln,
                           const ChangeList& change_list) const
    {
        Verdict verdict;
        verdict.app = app;
        verdict.vuln_id = vuln.vuln_id;

        std::optional<TagVersionEvidence> tags;
        if (auto it = tag_evidence_.find(
                std::make_pair(change_list.library.canonical(), change_list.vuln_id));
            it != tag_evidence_.end())
            tags = it->second;

        // Which release of the library produced the traces / is declared?
        std::vector<ReleaseCandidate> candidates;
        const std::map<std::string, TraceRecord>* traced = nullptr;
        if (auto it = traces_.find(app.canonical()); it != traces_.end())
            traced = &it->second;
        if (traced) {
            std::set<std::string> seen_digests;
            for (const auto& [sig, record] : *traced) {
                (void)sig;
                if (!record.digest || !seen_digests.insert(*record.digest).second)
                    continue;
                if (auto hit = lookup_digest(index_, *record.digest);
                    hit && hit->release.library == change_list.library)
                    candidates.push_back(ReleaseCandidate{hit->release, true});
            }
        }
        if (auto it = declared_.find(app.canonical()); it != declared_.end()) {
            for (const auto& archive : it->second) {
                if (archive.library == change_list.library)
                    candidates.push_back(ReleaseCandidate{
                        LibraryRelease{archive.library, archive.version, archive.digest},
                        false});
            }
        }

        VersionAffected affected = VersionAffected::unknown;
        std::optional<LibraryRelease> in_use;
        for (const auto& candidate : candidates) {
            VersionAffected status = is_version_affected(vuln, candidate.release, tags);
            bool take = !in_use;
            if (!take) {
                auto rank = [](VersionAffected v) {
                    return v == VersionAffected::affected ? 2
                        : v == VersionAffected::unknown  ? 1
                                                         : 0;
                };
                if (rank(status) > rank(affected))
                    take = true;
                else if (rank(status) == rank(affected)
                         && version_less(in_use->version, candidate.release.version))
                    take = true;
            }
            if (take) {
                affected = status;
                in_use = candidate.release;
            }
        }
        verdict.library_in_use = in_use;

        // Evidence: change-list constructs seen in T_a whose archive digest is
        // consistent with the release in use (unresolvable digests accepted).
        std::vector<EvidenceItem> evidence;
        if (traced) {
            for (const auto& entry : change_list.entries) {
                auto record = traced->find(render_signature(entry.signature));
                if (record == traced->end())
                    continue;
                bool consistent = true;
                if (record->second.digest && in_use) {
                    if (auto hit = lookup_digest(index_, *record->second.digest);
                        hit && !(hit->release == *in_use))
                        consistent = false;
                }
                if (consistent)
                    evidence.push_back(EvidenceItem{entry.signature, entry.kind,
                                                    record->second.first_seen});
            }
        }

        if (tags && !tags->fixed.empty())
            verdict.latest_non_vulnerable = *std::max_element(
                tags->fixed.begin(), tags->fixed.end(),
                [](const std::string& a, const std::string& b) { return version_less(a, b); });

        if (affected == VersionAffected::not_affected) {
            verdict.status = VerdictStatus::not_affected_version;
        } else if (!evidence.empty()) {
            // Unknown version with evidence stays relevant; false negatives
            // are the expensive error.
            verdict.status = VerdictStatus::relevant_traced;
            verdict.evidence = std::move(evidence);
        } else if (affected == VersionAffected::affected) {
            verdict.status = VerdictStatus::affected_not_traced;
        } else {
            verdict.status = VerdictStatus::unknown_version;
        }
        return verdict;
    }

    std::map<std::string, std::set<std::string>> apps_;
    std::map<std::string, std::map<std::string, TraceRecord>> traces_;
    std::map<std::pair<std::string, std::string>, ChangeList> change_lists_;
    std::map<std::pair<std::string, std::string>, TagVersionEvidence> tag_evidence_;
    std::map<std::string, std::vector<DeclaredArchive>> declared_;
    PackageIndex index_;
    std::map<std::string, VulnerabilityRecord> vulns_;
};

} // namespace patchtrace
