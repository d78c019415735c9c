#pragma once

#include <string>
#include <vector>

#include "patchtrace/engine/engine.hpp"

namespace patchtrace {

enum class ReportFormat { json, html };

inline ReportFormat parse_report_format(std::string_view text)
{
    if (text == "json")
        return ReportFormat::json;
    if (text == "html")
        return ReportFormat::html;
    raise(ErrorKind::malformed_record, "unknown report format '" + std::string(text) + "'");
}

inline Json coverage_to_json(const CoverageReport& report)
{
    Json per_package = Json::object();
    for (const auto& [package, entry] : report.per_package)
        per_package[package.empty() ? "(default)" : package] =
            Json{{"covered", entry.covered}, {"total", entry.total}};
    Json per_archive = Json::object();
    for (const auto& [digest, entry] : report.per_archive)
        per_archive[digest] = Json{{"covered", entry.covered}, {"total", entry.total}};
    return Json{
        {"perPackage", std::move(per_package)},
        {"perArchive", std::move(per_archive)},
        {"overall",
         Json{{"covered", report.overall.covered},
              {"total", report.overall.total},
              {"ratio", report.overall_ratio()}}},
        {"noConstructs", report.no_constructs},
    };
}

inline Json archive_row_to_json(const ArchiveRow& row)
{
    return Json{
        {"digest", row.digest},
        {"declared", row.declared},
        {"traced", row.traced},
        {"release", row.release ? library_release_to_json(*row.release) : Json(nullptr)},
        {"highlights", row.highlights},
    };
}

inline Json archives_to_json(const std::vector<ArchiveRow>& rows)
{
    Json out = Json::array();
    for (const auto& row : rows)
        out.push_back(archive_row_to_json(row));
    return out;
}

// Change-list detail for one vulnerability: every entry with its traced flag
// and first-seen time, across all libraries carrying that vulnerability.
inline Json change_detail_json(const AssessmentEngine& engine, const AppId& app,
                               const std::string& vuln_id)
{
    const std::map<std::string, TraceRecord>* traced = nullptr;
    if (auto it = engine.traces().find(app.canonical()); it != engine.traces().end())
        traced = &it->second;

    Json detail = Json::array();
    for (const auto& [key, change_list] : engine.change_lists()) {
        if (key.second != vuln_id)
            continue;
        for (const auto& entry : change_list.entries) {
            std::string sig = render_signature(entry.signature);
            Json item{
                {"library", change_list.library.canonical()},
                {"sig", sig},
                {"kind", std::string(to_string(entry.kind))},
            };
            const TraceRecord* record = nullptr;
            if (traced) {
                if (auto it = traced->find(sig); it != traced->end())
                    record = &it->second;
            }
            item["traced"] = record != nullptr;
            item["firstSeen"] = record ? Json(format_utc(record->first_seen)) : Json(nullptr);
            detail.push_back(std::move(item));
        }
    }
    return detail;
}

// The whole assessment for one application, deterministic for equal state:
// verdicts in vulnerability-id order, archives by digest, coverage maps by
// key.
inline Json report_json(const AssessmentEngine& engine, const AppId& app)
{
    Json verdicts = Json::array();
    for (const Verdict& verdict : engine.assess_all(app)) {
        Json item = verdict_to_json(verdict);
        item["changeList"] = change_detail_json(engine, app, verdict.vuln_id);
        verdicts.push_back(std::move(item));
    }
    return Json{
        {"app", app.canonical()},
        {"verdicts", std::move(verdicts)},
        {"archives", archives_to_json(engine.archives_view(app))},
        {"coverage", coverage_to_json(engine.coverage(app))},
    };
}

namespace detail {

inline std::string html_escape(const std::string& text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

// Static one-page rendering of the same data as report_json.
inline std::string report_html(const AssessmentEngine& engine, const AppId& app)
{
    using detail::html_escape;
    Json report = report_json(engine, app);

    std::string page;
    page += "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n";
    page += "<title>Assessment for " + html_escape(app.canonical()) + "</title>\n";
    page += "<style>\n"
            "body { font-family: sans-serif; margin: 2em; }\n"
            "table { border-collapse: collapse; margin-bottom: 2em; }\n"
            "td, th { border: 1px solid #999; padding: 4px 8px; text-align: left; }\n"
            "th { background: #eee; }\n"
            ".RELEVANT_TRACED { background: #f8d0d0; }\n"
            ".AFFECTED_NOT_TRACED { background: #fdf3cd; }\n"
            ".NOT_AFFECTED_VERSION { background: #d9ead9; }\n"
            ".UNKNOWN_VERSION { background: #e8e8e8; }\n"
            ".highlight { color: #a00; font-weight: bold; }\n"
            "</style>\n</head>\n<body>\n";
    page += "<h1>" + html_escape(app.canonical()) + "</h1>\n";

    page += "<h2>Vulnerabilities</h2>\n<table>\n"
            "<tr><th>Vulnerability</th><th>Status</th><th>Library</th>"
            "<th>Evidence</th><th>Latest non-vulnerable</th></tr>\n";
    for (const Json& verdict : report["verdicts"]) {
        std::string status = verdict["status"].get<std::string>();
        page += "<tr class=\"" + status + "\"><td>" + html_escape(verdict["vuln"]) + "</td><td>"
            + status + "</td><td>";
        if (!verdict["library"].is_null())
            page += html_escape(verdict["library"]["group"].get<std::string>() + ":"
                                + verdict["library"]["artifact"].get<std::string>() + ":"
                                + verdict["library"]["version"].get<std::string>());
        page += "</td><td>" + std::to_string(verdict["evidence"].size()) + "</td><td>";
        if (!verdict["latestNonVulnerable"].is_null())
            page += html_escape(verdict["latestNonVulnerable"]);
        page += "</td></tr>\n";
    }
    page += "</table>\n";

    for (const Json& verdict : report["verdicts"]) {
        page += "<h3>Change-list for " + html_escape(verdict["vuln"]) + "</h3>\n<table>\n"
                "<tr><th>Library</th><th>Construct</th><th>Change</th><th>Traced</th>"
                "<th>First seen</th></tr>\n";
        for (const Json& entry : verdict["changeList"]) {
            page += "<tr><td>" + html_escape(entry["library"]) + "</td><td>"
                + html_escape(entry["sig"]) + "</td><td>" + html_escape(entry["kind"])
                + "</td><td>" + (entry["traced"].get<bool>() ? "!" : "") + "</td><td>";
            if (!entry["firstSeen"].is_null())
                page += html_escape(entry["firstSeen"]);
            page += "</td></tr>\n";
        }
        page += "</table>\n";
    }

    page += "<h2>Archives</h2>\n<table>\n"
            "<tr><th>Digest</th><th>Release</th><th>Declared</th><th>Traced</th>"
            "<th>Highlights</th></tr>\n";
    for (const Json& row : report["archives"]) {
        page += "<tr><td>" + html_escape(row["digest"]) + "</td><td>";
        if (!row["release"].is_null())
            page += html_escape(row["release"]["group"].get<std::string>() + ":"
                                + row["release"]["artifact"].get<std::string>() + ":"
                                + row["release"]["version"].get<std::string>());
        page += std::string("</td><td>") + (row["declared"].get<bool>() ? "yes" : "")
            + "</td><td>" + (row["traced"].get<bool>() ? "yes" : "") + "</td><td>";
        std::string highlights;
        for (const Json& h : row["highlights"]) {
            if (!highlights.empty())
                highlights += ", ";
            highlights += h.get<std::string>();
        }
        if (!highlights.empty())
            page += "<span class=\"highlight\">" + html_escape(highlights) + "</span>";
        page += "</td></tr>\n";
    }
    page += "</table>\n";

    const Json& coverage = report["coverage"];
    page += "<h2>Coverage</h2>\n<table>\n"
            "<tr><th>Package</th><th>Covered</th><th>Total</th></tr>\n";
    for (const auto& [package, entry] : coverage["perPackage"].items())
        page += "<tr><td>" + html_escape(package) + "</td><td>"
            + std::to_string(entry["covered"].get<std::int64_t>()) + "</td><td>"
            + std::to_string(entry["total"].get<std::int64_t>()) + "</td></tr>\n";
    page += "<tr><th>overall</th><th>"
        + std::to_string(coverage["overall"]["covered"].get<std::int64_t>()) + "</th><th>"
        + std::to_string(coverage["overall"]["total"].get<std::int64_t>()) + "</th></tr>\n";
    page += "</table>\n<table>\n<tr><th>Archive</th><th>Covered</th><th>Total</th></tr>\n";
    for (const auto& [digest, entry] : coverage["perArchive"].items())
        page += "<tr><td>" + html_escape(digest) + "</td><td>"
            + std::to_string(entry["covered"].get<std::int64_t>()) + "</td><td>"
            + std::to_string(entry["total"].get<std::int64_t>()) + "</td></tr>\n";
    page += "</table>\n</body>\n</html>\n";
    return page;
}

inline std::string render_report(const AssessmentEngine& engine, const AppId& app,
                                 ReportFormat format)
{
    if (format == ReportFormat::html)
        return report_html(engine, app);
    return report_json(engine, app).dump(2) + "\n";
}

} // namespace patchtrace
