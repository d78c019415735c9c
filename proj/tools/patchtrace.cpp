// patchtrace CLI: wires the pipeline end to end — extract, instrument, run,
// patch-diff, discover-fix, resolve, ingest, assess, report, serve. Every
// subcommand is a thin wrapper over one library operation; stdout carries
// machine-readable JSON, diagnostics go to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "patchtrace/core/fs.hpp"
#include "patchtrace/engine/engine.hpp"
#include "patchtrace/engine/report.hpp"
#include "patchtrace/minijay/instrument.hpp"
#include "patchtrace/minijay/interpreter.hpp"
#include "patchtrace/minijay/loader.hpp"
#include "patchtrace/patch/change_list_diff.hpp"
#include "patchtrace/patch/fix_discovery.hpp"
#include "patchtrace/resolve/cpe_match.hpp"
#include "patchtrace/resolve/digest.hpp"
#include "patchtrace/resolve/package_index.hpp"
#include "patchtrace/service/server.hpp"
#include "patchtrace/wire.hpp"

namespace {

using namespace patchtrace;
namespace fs = std::filesystem;

void emit(const Json& out)
{
    std::cout << out.dump(2) << "\n";
}

Json read_json_file(const fs::path& path)
{
    Json j = Json::parse(detail::read_file_bytes(path), nullptr, false);
    if (j.is_discarded())
        raise(ErrorKind::malformed_record, path.string() + " is not valid JSON");
    return j;
}

std::string encode_path_segment(const std::string& text)
{
    return httplib::detail::encode_url(text);
}

httplib::Client make_client(const std::string& base_url)
{
    httplib::Client client(base_url);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(30, 0);
    return client;
}

void require_http_ok(const httplib::Result& result, const std::string& what)
{
    if (!result)
        raise(ErrorKind::sink_error, what + ": service unreachable");
    if (result->status >= 400) {
        Json body = Json::parse(result->body, nullptr, false);
        if (body.is_object() && body.contains("kind"))
            raise(ErrorKind::malformed_record,
                  what + ": " + body["kind"].get<std::string>() + ": "
                      + body.value("message", std::string{}));
        raise(ErrorKind::malformed_record,
              what + ": HTTP " + std::to_string(result->status));
    }
}

// --- subcommand state -------------------------------------------------------

struct ExtractArgs {
    std::string sources;
    std::string app;
};

struct InstrumentArgs {
    std::string sources;
    std::string out;
    std::string digest;
    std::string digest_of;
    std::string algo = "sha1";
};

struct RunArgs {
    std::string app;
    std::string sources;
    std::vector<std::string> libs;
    std::string entry;
    std::string trace = "off";
    std::string sink = "memory";
    std::string spill = "trace-spill.jsonl";
    std::string run_id = "run-0";
    std::string clock;
    std::string algo = "sha1";
};

struct PatchDiffArgs {
    std::string store;
    std::vector<std::string> fixes;
    std::string lib;
    std::string vuln;
    bool with_versions = false;
};

struct DiscoverArgs {
    std::string store;
    std::string vuln_file;
};

struct ResolveArgs {
    std::string index;
    std::string digest;
    std::string dir;
    std::string cpe;
    std::string lib;
    std::string algo = "sha1";
};

struct IngestArgs {
    std::string state;
    std::string service_url;
    std::string traces;
    std::string constructs;
    std::string changelist;
    std::string archives;
    std::string vulns;
    std::string index;
    std::string app;
};

struct AssessArgs {
    std::string state;
    std::string service_url;
    std::string app;
    std::string vuln;
};

struct ReportArgs {
    std::string state;
    std::string app;
    std::string format = "json";
    std::string out;
};

struct ServeArgs {
    std::string state;
    std::string bind = "127.0.0.1:7700";
};

// --- subcommand bodies --------------------------------------------------------

int cmd_extract(const ExtractArgs& args)
{
    auto constructs = extract_tree_constructs(args.sources, args.sources);
    Json sigs = Json::array();
    for (const auto& [sig, construct] : constructs) {
        (void)construct;
        sigs.push_back(sig);
    }
    emit(Json{{"app", args.app.empty() ? Json(nullptr) : Json(args.app)},
              {"constructs", std::move(sigs)}});
    return 0;
}

int cmd_instrument(const InstrumentArgs& args)
{
    std::string digest = args.digest;
    if (!args.digest_of.empty())
        digest = archive_digest(args.digest_of, parse_digest_algo(args.algo));
    if (!digest.empty() && !is_hex_digest(digest))
        raise(ErrorKind::malformed_record, "'" + digest + "' is not a lowercase hex digest");

    auto files = detail::mj_files(args.sources);
    if (files.empty())
        raise(ErrorKind::io_error, "no .mj files under " + args.sources);
    std::size_t construct_count = 0;
    for (const auto& rel : files) {
        fs::path source_path = fs::path(args.sources) / rel;
        std::string instrumented =
            minijay::instrument_source(detail::read_file_bytes(source_path), rel, digest);
        construct_count +=
            minijay::extract_constructs(minijay::parse_unit(instrumented, rel)).size();
        fs::path out_path = fs::path(args.out) / rel;
        fs::create_directories(out_path.parent_path());
        detail::write_file_bytes(out_path, instrumented);
    }
    emit(Json{{"files", files.size()},
              {"constructs", construct_count},
              {"digest", digest.empty() ? Json(nullptr) : Json(digest)}});
    return 0;
}

int cmd_run(const RunArgs& args)
{
    std::vector<fs::path> libs(args.libs.begin(), args.libs.end());
    minijay::ProgramBundle bundle =
        minijay::load_bundle(args.sources, libs, parse_digest_algo(args.algo));

    minijay::RunOptions options;
    options.app = parse_app_id(args.app);
    options.run_id = args.run_id;
    if (args.trace == "off")
        options.mode = minijay::TraceMode::off;
    else if (args.trace == "dynamic")
        options.mode = minijay::TraceMode::dynamic;
    else
        raise(ErrorKind::malformed_record, "--trace must be off or dynamic");
    if (!args.clock.empty()) {
        std::int64_t fixed = parse_utc(args.clock);
        options.clock = [fixed] { return fixed; };
    }

    std::unique_ptr<minijay::TraceSink> sink;
    if (args.sink == "memory") {
        sink = std::make_unique<minijay::MemoryTraceSink>();
    } else if (args.sink.rfind("file:", 0) == 0) {
        sink = std::make_unique<minijay::FileTraceSink>(args.sink.substr(5));
    } else if (args.sink.rfind("service:", 0) == 0) {
        sink = std::make_unique<minijay::ServiceTraceSink>(args.sink.substr(8), args.spill);
    } else {
        raise(ErrorKind::malformed_record,
              "--sink must be memory, file:PATH or service:URL");
    }

    minijay::RunResult result =
        minijay::run_program(bundle, parse_signature(args.entry), options, sink.get());

    Json out{
        {"stdout", result.output},
        {"exitStatus", result.exit_status},
        {"tracesEmitted", result.traces.size()},
        {"spilled", result.sink_spilled},
    };
    if (args.sink == "memory") {
        Json records = Json::array();
        for (const auto& record : result.traces)
            records.push_back(Json(trace_to_json(record)));
        out["traces"] = std::move(records);
    }
    emit(out);
    return 0;
}

int cmd_patch_diff(const PatchDiffArgs& args)
{
    RevisionStore store = load_revision_store(args.store);
    LibraryId library = parse_library_id(args.lib);
    ChangeList change_list = args.fixes.size() == 1
        ? compute_change_list(store, args.fixes.front(), library, args.vuln)
        : compute_change_list_union(store, args.fixes, library, args.vuln);

    std::optional<TagVersionEvidence> tags;
    if (args.with_versions)
        tags = affected_versions_by_tags(store, args.fixes.front());
    emit(change_list_to_json(change_list, tags));
    return 0;
}

int cmd_discover_fix(const DiscoverArgs& args)
{
    RevisionStore store = load_revision_store(args.store);
    VulnerabilityRecord vuln = vulnerability_from_json(read_json_file(args.vuln_file));
    FixDiscovery discovery = discover_fix_revisions(vuln, store);

    Json hits = Json::array();
    for (const auto& [revision, method] : discovery.hits)
        hits.push_back(Json{{"revision", revision}, {"method", std::string(to_string(method))}});
    emit(Json{{"vuln", discovery.vuln_id}, {"store", store.store_id}, {"hits", std::move(hits)}});
    return 0;
}

int cmd_resolve(const ResolveArgs& args)
{
    if (!args.cpe.empty()) {
        if (args.lib.empty())
            raise(ErrorKind::malformed_record, "--cpe needs --lib group:artifact");
        CpeMatch match = match_cpe(parse_cpe(args.cpe), parse_library_id(args.lib));
        emit(Json{{"cpe", args.cpe},
                  {"library", match.library.canonical()},
                  {"confidence", std::string(to_string(match.confidence))},
                  {"ambiguous", match.ambiguous}});
        return 0;
    }

    if (args.index.empty() || (args.digest.empty() && args.dir.empty()))
        raise(ErrorKind::malformed_record,
              "resolve needs --cpe with --lib, or --index with --digest or --dir");
    PackageIndex index = load_package_index(args.index);
    std::string digest = args.digest;
    Json extra = Json::object();
    if (!args.dir.empty()) {
        digest = archive_digest(args.dir, parse_digest_algo(args.algo));
        std::size_t constructs = extract_tree_constructs(args.dir, args.dir).size();
        extra["constructs"] = constructs;
    }
    Json out{{"digest", digest}};
    if (auto hit = lookup_digest(index, digest)) {
        out["release"] = library_release_to_json(hit->release);
        out["knownVersions"] = hit->known_versions;
    } else {
        out["release"] = nullptr;
        out["highlights"] = Json::array({"UNKNOWN_DIGEST"});
    }
    out.update(extra);
    emit(out);
    return 0;
}

int cmd_ingest(const IngestArgs& args)
{
    bool remote = !args.service_url.empty();
    Json summary = Json::object();

    std::optional<AssessmentEngine> engine;
    if (!remote)
        engine = AssessmentEngine::load_or_empty(args.state);

    if (!args.index.empty()) {
        if (remote)
            raise(ErrorKind::malformed_record, "--index requires a local --state sink");
        engine->set_package_index(load_package_index(args.index));
        summary["index"] = true;
    }
    if (!args.vulns.empty()) {
        if (remote)
            raise(ErrorKind::malformed_record, "--vulns requires a local --state sink");
        std::size_t count = 0;
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(args.vulns)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            engine->upsert_vulnerability(vulnerability_from_json(read_json_file(file)));
            ++count;
        }
        summary["vulns"] = count;
    }
    if (!args.constructs.empty()) {
        Json j = read_json_file(args.constructs);
        std::string app = args.app;
        if (j.is_object()) {
            if (app.empty() && j.contains("app") && j["app"].is_string())
                app = j["app"].get<std::string>();
            j = j.at("constructs");
        }
        if (app.empty())
            raise(ErrorKind::malformed_record, "--constructs needs --app or an 'app' field");
        std::vector<std::string> signatures;
        for (const Json& sig : j)
            signatures.push_back(sig.get<std::string>());
        if (remote) {
            auto client = make_client(args.service_url);
            auto result = client.Put("/apps/" + encode_path_segment(app) + "/constructs",
                                     Json(signatures).dump(), "application/json");
            require_http_ok(result, "PUT constructs");
        } else {
            engine->upsert_app_constructs(parse_app_id(app), signatures);
        }
        summary["constructs"] = signatures.size();
    }
    if (!args.changelist.empty()) {
        Json j = read_json_file(args.changelist);
        auto [change_list, tags] = change_list_from_json(j);
        if (remote) {
            auto client = make_client(args.service_url);
            auto result = client.Put("/libs/" + encode_path_segment(change_list.library.canonical())
                                         + "/vulns/" + encode_path_segment(change_list.vuln_id)
                                         + "/changelist",
                                     j.dump(), "application/json");
            require_http_ok(result, "PUT changelist");
        } else {
            engine->upsert_change_list(std::move(change_list), std::move(tags));
        }
        summary["changelist"] = true;
    }
    if (!args.archives.empty()) {
        if (args.app.empty())
            raise(ErrorKind::malformed_record, "--archives needs --app");
        Json j = read_json_file(args.archives);
        if (remote) {
            auto client = make_client(args.service_url);
            auto result = client.Put("/apps/" + encode_path_segment(args.app) + "/archives",
                                     j.dump(), "application/json");
            require_http_ok(result, "PUT archives");
        } else {
            std::vector<DeclaredArchive> archives;
            for (const Json& item : j)
                archives.push_back(declared_archive_from_json(item));
            engine->upsert_declared_archives(parse_app_id(args.app), std::move(archives));
        }
        summary["archives"] = true;
    }
    if (!args.traces.empty()) {
        std::string body = detail::read_file_bytes(args.traces);
        if (remote) {
            if (args.app.empty())
                raise(ErrorKind::malformed_record, "--traces needs --app for the service sink");
            auto client = make_client(args.service_url);
            auto result = client.Post("/apps/" + encode_path_segment(args.app) + "/traces", body,
                                      "application/x-ndjson");
            if (!result)
                raise(ErrorKind::sink_error, "POST traces: service unreachable");
            Json response = Json::parse(result->body, nullptr, false);
            summary["traces"] = response.is_object() ? response : Json::object();
        } else {
            TraceIngestOutcome outcome = engine->ingest_trace_body(body);
            Json errors = Json::array();
            for (const auto& [line, message] : outcome.errors)
                errors.push_back(Json{{"line", line}, {"message", message}});
            summary["traces"] = Json{{"accepted", outcome.accepted}, {"errors", errors}};
        }
    }

    if (!remote)
        engine->save(args.state);
    emit(summary);
    return 0;
}

int cmd_assess(const AssessArgs& args)
{
    if (!args.service_url.empty()) {
        auto client = make_client(args.service_url);
        auto result =
            client.Get("/apps/" + encode_path_segment(args.app) + "/assessment");
        require_http_ok(result, "GET assessment");
        Json body = Json::parse(result->body);
        for (const Json& verdict : body["verdicts"]) {
            if (verdict["vuln"].get<std::string>() == args.vuln) {
                emit(verdict);
                return 0;
            }
        }
        raise(ErrorKind::unknown_vuln, "no verdict for '" + args.vuln + "'");
    }

    AssessmentEngine engine = AssessmentEngine::load_or_empty(args.state);
    Verdict verdict = engine.assess(parse_app_id(args.app), args.vuln);
    emit(verdict_to_json(verdict));
    return 0;
}

int cmd_report(const ReportArgs& args)
{
    AssessmentEngine engine = AssessmentEngine::load_or_empty(args.state);
    std::string document =
        render_report(engine, parse_app_id(args.app), parse_report_format(args.format));
    if (args.out.empty()) {
        std::cout << document;
    } else {
        detail::write_file_bytes(args.out, document);
        emit(Json{{"written", args.out}, {"bytes", document.size()}});
    }
    return 0;
}

int cmd_serve(const ServeArgs& args)
{
    auto colon = args.bind.rfind(':');
    if (colon == std::string::npos)
        raise(ErrorKind::malformed_record, "--bind must be HOST:PORT");
    std::string host = args.bind.substr(0, colon);
    int port = std::atoi(args.bind.c_str() + colon + 1);
    IngestService service(args.state);
    std::cerr << "serving " << args.state << " on " << host << ":" << port << "\n";
    service.serve(host, port);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"vulnerability impact assessment from patch change-lists and execution traces"};
    app.require_subcommand(1);
    app.set_config("--config");
    app.set_version_flag("--version", "patchtrace 0.1.0");

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "list the constructs of a source tree");
    extract->add_option("--sources", extract_args.sources, "directory of .mj files")
        ->required()
        ->check(CLI::ExistingDirectory);
    extract->add_option("--app", extract_args.app, "application id group:artifact:version");

    InstrumentArgs instrument_args;
    auto* instrument = app.add_subcommand("instrument", "statically instrument a source tree");
    instrument->add_option("--sources", instrument_args.sources, "directory of .mj files")
        ->required()
        ->check(CLI::ExistingDirectory);
    instrument->add_option("--out", instrument_args.out, "output directory")->required();
    auto* digest_opt =
        instrument->add_option("--digest", instrument_args.digest, "archive digest to embed");
    instrument
        ->add_option("--digest-of", instrument_args.digest_of,
                     "compute and embed the digest of this directory")
        ->excludes(digest_opt);
    instrument->add_option("--digest-algo", instrument_args.algo, "sha1 or sha256")
        ->check(CLI::IsMember({"sha1", "sha256"}));

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "interpret a program bundle");
    run->add_option("--app", run_args.app, "application id")->required();
    run->add_option("--sources", run_args.sources, "application source directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    run->add_option("--lib", run_args.libs, "bundled library archive directory (repeatable)")
        ->check(CLI::ExistingDirectory);
    run->add_option("--entry", run_args.entry, "entry signature, e.g. pkg.main/0")->required();
    run->add_option("--trace", run_args.trace, "off or dynamic")
        ->check(CLI::IsMember({"off", "dynamic"}));
    run->add_option("--sink", run_args.sink, "memory, file:PATH or service:URL");
    run->add_option("--spill", run_args.spill, "spill file for an unreachable service sink");
    run->add_option("--run-id", run_args.run_id, "trace run id");
    run->add_option("--clock", run_args.clock, "fixed clock, ISO-8601 UTC");
    run->add_option("--digest-algo", run_args.algo, "sha1 or sha256")
        ->check(CLI::IsMember({"sha1", "sha256"}));

    PatchDiffArgs diff_args;
    auto* patch_diff = app.add_subcommand("patch-diff", "compute a change-list from a store");
    patch_diff->add_option("--store", diff_args.store, "revision store directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    patch_diff->add_option("--fix", diff_args.fixes, "fix revision id (repeatable)")->required();
    patch_diff->add_option("--lib", diff_args.lib, "library id group:artifact")->required();
    patch_diff->add_option("--vuln", diff_args.vuln, "vulnerability id")->required();
    patch_diff->add_flag("--with-versions", diff_args.with_versions,
                         "include tag-derived affected/fixed versions");

    DiscoverArgs discover_args;
    auto* discover = app.add_subcommand("discover-fix", "find fix revisions for a vulnerability");
    discover->add_option("--store", discover_args.store, "revision store directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    discover->add_option("--vuln-file", discover_args.vuln_file, "vulnerability record JSON")
        ->required()
        ->check(CLI::ExistingFile);

    ResolveArgs resolve_args;
    auto* resolve = app.add_subcommand("resolve", "resolve archive digests and CPE names");
    resolve->add_option("--index", resolve_args.index, "package index TSV")
        ->check(CLI::ExistingFile);
    resolve->add_option("--digest", resolve_args.digest, "digest to look up");
    resolve->add_option("--dir", resolve_args.dir, "archive directory to digest and look up")
        ->check(CLI::ExistingDirectory);
    resolve->add_option("--cpe", resolve_args.cpe, "CPE URI to match");
    resolve->add_option("--lib", resolve_args.lib, "library id for --cpe");
    resolve->add_option("--digest-algo", resolve_args.algo, "sha1 or sha256")
        ->check(CLI::IsMember({"sha1", "sha256"}));

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "load data into a state file or service");
    auto* state_opt = ingest->add_option("--state", ingest_args.state, "engine state file")
                          ->envname("PATCHTRACE_STATE");
    ingest->add_option("--service-url", ingest_args.service_url, "central service base URL")
        ->envname("PATCHTRACE_SERVICE_URL")
        ->excludes(state_opt);
    ingest->add_option("--traces", ingest_args.traces, "trace JSONL file")
        ->check(CLI::ExistingFile);
    ingest->add_option("--constructs", ingest_args.constructs, "construct list JSON")
        ->check(CLI::ExistingFile);
    ingest->add_option("--changelist", ingest_args.changelist, "change-list JSON")
        ->check(CLI::ExistingFile);
    ingest->add_option("--archives", ingest_args.archives, "declared archive JSON")
        ->check(CLI::ExistingFile);
    ingest->add_option("--vulns", ingest_args.vulns, "directory of vulnerability records")
        ->check(CLI::ExistingDirectory);
    ingest->add_option("--index", ingest_args.index, "package index TSV")
        ->check(CLI::ExistingFile);
    ingest->add_option("--app", ingest_args.app, "application id for --constructs/--archives");

    AssessArgs assess_args;
    auto* assess = app.add_subcommand("assess", "verdict for one application and vulnerability");
    auto* assess_state = assess->add_option("--state", assess_args.state, "engine state file")
                             ->envname("PATCHTRACE_STATE");
    assess->add_option("--service-url", assess_args.service_url, "central service base URL")
        ->envname("PATCHTRACE_SERVICE_URL")
        ->excludes(assess_state);
    assess->add_option("--app", assess_args.app, "application id")->required();
    assess->add_option("--vuln", assess_args.vuln, "vulnerability id")->required();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "full assessment report for an application");
    report->add_option("--state", report_args.state, "engine state file")
        ->envname("PATCHTRACE_STATE")
        ->required();
    report->add_option("--app", report_args.app, "application id")->required();
    report->add_option("--format", report_args.format, "json or html")
        ->check(CLI::IsMember({"json", "html"}));
    report->add_option("--out", report_args.out, "write the document to a file");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "run the central ingest service");
    serve->add_option("--state", serve_args.state, "engine state file")
        ->envname("PATCHTRACE_STATE")
        ->required();
    serve->add_option("--bind", serve_args.bind, "HOST:PORT to listen on");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (extract->parsed())
            return cmd_extract(extract_args);
        if (instrument->parsed())
            return cmd_instrument(instrument_args);
        if (run->parsed())
            return cmd_run(run_args);
        if (patch_diff->parsed())
            return cmd_patch_diff(diff_args);
        if (discover->parsed())
            return cmd_discover_fix(discover_args);
        if (resolve->parsed())
            return cmd_resolve(resolve_args);
        if (ingest->parsed())
            return cmd_ingest(ingest_args);
        if (assess->parsed())
            return cmd_assess(assess_args);
        if (report->parsed())
            return cmd_report(report_args);
        if (serve->parsed())
            return cmd_serve(serve_args);
    } catch (const Error& e) {
        Json err{{"error", std::string(e.kind_name())}, {"message", e.message()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        Json err{{"error", "InternalError"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 2;
}
