#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <thread>
#include <unistd.h>

#include <httplib.h>

#include "patchtrace/engine/report.hpp"
#include "patchtrace/patch/change_list_diff.hpp"
#include "patchtrace/resolve/cpe_match.hpp"
#include "patchtrace/resolve/package_index.hpp"

#include "support/scenario.hpp"

using namespace patchtrace;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string shell_quote(const std::string& arg)
{
    std::string quoted = "'";
    for (char c : arg) {
        if (c == '\'')
            quoted += "'\\''";
        else
            quoted += c;
    }
    quoted += "'";
    return quoted;
}

CliResult run_cli(const std::vector<std::string>& args,
                  const std::vector<std::pair<std::string, std::string>>& env = {})
{
    static test::TempDir scratch("cli-io");
    static int invocation = 0;
    test::fs::path out_file = scratch / ("out-" + std::to_string(invocation) + ".txt");
    test::fs::path err_file = scratch / ("err-" + std::to_string(invocation) + ".txt");
    ++invocation;

    std::string command;
    for (const auto& [key, value] : env)
        command += key + "=" + shell_quote(value) + " ";
    command += shell_quote(PATCHTRACE_CLI_PATH);
    for (const auto& arg : args)
        command += " " + shell_quote(arg);
    command += " > " + shell_quote(out_file.string()) + " 2> " + shell_quote(err_file.string());

    int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = test::read_file(out_file);
    result.err = test::read_file(err_file);
    return result;
}

std::string fx(const std::string& rel) { return test::fixture_path(rel).string(); }

const std::string kApp = "com.acme:testapp:0.1";

} // namespace

TEST_CASE("extract equals the in-process extraction")
{
    CliResult result = run_cli({"extract", "--sources", fx("apps/testapp"), "--app", kApp});
    REQUIRE(result.exit_code == 0);
    Json out = Json::parse(result.out);
    CHECK(out["app"] == kApp);

    std::vector<std::string> expected;
    for (const auto& [sig, construct] :
         extract_tree_constructs(test::fixture_path("apps/testapp"), "testapp")) {
        (void)construct;
        expected.push_back(sig);
    }
    CHECK(out["constructs"].get<std::vector<std::string>>() == expected);
}

TEST_CASE("patch-diff equals compute_change_list and is byte-deterministic")
{
    std::vector<std::string> args{"patch-diff", "--store", fx("stores/fileupload"),
                                  "--fix", "r4", "--lib", "acme:fileupload",
                                  "--vuln", "VULN-0050", "--with-versions"};
    CliResult first = run_cli(args);
    REQUIRE(first.exit_code == 0);
    CliResult second = run_cli(args);
    CHECK(first.out == second.out);

    RevisionStore store = load_revision_store(test::fixture_path("stores/fileupload"));
    ChangeList change_list =
        compute_change_list(store, "r4", LibraryId{"acme", "fileupload"}, "VULN-0050");
    Json expected = change_list_to_json(change_list, affected_versions_by_tags(store, "r4"));
    CHECK(Json::parse(first.out) == expected);
}

TEST_CASE("resolve equals lookup_digest and match_cpe")
{
    PackageIndex index = load_package_index(test::fixture_path("index/index.tsv"));
    std::string digest = archive_digest(test::fixture_path("libs/fileupload-1.2.2"));

    CliResult by_dir = run_cli({"resolve", "--index", fx("index/index.tsv"), "--dir",
                                fx("libs/fileupload-1.2.2")});
    REQUIRE(by_dir.exit_code == 0);
    Json out = Json::parse(by_dir.out);
    CHECK(out["digest"] == digest);
    auto hit = lookup_digest(index, digest);
    REQUIRE(hit.has_value());
    CHECK(out["release"] == library_release_to_json(hit->release));
    CHECK(out["knownVersions"].get<std::vector<std::string>>() == hit->known_versions);
    CHECK(out["constructs"] == 5);

    CliResult miss = run_cli({"resolve", "--index", fx("index/index.tsv"), "--digest",
                              std::string(40, '9')});
    REQUIRE(miss.exit_code == 0);
    Json miss_out = Json::parse(miss.out);
    CHECK(miss_out["release"].is_null());
    CHECK(miss_out["highlights"][0] == "UNKNOWN_DIGEST");

    CliResult cpe = run_cli({"resolve", "--cpe", "cpe:/a:apache:commons_fileupload", "--lib",
                             "com.acme.commons:fileupload"});
    REQUIRE(cpe.exit_code == 0);
    CpeMatch match = match_cpe(parse_cpe("cpe:/a:apache:commons_fileupload"),
                               LibraryId{"com.acme.commons", "fileupload"});
    Json cpe_out = Json::parse(cpe.out);
    CHECK(cpe_out["confidence"] == std::string(to_string(match.confidence)));
    CHECK(cpe_out["ambiguous"] == match.ambiguous);
}

TEST_CASE("assess and report equal the in-process engine")
{
    test::Scenario scenario = test::build_scenario();
    test::TempDir tmp("cli-state");
    test::fs::path state = tmp / "state.json";
    scenario.engine.save(state);

    CliResult assess = run_cli({"assess", "--state", state.string(), "--app", kApp, "--vuln",
                                "VULN-0050"});
    REQUIRE(assess.exit_code == 0);
    CHECK(Json::parse(assess.out)
          == verdict_to_json(scenario.engine.assess(scenario.app, "VULN-0050")));

    // PATCHTRACE_STATE env override replaces --state
    CliResult via_env = run_cli({"assess", "--app", kApp, "--vuln", "VULN-0050"},
                                {{"PATCHTRACE_STATE", state.string()}});
    REQUIRE(via_env.exit_code == 0);
    CHECK(via_env.out == assess.out);

    CliResult report = run_cli({"report", "--state", state.string(), "--app", kApp});
    REQUIRE(report.exit_code == 0);
    CHECK(report.out == render_report(scenario.engine, scenario.app, ReportFormat::json));

    CliResult html = run_cli({"report", "--state", state.string(), "--app", kApp, "--format",
                              "html"});
    REQUIRE(html.exit_code == 0);
    CHECK(html.out == render_report(scenario.engine, scenario.app, ReportFormat::html));

    // deterministic bytes across runs
    CliResult report_again = run_cli({"report", "--state", state.string(), "--app", kApp});
    CHECK(report_again.out == report.out);
}

TEST_CASE("exit codes: domain errors are 1, usage errors are 2")
{
    test::TempDir tmp("cli-exit");
    test::fs::path state = tmp / "state.json";

    // unknown entry: exit 1 with the UnknownEntry kind on stderr
    CliResult bad_entry = run_cli({"run", "--app", kApp, "--sources", fx("apps/testapp"),
                                   "--entry", "testapp.core.nope/0"});
    CHECK(bad_entry.exit_code == 1);
    CHECK(Json::parse(bad_entry.err)["error"] == "UnknownEntry");

    // assess without a vulnerability record: exit 1, UnknownVuln
    AssessmentEngine engine;
    engine.upsert_app_constructs(parse_app_id(kApp), {"testapp.core.main/0"});
    engine.save(state);
    CliResult unknown_vuln = run_cli({"assess", "--state", state.string(), "--app", kApp,
                                      "--vuln", "VULN-none"});
    CHECK(unknown_vuln.exit_code == 1);
    CHECK(Json::parse(unknown_vuln.err)["error"] == "UnknownVuln");

    // missing required flag: usage error
    CliResult usage = run_cli({"patch-diff", "--store", fx("stores/fileupload")});
    CHECK(usage.exit_code == 2);

    // --state and --service-url are mutually exclusive sinks
    CliResult both = run_cli({"ingest", "--state", state.string(), "--service-url",
                              "http://127.0.0.1:1", "--traces", fx("figure3/extra_traces.jsonl")});
    CHECK(both.exit_code == 2);

    // unknown subcommand
    CHECK(run_cli({"frobnicate"}).exit_code == 2);

    // help is exit 0
    CHECK(run_cli({"--help"}).exit_code == 0);
}

TEST_CASE("config files supply defaults")
{
    test::Scenario scenario = test::build_scenario();
    test::TempDir tmp("cli-config");
    test::fs::path state = tmp / "state.json";
    scenario.engine.save(state);
    test::write_file(tmp / "patchtrace.ini",
                     "[assess]\nstate=\"" + state.string() + "\"\napp=\"" + kApp
                         + "\"\nvuln=\"VULN-0050\"\n");

    CliResult result = run_cli({"--config", (tmp / "patchtrace.ini").string(), "assess"});
    REQUIRE(result.exit_code == 0);
    CHECK(Json::parse(result.out)["status"] == "RELEVANT_TRACED");
}

TEST_CASE("serve and remote ingestion through the CLI client")
{
    test::TempDir tmp("cli-serve");
    test::fs::path state = tmp / "state.json";
    int port = 17000 + static_cast<int>(getpid() % 2000);

    std::string command = shell_quote(PATCHTRACE_CLI_PATH) + " serve --state "
        + shell_quote(state.string()) + " --bind 127.0.0.1:" + std::to_string(port) + " > "
        + shell_quote((tmp / "serve.log").string()) + " 2>&1 & echo $!";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[64] = {0};
    REQUIRE(fgets(buffer, sizeof buffer, pipe) != nullptr);
    pclose(pipe);
    pid_t server_pid = static_cast<pid_t>(std::atol(buffer));

    std::string base_url = "http://127.0.0.1:" + std::to_string(port);
    bool up = false;
    for (int i = 0; i < 200 && !up; ++i) {
        httplib::Client probe(base_url);
        probe.set_connection_timeout(1, 0);
        if (probe.Get("/apps/x:y:1/assessment"))
            up = true;
        else
            std::this_thread::sleep_for(std::chrono::milliseconds(25));
    }
    REQUIRE(up);

    // feeding a non-JSON file is a domain error, not a crash
    CliResult not_json = run_cli({"ingest", "--service-url", base_url, "--constructs",
                                  fx("apps/testapp/core.mj")});
    CHECK(not_json.exit_code == 1);

    // real flow: extract to a file, then ingest remotely
    CliResult extract = run_cli({"extract", "--sources", fx("apps/testapp"), "--app", kApp});
    REQUIRE(extract.exit_code == 0);
    test::write_file(tmp / "constructs.json", extract.out);
    CliResult remote = run_cli({"ingest", "--service-url", base_url, "--constructs",
                                (tmp / "constructs.json").string()});
    REQUIRE(remote.exit_code == 0);

    CliResult traces = run_cli({"ingest", "--service-url", base_url, "--traces",
                                fx("figure3/extra_traces.jsonl"), "--app", kApp});
    REQUIRE(traces.exit_code == 0);
    CHECK(Json::parse(traces.out)["traces"]["accepted"] == 1);

    CliResult changelist = run_cli({"ingest", "--service-url", base_url, "--changelist",
                                    fx("changelists/VULN-3577.json")});
    REQUIRE(changelist.exit_code == 0);

    // the served engine now knows the app
    httplib::Client client(base_url);
    auto coverage = client.Get("/apps/com.acme%3Atestapp%3A0.1/coverage");
    REQUIRE(coverage);
    CHECK(coverage->status == 200);
    CHECK(Json::parse(coverage->body)["overall"]["total"] == 10);
    CHECK(Json::parse(coverage->body)["overall"]["covered"] == 0);

    // a dynamically traced run that uploads straight to the service
    CliResult traced_run = run_cli({"run", "--app", kApp, "--sources", fx("apps/testapp"),
                                    "--lib", fx("libs/fileupload-1.2.2"), "--lib",
                                    fx("libs/archiveio-0.8"), "--entry", "testapp.core.main/0",
                                    "--trace", "dynamic", "--sink", "service:" + base_url,
                                    "--run-id", "svc-1", "--clock", "2014-02-06T12:30:00Z"});
    REQUIRE(traced_run.exit_code == 0);
    CHECK(Json::parse(traced_run.out)["tracesEmitted"] == 10);
    CHECK(Json::parse(traced_run.out)["spilled"] == false);

    auto after = client.Get("/apps/com.acme%3Atestapp%3A0.1/coverage");
    REQUIRE(after);
    CHECK(Json::parse(after->body)["overall"]["covered"] == 6);

    std::string kill_command = "kill " + std::to_string(server_pid) + " 2>/dev/null";
    int kill_status = std::system(kill_command.c_str());
    (void)kill_status;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
}
