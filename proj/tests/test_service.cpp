#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include "patchtrace/service/server.hpp"

#include "support/properties.hpp"
#include "support/scenario.hpp"

using namespace patchtrace;

namespace {

// Serves an IngestService on an ephemeral port for the lifetime of the test.
class ServiceFixture {
public:
    explicit ServiceFixture(const test::fs::path& state_path) : service_(state_path)
    {
        port_ = service_.bind_ephemeral("127.0.0.1");
        thread_ = std::thread([this] { service_.listen_after_bind(); });
        httplib::Client probe(base_url());
        for (int i = 0; i < 100; ++i) {
            if (auto res = probe.Get("/apps/x:y:1/assessment"))
                break;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
    }

    ~ServiceFixture()
    {
        service_.stop();
        thread_.join();
    }

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    httplib::Client client() const
    {
        httplib::Client c(base_url());
        c.set_connection_timeout(5, 0);
        return c;
    }

private:
    IngestService service_;
    std::thread thread_;
    int port_ = 0;
};

const std::string kApp = "com.acme:testapp:0.1";
const std::string kAppPath = "/apps/com.acme%3Atestapp%3A0.1";

std::string trace_line(const std::string& sig, const std::string& when,
                       const std::string& run_id = "r1")
{
    TraceRecord record;
    record.app = parse_app_id(kApp);
    record.signature = parse_signature(sig);
    record.first_seen = parse_utc(when);
    record.run_id = run_id;
    return format_trace_line(record);
}

} // namespace

TEST_CASE("read-your-writes and engine equivalence per endpoint")
{
    test::TempDir tmp("svc");
    ServiceFixture service(tmp / "state.json");
    auto client = service.client();

    // unknown app: 404 with a machine-readable kind
    auto missing = client.Get(kAppPath + "/coverage");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(Json::parse(missing->body)["kind"] == "UnknownApp");

    // PUT constructs, then GET views reflect the PUT
    Json constructs = Json::array({"testapp.core.main/0", "testapp.core.run_upload/1"});
    auto put = client.Put(kAppPath + "/constructs", constructs.dump(), "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    CHECK(Json::parse(put->body)["count"] == 2);

    auto assessment = client.Get(kAppPath + "/assessment");
    REQUIRE(assessment);
    CHECK(assessment->status == 200);
    CHECK(Json::parse(assessment->body)["verdicts"].empty());

    // malformed signature rejects the whole set
    Json bad = Json::array({"fine/0", "broken//"});
    auto rejected = client.Put(kAppPath + "/constructs", bad.dump(), "application/json");
    REQUIRE(rejected);
    CHECK(rejected->status == 400);
    CHECK(Json::parse(rejected->body)["kind"] == "MalformedSignature");

    // traces, change-list, archives, then a full differential check below
    std::string batch = trace_line("testapp.core.main/0", "2014-02-06T12:00:00Z") + "\n"
        + trace_line("acme.fileupload.MultipartStream.init/3", "2014-02-06T12:00:01Z") + "\n";
    auto traces = client.Post(kAppPath + "/traces", batch, "application/x-ndjson");
    REQUIRE(traces);
    CHECK(traces->status == 200);
    CHECK(Json::parse(traces->body)["accepted"] == 2);

    Json change_list{
        {"library", "acme:fileupload"},
        {"vuln", "VULN-0050"},
        {"fixRevision", "r4"},
        {"entries",
         Json::array({Json{{"sig", "acme.fileupload.MultipartStream.init/3"},
                           {"kind", "MOD"}}})},
        {"affectedVersions", Json::array({"1.2.2"})},
        {"fixedVersions", Json::array({"1.3.1"})},
    };
    auto put_changes = client.Put("/libs/acme%3Afileupload/vulns/VULN-0050/changelist",
                                  change_list.dump(), "application/json");
    REQUIRE(put_changes);
    CHECK(put_changes->status == 200);

    // mismatched URL is rejected
    auto mismatch = client.Put("/libs/acme%3Aother/vulns/VULN-0050/changelist",
                               change_list.dump(), "application/json");
    REQUIRE(mismatch);
    CHECK(mismatch->status == 400);

    Json archives = Json::array(
        {Json{{"group", "acme"}, {"artifact", "fileupload"}, {"version", "1.2.2"},
              {"digest", std::string(40, 'f')}, {"constructs", 5}}});
    auto put_archives = client.Put(kAppPath + "/archives", archives.dump(), "application/json");
    REQUIRE(put_archives);
    CHECK(put_archives->status == 200);

    auto coverage = client.Get(kAppPath + "/coverage");
    REQUIRE(coverage);
    Json coverage_body = Json::parse(coverage->body);
    CHECK(coverage_body["overall"]["covered"] == 1); // main traced, run_upload not
    CHECK(coverage_body["overall"]["total"] == 2);

    auto archive_rows = client.Get(kAppPath + "/archives");
    REQUIRE(archive_rows);
    Json rows = Json::parse(archive_rows->body);
    // the traces above carry no digest, so only the declared archive appears
    REQUIRE(rows.size() == 1);
    CHECK(rows[0]["declared"] == true);
    CHECK(rows[0]["traced"] == false);

    // vulnerability record is absent, so assessment skips VULN-0050
    auto verdicts = client.Get(kAppPath + "/assessment");
    CHECK(Json::parse(verdicts->body)["verdicts"].empty());

    // differential: the endpoints must equal in-process engine calls
    AssessmentEngine mirror;
    mirror.upsert_app_constructs(parse_app_id(kApp),
                                 {"testapp.core.main/0", "testapp.core.run_upload/1"});
    mirror.ingest_trace_body(batch);
    auto [cl, tags] = change_list_from_json(change_list);
    mirror.upsert_change_list(std::move(cl), std::move(tags));
    mirror.upsert_declared_archives(
        parse_app_id(kApp),
        {declared_archive_from_json(archives[0])});
    CHECK(coverage_body == coverage_to_json(mirror.coverage(parse_app_id(kApp))));
    CHECK(rows == archives_to_json(mirror.archives_view(parse_app_id(kApp))));

    // the state file equals the in-process snapshot
    CHECK(test::read_file(tmp / "state.json") == mirror.snapshot_text());
}

TEST_CASE("partial accept: 400 with per-record errors, valid records applied")
{
    test::TempDir tmp("svc-partial");
    ServiceFixture service(tmp / "state.json");
    auto client = service.client();

    // line 2 is not JSON, line 3 carries a malformed signature
    std::string batch = trace_line("p.good/0", "2014-02-06T12:00:00Z") + "\n"
        + "this is not json\n"
        + R"({"app":")" + kApp
        + R"(","sig":"broken//","digest":null,"firstSeen":"2014-02-06T12:00:01Z","runId":"r1"})"
        + "\n";
    auto result = client.Post(kAppPath + "/traces", batch, "application/x-ndjson");
    REQUIRE(result);
    CHECK(result->status == 400);
    Json body = Json::parse(result->body);
    CHECK(body["accepted"] == 1);
    REQUIRE(body["errors"].size() == 2);
    CHECK(body["errors"][0]["line"] == 2);
    CHECK(body["errors"][1]["line"] == 3);

    auto coverage = client.Get(kAppPath + "/coverage");
    REQUIRE(coverage);
    CHECK(coverage->status == 200); // the good record made the app known

    // records scoped to a different application are rejected per record
    std::string foreign =
        R"({"app":"other:app:1","sig":"p.h/0","digest":null,"firstSeen":"2014-02-06T12:00:02Z","runId":"r1"})"
        "\n"
        + trace_line("p.mine/0", "2014-02-06T12:00:03Z") + "\n";
    auto scoped = client.Post(kAppPath + "/traces", foreign, "application/x-ndjson");
    REQUIRE(scoped);
    CHECK(scoped->status == 400);
    Json scoped_body = Json::parse(scoped->body);
    CHECK(scoped_body["accepted"] == 1);
    REQUIRE(scoped_body["errors"].size() == 1);
    CHECK(scoped_body["errors"][0]["line"] == 1);
    auto other = client.Get("/apps/other%3Aapp%3A1/coverage");
    REQUIRE(other);
    CHECK(other->status == 404); // nothing was ingested for the foreign app
}

TEST_CASE("concurrent identical batches equal a single ingestion")
{
    test::TempDir tmp("svc-conc");
    std::string sequential_snapshot;
    {
        ServiceFixture service(tmp / "seq.json");
        auto client = service.client();
        std::string batch;
        for (int i = 0; i < 20; ++i)
            batch += trace_line("p.f" + std::to_string(i) + "/0", "2014-02-06T12:00:00Z") + "\n";
        auto result = service.client().Post(kAppPath + "/traces", batch, "application/x-ndjson");
        REQUIRE(result);
    }
    sequential_snapshot = test::read_file(tmp / "seq.json");

    {
        ServiceFixture service(tmp / "par.json");
        std::string batch;
        for (int i = 0; i < 20; ++i)
            batch += trace_line("p.f" + std::to_string(i) + "/0", "2014-02-06T12:00:00Z") + "\n";

        std::atomic<int> failures{0};
        auto upload = [&] {
            httplib::Client client(service.base_url());
            client.set_connection_timeout(5, 0);
            auto result = client.Post(kAppPath + "/traces", batch, "application/x-ndjson");
            if (!result || result->status != 200)
                ++failures;
        };
        std::thread a(upload), b(upload);
        a.join();
        b.join();
        CHECK(failures == 0);
    }
    CHECK(test::read_file(tmp / "par.json") == sequential_snapshot);
}

TEST_CASE("an unbindable address is a BindError")
{
    test::TempDir tmp("svc-bind");
    IngestService service(tmp / "state.json");
    try {
        // TEST-NET-3 address, never local
        service.serve("203.0.113.1", 17999);
        FAIL("expected BindError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::bind_error);
    }
}

TEST_CASE("request replay yields an identical snapshot file")
{
    test::TempDir tmp("svc-replay");
    auto play = [&](const test::fs::path& state) {
        ServiceFixture service(state);
        auto client = service.client();
        Json constructs = Json::array({"p.a/0", "p.b/1"});
        for (int round = 0; round < 2; ++round) {
            client.Put(kAppPath + "/constructs", constructs.dump(), "application/json");
            client.Post(kAppPath + "/traces",
                        trace_line("p.a/0", "2014-02-06T12:00:00Z") + "\n",
                        "application/x-ndjson");
            Json archives = Json::array(
                {Json{{"group", "g"}, {"artifact", "l"}, {"version", "1"},
                      {"digest", std::string(40, 'a')}}});
            client.Put(kAppPath + "/archives", archives.dump(), "application/json");
        }
    };
    play(tmp / "one.json");
    play(tmp / "two.json");
    CHECK(test::read_file(tmp / "one.json") == test::read_file(tmp / "two.json"));
}

TEST_CASE("service survives a full scenario snapshot and serves its verdicts")
{
    test::TempDir tmp("svc-scenario");
    test::Scenario scenario = test::build_scenario();
    scenario.engine.save(tmp / "state.json");

    ServiceFixture service(tmp / "state.json");
    auto client = service.client();
    auto result = client.Get(kAppPath + "/assessment");
    REQUIRE(result);
    CHECK(result->status == 200);
    Json body = Json::parse(result->body);
    REQUIRE(body["verdicts"].size() == 7);
    CHECK(body["verdicts"][0]["vuln"] == "VULN-0050");
    CHECK(body["verdicts"][0]["status"] == "RELEVANT_TRACED");

    // equality with the in-process engine, endpoint by endpoint
    Json expected = Json::array();
    for (const Verdict& verdict : scenario.engine.assess_all(scenario.app))
        expected.push_back(verdict_to_json(verdict));
    CHECK(body["verdicts"] == expected);
}
