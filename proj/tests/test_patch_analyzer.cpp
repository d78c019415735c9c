#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patchtrace/patch/change_list_diff.hpp"
#include "patchtrace/patch/fix_discovery.hpp"
#include "patchtrace/patch/revision_store.hpp"
#include "patchtrace/wire.hpp"

#include "support/properties.hpp"

using namespace patchtrace;

namespace {

VulnerabilityRecord load_vuln(const std::string& name)
{
    Json j = Json::parse(test::read_file(test::fixture_path("vulns/" + name)));
    return vulnerability_from_json(j);
}

// A small synthetic store: four revisions, two tags.
void write_small_store(const test::fs::path& root)
{
    test::write_file(root / "log.tsv",
                     "s1\t2015-01-01T08:00:00Z\tInitial import\n"
                     "s2\t2015-02-01T08:00:00Z\tCut release 1.0\n"
                     "s3\t2015-03-01T08:00:00Z\tFix the reader \\t guard\n"
                     "s4\t2015-04-01T08:00:00Z\tCut release 1.1\n");
    test::write_file(root / "tags.tsv", "REL_1_0\ts2\t1.0\nREL_1_1\ts4\t1.1\n");
    for (const char* rev : {"s1", "s2", "s3", "s4"})
        test::write_file(root / "revisions" / rev / "a.mj",
                         std::string("package p; fn f() { return ") + rev[1] + "; }");
}

} // namespace

TEST_CASE("loading a revision store")
{
    test::TempDir tmp("store");
    write_small_store(tmp.path());
    RevisionStore store = load_revision_store(tmp.path());
    CHECK(store.log.size() == 4);
    CHECK(store.tags.size() == 2);
    CHECK(store.log[0].revision == "s1");
    CHECK(store.log[3].revision == "s4");
    CHECK(store.log[2].message == "Fix the reader \t guard"); // unescaped tab
    CHECK(store.has_revision("s3"));
    CHECK_FALSE(store.has_revision("s9"));
}

TEST_CASE("store format errors")
{
    test::TempDir tmp("badstore");

    write_small_store(tmp / "no_log");
    test::fs::remove(tmp / "no_log" / "log.tsv");
    CHECK_THROWS_AS(load_revision_store(tmp / "no_log"), Error);

    write_small_store(tmp / "bad_tag");
    test::write_file(tmp / "bad_tag" / "tags.tsv", "REL\tmissing_rev\t1.0\n");
    try {
        load_revision_store(tmp / "bad_tag");
        FAIL("expected StoreFormatError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::store_format_error);
    }

    write_small_store(tmp / "no_snapshot");
    test::fs::remove_all(tmp / "no_snapshot" / "revisions" / "s3");
    CHECK_THROWS_AS(load_revision_store(tmp / "no_snapshot"), Error);

    write_small_store(tmp / "bad_row");
    test::write_file(tmp / "bad_row" / "log.tsv", "s1\t2015-01-01T08:00:00Z\n");
    CHECK_THROWS_AS(load_revision_store(tmp / "bad_row"), Error);

    write_small_store(tmp / "dup_rev");
    test::write_file(tmp / "dup_rev" / "log.tsv",
                     "s1\t2015-01-01T08:00:00Z\ta\ns1\t2015-01-02T08:00:00Z\tb\n");
    CHECK_THROWS_AS(load_revision_store(tmp / "dup_rev"), Error);

    write_small_store(tmp / "bad_escape");
    test::write_file(tmp / "bad_escape" / "log.tsv", "s1\t2015-01-01T08:00:00Z\tbad \\x esc\n");
    CHECK_THROWS_AS(load_revision_store(tmp / "bad_escape"), Error);
}

TEST_CASE("prior revision")
{
    test::TempDir tmp("prior");
    write_small_store(tmp.path());
    RevisionStore store = load_revision_store(tmp.path());
    CHECK(prior_revision(store, "s3") == "s2");
    try {
        prior_revision(store, "s1");
        FAIL("expected NoPriorRevision");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::no_prior_revision);
    }
    try {
        prior_revision(store, "s9");
        FAIL("expected UnknownRevision");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_revision);
    }
}

TEST_CASE("fix discovery: reference pattern and commit log agree")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/discovery"));
    FixDiscovery discovery = discover_fix_revisions(load_vuln("CVE-2014-0050.json"), store);
    REQUIRE(discovery.hits.size() == 1); // both methods find the same revision
    CHECK(discovery.hits[0].first == "1565143");
    CHECK(discovery.hits[0].second == DiscoveryMethod::reference_pattern);

    // commit-log search alone also finds it
    VulnerabilityRecord log_only = load_vuln("CVE-2014-0050.json");
    log_only.references.clear();
    FixDiscovery by_log = discover_fix_revisions(log_only, store);
    REQUIRE(by_log.hits.size() == 1);
    CHECK(by_log.hits[0].first == "1565143");
    CHECK(by_log.hits[0].second == DiscoveryMethod::commit_log_search);
}

TEST_CASE("fix discovery: no reference, no log mention, empty result")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/discovery"));
    FixDiscovery discovery = discover_fix_revisions(load_vuln("CVE-2012-2098.json"), store);
    CHECK(discovery.hits.empty());
}

TEST_CASE("fix discovery: explicit revisions come first and git-style hashes match")
{
    test::TempDir tmp("disc");
    test::write_file(tmp / "s" / "log.tsv",
                     "aabbccddee\t2015-01-01T08:00:00Z\tstart\n"
                     "ffeeddccbb\t2015-02-01T08:00:00Z\tFix VULN-77x here\n");
    test::write_file(tmp / "s" / "tags.tsv", "");
    test::write_file(tmp / "s" / "revisions/aabbccddee/a.mj", "fn f() { }");
    test::write_file(tmp / "s" / "revisions/ffeeddccbb/a.mj", "fn f() { return 1; }");
    RevisionStore store = load_revision_store(tmp / "s");

    VulnerabilityRecord vuln;
    vuln.vuln_id = "VULN-77x";
    vuln.references = {"https://git.example.org/lib/commit/aabbccddee"};
    vuln.fix_revisions = {{"s", "ffeeddccbb"}, {"other-store", "zzz"}};

    FixDiscovery discovery = discover_fix_revisions(vuln, store);
    REQUIRE(discovery.hits.size() == 2);
    CHECK(discovery.hits[0].first == "ffeeddccbb");
    CHECK(discovery.hits[0].second == DiscoveryMethod::explicit_record);
    CHECK(discovery.hits[1].first == "aabbccddee");
    CHECK(discovery.hits[1].second == DiscoveryMethod::reference_pattern);

    // never a revision outside the store
    for (const auto& [revision, method] : discovery.hits) {
        (void)method;
        CHECK(store.has_revision(revision));
    }
}

TEST_CASE("change-list of the fileupload fix revision")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/fileupload"));
    ChangeList change_list =
        compute_change_list(store, "r4", LibraryId{"acme", "fileupload"}, "VULN-0050");
    REQUIRE(change_list.entries.size() == 1);
    CHECK(render_signature(change_list.entries[0].signature)
          == "acme.fileupload.MultipartStream.init/3");
    CHECK(change_list.entries[0].kind == ChangeKind::mod);
    CHECK(change_list.fix_revision == "r4");
    CHECK(change_list.vuln_id == "VULN-0050");
}

TEST_CASE("a no-op patch yields an empty change-list")
{
    test::TempDir tmp("noop");
    test::write_file(tmp / "s" / "log.tsv",
                     "n1\t2015-01-01T08:00:00Z\tbase\nn2\t2015-01-02T08:00:00Z\tno-op\n");
    test::write_file(tmp / "s" / "tags.tsv", "");
    std::string source = "package p; fn f(a) { return a; }";
    test::write_file(tmp / "s" / "revisions/n1/a.mj", source);
    test::write_file(tmp / "s" / "revisions/n2/a.mj", source);
    RevisionStore store = load_revision_store(tmp / "s");
    CHECK(compute_change_list(store, "n2", LibraryId{"p", "p"}, "VULN-x").entries.empty());
}

TEST_CASE("additions and deletions are classified")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/guard"));
    ChangeList change_list =
        compute_change_list(store, "g2", LibraryId{"acme", "fileupload"}, "VULN-g");
    REQUIRE(change_list.entries.size() == 2);
    CHECK(render_signature(change_list.entries[0].signature)
          == "acme.fileupload.Guard.check/1");
    CHECK(change_list.entries[0].kind == ChangeKind::add);
    CHECK(render_signature(change_list.entries[1].signature) == "acme.fileupload.old/0");
    CHECK(change_list.entries[1].kind == ChangeKind::del);
}

TEST_CASE("multi-commit union keeps the first kind per signature")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/fileupload"));
    ChangeList merged = compute_change_list_union(store, {"r4", "r5"},
                                                  LibraryId{"acme", "fileupload"}, "VULN-0050");
    CHECK(merged.fix_revision == "r4,r5");
    // r4 changes the constructor, r5 changes release_name
    REQUIRE(merged.entries.size() == 2);
    CHECK(render_signature(merged.entries[0].signature)
          == "acme.fileupload.MultipartStream.init/3");
    CHECK(render_signature(merged.entries[1].signature) == "acme.fileupload.release_name/0");
}

TEST_CASE("affected versions by tags")
{
    RevisionStore store = load_revision_store(test::fixture_path("stores/fileupload"));
    TagVersionEvidence evidence = affected_versions_by_tags(store, "r4");
    CHECK(evidence.affected == std::vector<std::string>{"1.2.2"});
    CHECK(evidence.fixed == std::vector<std::string>{"1.3.1"});

    // boundary: a tag exactly at the fix revision counts as fixed
    TagVersionEvidence at_tag = affected_versions_by_tags(store, "r2");
    CHECK(at_tag.affected.empty());
    CHECK(at_tag.fixed == std::vector<std::string>{"1.2.2", "1.3.1"});

    CHECK_THROWS_AS(affected_versions_by_tags(store, "r9"), Error);

    RevisionStore untagged = load_revision_store(test::fixture_path("stores/guard"));
    TagVersionEvidence none = affected_versions_by_tags(untagged, "g2");
    CHECK(none.affected.empty());
    CHECK(none.fixed.empty()); // CPE fallback territory
}

TEST_CASE("parse errors carry the revision and file")
{
    test::TempDir tmp("parse-err");
    test::write_file(tmp / "s" / "log.tsv",
                     "p1\t2015-01-01T08:00:00Z\tbase\np2\t2015-01-02T08:00:00Z\tbreaks\n");
    test::write_file(tmp / "s" / "tags.tsv", "");
    test::write_file(tmp / "s" / "revisions/p1/a.mj", "package p; fn f() { }");
    test::write_file(tmp / "s" / "revisions/p2/a.mj", "package p; fn f( {");
    RevisionStore store = load_revision_store(tmp / "s");
    try {
        compute_change_list(store, "p2", LibraryId{"p", "p"}, "VULN-x");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse_error);
        CHECK(e.message().find("s@p2") != std::string::npos);
        CHECK(e.message().find("a.mj") != std::string::npos);
    }
}

TEST_CASE("diff partition, comment-insensitivity and symmetry")
{
    auto result = test::diff_property(0xd1ff, 500);
    INFO(result.first_failure);
    CHECK(result.failures == 0);
}
