#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patchtrace/core/model.hpp"

#include "support/properties.hpp"

using namespace patchtrace;

TEST_CASE("canonical rendering")
{
    ConstructSignature parse_fn{"acme.util", {}, "parse", ConstructKind::func, 1};
    CHECK(render_signature(parse_fn) == "acme.util.parse/1");

    ConstructSignature ctor{"acme.fileupload", {"MultipartStream"}, "init", ConstructKind::cons, 3};
    CHECK(render_signature(ctor) == "acme.fileupload.MultipartStream.init/3");
    CHECK(parse_signature(render_signature(ctor)) == ctor);

    ConstructSignature nested{"acme", {"Outer", "Inner"}, "run", ConstructKind::meth, 0};
    CHECK(render_signature(nested) == "acme.Outer.Inner.run/0");
}

TEST_CASE("parsing and kind inference")
{
    ConstructSignature fn = parse_signature("acme.util.parse/1");
    CHECK(fn.kind == ConstructKind::func);
    CHECK(fn.package == "acme.util");
    CHECK(fn.container.empty());
    CHECK(fn.name == "parse");
    CHECK(fn.arity == 1);

    ConstructSignature ctor = parse_signature("acme.fileupload.MultipartStream.init/3");
    CHECK(ctor.kind == ConstructKind::cons);
    CHECK(ctor.container == std::vector<std::string>{"MultipartStream"});

    ConstructSignature meth = parse_signature("acme.Outer.Inner.run/0");
    CHECK(meth.kind == ConstructKind::meth);
    CHECK(meth.container == std::vector<std::string>{"Outer", "Inner"});

    // a bare or package-level name is a function even when called init
    CHECK(parse_signature("init/0").kind == ConstructKind::func);
    CHECK(parse_signature("hex/1").package.empty());
}

TEST_CASE("malformed signatures")
{
    CHECK_THROWS_AS(parse_signature("bad//2"), Error);
    CHECK_THROWS_AS(parse_signature("acme.util.parse"), Error);   // missing arity
    CHECK_THROWS_AS(parse_signature("acme..parse/1"), Error);     // empty segment
    CHECK_THROWS_AS(parse_signature("acme.parse/x"), Error);      // non-numeric arity
    CHECK_THROWS_AS(parse_signature("acme.parse/"), Error);
    CHECK_THROWS_AS(parse_signature("acme.Outer.pkg.run/0"), Error); // package after class
    CHECK_THROWS_AS(parse_signature("9acme.run/0"), Error);
    try {
        parse_signature("bad//2");
        FAIL("expected MalformedSignature");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::malformed_signature);
    }
}

TEST_CASE("signature round-trip property")
{
    auto result = test::signature_roundtrip_property(0x5146, 10000);
    INFO(result.first_failure);
    CHECK(result.failures == 0);
    CHECK(result.cases == 10000);
}

TEST_CASE("version comparison examples")
{
    CHECK(compare_versions("1.2.2", "1.3.1") == Ordering::lt);
    CHECK(compare_versions("1.3.1", "1.3.1") == Ordering::eq);
    CHECK(compare_versions("1.10", "1.9") == Ordering::gt);

    // brute-force oracle for the numeric-segment rule: decode both segment
    // lists as integers and compare lexicographically
    auto oracle = [](const std::string& a, const std::string& b) {
        auto decode = [](const std::string& v) {
            std::vector<long> out;
            std::string seg;
            for (char c : v + ".") {
                if (c == '.') {
                    out.push_back(std::stol(seg));
                    seg.clear();
                } else {
                    seg += c;
                }
            }
            return out;
        };
        auto da = decode(a), db = decode(b);
        if (da < db)
            return Ordering::lt;
        if (db < da)
            return Ordering::gt;
        return Ordering::eq;
    };
    CHECK(compare_versions("1.10", "1.9") == oracle("1.10", "1.9"));
    CHECK(compare_versions("2.0.0", "2.0") == oracle("2.0.0", "2.0"));
    CHECK(compare_versions("4.2", "4.10.1") == oracle("4.2", "4.10.1"));

    CHECK(compare_versions("1.2", "1.2.0") == Ordering::lt); // shorter prefix sorts first
    CHECK(compare_versions("1.0-rc", "1.0-rc") == Ordering::eq);
    CHECK(compare_versions("1.beta", "1.alpha") == Ordering::gt); // bytewise fallback
}

TEST_CASE("version order is total")
{
    auto result = test::version_order_property(0xbeef, 2000);
    INFO(result.first_failure);
    CHECK(result.failures == 0);
}

TEST_CASE("application and library identifiers")
{
    AppId app = parse_app_id("com.acme:testapp:0.1");
    CHECK(app.group == "com.acme");
    CHECK(app.artifact == "testapp");
    CHECK(app.version == "0.1");
    CHECK(app.canonical() == "com.acme:testapp:0.1");

    CHECK_THROWS_AS(parse_app_id("com.acme:testapp"), Error);
    CHECK_THROWS_AS(parse_app_id("a::1"), Error);
    CHECK_THROWS_AS(parse_app_id(""), Error);

    LibraryId lib = parse_library_id("acme:fileupload");
    CHECK(lib.group == "acme");
    CHECK(lib.artifact == "fileupload");
    CHECK_THROWS_AS(parse_library_id("acme"), Error);
}

TEST_CASE("CPE names in URI binding form")
{
    CpeName cpe = parse_cpe("cpe:/a:apache:commons_fileupload");
    CHECK(cpe.part == 'a');
    CHECK(cpe.vendor == "apache");
    CHECK(cpe.product == "commons_fileupload");
    CHECK_FALSE(cpe.version.has_value());

    CpeName with_version = parse_cpe("cpe:/a:apache:tomcat:7.0.50");
    CHECK(with_version.version == "7.0.50");
    CHECK(with_version.uri() == "cpe:/a:apache:tomcat:7.0.50");

    CpeName before = parse_cpe("cpe:/a:acme:fileupload", "1.3.1");
    CHECK(before.version_end_excluding == "1.3.1");

    CHECK_THROWS_AS(parse_cpe("cpe:/x:a:b"), Error);
    CHECK_THROWS_AS(parse_cpe("cpe:a:b:c"), Error);
    CHECK_THROWS_AS(parse_cpe("cpe:/a:vendor"), Error);
}

TEST_CASE("vulnerability ids")
{
    CHECK(is_valid_vuln_id("CVE-2014-0050"));
    CHECK(is_valid_vuln_id("CVE-2012-2098"));
    CHECK(is_valid_vuln_id("VULN-0050"));
    CHECK(is_valid_vuln_id("VULN-abc_1"));
    CHECK_FALSE(is_valid_vuln_id("CVE-14-0050"));
    CHECK_FALSE(is_valid_vuln_id("CVE-2014-050"));
    CHECK_FALSE(is_valid_vuln_id("GHSA-xxxx"));
    CHECK_FALSE(is_valid_vuln_id(""));
}

TEST_CASE("timestamps and trace-record precedence")
{
    std::int64_t t = parse_utc("2014-02-06T12:00:00Z");
    CHECK(format_utc(t) == "2014-02-06T12:00:00Z");
    CHECK(parse_utc("1970-01-01T00:00:00Z") == 0);
    CHECK_THROWS_AS(parse_utc("2014-02-06 12:00:00Z"), Error);
    CHECK_THROWS_AS(parse_utc("2014-02-30T12:00:00Z"), Error); // does not normalize
    CHECK_THROWS_AS(parse_utc("2014-13-06T12:00:00Z"), Error);

    // earliest record wins, run id breaks ties
    TraceRecord a{AppId{"g", "a", "1"}, parse_signature("p.f/0"), std::nullopt, 100, "r2"};
    TraceRecord b{AppId{"g", "a", "1"}, parse_signature("p.f/0"), std::nullopt, 100, "r1"};
    TraceRecord c{AppId{"g", "a", "1"}, parse_signature("p.f/0"), std::nullopt, 99, "r9"};
    CHECK(trace_record_precedes(b, a));
    CHECK(trace_record_precedes(c, b));
    CHECK_FALSE(trace_record_precedes(a, a));
}

TEST_CASE("digest strings")
{
    CHECK(is_hex_digest(std::string(40, 'a')));
    CHECK(is_hex_digest(std::string(64, '0')));
    CHECK_FALSE(is_hex_digest(std::string(39, 'a')));
    CHECK_FALSE(is_hex_digest(std::string(40, 'A'))); // uppercase rejected
    CHECK_FALSE(is_hex_digest(std::string(40, 'g')));
    CHECK(digest_hex_length(DigestAlgo::sha1) == 40);
    CHECK(digest_hex_length(DigestAlgo::sha256) == 64);
}
