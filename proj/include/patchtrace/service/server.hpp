#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>

#include "patchtrace/engine/engine.hpp"
#include "patchtrace/engine/report.hpp"

namespace patchtrace {

// Thin HTTP adapter over AssessmentEngine: every endpoint equals the
// corresponding engine operation called in-process. All mutations funnel
// through one lock and snapshot the state file after each change.
class IngestService {
public:
    IngestService(std::filesystem::path state_path)
        : state_path_(std::move(state_path)),
          engine_(AssessmentEngine::load_or_empty(state_path_))
    {
        install_routes();
    }

    // Binds to an explicit port; blocks until stop().
    void serve(const std::string& host, int port)
    {
        if (!server_.bind_to_port(host, port))
            raise(ErrorKind::bind_error,
                  "cannot bind " + host + ":" + std::to_string(port));
        bound_port_ = port;
        server_.listen_after_bind();
        persist_unlocked();
    }

    // Binds to an OS-assigned port and serves on a caller-owned thread.
    int bind_ephemeral(const std::string& host)
    {
        bound_port_ = server_.bind_to_any_port(host);
        if (bound_port_ < 0)
            raise(ErrorKind::bind_error, "cannot bind " + host);
        return bound_port_;
    }

    void listen_after_bind() { server_.listen_after_bind(); }

    void stop()
    {
        server_.stop();
        std::lock_guard<std::mutex> lock(mutex_);
        persist_unlocked();
    }

    int port() const { return bound_port_; }

    AssessmentEngine& engine() { return engine_; }

private:
    void install_routes()
    {
        server_.Put(R"(/apps/([^/]+)/constructs)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json& body) {
                            AppId app = parse_app_id(req.matches[1].str());
                            if (!body.is_array())
                                raise(ErrorKind::malformed_record,
                                      "body must be a JSON array of signatures");
                            std::vector<std::string> signatures;
                            for (const Json& sig : body) {
                                if (!sig.is_string())
                                    raise(ErrorKind::malformed_record,
                                          "signatures must be strings");
                                signatures.push_back(sig.get<std::string>());
                            }
                            std::lock_guard<std::mutex> lock(mutex_);
                            engine_.upsert_app_constructs(app, signatures);
                            persist_unlocked();
                            return Json{{"count", signatures.size()}};
                        });
                    });

        server_.Post(R"(/apps/([^/]+)/traces)",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         AppId app;
                         try {
                             app = parse_app_id(req.matches[1].str());
                         } catch (const Error& e) {
                             reply_error(res, e);
                             return;
                         }
                         // records for a different application are per-record
                         // errors; the endpoint is scoped to {app}
                         ParsedTraceLines parsed = parse_trace_lines(req.body);
                         TraceIngestOutcome outcome;
                         std::vector<TraceRecord> in_scope;
                         for (auto& [line, record] : parsed.records) {
                             if (record.app == app)
                                 in_scope.push_back(std::move(record));
                             else
                                 parsed.errors.emplace_back(
                                     line, "record app '" + record.app.canonical()
                                               + "' does not match the URL");
                         }
                         std::sort(parsed.errors.begin(), parsed.errors.end());
                         outcome.errors = std::move(parsed.errors);
                         {
                             std::lock_guard<std::mutex> lock(mutex_);
                             outcome.accepted = engine_.ingest_traces(in_scope);
                             persist_unlocked();
                         }
                         Json errors = Json::array();
                         for (const auto& [line, message] : outcome.errors)
                             errors.push_back(Json{{"line", line}, {"message", message}});
                         Json body{{"accepted", outcome.accepted}, {"errors", std::move(errors)}};
                         // Partial accept: valid records are applied either way.
                         res.status = outcome.errors.empty() ? 200 : 400;
                         res.set_content(body.dump(2) + "\n", "application/json");
                     });

        server_.Put(R"(/libs/([^/]+)/vulns/([^/]+)/changelist)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json& body) {
                            LibraryId library = parse_library_id(req.matches[1].str());
                            std::string vuln_id = req.matches[2].str();
                            auto [change_list, tags] = change_list_from_json(body);
                            if (change_list.library != library)
                                raise(ErrorKind::malformed_record,
                                      "body library '" + change_list.library.canonical()
                                          + "' does not match the URL");
                            if (change_list.vuln_id != vuln_id)
                                raise(ErrorKind::malformed_record,
                                      "body vulnerability '" + change_list.vuln_id
                                          + "' does not match the URL");
                            std::lock_guard<std::mutex> lock(mutex_);
                            engine_.upsert_change_list(std::move(change_list), std::move(tags));
                            persist_unlocked();
                            return Json{{"stored", true}};
                        });
                    });

        server_.Put(R"(/apps/([^/]+)/archives)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json& body) {
                            AppId app = parse_app_id(req.matches[1].str());
                            if (!body.is_array())
                                raise(ErrorKind::malformed_record,
                                      "body must be a JSON array of declared archives");
                            std::vector<DeclaredArchive> archives;
                            for (const Json& item : body)
                                archives.push_back(declared_archive_from_json(item));
                            std::size_t count = archives.size();
                            std::lock_guard<std::mutex> lock(mutex_);
                            engine_.upsert_declared_archives(app, std::move(archives));
                            persist_unlocked();
                            return Json{{"count", count}};
                        });
                    });

        server_.Get(R"(/apps/([^/]+)/assessment)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json&) {
                            AppId app = parse_app_id(req.matches[1].str());
                            std::lock_guard<std::mutex> lock(mutex_);
                            Json verdicts = Json::array();
                            for (const Verdict& verdict : engine_.assess_all(app))
                                verdicts.push_back(verdict_to_json(verdict));
                            return Json{{"app", app.canonical()},
                                        {"verdicts", std::move(verdicts)}};
                        });
                    });

        server_.Get(R"(/apps/([^/]+)/coverage)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json&) {
                            AppId app = parse_app_id(req.matches[1].str());
                            std::lock_guard<std::mutex> lock(mutex_);
                            return coverage_to_json(engine_.coverage(app));
                        });
                    });

        server_.Get(R"(/apps/([^/]+)/archives)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, [&](const Json&) {
                            AppId app = parse_app_id(req.matches[1].str());
                            std::lock_guard<std::mutex> lock(mutex_);
                            return archives_to_json(engine_.archives_view(app));
                        });
                    });
    }

    void handle(const httplib::Request& req, httplib::Response& res,
                const std::function<Json(const Json&)>& action)
    {
        try {
            Json body;
            if (!req.body.empty()) {
                body = Json::parse(req.body, nullptr, false);
                if (body.is_discarded())
                    raise(ErrorKind::malformed_record, "request body is not valid JSON");
            }
            Json out = action(body);
            res.status = 200;
            res.set_content(out.dump(2) + "\n", "application/json");
        } catch (const Error& e) {
            reply_error(res, e);
        }
    }

    static int status_for(ErrorKind kind)
    {
        switch (kind) {
        case ErrorKind::unknown_app:
        case ErrorKind::unknown_vuln:
        case ErrorKind::no_change_list:
            return 404;
        case ErrorKind::io_error:
        case ErrorKind::state_corrupt:
            return 500;
        default:
            return 400;
        }
    }

    static void reply_error(httplib::Response& res, const Error& e)
    {
        Json body{{"kind", std::string(e.kind_name())}, {"message", e.message()}};
        res.status = status_for(e.kind());
        res.set_content(body.dump(2) + "\n", "application/json");
    }

    void persist_unlocked() { engine_.save(state_path_); }

    std::filesystem::path state_path_;
    AssessmentEngine engine_;
    httplib::Server server_;
    std::mutex mutex_;
    int bound_port_ = -1;
};

} // namespace patchtrace
