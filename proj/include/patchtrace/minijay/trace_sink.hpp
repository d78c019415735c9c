#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"
#include "patchtrace/wire.hpp"

namespace patchtrace::minijay {

// Receives first-invocation trace records. Records are buffered and flushed
// once per run.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void emit(const TraceRecord& record) = 0;
    virtual void flush() {}
    virtual bool spilled() const { return false; }
};

class MemoryTraceSink final : public TraceSink {
public:
    void emit(const TraceRecord& record) override { records_.push_back(record); }
    const std::vector<TraceRecord>& records() const { return records_; }

private:
    std::vector<TraceRecord> records_;
};

// Appends one JSON line per record.
class FileTraceSink final : public TraceSink {
public:
    explicit FileTraceSink(std::filesystem::path path) : path_(std::move(path)) {}

    void emit(const TraceRecord& record) override { buffer_.push_back(record); }

    void flush() override
    {
        if (buffer_.empty())
            return;
        std::ofstream out(path_, std::ios::app);
        if (!out)
            raise(ErrorKind::io_error, "cannot open trace file " + path_.string());
        for (const auto& record : buffer_)
            out << format_trace_line(record) << '\n';
        out.flush();
        if (!out)
            raise(ErrorKind::io_error, "error writing trace file " + path_.string());
        buffer_.clear();
    }

private:
    std::filesystem::path path_;
    std::vector<TraceRecord> buffer_;
};

// POSTs the batch to the central service. An unreachable endpoint never fails
// the traced run: records spill to a local file for later ingestion.
class ServiceTraceSink final : public TraceSink {
public:
    ServiceTraceSink(std::string base_url, std::filesystem::path spill_path)
        : base_url_(std::move(base_url)), spill_path_(std::move(spill_path))
    {}

    void emit(const TraceRecord& record) override { buffer_.push_back(record); }

    void flush() override
    {
        if (buffer_.empty())
            return;
        std::string body;
        for (const auto& record : buffer_)
            body += format_trace_line(record) + "\n";
        std::string app = buffer_.front().app.canonical();

        httplib::Client client(base_url_);
        client.set_connection_timeout(5, 0);
        auto result = client.Post(("/apps/" + httplib::detail::encode_url(app) + "/traces"),
                                  body, "application/x-ndjson");
        if (!result || result->status >= 500) {
            std::ofstream out(spill_path_, std::ios::app);
            if (!out)
                raise(ErrorKind::sink_error,
                      "trace upload failed and spill file " + spill_path_.string()
                          + " cannot be opened");
            out << body;
            spilled_ = true;
        }
        buffer_.clear();
    }

    bool spilled() const override { return spilled_; }

private:
    std::string base_url_;
    std::filesystem::path spill_path_;
    std::vector<TraceRecord> buffer_;
    bool spilled_ = false;
};

} // namespace patchtrace::minijay
