#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "patchtrace/error.hpp"

namespace patchtrace::detail {

inline std::string read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorKind::io_error, "cannot read " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        raise(ErrorKind::io_error, "error while reading " + path.string());
    return content;
}

// Relative paths in ascending byte order, '/'-separated on every platform.
inline std::vector<std::string> relative_file_list(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        raise(ErrorKind::io_error, dir.string() + " is not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file())
            files.push_back(fs::relative(entry.path(), dir).generic_string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline std::vector<std::string> mj_files(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (!fs::is_directory(dir))
        return files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".mj")
            files.push_back(fs::relative(entry.path(), dir).generic_string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        raise(ErrorKind::io_error, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
        raise(ErrorKind::io_error, "error while writing " + path.string());
}

} // namespace patchtrace::detail
