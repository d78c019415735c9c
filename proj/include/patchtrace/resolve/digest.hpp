#pragma once

#include <filesystem>
#include <string>

#include "patchtrace/core/fs.hpp"
#include "patchtrace/core/model.hpp"
#include "patchtrace/error.hpp"
#include "patchtrace/resolve/sha.hpp"

namespace patchtrace {

// Content address of a library archive (a directory tree). The serialization
// is `path-bytes 0x00 content-bytes 0x00` per file, files ordered by relative
// path, so traversal order and absolute location never matter.
inline std::string archive_digest(const std::filesystem::path& dir,
                                  DigestAlgo algo = DigestAlgo::sha1)
{
    auto files = detail::relative_file_list(dir);
    if (files.empty())
        raise(ErrorKind::io_error, "archive directory " + dir.string() + " contains no files");

    auto feed = [&](auto& hasher) {
        const char zero = '\0';
        for (const auto& rel : files) {
            hasher.update(rel);
            hasher.update(&zero, 1);
            hasher.update(detail::read_file_bytes(dir / rel));
            hasher.update(&zero, 1);
        }
        return hasher.hex_digest();
    };

    if (algo == DigestAlgo::sha256) {
        Sha256 hasher;
        return feed(hasher);
    }
    Sha1 hasher;
    return feed(hasher);
}

} // namespace patchtrace
