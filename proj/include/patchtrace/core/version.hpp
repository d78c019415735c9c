#pragma once

#include <algorithm>
#include <cctype>
#include <string_view>
#include <vector>

namespace patchtrace {

enum class Ordering { lt, eq, gt };

inline std::string_view to_string(Ordering o)
{
    switch (o) {
    case Ordering::lt: return "LT";
    case Ordering::eq: return "EQ";
    case Ordering::gt: return "GT";
    }
    return "EQ";
}

namespace detail {

inline bool all_digits(std::string_view seg)
{
    return !seg.empty()
        && std::all_of(seg.begin(), seg.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

inline Ordering compare_numeric_segments(std::string_view a, std::string_view b)
{
    a.remove_prefix(std::min(a.find_first_not_of('0'), a.size()));
    b.remove_prefix(std::min(b.find_first_not_of('0'), b.size()));
    if (a.size() != b.size())
        return a.size() < b.size() ? Ordering::lt : Ordering::gt;
    int c = a.compare(b);
    return c < 0 ? Ordering::lt : c > 0 ? Ordering::gt : Ordering::eq;
}

inline std::vector<std::string_view> split_segments(std::string_view v)
{
    std::vector<std::string_view> segs;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = v.find('.', start);
        if (pos == std::string_view::npos) {
            segs.push_back(v.substr(start));
            return segs;
        }
        segs.push_back(v.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

// Dot-segmented version comparison: numeric where both segments are all
// digits, bytewise otherwise; a shorter version with an equal prefix sorts
// first. Every pair of strings is comparable.
inline Ordering compare_versions(std::string_view v1, std::string_view v2)
{
    auto a = detail::split_segments(v1);
    auto b = detail::split_segments(v2);
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        Ordering o;
        if (detail::all_digits(a[i]) && detail::all_digits(b[i])) {
            o = detail::compare_numeric_segments(a[i], b[i]);
        } else {
            int c = a[i].compare(b[i]);
            o = c < 0 ? Ordering::lt : c > 0 ? Ordering::gt : Ordering::eq;
        }
        if (o != Ordering::eq)
            return o;
    }
    if (a.size() == b.size())
        return Ordering::eq;
    return a.size() < b.size() ? Ordering::lt : Ordering::gt;
}

inline bool version_less(std::string_view a, std::string_view b)
{
    return compare_versions(a, b) == Ordering::lt;
}

} // namespace patchtrace
