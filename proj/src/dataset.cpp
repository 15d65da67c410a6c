#include "rvl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rvl {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    }
    return out;
}

}  // namespace

DataError::DataError(const std::string& what, std::size_t line)
    : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

SeriesKind parse_series_kind(std::string_view s) {
    if (s == "returns") return SeriesKind::returns;
    if (s == "prices") return SeriesKind::prices;
    throw std::invalid_argument("data kind must be 'returns' or 'prices', got '" + std::string(s) + "'");
}

DescriptiveStats describe(const std::vector<double>& values) {
    DescriptiveStats s;
    s.count = values.size();
    if (values.empty()) {
        s.degenerate = true;
        return s;
    }
    const auto n = static_cast<double>(values.size());
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double e = v - s.mean;
        m2 += e * e;
        m3 += e * e * e;
        m4 += e * e * e * e;
    }
    s.sd = values.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.degenerate = !(m2 > 0.0);
    if (!s.degenerate) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

std::size_t ReturnsDataset::split_index(double fraction) const {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("in-sample fraction must lie in (0, 1)");
    }
    const auto idx = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size())));
    if (idx == 0 || idx >= size()) {
        throw std::invalid_argument("split leaves an empty in-sample or out-of-sample segment");
    }
    return idx;
}

bool valid_iso_date(std::string_view s) noexcept {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return false;
    }
    int y = 0;
    unsigned mo = 0, d = 0;
    auto num = [&](std::size_t pos, std::size_t len, auto& out) {
        const char* first = s.data() + pos;
        auto res = std::from_chars(first, first + len, out);
        return res.ec == std::errc() && res.ptr == first + len;
    };
    if (!num(0, 4, y) || !num(5, 2, mo) || !num(8, 2, d)) {
        return false;
    }
    using namespace std::chrono;
    return year_month_day{year{y}, month{mo}, day{d}}.ok();
}

std::string synthetic_date(std::size_t offset) {
    using namespace std::chrono;
    const sys_days start = year_month_day{year{2000}, January, day{3}};
    const year_month_day ymd{start + days{static_cast<long>(offset)}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

ReturnsDataset ingest(const std::filesystem::path& path, SeriesKind kind, std::string_view column) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw DataError("empty file " + path.string(), 1);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "date") {
        throw DataError("header must start with 'date'", line_no);
    }
    const auto col_it = std::find(header.begin() + 1, header.end(), column);
    if (col_it == header.end()) {
        throw DataError("no column named '" + std::string(column) + "'", line_no);
    }
    const auto col = static_cast<std::size_t>(col_it - header.begin());

    std::vector<std::string> dates;
    std::vector<double> raw;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            line_no);
        }
        if (!valid_iso_date(fields[0])) {
            throw DataError("invalid ISO date '" + std::string(fields[0]) + "'", line_no);
        }
        if (!dates.empty() && !(dates.back() < fields[0])) {
            throw DataError("dates must be strictly increasing", line_no);
        }
        double v;
        try {
            v = parse_double(fields[col]);
        } catch (const std::invalid_argument&) {
            throw DataError("malformed value '" + std::string(fields[col]) + "'", line_no);
        }
        if (!std::isfinite(v)) {
            throw DataError("non-finite value", line_no);
        }
        if (kind == SeriesKind::prices && !(v > 0.0)) {
            throw DataError("prices must be positive", line_no);
        }
        dates.emplace_back(fields[0]);
        raw.push_back(v);
    }

    ReturnsDataset ds;
    ds.source = kind;
    if (kind == SeriesKind::prices) {
        for (std::size_t t = 1; t < raw.size(); ++t) {
            ds.dates.push_back(dates[t]);
            ds.values.push_back(100.0 * (std::log(raw[t]) - std::log(raw[t - 1])));
        }
    } else {
        ds.dates = std::move(dates);
        ds.values = std::move(raw);
    }
    if (ds.values.empty()) {
        throw DataError("no observations in " + path.string());
    }
    ds.stats = describe(ds.values);
    return ds;
}

void write_dated_csv(const std::filesystem::path& path, const std::vector<std::string>& dates,
                     const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) {
        throw std::invalid_argument("one name per column required");
    }
    for (const auto& c : columns) {
        if (c.size() != dates.size()) {
            throw std::invalid_argument("column length differs from date count");
        }
    }
    std::string out = "date";
    for (const auto& n : names) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (std::size_t t = 0; t < dates.size(); ++t) {
        out += dates[t];
        for (const auto& c : columns) {
            out += ',';
            out += format_double(c[t]);
        }
        out += '\n';
    }
    write_text(path, out);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rvl
