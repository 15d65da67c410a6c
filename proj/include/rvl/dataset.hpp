#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvl {

/// Unreadable or unwritable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input content; carries the 1-based line number when known.
class DataError : public std::invalid_argument {
public:
    DataError(const std::string& what, std::size_t line = 0);
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class SeriesKind { returns, prices };

SeriesKind parse_series_kind(std::string_view s);

struct DescriptiveStats {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    bool degenerate = false;  // sd == 0
};

/// Moment-based skewness m3 / m2^1.5 and excess kurtosis m4 / m2^2 - 3; sd uses n - 1.
DescriptiveStats describe(const std::vector<double>& values);

struct ReturnsDataset {
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    std::vector<double> values;      // returns in percent
    SeriesKind source = SeriesKind::returns;
    DescriptiveStats stats;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    /// Boundary index for an in-sample fraction; 0 < index < size().
    [[nodiscard]] std::size_t split_index(double fraction) const;
};

/// Checks YYYY-MM-DD and calendar validity.
bool valid_iso_date(std::string_view s) noexcept;

/// ISO date `offset` days after 2000-01-03.
std::string synthetic_date(std::size_t offset);

/**
 * @brief Reads a CSV whose header begins with `date`.
 *
 * `column` selects the value column by header name. Prices are converted to
 * percentage log returns 100 * (ln p_t - ln p_{t-1}), dropping the first date.
 */
ReturnsDataset ingest(const std::filesystem::path& path, SeriesKind kind = SeriesKind::returns,
                      std::string_view column = "value");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view s);

/// Writes `date,<name>...` with one row per date.
void write_dated_csv(const std::filesystem::path& path, const std::vector<std::string>& dates,
                     const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace rvl
