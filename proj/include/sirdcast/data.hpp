#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sirdcast/date.hpp"
#include "sirdcast/errors.hpp"
#include "sirdcast/io.hpp"
#include "sirdcast/sird.hpp"

namespace sirdcast::data {

inline constexpr std::size_t kTestDays = 28;

/// Header names of the input columns. A file without the country column is read as a single country.
struct ColumnMapping {
    std::string country = "location";
    std::string date = "date";
    std::string cases = "total_cases";
    std::string recovered = "total_recovered";
    std::string deaths = "total_deaths";
};

struct DateRange {
    std::optional<Date> first;
    std::optional<Date> last;

    bool contains(Date d) const { return (!first || d >= *first) && (!last || d <= *last); }
};

struct RawRow {
    Date date{};
    double cases = 0.0;
    double recovered = 0.0;
    double deaths = 0.0;
};

/// Daily cumulative counts for one country.
struct RawSeries {
    std::string country;
    double population = 0.0;
    std::vector<RawRow> rows;
};

struct DatasetWindow {
    CompartmentSeries train;
    CompartmentSeries test;
};

/// Default populations for the bundled country datasets.
inline std::optional<double> default_population(const std::string& country)
{
    static const std::map<std::string, double> table{
        {"United States", 330e6}, {"USA", 330e6}, {"India", 1100e6}, {"United Kingdom", 60e6}, {"UK", 60e6}};
    const auto it = table.find(country);
    return it == table.end() ? std::nullopt : std::optional<double>(it->second);
}

namespace detail {

inline std::optional<double> parse_count(const std::string& field)
{
    if (field.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

/// Reads daily cumulative counts for `country` inside `range`.
///
/// Cleaning: missing cells and missing days are forward-filled from the previous day, any cumulative
/// decrease is replaced by the running maximum, and days before the first nonzero case count are dropped.
inline RawSeries load_csv(const std::filesystem::path& path, const std::string& country, const DateRange& range,
                          double population, const ColumnMapping& columns = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("dataset '" + path.string() + "' has no header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = io::split_csv_line(line);
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? std::nullopt : std::optional<std::size_t>(it - header.begin());
    };
    auto require = [&](const std::string& name) {
        const auto idx = find(name);
        if (!idx) {
            throw SchemaError("dataset '" + path.string() + "' is missing required column '" + name + "'");
        }
        return *idx;
    };
    const auto date_col = require(columns.date);
    const auto cases_col = require(columns.cases);
    const auto recovered_col = require(columns.recovered);
    const auto deaths_col = require(columns.deaths);
    const auto country_col = find(columns.country);

    struct Parsed {
        Date date;
        std::optional<double> cases, recovered, deaths;
    };
    std::vector<Parsed> parsed;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = io::split_csv_line(line);
        auto at = [&](std::size_t k) -> std::string { return k < fields.size() ? fields[k] : std::string{}; };
        if (country_col && at(*country_col) != country) {
            continue;
        }
        const Date date = parse_date(at(date_col));
        if (!range.contains(date)) {
            continue;
        }
        parsed.push_back({date, detail::parse_count(at(cases_col)), detail::parse_count(at(recovered_col)),
                          detail::parse_count(at(deaths_col))});
    }
    if (parsed.empty()) {
        throw NoDataError("no rows for '" + country + "' in the requested date range of '" + path.string() + "'");
    }
    std::stable_sort(parsed.begin(), parsed.end(), [](const Parsed& a, const Parsed& b) { return a.date < b.date; });
    for (std::size_t k = 1; k < parsed.size(); ++k) {
        if (parsed[k].date == parsed[k - 1].date) {
            throw DataInconsistency("duplicate date " + format_date(parsed[k].date) + " in '" + path.string() + "'");
        }
    }

    RawSeries raw{country, population, {}};
    RawRow prev{parsed.front().date, 0.0, 0.0, 0.0};
    for (const auto& p : parsed) {
        // Fill every skipped day with the previous day's values.
        if (!raw.rows.empty()) {
            for (Date d = add_days(raw.rows.back().date, 1); d < p.date; d = add_days(d, 1)) {
                prev.date = d;
                raw.rows.push_back(prev);
            }
        }
        RawRow row{p.date, p.cases.value_or(prev.cases), p.recovered.value_or(prev.recovered),
                   p.deaths.value_or(prev.deaths)};
        row.cases = std::max(row.cases, prev.cases);
        row.recovered = std::max(row.recovered, prev.recovered);
        row.deaths = std::max(row.deaths, prev.deaths);
        raw.rows.push_back(row);
        prev = row;
    }
    const auto first_case =
        std::find_if(raw.rows.begin(), raw.rows.end(), [](const RawRow& r) { return r.cases > 0.0; });
    raw.rows.erase(raw.rows.begin(), first_case);
    if (raw.rows.empty()) {
        throw NoDataError("no nonzero case counts for '" + country + "' in '" + path.string() + "'");
    }
    return raw;
}

/// Trailing 7-day moving average; the first six days average what is available.
inline std::vector<double> smooth(std::span<const double> values)
{
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::size_t n = std::min<std::size_t>(k + 1, 7);
        double s = 0.0;
        for (std::size_t j = k + 1 - n; j <= k; ++j) {
            s += values[j];
        }
        out[k] = s / static_cast<double>(n);
    }
    return out;
}

/// Smooths each cumulative column of the series.
inline RawSeries smooth(const RawSeries& raw)
{
    std::vector<double> c, r, d;
    for (const auto& row : raw.rows) {
        c.push_back(row.cases);
        r.push_back(row.recovered);
        d.push_back(row.deaths);
    }
    const auto cs = smooth(c);
    const auto rs = smooth(r);
    const auto ds = smooth(d);
    RawSeries out = raw;
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
        out.rows[k].cases = cs[k];
        out.rows[k].recovered = rs[k];
        out.rows[k].deaths = ds[k];
    }
    return out;
}

/// S = N - C, I = C - R_cum - D_cum, R = R_cum, D = D_cum.
inline CompartmentSeries derive_compartments(const RawSeries& raw)
{
    if (!(raw.population > 0.0)) {
        throw InvalidInput("population must be positive");
    }
    if (raw.rows.empty()) {
        throw NoDataError("raw series is empty");
    }
    CompartmentSeries out{raw.population, raw.rows.front().date, {}};
    out.states.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        const CompartmentState st{raw.population - row.cases, row.cases - row.recovered - row.deaths, row.recovered,
                                  row.deaths};
        if (st.s < 0.0 || st.i < 0.0 || st.r < 0.0 || st.d < 0.0) {
            throw DataInconsistency("negative compartment derived on " + format_date(row.date) +
                                    " (check that recovered + deaths <= cases <= population)");
        }
        out.states.push_back(st);
    }
    return out;
}

/// Last 28 days become the test set.
inline DatasetWindow train_test_split(const CompartmentSeries& series)
{
    if (series.size() < kTestDays + 14) {
        throw InvalidInput("series has " + std::to_string(series.size()) + " days; need at least " +
                           std::to_string(kTestDays + 14));
    }
    const std::size_t train_days = series.size() - kTestDays;
    return {series.slice(0, train_days), series.slice(train_days, kTestDays)};
}

/// Cleaned compartments as CSV with columns date,S,I,R,D.
inline std::string compartments_csv(const CompartmentSeries& series)
{
    std::string csv = "date,S,I,R,D\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& st = series.states[k];
        csv += format_date(series.date_at(k)) + ',' + io::format_double(st.s) + ',' + io::format_double(st.i) + ',' +
               io::format_double(st.r) + ',' + io::format_double(st.d) + '\n';
    }
    return csv;
}

} // namespace sirdcast::data
