#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sirdcast/data.hpp"

using namespace sirdcast;
using namespace sirdcast::data;

namespace {

std::string fixture(const char* name) { return std::string(SIRDCAST_FIXTURES) + "/" + name; }

RawSeries raw_from(std::vector<double> cases, std::vector<double> recovered, std::vector<double> deaths, double n)
{
    RawSeries raw{"X", n, {}};
    const Date start = parse_date("2021-01-01");
    for (std::size_t k = 0; k < cases.size(); ++k) {
        raw.rows.push_back({add_days(start, static_cast<int>(k)), cases[k], recovered[k], deaths[k]});
    }
    return raw;
}

CompartmentSeries flat_series(std::size_t days)
{
    CompartmentSeries s{1000.0, parse_date("2021-01-01"), {}};
    for (std::size_t k = 0; k < days; ++k) {
        s.states.push_back({900.0 - static_cast<double>(k) * 0.1, 50.0, 40.0 + static_cast<double>(k) * 0.1, 10.0});
    }
    return s;
}

} // namespace

TEST(LoadCsv, ReadsWellFormedRowsForOneCountry)
{
    const auto raw = load_csv(fixture("wellformed.csv"), "Testland", {}, 1000.0);
    ASSERT_EQ(raw.rows.size(), 3u);
    EXPECT_EQ(raw.country, "Testland");
    EXPECT_EQ(raw.population, 1000.0);
    EXPECT_EQ(format_date(raw.rows[0].date), "2021-03-01");
    EXPECT_EQ(raw.rows[0].cases, 100.0);
    EXPECT_EQ(raw.rows[0].recovered, 30.0);
    EXPECT_EQ(raw.rows[0].deaths, 5.0);
    EXPECT_EQ(raw.rows[2].cases, 150.0);
    EXPECT_EQ(raw.rows[2].recovered, 55.0);
    EXPECT_EQ(raw.rows[2].deaths, 8.0);
}

TEST(LoadCsv, CumulativeDipIsReplacedByRunningMax)
{
    const auto raw = load_csv(fixture("dip.csv"), "Testland", {}, 1000.0);
    ASSERT_EQ(raw.rows.size(), 3u);
    EXPECT_EQ(raw.rows[0].cases, 100.0);
    EXPECT_EQ(raw.rows[1].cases, 100.0);
    EXPECT_EQ(raw.rows[2].cases, 110.0);
}

TEST(LoadCsv, MissingColumnIsASchemaErrorNamingIt)
{
    try {
        load_csv(fixture("missing_recovered.csv"), "Testland", {}, 1000.0);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("total_recovered"), std::string::npos);
    }
}

TEST(LoadCsv, MissingFileIsAnIoErrorNamingThePath)
{
    try {
        load_csv(fixture("does_not_exist.csv"), "Testland", {}, 1000.0);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("does_not_exist.csv"), std::string::npos);
    }
}

TEST(LoadCsv, ForwardFillsCellsAndDaysAndDropsLeadingZeros)
{
    const auto raw = load_csv(fixture("gaps.csv"), "Testland", {}, 1000.0);
    ASSERT_EQ(raw.rows.size(), 4u);
    EXPECT_EQ(format_date(raw.rows[0].date), "2021-02-28");
    EXPECT_EQ(raw.rows[1].recovered, 2.0);
    EXPECT_EQ(raw.rows[1].deaths, 1.0);
    EXPECT_EQ(format_date(raw.rows[2].date), "2021-03-02");
    EXPECT_EQ(raw.rows[2].cases, 12.0);
    EXPECT_EQ(raw.rows[2].recovered, 2.0);
    EXPECT_EQ(raw.rows[3].cases, 20.0);
    EXPECT_EQ(raw.rows[3].recovered, 5.0);
}

TEST(LoadCsv, QuotedCountryNamesAreMatchedExactly)
{
    const auto raw = load_csv(fixture("gaps.csv"), "Testland, East", {}, 1000.0);
    ASSERT_EQ(raw.rows.size(), 1u);
    EXPECT_EQ(raw.rows[0].cases, 99.0);
}

TEST(LoadCsv, DateRangeFilters)
{
    DateRange range{parse_date("2021-03-02"), parse_date("2021-03-02")};
    const auto raw = load_csv(fixture("wellformed.csv"), "Testland", range, 1000.0);
    ASSERT_EQ(raw.rows.size(), 1u);
    EXPECT_EQ(raw.rows[0].cases, 120.0);
}

TEST(LoadCsv, UnknownCountryOrEmptyRangeIsNoData)
{
    EXPECT_THROW(load_csv(fixture("wellformed.csv"), "Atlantis", {}, 1000.0), NoDataError);
    DateRange range{parse_date("2030-01-01"), std::nullopt};
    EXPECT_THROW(load_csv(fixture("wellformed.csv"), "Testland", range, 1000.0), NoDataError);
}

TEST(LoadCsv, CustomColumnMappingWithoutCountryColumn)
{
    ColumnMapping cols;
    cols.country = "country";
    cols.date = "day";
    cols.cases = "confirmed";
    cols.recovered = "recoveries";
    cols.deaths = "fatalities";
    const auto raw = load_csv(fixture("single_country_mapped.csv"), "Anywhere", {}, 1000.0, cols);
    ASSERT_EQ(raw.rows.size(), 2u);
    EXPECT_EQ(raw.rows[1].cases, 120.0);
}

TEST(DefaultPopulation, KnownAndUnknownCountries)
{
    EXPECT_EQ(default_population("United States"), 330e6);
    EXPECT_EQ(default_population("India"), 1100e6);
    EXPECT_EQ(default_population("United Kingdom"), 60e6);
    EXPECT_FALSE(default_population("Atlantis").has_value());
}

TEST(Smooth, ConstantSeriesUnchanged)
{
    const std::vector<double> v(20, 42.0);
    for (double x : smooth(v)) {
        EXPECT_DOUBLE_EQ(x, 42.0);
    }
}

TEST(Smooth, TrailingWindowValues)
{
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7};
    auto s = smooth(v);
    EXPECT_DOUBLE_EQ(s[6], 4.0);
    EXPECT_DOUBLE_EQ(s[0], 1.0);
    EXPECT_DOUBLE_EQ(s[1], 1.5);
    v.push_back(8);
    s = smooth(v);
    EXPECT_DOUBLE_EQ(s[7], 5.0);
}

TEST(Smooth, NondecreasingInputStaysBelowRunningMax)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> inc(0.0, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v{0.0};
        for (int k = 0; k < 60; ++k) {
            v.push_back(v.back() + inc(rng));
        }
        const auto s = smooth(v);
        for (std::size_t k = 0; k < v.size(); ++k) {
            EXPECT_LE(s[k], v[k] + 1e-9);
            if (k > 0) {
                EXPECT_GE(s[k], s[k - 1] - 1e-9);
            }
        }
    }
}

TEST(Derive, HandExample)
{
    const auto s = derive_compartments(raw_from({100}, {30}, {5}, 1000));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.states[0].s, 900.0);
    EXPECT_EQ(s.states[0].i, 65.0);
    EXPECT_EQ(s.states[0].r, 30.0);
    EXPECT_EQ(s.states[0].d, 5.0);
}

TEST(Derive, NoCasesMeansEveryoneSusceptible)
{
    const auto s = derive_compartments(raw_from({0}, {0}, {0}, 1000));
    EXPECT_EQ(s.states[0], (CompartmentState{1000, 0, 0, 0}));
}

TEST(Derive, NegativeCompartmentIsAnInconsistencyNamingTheDate)
{
    try {
        derive_compartments(raw_from({100, 100}, {30, 99}, {5, 5}, 1000));
        FAIL() << "expected DataInconsistency";
    } catch (const DataInconsistency& e) {
        EXPECT_NE(std::string(e.what()).find("2021-01-02"), std::string::npos);
    }
    EXPECT_THROW(derive_compartments(raw_from({2000}, {0}, {0}, 1000)), DataInconsistency);
    EXPECT_THROW(derive_compartments(raw_from({1}, {0}, {0}, 0)), InvalidInput);
}

TEST(Derive, SumsToPopulationAndInverts)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> c, r, d;
    double cc = 10.0, rr = 0.0, dd = 0.0;
    for (int k = 0; k < 100; ++k) {
        cc += 1000.0 * u(rng);
        const double active = cc - rr - dd;
        rr += 0.1 * active * u(rng);
        dd += 0.01 * active * u(rng);
        c.push_back(cc);
        r.push_back(rr);
        d.push_back(dd);
    }
    const double n = 1e6;
    const auto s = derive_compartments(raw_from(c, r, d, n));
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& st = s.states[k];
        EXPECT_NEAR(st.total(), n, 1e-9 * n);
        EXPECT_NEAR(n - st.s, c[k], 1e-6);
        EXPECT_NEAR(st.r, r[k], 1e-9);
        EXPECT_NEAR(st.d, d[k], 1e-9);
        EXPECT_NEAR(st.i + st.r + st.d, c[k], 1e-6);
    }
}

TEST(Split, LastFourWeeksAreTest)
{
    const auto series = flat_series(300);
    const auto w = train_test_split(series);
    EXPECT_EQ(w.train.size(), 272u);
    EXPECT_EQ(w.test.size(), 28u);
    EXPECT_EQ(w.test.start_date, add_days(series.start_date, 272));
    for (std::size_t k = 0; k < 272; ++k) {
        EXPECT_EQ(w.train.states[k], series.states[k]);
    }
    for (std::size_t k = 0; k < 28; ++k) {
        EXPECT_EQ(w.test.states[k], series.states[272 + k]);
    }
}

TEST(Split, MinimumLength)
{
    const auto w = train_test_split(flat_series(42));
    EXPECT_EQ(w.train.size(), 14u);
    EXPECT_EQ(w.test.size(), 28u);
    EXPECT_THROW(train_test_split(flat_series(41)), InvalidInput);
}

TEST(CompartmentsCsv, HeaderAndRows)
{
    const auto csv = compartments_csv(derive_compartments(raw_from({100}, {30}, {5}, 1000)));
    EXPECT_EQ(csv, "date,S,I,R,D\n2021-01-01,900,65,30,5\n");
}
