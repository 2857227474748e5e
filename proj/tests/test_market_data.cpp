#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "onflow/market_data.hpp"

using namespace onflow;

namespace {

struct TempCsv {
    std::filesystem::path path;
    explicit TempCsv(const std::string& contents) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("onflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << contents;
    }
    ~TempCsv() { std::filesystem::remove(path); }
};

const std::string nyse_path = std::string(ONFLOW_SOURCE_DIR) + "/data/nyse_o.csv";

}  // namespace

TEST_CASE("load_price_csv normalizes and restricts columns") {
    TempCsv file("a,b\n1,1\n2,3\n");
    PriceSeries s = load_price_csv(file.path.string());
    REQUIRE(s.rows() == 2);
    REQUIRE(s.assets() == 2);
    CHECK(s.prices[0][0] == 1.0);
    CHECK(s.prices[0][1] == 1.0);
    CHECK(s.prices[1][0] == 2.0);
    CHECK(s.prices[1][1] == 3.0);

    PriceRelativeSeries rel = to_price_relatives(s);
    REQUIRE(rel.steps() == 1);
    CHECK(rel.row(0)[0] == 2.0);
    CHECK(rel.row(0)[1] == 3.0);

    // selection restricts and reorders, case-insensitively
    TempCsv file2("Alpha,Beta,Gamma\n2,4,8\n3,5,9\n");
    PriceSeries sel = load_price_csv(file2.path.string(), {"gamma", "ALPHA"});
    REQUIRE(sel.assets() == 2);
    CHECK(sel.names[0] == "Gamma");
    CHECK(sel.names[1] == "Alpha");
    CHECK(sel.prices[1][0] == Catch::Approx(9.0 / 8.0));
    CHECK(sel.prices[1][1] == Catch::Approx(3.0 / 2.0));
}

TEST_CASE("loader error variants name the offending cell") {
    CHECK_THROWS_AS(load_price_csv("/nonexistent/nyse.csv"), DataError);
    try {
        load_price_csv("/nonexistent/nyse.csv");
    } catch (const DataError& e) {
        CHECK(e.kind() == DataError::Kind::missing_file);
    }

    TempCsv zero("a,b\n1,1\n2,0\n");
    try {
        load_price_csv(zero.path.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.kind() == DataError::Kind::malformed);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }

    TempCsv text("a,b\n1,1\n2,potato\n");
    try {
        load_price_csv(text.path.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.kind() == DataError::Kind::malformed);
        CHECK(std::string(e.what()).find("potato") != std::string::npos);
    }

    TempCsv ok("a,b\n1,1\n2,3\n");
    try {
        load_price_csv(ok.path.string(), {"zzz"});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.kind() == DataError::Kind::unknown_asset);
    }

    TempCsv ambiguous("a,A\n1,1\n2,3\n");
    try {
        load_price_csv(ambiguous.path.string(), {"a"});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.kind() == DataError::Kind::ambiguous_asset);
    }

    TempCsv gap("a,b\n1,1\n2\n");
    CHECK_THROWS_AS(load_price_csv(gap.path.string()), DataError);
}

TEST_CASE("to_price_relatives") {
    TempCsv constant("x\n5\n5\n5\n");
    PriceRelativeSeries rel = to_price_relatives(load_price_csv(constant.path.string()));
    REQUIRE(rel.steps() == 2);
    CHECK(rel.row(0)[0] == 1.0);
    CHECK(rel.row(1)[0] == 1.0);

    TempCsv updown("x\n1\n2\n1\n");
    PriceRelativeSeries r2 = to_price_relatives(load_price_csv(updown.path.string()));
    CHECK(r2.row(0)[0] == 2.0);
    CHECK(r2.row(1)[0] == 0.5);

    TempCsv single("x\n1\n");
    CHECK_THROWS_AS(to_price_relatives(load_price_csv(single.path.string())), std::invalid_argument);
}

TEST_CASE("relatives cumulative product reproduces final prices") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> step(0.9, 1.1);
    std::string csv = "p,q\n";
    double p = 3.0, q = 7.0;
    for (int t = 0; t < 200; ++t) {
        csv += std::to_string(p) + "," + std::to_string(q) + "\n";
        p *= step(rng);
        q *= step(rng);
    }
    TempCsv file(csv);
    PriceSeries s = load_price_csv(file.path.string());
    PriceRelativeSeries rel = to_price_relatives(s);
    for (std::size_t kcol = 0; kcol < 2; ++kcol) {
        double prod = 1.0;
        for (const Vec& r : rel.relatives) prod *= r[kcol];
        CHECK(std::abs(prod - s.prices.back()[kcol]) <= 1e-10 * std::abs(s.prices.back()[kcol]));
    }
}

TEST_CASE("relatives-format loader bypasses differencing") {
    TempCsv file("a,b\n1.5,0.5\n2.0,1.0\n");
    PriceRelativeSeries rel = load_relatives_csv(file.path.string());
    REQUIRE(rel.steps() == 2);
    CHECK(rel.row(0)[0] == 1.5);
    CHECK(rel.row(1)[1] == 1.0);

    PriceRelativeSeries via = load_market_csv(file.path.string(), CsvFormat::relatives);
    CHECK(via.steps() == 2);
}

TEST_CASE("relative_correlation") {
    PriceRelativeSeries self{{"a", "b"}, {{1.1, 1.1}, {0.9, 0.9}, {1.05, 1.05}}};
    CHECK(relative_correlation(self) == Catch::Approx(1.0).epsilon(1e-14));

    PriceRelativeSeries flat{{"a", "b"}, {{1.0, 1.1}, {1.0, 0.9}}};
    CHECK_THROWS_AS(relative_correlation(flat), DegenerateDataError);

    PriceRelativeSeries three{{"a", "b", "c"}, {{1.0, 1.0, 1.0}}};
    CHECK_THROWS_AS(relative_correlation(three), std::invalid_argument);

    // symmetry in column order, and invariance under positive affine maps
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.8, 1.2);
    PriceRelativeSeries x{{"a", "b"}, {}};
    for (int t = 0; t < 50; ++t) x.relatives.push_back({u(rng), u(rng)});
    PriceRelativeSeries swapped{{"b", "a"}, {}};
    PriceRelativeSeries rescaled = x;
    for (const Vec& r : x.relatives) swapped.relatives.push_back({r[1], r[0]});
    for (Vec& r : rescaled.relatives) r[0] = 0.3 + 2.5 * r[0];
    CHECK(relative_correlation(swapped) == Catch::Approx(relative_correlation(x)).margin(1e-12));
    CHECK(relative_correlation(rescaled) == Catch::Approx(relative_correlation(x)).margin(1e-12));
}

TEST_CASE("buy_and_hold_wealth") {
    PriceRelativeSeries ones{{"a", "b"}, {{1.0, 1.0}, {1.0, 1.0}}};
    CHECK(buy_and_hold_wealth(ones, 0) == 1.0);
    CHECK(buy_and_hold_wealth(ones, 1) == 1.0);
    CHECK_THROWS_AS(buy_and_hold_wealth(ones, 2), std::out_of_range);

    PriceRelativeSeries move{{"a"}, {{2.0}, {1.5}}};
    CHECK(buy_and_hold_wealth(move, 0) == Catch::Approx(3.0));
}

TEST_CASE("benchmark file loads with the documented shape") {
    if (!std::filesystem::exists(nyse_path)) SKIP("benchmark data not present");
    PriceRelativeSeries rel = load_relatives_csv(nyse_path, {"iroqu", "kinar"});
    CHECK(rel.assets() == 2);
    CHECK(rel.steps() == 5651);
    CHECK(buy_and_hold_wealth(rel, 0) == Catch::Approx(8.92).epsilon(0.01));
    CHECK(buy_and_hold_wealth(rel, 1) == Catch::Approx(4.13).epsilon(0.01));
}
