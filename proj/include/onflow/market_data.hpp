#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "onflow/errors.hpp"
#include "onflow/simplex.hpp"

namespace onflow {

/// Daily asset prices, normalized so that the first row is all ones.
struct PriceSeries {
    std::vector<std::string> names;
    std::vector<Vec> prices;              // (T+1) x K, strictly positive
    std::vector<std::string> dates;       // optional, same length as prices

    std::size_t assets() const { return names.size(); }
    std::size_t rows() const { return prices.size(); }
};

/// Daily price relatives f_t(k) = S_t(k) / S_{t-1}(k), strictly positive.
struct PriceRelativeSeries {
    std::vector<std::string> names;
    std::vector<Vec> relatives;           // T x K

    std::size_t assets() const { return names.size(); }
    std::size_t steps() const { return relatives.size(); }
    const Vec& row(std::size_t t) const { return relatives[t]; }
};

enum class CsvFormat { prices, relatives };

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

struct RawTable {
    std::vector<std::string> names;       // asset columns only
    std::vector<std::string> dates;       // empty if no date column
    std::vector<Vec> values;              // rows x K, validated > 0
};

// Shared CSV reader: header row of names (an optional leading "date"
// column is carried through as labels), then strictly positive decimals.
// `selected` restricts and orders columns, matching names case-insensitively.
inline RawTable read_csv(const std::string& path,
                         const std::vector<std::string>& selected) {
    std::ifstream in(path);
    if (!in) throw DataError(DataError::Kind::missing_file, "cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw DataError(DataError::Kind::malformed, path + ": empty file");
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty())
        throw DataError(DataError::Kind::malformed, path + ": empty header row");

    std::size_t first_col = 0;
    bool has_dates = lower(header[0]) == "date";
    if (has_dates) first_col = 1;

    std::vector<std::string> all_names(header.begin() + first_col, header.end());
    if (all_names.empty())
        throw DataError(DataError::Kind::malformed, path + ": no asset columns");

    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    if (selected.empty()) {
        for (std::size_t i = 0; i < all_names.size(); ++i) cols.push_back(i);
        names = all_names;
    } else {
        for (const std::string& want : selected) {
            std::string key = lower(trim(want));
            std::optional<std::size_t> found;
            for (std::size_t i = 0; i < all_names.size(); ++i) {
                if (lower(all_names[i]) == key) {
                    if (found)
                        throw DataError(DataError::Kind::ambiguous_asset,
                                        path + ": asset name '" + want +
                                        "' matches more than one column");
                    found = i;
                }
            }
            if (!found)
                throw DataError(DataError::Kind::unknown_asset,
                                path + ": unknown asset '" + want + "'");
            cols.push_back(*found);
            names.push_back(all_names[*found]);
        }
    }

    RawTable table;
    table.names = std::move(names);
    std::size_t row_no = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(DataError::Kind::malformed,
                            path + " row " + std::to_string(row_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
        if (has_dates) table.dates.push_back(cells[0]);
        Vec row(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::string& cell = cells[first_col + cols[j]];
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cell.size() || cell.empty() || !std::isfinite(v))
                throw DataError(DataError::Kind::malformed,
                                path + " row " + std::to_string(row_no) + ", column '" +
                                table.names[j] + "': non-numeric value '" + cell + "'");
            if (v <= 0.0)
                throw DataError(DataError::Kind::malformed,
                                path + " row " + std::to_string(row_no) + ", column '" +
                                table.names[j] + "': nonpositive value " + cell);
            row[j] = v;
        }
        table.values.push_back(std::move(row));
    }
    if (table.values.empty())
        throw DataError(DataError::Kind::malformed, path + ": no data rows");
    return table;
}

}  // namespace detail

/// Load a CSV of daily prices and normalize each asset so S_0 = 1.
inline PriceSeries load_price_csv(const std::string& path,
                                  const std::vector<std::string>& selected = {}) {
    detail::RawTable t = detail::read_csv(path, selected);
    PriceSeries out;
    out.names = std::move(t.names);
    out.dates = std::move(t.dates);
    out.prices = std::move(t.values);
    const Vec first = out.prices.front();
    for (Vec& row : out.prices)
        for (std::size_t k = 0; k < row.size(); ++k) row[k] /= first[k];
    return out;
}

/// Load a CSV that already stores price relatives (the convention of the
/// widely mirrored benchmark files).
inline PriceRelativeSeries load_relatives_csv(const std::string& path,
                                              const std::vector<std::string>& selected = {}) {
    detail::RawTable t = detail::read_csv(path, selected);
    return PriceRelativeSeries{std::move(t.names), std::move(t.values)};
}

inline PriceRelativeSeries to_price_relatives(const PriceSeries& series) {
    if (series.rows() < 2)
        throw std::invalid_argument("to_price_relatives: need at least two price rows");
    PriceRelativeSeries out;
    out.names = series.names;
    out.relatives.reserve(series.rows() - 1);
    for (std::size_t t = 0; t + 1 < series.rows(); ++t) {
        Vec row(series.assets());
        for (std::size_t k = 0; k < series.assets(); ++k)
            row[k] = series.prices[t + 1][k] / series.prices[t][k];
        out.relatives.push_back(std::move(row));
    }
    return out;
}

/// One-call loader used by the CLI: prices are turned into relatives,
/// relatives pass through.
inline PriceRelativeSeries load_market_csv(const std::string& path, CsvFormat format,
                                           const std::vector<std::string>& selected = {}) {
    if (format == CsvFormat::relatives) return load_relatives_csv(path, selected);
    return to_price_relatives(load_price_csv(path, selected));
}

/// Pearson correlation between the two columns of a 2-asset relative series.
inline double relative_correlation(const PriceRelativeSeries& rel) {
    if (rel.assets() != 2)
        throw std::invalid_argument("relative_correlation: requires exactly K = 2 assets");
    const std::size_t n = rel.steps();
    if (n < 2) throw std::invalid_argument("relative_correlation: need T >= 2");
    double mx = 0.0, my = 0.0;
    for (const Vec& r : rel.relatives) { mx += r[0]; my += r[1]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const Vec& r : rel.relatives) {
        double dx = r[0] - mx, dy = r[1] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateDataError("relative_correlation: zero-variance column");
    return sxy / std::sqrt(sxx * syy);
}

/// Terminal wealth of holding one asset: product of its relatives.
inline double buy_and_hold_wealth(const PriceRelativeSeries& rel, std::size_t asset_index) {
    if (asset_index >= rel.assets())
        throw std::out_of_range("buy_and_hold_wealth: asset index out of range");
    double w = 1.0;
    for (const Vec& r : rel.relatives) w *= r[asset_index];
    return w;
}

}  // namespace onflow
