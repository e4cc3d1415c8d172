#pragma once

#include <istream>
#include <string>

#include "json.hpp"
#include "lob/dist.hpp"

namespace lob {

/// Build a price law from a config document:
///   {"kind": "uniform", "lo": 0, "hi": 1}
///   {"kind": "piecewise_linear", "knots": [...], "values": [...]}
///   {"kind": "cdf_table", "prices": [...], "probs": [...]}
///   {"kind": "cdf_table", "csv": "path/to/table.csv"}
/// Unknown keys and malformed values throw std::invalid_argument.
PriceDist dist_from_json(const nlohmann::json& doc);

/// Two-column CSV of (price, cumulative probability). Lines starting with
/// '#' and a non-numeric header row are skipped.
PriceDist read_cdf_table_csv(std::istream& in);
PriceDist read_cdf_table_csv_file(const std::string& path);

/// {"p_bid": 0.5, "bid": {...}, "ask": {...}}; missing sides default to uniform.
ArrivalSpec arrival_spec_from_json(const nlohmann::json& doc);

/// Named shorthands used on the command line: "uniform", "triangular"
/// (bid density 2x, ask density 2(1-x)), "mixed" (bid 0.95 uniform + 0.05 triangular).
ArrivalSpec named_arrival_spec(const std::string& name);

}  // namespace lob
