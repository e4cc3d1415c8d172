#include "lob/dist_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lob {

using nlohmann::json;

namespace {

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> number_array(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw std::invalid_argument(where + ": '" + key + "' must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : doc.at(key)) {
    if (!v.is_number()) throw std::invalid_argument(where + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number_or(const json& doc, const char* key, double fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number()) throw std::invalid_argument(where + ": '" + key + "' must be a number");
  return doc.at(key).get<double>();
}

}  // namespace

PriceDist dist_from_json(const json& doc) {
  const std::string where = "distribution";
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    throw std::invalid_argument(where + ": missing string field 'kind'");
  }
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "uniform") {
    reject_unknown(doc, {"kind", "lo", "hi"}, where);
    return PriceDist::uniform(number_or(doc, "lo", 0.0, where), number_or(doc, "hi", 1.0, where));
  }
  if (kind == "piecewise_linear") {
    reject_unknown(doc, {"kind", "knots", "values"}, where);
    return PriceDist::piecewise_linear(number_array(doc, "knots", where), number_array(doc, "values", where));
  }
  if (kind == "cdf_table") {
    reject_unknown(doc, {"kind", "prices", "probs", "csv"}, where);
    if (doc.contains("csv")) {
      if (doc.contains("prices") || doc.contains("probs")) {
        throw std::invalid_argument(where + ": give either 'csv' or 'prices'/'probs', not both");
      }
      return read_cdf_table_csv_file(doc.at("csv").get<std::string>());
    }
    return PriceDist::cdf_table(number_array(doc, "prices", where), number_array(doc, "probs", where));
  }
  throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
}

PriceDist read_cdf_table_csv(std::istream& in) {
  std::vector<double> x, p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
      throw std::invalid_argument("cdf table line " + std::to_string(lineno) + ": expected two columns");
    }
    try {
      std::size_t used = 0;
      double xv = std::stod(a, &used);
      double pv = std::stod(b);
      x.push_back(xv);
      p.push_back(pv);
    } catch (const std::exception&) {
      if (x.empty()) continue;  // header row
      throw std::invalid_argument("cdf table line " + std::to_string(lineno) + ": not numeric");
    }
  }
  return PriceDist::cdf_table(std::move(x), std::move(p));
}

PriceDist read_cdf_table_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open cdf table '" + path + "'");
  return read_cdf_table_csv(in);
}

ArrivalSpec arrival_spec_from_json(const json& doc) {
  reject_unknown(doc, {"p_bid", "bid", "ask"}, "arrival spec");
  ArrivalSpec spec;
  spec.p_bid = number_or(doc, "p_bid", 0.5, "arrival spec");
  if (doc.contains("bid")) spec.bid = dist_from_json(doc.at("bid"));
  if (doc.contains("ask")) spec.ask = dist_from_json(doc.at("ask"));
  spec.validate();
  return spec;
}

ArrivalSpec named_arrival_spec(const std::string& name) {
  if (name == "uniform") return ArrivalSpec{};
  if (name == "triangular") {
    return ArrivalSpec{0.5, PriceDist::piecewise_linear({0.0, 1.0}, {0.0, 2.0}),
                       PriceDist::piecewise_linear({0.0, 1.0}, {2.0, 0.0})};
  }
  if (name == "mixed") {
    return ArrivalSpec{0.5, PriceDist::piecewise_linear({0.0, 1.0}, {0.95, 1.05}), PriceDist::uniform()};
  }
  throw std::invalid_argument("unknown distribution name '" + name + "' (uniform, triangular, mixed)");
}

}  // namespace lob
