#include "mhsp/common/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mhsp/common/error.hpp"

namespace mhsp {

Json number_to_json(double value) {
  if (std::isnan(value)) throw ValidationError("cannot serialise NaN");
  if (std::isinf(value)) return value > 0 ? Json("inf") : Json("-inf");
  return Json(value);
}

double number_from_json(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "inf") return lp::kInfinity;
    if (s == "-inf") return -lp::kInfinity;
  }
  throw ParseError("expected a number, got " + value.dump());
}

Json numbers_to_json(const std::vector<double>& values) {
  Json out = Json::array();
  for (double v : values) out.push_back(number_to_json(v));
  return out;
}

std::vector<double> numbers_from_json(const Json& value) {
  if (!value.is_array()) throw ParseError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (const Json& v : value) out.push_back(number_from_json(v));
  return out;
}

Json matrix_to_json(const lp::SparseMatrix& matrix) {
  Json entries = Json::array();
  for (const lp::Triplet& t : matrix.entries()) {
    entries.push_back(Json::array({t.row, t.col, t.value}));
  }
  return Json{{"rows", matrix.rows()}, {"cols", matrix.cols()}, {"entries", entries}};
}

lp::SparseMatrix matrix_from_json(const Json& value) {
  std::vector<lp::Triplet> entries;
  for (const Json& e : require(value, "entries")) {
    if (!e.is_array() || e.size() != 3) throw ParseError("matrix entry must be [row, col, value]");
    entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  return lp::SparseMatrix(require(value, "rows").get<int>(), require(value, "cols").get<int>(),
                          std::move(entries));
}

std::string sense_to_string(lp::RowSense sense) {
  switch (sense) {
    case lp::RowSense::kLessEqual:
      return "<=";
    case lp::RowSense::kGreaterEqual:
      return ">=";
    case lp::RowSense::kEqual:
      return "=";
  }
  return "?";
}

lp::RowSense sense_from_string(const std::string& text) {
  if (text == "<=") return lp::RowSense::kLessEqual;
  if (text == ">=") return lp::RowSense::kGreaterEqual;
  if (text == "=") return lp::RowSense::kEqual;
  throw ParseError("unknown row sense '" + text + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const Json& require(const Json& object, const std::string& key) {
  if (!object.is_object() || !object.contains(key)) {
    throw ParseError("missing field '" + key + "'");
  }
  return object.at(key);
}

}  // namespace mhsp
