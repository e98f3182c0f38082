#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mhsp/lp/simplex.hpp"
#include "mhsp/lp/sparse_matrix.hpp"

namespace mhsp {

using Json = nlohmann::json;

// Infinite values are written as the strings "inf" / "-inf".
Json number_to_json(double value);
double number_from_json(const Json& value);
Json numbers_to_json(const std::vector<double>& values);
std::vector<double> numbers_from_json(const Json& value);

Json matrix_to_json(const lp::SparseMatrix& matrix);
lp::SparseMatrix matrix_from_json(const Json& value);

std::string sense_to_string(lp::RowSense sense);
lp::RowSense sense_from_string(const std::string& text);

// Reads and parses a whole file; errors carry the path.
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Fetches a required member, throwing ParseError naming it when absent.
const Json& require(const Json& object, const std::string& key);

}  // namespace mhsp
