#include "rankverify/dataset.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rankverify {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& token, const std::string& where) {
  std::string t = trim(token);
  if (t.empty()) throw dataset_error(where + ": missing value");
  const char* begin = t.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + t.size())
    throw dataset_error(where + ": '" + t + "' is not a number");
  if (!std::isfinite(v)) throw dataset_error(where + ": value must be finite");
  return v;
}

}  // namespace

std::vector<DatasetRow> parse_csv_dataset(const std::string& text, const std::string& origin) {
  std::vector<DatasetRow> rows;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::string where = origin + ":" + std::to_string(line_no);

    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw dataset_error(where + ": expected 'label,value'");
    std::string label = trim(line.substr(0, comma));
    std::string rest = trim(line.substr(comma + 1));
    if (first_content) {
      first_content = false;
      if (label == "label" && rest == "value") continue;  // optional header
    }
    if (label.empty()) throw dataset_error(where + ": empty label");
    if (rest.find(',') != std::string::npos)
      throw dataset_error(where + ": expected exactly two columns");
    rows.push_back({label, parse_number(rest, where)});
  }
  if (rows.empty()) throw dataset_error(origin + ": no data rows");
  return rows;
}

std::vector<DatasetRow> parse_json_dataset(const std::string& text, const std::string& origin) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw dataset_error(origin + ": invalid JSON");
  if (!doc.is_array()) throw dataset_error(origin + ": expected an array of rows");
  std::vector<DatasetRow> rows;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::string where = origin + " row " + std::to_string(i + 1);
    const nlohmann::json& item = doc[i];
    if (!item.is_object() || !item.contains("label") || !item.contains("value"))
      throw dataset_error(where + ": expected {\"label\", \"value\"}");
    if (!item["label"].is_string()) throw dataset_error(where + ": label must be a string");
    if (!item["value"].is_number()) throw dataset_error(where + ": value must be a number");
    std::string label = trim(item["label"].get<std::string>());
    if (label.empty()) throw dataset_error(where + ": empty label");
    double v = item["value"].get<double>();
    if (!std::isfinite(v)) throw dataset_error(where + ": value must be finite");
    rows.push_back({label, v});
  }
  if (rows.empty()) throw dataset_error(origin + ": no data rows");
  return rows;
}

std::vector<DatasetRow> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dataset_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".csv") return parse_csv_dataset(text, path);
  if (ext == ".json") return parse_json_dataset(text, path);
  throw dataset_error(path + ": unsupported extension (use .csv or .json)");
}

Observation to_observation(const std::vector<DatasetRow>& rows) {
  std::vector<double> values;
  std::vector<std::string> labels;
  values.reserve(rows.size());
  labels.reserve(rows.size());
  for (const DatasetRow& row : rows) {
    for (const std::string& seen : labels)
      if (seen == row.label) throw dataset_error("duplicate label '" + row.label + "'");
    labels.push_back(row.label);
    values.push_back(row.value);
  }
  return make_observation(std::move(values), std::move(labels));
}

}  // namespace rankverify
