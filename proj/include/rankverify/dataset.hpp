#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rankverify/families.hpp"

namespace rankverify {

// Malformed input files raise this (message names the offending row); the
// command line maps it to the data-error exit code.
struct dataset_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetRow {
  std::string label;
  double value = 0.0;
};

// CSV: UTF-8 "label,value" rows, optional literal header "label,value".
// JSON: array of {"label": ..., "value": ...}. Chosen by file extension.
std::vector<DatasetRow> load_dataset(const std::string& path);

std::vector<DatasetRow> parse_csv_dataset(const std::string& text, const std::string& origin);
std::vector<DatasetRow> parse_json_dataset(const std::string& text, const std::string& origin);

// unique labels enforced here
Observation to_observation(const std::vector<DatasetRow>& rows);

}  // namespace rankverify
