#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankverify/baselines.hpp"
#include "rankverify/procedures.hpp"
#include "rankverify/simulate.hpp"

namespace rankverify {

inline constexpr const char* report_schema_version = "1";

// JSON cannot hold infinities; they travel as the strings "inf"/"-inf"/"nan".
// Finite doubles serialize with shortest round-trip precision.
nlohmann::json json_number(double x);

nlohmann::json to_json(const OrderedView& v);
nlohmann::json to_json(const TestOutcome& o);
nlohmann::json to_json(const BoundOutcome& o);
nlohmann::json to_json(const RankReport& r);
nlohmann::json to_json(const SimResult& r);
nlohmann::json to_json(const std::vector<PowerPoint>& rows);

// Envelope every command emits: schema version, command echo, family, alpha,
// seed, the outcome payload, warnings.
nlohmann::json report_document(const std::string& command, const FamilySpec& spec, double alpha,
                               std::optional<std::uint64_t> seed, nlohmann::json payload,
                               const std::vector<std::string>& warnings);

std::string render_report(const nlohmann::json& doc);

// fixed %.17g rendering so identical runs emit identical bytes
std::string format_double(double x);

void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& rows);
void write_sim_csv(std::ostream& out, const std::string& experiment, const SimResult& r);

}  // namespace rankverify
