#include "rankverify/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace rankverify {

namespace {

const char* method_token(BoundMethod m) {
  return m == BoundMethod::unadjusted ? "2" : "2prime";
}

const char* method_token(RankMethod m) { return m == RankMethod::stepwise ? "3" : "3prime"; }

nlohmann::json seed_json(const std::optional<std::uint64_t>& seed) {
  if (!seed) return nullptr;
  return *seed;
}

}  // namespace

nlohmann::json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

nlohmann::json to_json(const OrderedView& v) {
  nlohmann::json j;
  j["order"] = v.order;
  j["tie_groups"] = v.tie_groups;
  j["randomized_tie_break"] = v.randomized;
  return j;
}

nlohmann::json to_json(const TestOutcome& o) {
  nlohmann::json j;
  j["reject"] = o.reject;
  j["p_value"] = json_number(o.p_value);
  j["level_used"] = json_number(o.level_used);
  j["adjusted"] = o.adjusted;
  j["winner"] = o.winner_label;
  j["runner_up"] = o.runner_up_label;
  j["conditioning"] = o.conditioning;
  j["seed"] = seed_json(o.seed_trace);
  j["ordering"] = to_json(o.ordered);
  return j;
}

nlohmann::json to_json(const BoundOutcome& o) {
  nlohmann::json j;
  j["delta_lower"] = json_number(o.delta_lower);
  j["scale"] = {{"value", json_number(o.scale_interpretation.value)},
                {"label", o.scale_interpretation.label}};
  j["method"] = method_token(o.method);
  j["alpha"] = json_number(o.level);
  j["winner"] = o.winner_label;
  j["runner_up"] = o.runner_up_label;
  j["ordering"] = to_json(o.ordered);
  return j;
}

nlohmann::json to_json(const RankReport& r) {
  nlohmann::json j;
  j["verified_prefix"] = r.j_hat;
  j["method"] = method_token(r.method);
  nlohmann::json steps = nlohmann::json::array();
  for (const RankStep& s : r.steps) {
    steps.push_back({{"rank_upper", s.rank_upper},
                     {"rank_lower", s.rank_lower},
                     {"upper", s.upper_label},
                     {"lower", s.lower_label},
                     {"p_value", json_number(s.p)},
                     {"rejected", s.rejected}});
  }
  j["steps"] = std::move(steps);
  j["seed"] = seed_json(r.seed_trace);
  j["ordering"] = to_json(r.ordered);
  return j;
}

nlohmann::json to_json(const SimResult& r) {
  nlohmann::json j;
  j["estimate"] = json_number(r.estimate);
  j["std_error"] = json_number(r.std_error);
  j["trials"] = r.trials;
  j["events"] = r.events;
  j["low_precision"] = r.low_precision;
  nlohmann::json extras;
  for (const auto& [key, value] : r.breakdown) extras[key] = json_number(value);
  j["breakdown"] = std::move(extras);
  return j;
}

nlohmann::json to_json(const std::vector<PowerPoint>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PowerPoint& p : rows) {
    arr.push_back({{"delta", json_number(p.delta)},
                   {"power_selective", json_number(p.power_selective)},
                   {"power_gn", json_number(p.power_gn)},
                   {"se_selective", json_number(p.se_selective)},
                   {"se_gn", json_number(p.se_gn)}});
  }
  return arr;
}

nlohmann::json report_document(const std::string& command, const FamilySpec& spec, double alpha,
                               std::optional<std::uint64_t> seed, nlohmann::json payload,
                               const std::vector<std::string>& warnings) {
  nlohmann::json doc;
  doc["schema_version"] = report_schema_version;
  doc["command"] = command;
  doc["family"] = {{"name", spec.family_name()}, {"n", spec.n}, {"m", spec.m}};
  doc["alpha"] = json_number(alpha);
  doc["seed"] = seed_json(seed);
  doc["result"] = std::move(payload);
  doc["warnings"] = warnings;
  return doc;
}

std::string render_report(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& rows) {
  out << "delta,power_selective,power_gn,se_selective,se_gn\n";
  for (const PowerPoint& p : rows) {
    out << format_double(p.delta) << ',' << format_double(p.power_selective) << ','
        << format_double(p.power_gn) << ',' << format_double(p.se_selective) << ','
        << format_double(p.se_gn) << '\n';
  }
}

void write_sim_csv(std::ostream& out, const std::string& experiment, const SimResult& r) {
  out << "experiment,estimate,std_error,trials,events,low_precision";
  for (const auto& [key, value] : r.breakdown) out << ',' << key;
  out << '\n';
  out << experiment << ',' << format_double(r.estimate) << ',' << format_double(r.std_error) << ','
      << r.trials << ',' << r.events << ',' << (r.low_precision ? 1 : 0);
  for (const auto& [key, value] : r.breakdown) out << ',' << format_double(value);
  out << '\n';
}

}  // namespace rankverify
