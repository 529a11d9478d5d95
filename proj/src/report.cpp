#include "bwprio/report.hpp"

#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>
#include <stdexcept>

namespace bwprio {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

// Fields here never contain commas except free-form names; quote those.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double rounded(double v) { return std::stod(format_number(v)); }

}  // namespace

void write_csv(std::ostream& out, const ResultTable& table) {
  out << "experiment_id,sweep_var,sweep_value,mechanism,metric,mean,ci_low,ci_high,seed\n";
  for (const auto& r : table.rows) {
    out << csv_field(r.experiment_id) << ',' << csv_field(r.sweep_var) << ','
        << (r.sweep_value ? format_number(*r.sweep_value) : std::string()) << ','
        << csv_field(r.mechanism) << ',' << csv_field(r.metric) << ',' << format_number(r.mean)
        << ',' << format_number(r.ci_low) << ',' << format_number(r.ci_high) << ',' << r.seed
        << '\n';
  }
}

void write_json(std::ostream& out, const ResultTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["sweep_var"] = r.sweep_var;
    j["sweep_value"] = r.sweep_value ? nlohmann::ordered_json(rounded(*r.sweep_value)) : nullptr;
    j["mechanism"] = r.mechanism;
    j["metric"] = r.metric;
    j["mean"] = rounded(r.mean);
    j["ci_low"] = rounded(r.ci_low);
    j["ci_high"] = rounded(r.ci_high);
    j["seed"] = r.seed;
    rows.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["experiment_id"] = table.rows.empty() ? "" : table.rows.front().experiment_id;
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << '\n';
}

void write_trace_csv(std::ostream& out, const std::vector<ArmTrace>& traces) {
  out << "arm,t,buyer,true_demand,presented,grant,real\n";
  for (const auto& arm : traces) {
    for (const auto& e : arm.epochs) {
      for (std::size_t j = 0; j < e.buyers.size(); ++j) {
        out << csv_field(arm.mechanism) << ',' << e.t << ',' << to_string(e.buyers[j]) << ','
            << format_number(e.true_demand[j]) << ',' << format_number(e.presented[j]) << ','
            << format_number(e.grants[j]) << ',' << format_number(e.real[j]) << '\n';
      }
    }
  }
}

void write_pool_sellers_csv(std::ostream& out, const std::vector<SellerRecord>& sellers) {
  out << "trial,seller,type,half,unpooled,pooled,tax\n";
  for (const auto& s : sellers) {
    out << s.trial << ',' << to_int(s.seller) << ',' << csv_field(s.type) << ',' << s.half << ','
        << format_number(s.unpooled) << ',' << format_number(s.pooled) << ','
        << format_number(s.tax) << '\n';
  }
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / name;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace bwprio
