#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "bwprio/experiments.hpp"

namespace bwprio {

// Numeric text used by every writer: 12 significant digits, "%.12g".
std::string format_number(double v);

// Header: experiment_id,sweep_var,sweep_value,mechanism,metric,mean,ci_low,ci_high,seed
void write_csv(std::ostream& out, const ResultTable& table);
void write_json(std::ostream& out, const ResultTable& table);

// arm,t,buyer,true_demand,presented,grant,real
void write_trace_csv(std::ostream& out, const std::vector<ArmTrace>& traces);

// trial,seller,type,half,unpooled,pooled,tax
void write_pool_sellers_csv(std::ostream& out, const std::vector<SellerRecord>& sellers);

// Writes `text` to dir/name, creating dir. Throws std::runtime_error on I/O failure.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

}  // namespace bwprio
