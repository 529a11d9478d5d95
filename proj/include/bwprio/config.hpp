#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bwprio/engine.hpp"

namespace bwprio {

/// Schema violation. what() reads "<source>:<line>: <path>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string path, const std::string& message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }  // 1-based, 0 when unknown
  const std::string& path() const { return path_; }

 private:
  std::string source_;
  int line_;
  std::string path_;
};

// One mechanism/routing combination evaluated by an experiment.
struct MechanismArm {
  std::string name;
  PaymentRule rule = PaymentRule::kBks;
  RoutingPolicy routing = RoutingPolicy::kSpq;
  double mu = 0.2;
  double reserve = 0.0;
  double price = 0.0;
  std::optional<BoostSpec> boost;
};

enum class SweepVariable { kCapacity, kReserve, kMu };

std::string_view to_string(SweepVariable v);
// Throws std::invalid_argument for anything but capacity, reserve, mu.
SweepVariable parse_sweep_variable(std::string_view name);

struct SweepConfig {
  SweepVariable variable = SweepVariable::kCapacity;
  std::vector<double> values;
};

struct SellerType {
  std::string name;
  std::size_t count = 0;
  double capacity = 0.0;
  double reserve = 0.0;
  std::vector<BuyerSpec> buyers;
};

struct PoolConfig {
  std::size_t trials = 1;
  std::size_t sessions = 1;  // sessions per seller in one accounting period
  std::string mechanism;  // arm name; empty means the first arm
  std::vector<SellerType> types;
};

struct ExperimentConfig {
  std::string experiment_id;
  std::string source;
  std::uint64_t seed = 1;
  std::size_t runs = 100;
  Epoch horizon = 600;
  double capacity = 0.0;
  std::vector<BuyerSpec> buyers;
  std::vector<MechanismArm> mechanisms;
  std::optional<SweepConfig> sweep;
  std::optional<PoolConfig> pool;
  bool optimum = false;
  std::optional<double> budget_seconds;

  const MechanismArm& arm(std::string_view name) const;
  Scenario scenario(const MechanismArm& arm) const;
};

ExperimentConfig parse_config(std::string_view text, std::string source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace bwprio
