#include "bwprio/scenarios.hpp"

namespace bwprio::scenarios {

namespace {

BuyerSpec flow_buyer(int id, double value, double rate) {
  BuyerSpec b;
  b.id = static_cast<BuyerId>(id);
  b.value = value;
  FlowTraceParams p;
  p.mean_rate = rate;
  b.demand = DemandSpec::flow_trace(p);
  return b;
}

MechanismArm arm(std::string name, PaymentRule rule, RoutingPolicy routing, double price = 0.0) {
  MechanismArm a;
  a.name = std::move(name);
  a.rule = rule;
  a.routing = routing;
  a.price = price;
  return a;
}

std::vector<double> grid(double from, double to, double step) {
  std::vector<double> out;
  for (int k = 0; from + k * step <= to + 1e-9; ++k) out.push_back(from + k * step);
  return out;
}

std::vector<BuyerSpec> fig3_buyers() {
  return {flow_buyer(1, 10, 10), flow_buyer(2, 4, 10), flow_buyer(3, 1, 30)};
}

}  // namespace

ExperimentConfig example1() {
  ExperimentConfig c;
  c.experiment_id = "example1";
  c.seed = 1;
  c.runs = 10000;
  c.capacity = 1;
  BuyerSpec b1;
  b1.id = BuyerId{1};
  b1.value = 3;
  b1.demand = DemandSpec::fixed(constant_demand(1));
  BuyerSpec b2;
  b2.id = BuyerId{2};
  b2.value = 2;
  b2.demand = DemandSpec::fixed(buffered_demand({1}));
  c.buyers = {b1, b2};
  c.mechanisms = {arm("vmm", PaymentRule::kVmm, RoutingPolicy::kSpq),
                  arm("bks", PaymentRule::kBks, RoutingPolicy::kSpq)};
  return c;
}

ExperimentConfig fig3() {
  ExperimentConfig c;
  c.experiment_id = "fig3";
  c.seed = 3;
  c.runs = 1000;
  c.capacity = 25;
  c.optimum = true;
  c.buyers = fig3_buyers();
  c.mechanisms = {arm("vmm", PaymentRule::kVmm, RoutingPolicy::kSpq),
                  arm("bks", PaymentRule::kBks, RoutingPolicy::kSpq),
                  arm("fq", PaymentRule::kFixedPrice, RoutingPolicy::kFq, 1.0),
                  arm("fifo", PaymentRule::kFixedPrice, RoutingPolicy::kFifo, 1.0)};
  c.sweep = SweepConfig{SweepVariable::kCapacity, grid(5, 70, 5)};
  return c;
}

ExperimentConfig fig4() {
  auto c = fig3();
  c.experiment_id = "fig4";
  c.seed = 4;
  c.sweep = SweepConfig{SweepVariable::kReserve, grid(0, 5, 0.5)};
  return c;
}

ExperimentConfig fig5() {
  ExperimentConfig c;
  c.experiment_id = "fig5";
  c.seed = 5;
  c.runs = 1000;
  c.capacity = 25;
  c.buyers = fig3_buyers();
  c.buyers[0].departure = 90;
  c.buyers[1].departure = 90;
  FlowTraceParams p;
  p.mean_rate = 30;
  c.buyers[2].demand = DemandSpec::impatient_flow_trace(p, 60, 500);
  c.mechanisms = {arm("bks_spq", PaymentRule::kBks, RoutingPolicy::kSpq),
                  arm("bks_fq", PaymentRule::kBks, RoutingPolicy::kFq),
                  arm("bks_hybrid", PaymentRule::kBks, RoutingPolicy::kThresholdHybrid)};
  // Strictly more than 500 KB by epoch 60 keeps buyer 3 around.
  c.mechanisms[2].boost = BoostSpec{BuyerId{3}, 501, 60};
  c.sweep = SweepConfig{SweepVariable::kCapacity, grid(5, 60, 5)};
  return c;
}

ExperimentConfig fig6() {
  ExperimentConfig c;
  c.experiment_id = "fig6";
  c.seed = 6;
  c.runs = 100;
  c.capacity = 40;
  c.buyers = {flow_buyer(1, 2, 10), flow_buyer(2, 3, 10), flow_buyer(3, 5, 30)};
  c.mechanisms = {arm("bks", PaymentRule::kBks, RoutingPolicy::kSpq)};
  c.pool = PoolConfig{1, 1, "bks", {{"all", 200, 40, 0.0, c.buyers}}};
  return c;
}

ExperimentConfig fig7() {
  auto c = fig6();
  c.experiment_id = "fig7";
  c.seed = 7;
  const std::vector<BuyerSpec> d50 = c.buyers;
  const std::vector<BuyerSpec> d70 = {flow_buyer(1, 3, 20), flow_buyer(2, 4, 20),
                                      flow_buyer(3, 6, 30)};
  c.pool = PoolConfig{1,
                      1,
                      "bks",
                      {{"c40_d50", 50, 40, 0.0, d50},
                       {"c40_d70", 50, 40, 0.0, d70},
                       {"c60_d50", 50, 60, 0.0, d50},
                       {"c60_d70", 50, 60, 0.0, d70}}};
  return c;
}

}  // namespace bwprio::scenarios
