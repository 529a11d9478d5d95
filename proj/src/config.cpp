#include "bwprio/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace bwprio {

ConfigError::ConfigError(std::string source, int line, std::string path,
                         const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " +
                         (path.empty() ? std::string("<root>") : path) + ": " + message),
      source_(std::move(source)),
      line_(line),
      path_(std::move(path)) {}

std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::kCapacity: return "capacity";
    case SweepVariable::kReserve: return "reserve";
    case SweepVariable::kMu: return "mu";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "capacity") return SweepVariable::kCapacity;
  if (name == "reserve") return SweepVariable::kReserve;
  if (name == "mu") return SweepVariable::kMu;
  throw std::invalid_argument("unknown sweep variable '" + std::string(name) +
                              "' (expected capacity, reserve or mu)");
}

const MechanismArm& ExperimentConfig::arm(std::string_view name) const {
  if (mechanisms.empty()) throw std::invalid_argument("no mechanisms configured");
  if (name.empty()) return mechanisms.front();
  for (const auto& m : mechanisms) {
    if (m.name == name) return m;
  }
  throw std::invalid_argument("no mechanism named '" + std::string(name) + "'");
}

Scenario ExperimentConfig::scenario(const MechanismArm& a) const {
  Scenario s;
  s.buyers = buyers;
  s.capacity = capacity;
  s.routing = a.routing;
  s.boost = a.boost;
  s.mechanism = MechanismSpec{a.rule, a.mu, a.reserve, a.price};
  s.horizon = horizon;
  s.seed = seed;
  return s;
}

namespace {

// Walks the document keeping the dotted path for error messages.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path,
                         const std::string& message) const {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    throw ConfigError(source_, line, path, message);
  }

  void expect_map(const YAML::Node& node, const std::string& path,
                  std::initializer_list<std::string_view> allowed) const {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) fail(kv.first, join(path, key), "unknown key");
    }
  }

  YAML::Node required(const YAML::Node& map, const std::string& path, const char* key) const {
    const auto node = map[key];
    if (!node) fail(map, join(path, key), "missing required key");
    return node;
  }

  double number(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    double v = 0.0;
    try {
      v = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(node, path, "must be finite");
    return v;
  }

  double number(const YAML::Node& map, const std::string& path, const char* key,
                std::optional<double> fallback = std::nullopt) const {
    const auto node = map[key];
    if (!node) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required key");
    }
    return number(node, join(path, key));
  }

  double nonnegative(const YAML::Node& map, const std::string& path, const char* key,
                     std::optional<double> fallback = std::nullopt) const {
    const double v = number(map, path, key, fallback);
    if (v < 0.0) fail(map[key], join(path, key), "must be >= 0");
    return v;
  }

  double positive(const YAML::Node& map, const std::string& path, const char* key,
                  std::optional<double> fallback = std::nullopt) const {
    const double v = number(map, path, key, fallback);
    if (!(v > 0.0)) fail(map[key], join(path, key), "must be > 0");
    return v;
  }

  std::int64_t integer(const YAML::Node& map, const std::string& path, const char* key,
                       std::optional<std::int64_t> fallback = std::nullopt) const {
    const auto node = map[key];
    if (!node) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required key");
    }
    if (!node.IsScalar()) fail(node, join(path, key), "expected an integer");
    try {
      return node.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "expected an integer, got '" + node.Scalar() + "'");
    }
  }

  std::uint64_t seed(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected an unsigned integer");
    try {
      return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected an unsigned integer, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& map, const std::string& path, const char* key,
                   std::optional<std::string> fallback = std::nullopt) const {
    const auto node = map[key];
    if (!node) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required key");
    }
    if (!node.IsScalar()) fail(node, join(path, key), "expected a string");
    return node.Scalar();
  }

  bool flag(const YAML::Node& map, const std::string& path, const char* key, bool fallback) const {
    const auto node = map[key];
    if (!node) return fallback;
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "expected true or false");
    }
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < node.size(); ++k) {
      out.push_back(number(node[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  static std::string index(const std::string& path, std::size_t k) {
    return path + "[" + std::to_string(k) + "]";
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

template <class Fn>
auto guarded(const Reader& r, const YAML::Node& node, const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    r.fail(node, path, e.what());
  }
}

FlowTraceParams flow_params(const Reader& r, const YAML::Node& n, const std::string& path) {
  FlowTraceParams p;
  p.mean_rate = r.nonnegative(n, path, "mean_rate");
  p.mean_duration = r.positive(n, path, "duration_mean", 30.0);
  p.stddev_duration = r.positive(n, path, "duration_sd", 30.0);
  p.mean_interarrival = r.positive(n, path, "interarrival_mean", 30.0);
  return p;
}

// g(u) = min(cap, intercept + slope * u)
std::function<double(double)> linear_capped(const Reader& r, const YAML::Node& n,
                                            const std::string& path) {
  const double a = r.nonnegative(n, path, "intercept", 0.0);
  const double b = r.nonnegative(n, path, "slope");
  const double cap = r.nonnegative(n, path, "cap", std::numeric_limits<double>::infinity());
  return [a, b, cap](double u) { return std::min(cap, a + b * u); };
}

DemandSpec parse_demand(const Reader& r, const YAML::Node& n, const std::string& path,
                        bool allow_impatient = true) {
  if (!n.IsMap()) r.fail(n, path, "expected a mapping");
  const auto model = r.text(n, path, "model");
  if (model == "constant") {
    r.expect_map(n, path, {"model", "rate"});
    const double rate = r.nonnegative(n, path, "rate");
    return DemandSpec::fixed(constant_demand(rate));
  }
  if (model == "buffered") {
    r.expect_map(n, path, {"model", "generation", "rate", "epochs"});
    std::vector<double> gen;
    if (n["generation"]) {
      if (n["rate"] || n["epochs"]) r.fail(n, path, "give either generation or rate/epochs");
      gen = r.numbers(n["generation"], Reader::join(path, "generation"));
      for (std::size_t k = 0; k < gen.size(); ++k) {
        if (gen[k] < 0) r.fail(n["generation"][k], Reader::index(Reader::join(path, "generation"), k), "must be >= 0");
      }
    } else {
      const double rate = r.nonnegative(n, path, "rate");
      const auto epochs = r.integer(n, path, "epochs");
      if (epochs < 0) r.fail(n["epochs"], Reader::join(path, "epochs"), "must be >= 0");
      gen.assign(static_cast<std::size_t>(epochs), rate);
    }
    return DemandSpec::fixed(buffered_demand(std::move(gen)));
  }
  if (model == "time_varying") {
    r.expect_map(n, path, {"model", "values", "cycle"});
    auto values = r.numbers(r.required(n, path, "values"), Reader::join(path, "values"));
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] < 0) r.fail(n["values"][k], Reader::index(Reader::join(path, "values"), k), "must be >= 0");
    }
    const bool cycle = r.flag(n, path, "cycle", false);
    if (cycle && values.empty()) r.fail(n["values"], Reader::join(path, "values"), "cannot cycle an empty list");
    return DemandSpec::fixed(time_varying_demand([values, cycle](Epoch t) {
      const auto k = static_cast<std::size_t>(t - 1);
      if (cycle) return values[k % values.size()];
      return k < values.size() ? values[k] : 0.0;
    }));
  }
  if (model == "increasing_rate" || model == "increasing_total") {
    r.expect_map(n, path, {"model", "intercept", "slope", "cap"});
    const auto g = linear_capped(r, n, path);
    return guarded(r, n, path, [&] {
      return DemandSpec::fixed(model == "increasing_rate" ? increasing_rate_demand(g)
                                                          : increasing_total_demand(g));
    });
  }
  if (model == "flow_trace") {
    r.expect_map(n, path, {"model", "mean_rate", "duration_mean", "duration_sd",
                           "interarrival_mean"});
    const auto p = flow_params(r, n, path);
    return guarded(r, n, path, [&] { return DemandSpec::flow_trace(p); });
  }
  if (model == "impatient") {
    if (!allow_impatient) r.fail(n, path, "impatient demand cannot be nested");
    r.expect_map(n, path, {"model", "rate", "base", "patience", "min_bytes"});
    const auto patience = r.integer(n, path, "patience");
    if (patience < 1) r.fail(n["patience"], Reader::join(path, "patience"), "must be >= 1");
    const double min_bytes = r.nonnegative(n, path, "min_bytes");
    if (n["rate"] && n["base"]) r.fail(n, path, "give either rate or base");
    if (n["rate"]) {
      const double rate = r.nonnegative(n, path, "rate");
      return DemandSpec::fixed(impatient_demand(rate, patience, min_bytes));
    }
    const auto base_node = r.required(n, path, "base");
    const auto base_path = Reader::join(path, "base");
    const auto base = parse_demand(r, base_node, base_path, false);
    if (!base.materialize(1, 1).memoryless()) {
      r.fail(base_node, base_path, "impatient base model must be memoryless");
    }
    return DemandSpec("impatient_" + base.label(), [base, patience, min_bytes](std::uint64_t seed,
                                                                               Epoch horizon) {
      return impatient_demand(base.materialize(seed, horizon), patience, min_bytes);
    });
  }
  r.fail(n["model"], Reader::join(path, "model"),
         "unknown demand model '" + model +
             "' (expected constant, buffered, impatient, time_varying, increasing_rate, "
             "increasing_total or flow_trace)");
}

StrategySpec parse_strategy(const Reader& r, const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) r.fail(n, path, "expected a mapping");
  const auto kind = r.text(n, path, "kind");
  if (kind == "greedy") {
    r.expect_map(n, path, {"kind"});
    return StrategySpec::greedy();
  }
  if (kind == "pad") {
    r.expect_map(n, path, {"kind", "amount", "start", "length", "schedule"});
    if (n["schedule"]) {
      if (n["amount"] || n["start"] || n["length"]) {
        r.fail(n, path, "give either schedule or amount/start/length");
      }
      auto sched = r.numbers(n["schedule"], Reader::join(path, "schedule"));
      return guarded(r, n, path, [&] { return StrategySpec::pad_with(std::move(sched)); });
    }
    const double amount = r.number(n, path, "amount");
    const auto start = r.integer(n, path, "start", 0);
    const auto length = r.integer(n, path, "length", std::numeric_limits<std::int32_t>::max());
    return guarded(r, n, path, [&] { return StrategySpec::pad(amount, start, length); });
  }
  if (kind == "delay") {
    r.expect_map(n, path, {"kind", "epochs", "start"});
    const auto epochs = r.integer(n, path, "epochs");
    const auto start = r.integer(n, path, "start", 0);
    return guarded(r, n, path, [&] { return StrategySpec::delay(epochs, start); });
  }
  if (kind == "misreport") {
    r.expect_map(n, path, {"kind", "factor"});
    const double factor = r.number(n, path, "factor");
    return guarded(r, n, path, [&] { return StrategySpec::misreport(factor); });
  }
  r.fail(n["kind"], Reader::join(path, "kind"),
         "unknown strategy '" + kind + "' (expected greedy, pad, delay or misreport)");
}

std::vector<BuyerSpec> parse_buyers(const Reader& r, const YAML::Node& list,
                                    const std::string& path, Epoch horizon) {
  if (!list.IsSequence()) r.fail(list, path, "expected a list of buyers");
  if (list.size() == 0) r.fail(list, path, "at least one buyer is required");
  std::vector<BuyerSpec> out;
  std::set<std::int64_t> ids;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto n = list[k];
    const auto p = Reader::index(path, k);
    r.expect_map(n, p, {"id", "value", "arrival", "departure", "demand", "strategy", "bid"});
    BuyerSpec b;
    const auto id = r.integer(n, p, "id", static_cast<std::int64_t>(k + 1));
    if (id < 0 || id > std::numeric_limits<std::int32_t>::max()) {
      r.fail(n["id"], Reader::join(p, "id"), "must be a nonnegative 32-bit integer");
    }
    if (!ids.insert(id).second) r.fail(n["id"], Reader::join(p, "id"), "duplicate buyer id");
    b.id = static_cast<BuyerId>(id);
    b.value = r.nonnegative(n, p, "value");
    b.arrival = r.integer(n, p, "arrival", 1);
    b.departure = r.integer(n, p, "departure", horizon);
    if (b.arrival < 0) r.fail(n["arrival"], Reader::join(p, "arrival"), "must be >= 0");
    if (b.departure < b.arrival) r.fail(n, p, "departure must not precede arrival");
    b.demand = parse_demand(r, r.required(n, p, "demand"), Reader::join(p, "demand"));
    if (n["strategy"]) b.strategy = parse_strategy(r, n["strategy"], Reader::join(p, "strategy"));
    if (n["bid"]) b.bid_override = r.nonnegative(n, p, "bid");
    out.push_back(std::move(b));
  }
  return out;
}

PaymentRule parse_rule(const Reader& r, const YAML::Node& n, const std::string& path) {
  const auto s = r.text(n, path, "rule");
  if (s == "bks") return PaymentRule::kBks;
  if (s == "vmm") return PaymentRule::kVmm;
  if (s == "fixed") return PaymentRule::kFixedPrice;
  r.fail(n["rule"], Reader::join(path, "rule"), "unknown rule '" + s + "' (expected bks, vmm or fixed)");
}

RoutingPolicy parse_routing(const Reader& r, const YAML::Node& n, const std::string& path) {
  const auto s = r.text(n, path, "routing", "spq");
  if (s == "spq") return RoutingPolicy::kSpq;
  if (s == "fq") return RoutingPolicy::kFq;
  if (s == "fifo") return RoutingPolicy::kFifo;
  if (s == "hybrid") return RoutingPolicy::kThresholdHybrid;
  r.fail(n["routing"], Reader::join(path, "routing"),
         "unknown routing '" + s + "' (expected spq, fq, fifo or hybrid)");
}

std::vector<MechanismArm> parse_mechanisms(const Reader& r, const YAML::Node& list,
                                           const std::string& path,
                                           const std::vector<BuyerSpec>& buyers) {
  if (!list.IsSequence() || list.size() == 0) r.fail(list, path, "expected a non-empty list");
  std::vector<MechanismArm> out;
  std::set<std::string> names;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto n = list[k];
    const auto p = Reader::index(path, k);
    r.expect_map(n, p, {"name", "rule", "routing", "mu", "reserve", "price", "boost"});
    MechanismArm a;
    a.rule = parse_rule(r, n, p);
    a.routing = parse_routing(r, n, p);
    a.name = r.text(n, p, "name", std::string(to_string(a.rule)) + "_" +
                                      std::string(to_string(a.routing)));
    if (!names.insert(a.name).second) r.fail(n, p, "duplicate mechanism name '" + a.name + "'");
    a.mu = r.number(n, p, "mu", 0.2);
    if (a.rule == PaymentRule::kBks && !(a.mu > 0.0 && a.mu < 1.0)) {
      r.fail(n["mu"], Reader::join(p, "mu"), "must lie in (0, 1)");
    }
    a.reserve = r.nonnegative(n, p, "reserve", 0.0);
    a.price = r.nonnegative(n, p, "price", 0.0);
    if (n["boost"]) {
      const auto b = n["boost"];
      const auto bp = Reader::join(p, "boost");
      r.expect_map(b, bp, {"buyer", "bytes", "deadline"});
      const auto id = static_cast<BuyerId>(r.integer(b, bp, "buyer"));
      const bool known = std::any_of(buyers.begin(), buyers.end(),
                                     [&](const BuyerSpec& s) { return s.id == id; });
      if (!known) r.fail(b["buyer"], Reader::join(bp, "buyer"), "unknown buyer id");
      a.boost = BoostSpec{id, r.nonnegative(b, bp, "bytes"), r.integer(b, bp, "deadline")};
      if (a.boost->deadline < 0) r.fail(b["deadline"], Reader::join(bp, "deadline"), "must be >= 0");
    }
    if (a.routing == RoutingPolicy::kThresholdHybrid && !a.boost) {
      r.fail(n, p, "hybrid routing needs a boost block");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string source) {
  Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "", e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source, 1, "", "expected a mapping at the top level");
  r.expect_map(root, "", {"experiment", "description", "seed", "runs", "horizon", "capacity",
                          "buyers", "mechanisms", "sweep", "pool", "optimum", "budget_seconds"});

  ExperimentConfig c;
  c.source = source;
  c.experiment_id = r.text(root, "", "experiment");
  if (root["seed"]) c.seed = r.seed(root["seed"], "seed");
  const auto runs = r.integer(root, "", "runs", 100);
  if (runs < 1) r.fail(root["runs"], "runs", "must be >= 1");
  c.runs = static_cast<std::size_t>(runs);
  c.horizon = r.integer(root, "", "horizon", 600);
  if (c.horizon < 1) r.fail(root["horizon"], "horizon", "must be >= 1");
  c.capacity = r.positive(root, "", "capacity");
  c.buyers = parse_buyers(r, r.required(root, "", "buyers"), "buyers", c.horizon);
  c.mechanisms = parse_mechanisms(r, r.required(root, "", "mechanisms"), "mechanisms", c.buyers);
  c.optimum = r.flag(root, "", "optimum", false);
  if (root["budget_seconds"]) c.budget_seconds = r.positive(root, "", "budget_seconds");

  if (const auto s = root["sweep"]) {
    r.expect_map(s, "sweep", {"variable", "values"});
    SweepConfig sweep;
    const auto var = r.text(s, "sweep", "variable");
    sweep.variable = guarded(r, s["variable"], "sweep.variable", [&] { return parse_sweep_variable(var); });
    sweep.values = r.numbers(r.required(s, "sweep", "values"), "sweep.values");
    if (sweep.values.empty()) r.fail(s["values"], "sweep.values", "need at least one value");
    for (std::size_t k = 0; k < sweep.values.size(); ++k) {
      const double v = sweep.values[k];
      const bool ok = sweep.variable == SweepVariable::kCapacity ? v > 0
                      : sweep.variable == SweepVariable::kMu     ? v > 0 && v < 1
                                                                 : v >= 0;
      if (!ok) r.fail(s["values"][k], Reader::index("sweep.values", k), "out of range for " + var);
    }
    c.sweep = std::move(sweep);
  }

  if (const auto p = root["pool"]) {
    r.expect_map(p, "pool", {"trials", "sessions", "mechanism", "sellers", "types"});
    PoolConfig pool;
    const auto trials = r.integer(p, "pool", "trials", 1);
    if (trials < 1) r.fail(p["trials"], "pool.trials", "must be >= 1");
    pool.trials = static_cast<std::size_t>(trials);
    const auto sessions = r.integer(p, "pool", "sessions", 1);
    if (sessions < 1) r.fail(p["sessions"], "pool.sessions", "must be >= 1");
    pool.sessions = static_cast<std::size_t>(sessions);
    pool.mechanism = r.text(p, "pool", "mechanism", "");
    const MechanismArm* arm = nullptr;
    try {
      arm = &c.arm(pool.mechanism);
    } catch (const std::invalid_argument& e) {
      r.fail(p["mechanism"] ? p["mechanism"] : p, "pool.mechanism", e.what());
    }
    if (p["types"] && p["sellers"]) r.fail(p, "pool", "give either sellers or types");
    if (p["types"]) {
      const auto list = p["types"];
      if (!list.IsSequence() || list.size() == 0) r.fail(list, "pool.types", "expected a non-empty list");
      for (std::size_t k = 0; k < list.size(); ++k) {
        const auto t = list[k];
        const auto tp = Reader::index("pool.types", k);
        r.expect_map(t, tp, {"name", "count", "capacity", "reserve", "buyers"});
        SellerType type;
        type.name = r.text(t, tp, "name", "type" + std::to_string(k + 1));
        const auto count = r.integer(t, tp, "count");
        if (count < 1) r.fail(t["count"], Reader::join(tp, "count"), "must be >= 1");
        type.count = static_cast<std::size_t>(count);
        type.capacity = r.positive(t, tp, "capacity", c.capacity);
        type.reserve = r.nonnegative(t, tp, "reserve", arm->reserve);
        type.buyers = t["buyers"] ? parse_buyers(r, t["buyers"], Reader::join(tp, "buyers"), c.horizon)
                                  : c.buyers;
        pool.types.push_back(std::move(type));
      }
    } else {
      const auto sellers = r.integer(p, "pool", "sellers");
      if (sellers < 2) r.fail(p["sellers"], "pool.sellers", "a pool needs at least two sellers");
      pool.types.push_back({"all", static_cast<std::size_t>(sellers), c.capacity, arm->reserve, c.buyers});
    }
    std::size_t total = 0;
    for (const auto& t : pool.types) total += t.count;
    if (total < 2) r.fail(p, "pool", "a pool needs at least two sellers");
    c.pool = std::move(pool);
  }

  for (const auto& a : c.mechanisms) {
    guarded(r, root, "mechanisms", [&] {
      c.scenario(a).validate();
      return 0;
    });
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace bwprio
