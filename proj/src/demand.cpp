#include "bwprio/demand.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace bwprio {

std::string_view to_string(DemandKind kind) {
  switch (kind) {
    case DemandKind::kConstant: return "constant";
    case DemandKind::kTimeVarying: return "time_varying";
    case DemandKind::kBuffered: return "buffered";
    case DemandKind::kImpatient: return "impatient";
    case DemandKind::kIncreasingRate: return "increasing_rate";
    case DemandKind::kIncreasingTotal: return "increasing_total";
    case DemandKind::kFlowTrace: return "flow_trace";
    case DemandKind::kCustom: return "custom";
  }
  return "unknown";
}

DemandRealization::DemandRealization(DemandKind kind, bool memoryless, Fn fn)
    : kind_(kind), memoryless_(memoryless), fn_(std::make_shared<const Fn>(std::move(fn))) {
  if (!*fn_) throw std::invalid_argument("demand realization needs a query function");
}

double DemandRealization::query(Epoch t, double x) const {
  if (t < 1) throw std::domain_error("demand queried at epoch " + std::to_string(t));
  if (!std::isfinite(x) || x < 0.0) {
    throw std::domain_error("demand queried with cumulative bytes " + std::to_string(x));
  }
  const double d = (*fn_)(t, x);
  if (!std::isfinite(d) || d < 0.0) {
    throw std::domain_error(std::string(to_string(kind_)) + " demand returned " +
                            std::to_string(d) + " at epoch " + std::to_string(t));
  }
  return d;
}

DemandRealization constant_demand(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("constant demand rate must be finite and >= 0");
  }
  return {DemandKind::kConstant, true, [rate](Epoch, double) { return rate; }};
}

DemandRealization time_varying_demand(std::function<double(Epoch)> generation) {
  if (!generation) throw std::invalid_argument("time-varying demand needs g(t)");
  return {DemandKind::kTimeVarying, true,
          [g = std::move(generation)](Epoch t, double) { return g(t); }};
}

DemandRealization buffered_demand(std::vector<double> generation) {
  std::vector<double> cumulative(generation.size());
  double total = 0.0;
  for (std::size_t p = 0; p < generation.size(); ++p) {
    if (!(generation[p] >= 0.0) || !std::isfinite(generation[p])) {
      throw std::invalid_argument("buffered demand generation must be >= 0");
    }
    total += generation[p];
    cumulative[p] = total;
  }
  auto sums = std::make_shared<const std::vector<double>>(std::move(cumulative));
  return {DemandKind::kBuffered, false, [sums](Epoch t, double x) {
            if (sums->empty()) return 0.0;
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(t), sums->size());
            return std::max(0.0, (*sums)[idx - 1] - x);
          }};
}

DemandRealization impatient_demand(double rate, Epoch patience, double min_bytes) {
  return impatient_demand(constant_demand(rate), patience, min_bytes);
}

DemandRealization impatient_demand(DemandRealization base, Epoch patience, double min_bytes) {
  if (patience < 1) throw std::invalid_argument("impatient demand patience must be >= 1");
  if (!(min_bytes >= 0.0)) throw std::invalid_argument("impatient demand threshold must be >= 0");
  if (!base.memoryless()) {
    throw std::invalid_argument("impatient demand wraps a memoryless base model only");
  }
  return {DemandKind::kImpatient, false,
          [base = std::move(base), patience, min_bytes](Epoch t, double x) {
            if (t <= patience || x > min_bytes) return base.query(t, x);
            return 0.0;
          }};
}

namespace {

void require_weakly_increasing(const std::function<double(double)>& g, double limit,
                               const char* what) {
  if (!g) throw std::invalid_argument(std::string(what) + " needs g");
  constexpr int kProbes = 2000;
  double prev = g(0.0);
  if (!(prev >= 0.0)) throw std::invalid_argument(std::string(what) + ": g must be >= 0");
  for (int k = 1; k <= kProbes; ++k) {
    // Dense near zero, where piecewise models usually change slope.
    const double z = limit * std::pow(static_cast<double>(k) / kProbes, 3.0);
    const double v = g(z);
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + ": g must be >= 0");
    if (v < prev - 1e-12) {
      throw std::invalid_argument(std::string(what) + ": g is not weakly increasing near " +
                                  std::to_string(z));
    }
    prev = v;
  }
}

}  // namespace

DemandRealization increasing_rate_demand(std::function<double(double)> g, double probe_limit) {
  require_weakly_increasing(g, probe_limit, "increasing-rate demand");
  return {DemandKind::kIncreasingRate, false,
          [g = std::move(g)](Epoch t, double x) { return g(x / static_cast<double>(t)); }};
}

DemandRealization increasing_total_demand(std::function<double(double)> g, double probe_limit) {
  require_weakly_increasing(g, probe_limit, "increasing-total demand");
  return {DemandKind::kIncreasingTotal, false, [g = std::move(g)](Epoch, double x) { return g(x); }};
}

void FlowTraceParams::validate() const {
  if (!(mean_duration > 0.0) || !(stddev_duration > 0.0)) {
    throw std::invalid_argument("flow duration mean and stddev must be > 0");
  }
  if (!(mean_interarrival > 0.0)) throw std::invalid_argument("flow inter-arrival must be > 0");
  if (!(mean_rate >= 0.0) || !std::isfinite(mean_rate)) {
    throw std::invalid_argument("flow rate must be finite and >= 0");
  }
  if (horizon < 1) throw std::invalid_argument("flow trace horizon must be >= 1");
}

LognormalParams lognormal_from_moments(double mean, double stddev) {
  if (!(mean > 0.0) || !(stddev > 0.0)) {
    throw std::invalid_argument("lognormal moments must be positive");
  }
  const double sigma2 = std::log1p((stddev * stddev) / (mean * mean));
  return {std::log(mean) - 0.5 * sigma2, std::sqrt(sigma2)};
}

std::vector<double> flow_trace_values(const FlowTraceParams& params) {
  params.validate();
  const auto ln = lognormal_from_moments(params.mean_duration, params.stddev_duration);
  Rng rng(params.seed);
  std::exponential_distribution<double> gap(1.0 / params.mean_interarrival);
  std::lognormal_distribution<double> duration(ln.mu, ln.sigma);

  const auto horizon = static_cast<std::size_t>(params.horizon);
  std::vector<double> trace(horizon, 0.0);
  const double warmup = 10.0 * (params.mean_duration + params.stddev_duration);

  for (double arrival = -warmup + gap(rng); arrival <= static_cast<double>(params.horizon);
       arrival += gap(rng)) {
    const auto length = std::max<Epoch>(1, std::llround(duration(rng)));
    const Epoch first = static_cast<Epoch>(std::floor(arrival)) + 1;
    const Epoch last = first + length - 1;
    if (last < 1 || params.mean_rate == 0.0) continue;
    std::poisson_distribution<long> emit(params.mean_rate);
    for (Epoch t = std::max<Epoch>(first, 1); t <= std::min(last, params.horizon); ++t) {
      trace[static_cast<std::size_t>(t - 1)] += static_cast<double>(emit(rng));
    }
  }
  return trace;
}

DemandRealization flow_trace_demand(const FlowTraceParams& params) {
  auto values = std::make_shared<const std::vector<double>>(flow_trace_values(params));
  return {DemandKind::kFlowTrace, true, [values](Epoch t, double) {
            const auto idx = static_cast<std::size_t>(t);
            return idx <= values->size() ? (*values)[idx - 1] : 0.0;
          }};
}

DemandRealization quota_giveup_fixture(double rate, double quota) {
  return {DemandKind::kCustom, false,
          [rate, quota](Epoch, double x) { return x < quota ? rate : 0.0; }};
}

namespace {

bool natural_at(const DemandRealization& d, Epoch t, double x, double xp, double c,
                double tolerance, NaturalReport& report) {
  ++report.checked;
  const double lhs = x + std::min(c, d.query(t, x));
  const double rhs = xp + std::min(c, d.query(t, xp));
  if (lhs + tolerance * std::max(1.0, std::abs(rhs)) >= rhs) return true;
  report.natural = false;
  report.witness = NaturalWitness{t, x, xp, c, lhs, rhs};
  return false;
}

}  // namespace

NaturalReport check_natural(const DemandRealization& d, Epoch t_first, Epoch t_last,
                            std::span<const double> x_grid, std::span<const double> c_grid,
                            double tolerance) {
  NaturalReport report;
  for (Epoch t = t_first; t <= t_last; ++t) {
    for (double x : x_grid) {
      for (double xp : x_grid) {
        if (xp > x) continue;
        for (double c : c_grid) {
          if (!natural_at(d, t, x, xp, c, tolerance, report)) return report;
        }
      }
    }
  }
  return report;
}

NaturalReport check_natural_random(const DemandRealization& d, Epoch t_last, double x_max,
                                   double c_max, std::size_t triples, Rng& rng,
                                   double tolerance) {
  NaturalReport report;
  std::uniform_int_distribution<Epoch> epoch(1, t_last);
  for (std::size_t k = 0; k < triples; ++k) {
    const Epoch t = epoch(rng);
    double a = uniform01(rng) * x_max;
    double b = uniform01(rng) * x_max;
    if (a < b) std::swap(a, b);
    const double c = uniform01(rng) * c_max;
    if (!natural_at(d, t, a, b, c, tolerance, report)) return report;
  }
  return report;
}

}  // namespace bwprio
