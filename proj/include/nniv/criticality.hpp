#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "discrepancy.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "result_cache.hpp"

namespace nniv {

enum class TargetKind { EndToEnd, FullMatrix };

// Which functional of the propagator the validity criterion is applied to:
// the end-to-end transfer amplitude p_{1N} over T = 2N, or the worst matrix
// element over T = 4N.
struct CriterionTarget {
  TargetKind kind = TargetKind::EndToEnd;
  double horizon_factor = 2.0;

  static CriterionTarget end_to_end() { return {TargetKind::EndToEnd, 2.0}; }
  static CriterionTarget full_matrix() { return {TargetKind::FullMatrix, 4.0}; }

  static CriterionTarget parse(const std::string& name) {
    if (name == "p1n" || name == "end-to-end") return end_to_end();
    if (name == "full" || name == "full-matrix") return full_matrix();
    throw validation_error("unknown target '" + name + "' (expected p1n or full)");
  }

  const char* name() const { return kind == TargetKind::EndToEnd ? "p1n" : "full"; }
  double horizon_for(int n) const { return horizon_factor * n; }
};

struct ScanSettings {
  double epsilon = 0.01;
  double resolution = 0.01;  // alpha grid step
  double dtau = 0.05;
  double floor = 3.0;
  double initial_span = 8.0;
  double hard_cap = 64.0;
  double tail_fraction = 0.25;

  void validate() const {
    if (!std::isfinite(epsilon) || epsilon <= 0.0)
      throw validation_error("epsilon must be positive");
    if (!std::isfinite(resolution) || resolution <= 0.0)
      throw validation_error("alpha resolution must be positive");
    if (!std::isfinite(dtau) || dtau <= 0.0)
      throw validation_error("tau step must be positive");
    if (!std::isfinite(floor) || floor <= 0.0 || hard_cap <= floor || initial_span <= 0.0)
      throw validation_error("invalid alpha scan window");
    if (tail_fraction <= 0.0 || tail_fraction >= 1.0)
      throw validation_error("tail fraction must lie in (0, 1)");
  }
};

struct AlphaCResult {
  int n = 0;
  CriterionTarget target;
  double horizon = 0.0;  // snapped to the tau grid
  double epsilon = 0.01;
  double resolution = 0.01;
  double alpha_c = 0.0;
  double alpha_ceiling = 0.0;
  int binding_j = 0;  // argmax pair at alpha_c - resolution (at the floor when
  int binding_k = 0;  // the criterion already holds there)
  int mirror_j = 0;
  int mirror_k = 0;
  double binding_value = 0.0;
};

// Criterion left side: Delta J of the target functional at one (n, alpha).
inline double criterion_value(int n, double alpha, const CriterionTarget& target,
                              double dtau = 0.05,
                              std::optional<double> horizon_override = std::nullopt,
                              DecompositionCache* cache = nullptr) {
  const double horizon = horizon_override.value_or(target.horizon_for(n));
  if (target.kind == TargetKind::EndToEnd)
    return delta_j_pair(n, alpha, 1, n, horizon, dtau, cache).value;
  return delta_j_max(n, alpha, horizon, dtau, cache).value;
}

namespace detail {

// Per-alpha criterion evaluator with the alpha-independent pieces hoisted out.
class CriterionScanner {
 public:
  CriterionScanner(int n, const CriterionTarget& target, const TauGrid& grid,
                   DecompositionCache* cache)
      : n_(n), target_(target), grid_(grid), cache_(cache) {
    if (target.kind == TargetKind::EndToEnd) {
      const auto nni = get_decomposition(ChainSpec::nni(n, 3.0), cache);
      nni_series_ = amplitude_series(*nni, 1, n, grid);
    } else {
      full_.emplace(n, grid, cache);
    }
  }

  double operator()(double alpha) const {
    if (target_.kind == TargetKind::EndToEnd) {
      const auto ani = get_decomposition(ChainSpec::ani(n_, alpha), cache_);
      const AmplitudeSeries fa = amplitude_series(*ani, 1, n_, grid_);
      return delta_j(fa, nni_series_, grid_.horizon()).value;
    }
    return full_->eval(alpha, cache_).max_value;
  }

 private:
  int n_;
  CriterionTarget target_;
  TauGrid grid_;
  DecompositionCache* cache_;
  AmplitudeSeries nni_series_;
  std::optional<FullPairScan> full_;
};

}  // namespace detail

// Smallest alpha on the scan grid past which the criterion holds. The grid
// starts at the floor and the ceiling adapts: whenever the criterion still
// fails somewhere in the final tail of the examined range, the span doubles,
// up to the hard cap.
inline AlphaCResult find_alpha_c(int n, const CriterionTarget& target,
                                 const ScanSettings& scan = {},
                                 std::optional<double> horizon_override = std::nullopt,
                                 DecompositionCache* cache = nullptr) {
  scan.validate();
  if (n < 2) throw validation_error("chain needs at least 2 spins");
  const double horizon = horizon_override.value_or(target.horizon_for(n));
  const TauGrid grid = TauGrid::over_horizon(horizon, scan.dtau);
  const detail::CriterionScanner eval(n, target, grid, cache);

  std::vector<double> vals;  // vals[i] at alpha = floor + i * resolution
  double span = std::min(scan.initial_span, scan.hard_cap - scan.floor);
  for (;;) {
    const auto count = static_cast<std::size_t>(std::llround(span / scan.resolution));
    const std::size_t known = vals.size();
    if (count + 1 > known) {
      vals.resize(count + 1);
      parallel_for(count + 1 - known, [&](std::size_t off) {
        const std::size_t i = known + off;
        vals[i] = eval(scan.floor + static_cast<double>(i) * scan.resolution);
      });
    }
    const auto tail_start = static_cast<std::size_t>(
        std::ceil((1.0 - scan.tail_fraction) * span / scan.resolution - 1e-9));
    bool tail_clear = true;
    for (std::size_t i = tail_start; i <= count; ++i)
      if (vals[i] >= scan.epsilon) {
        tail_clear = false;
        break;
      }
    if (tail_clear) break;
    if (scan.floor + span >= scan.hard_cap - 1e-12)
      throw numerical_error("criterion not satisfied for any alpha up to " +
                            std::to_string(scan.hard_cap));
    span = std::min(span * 2.0, scan.hard_cap - scan.floor);
  }

  std::optional<std::size_t> last_fail;
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] >= scan.epsilon) last_fail = i;

  AlphaCResult res;
  res.n = n;
  res.target = target;
  res.horizon = grid.horizon();
  res.epsilon = scan.epsilon;
  res.resolution = scan.resolution;
  res.alpha_ceiling = scan.floor + span;
  res.alpha_c = last_fail ? scan.floor + static_cast<double>(*last_fail + 1) * scan.resolution
                          : scan.floor;
  const double alpha_bind =
      last_fail ? scan.floor + static_cast<double>(*last_fail) * scan.resolution : scan.floor;
  if (target.kind == TargetKind::EndToEnd) {
    res.binding_j = 1;
    res.binding_k = n;
    res.binding_value = vals[last_fail.value_or(0)];
  } else {
    const DiscrepancyResult max = delta_j_max(n, alpha_bind, horizon, scan.dtau, cache);
    res.binding_j = max.source;
    res.binding_k = max.target;
    res.binding_value = max.value;
  }
  res.mirror_j = n + 1 - res.binding_k;
  res.mirror_k = n + 1 - res.binding_j;
  return res;
}

inline void to_json(nlohmann::json& j, const AlphaCResult& r) {
  j = nlohmann::json{{"n", r.n},
                     {"target", r.target.name()},
                     {"horizon", r.horizon},
                     {"epsilon", r.epsilon},
                     {"resolution", r.resolution},
                     {"alpha_c", r.alpha_c},
                     {"alpha_ceiling", r.alpha_ceiling},
                     {"binding", {r.binding_j, r.binding_k}},
                     {"mirror", {r.mirror_j, r.mirror_k}},
                     {"binding_value", r.binding_value}};
}

inline void from_json(const nlohmann::json& j, AlphaCResult& r) {
  r.n = j.at("n").get<int>();
  r.target = CriterionTarget::parse(j.at("target").get<std::string>());
  r.horizon = j.at("horizon").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  r.resolution = j.at("resolution").get<double>();
  r.alpha_c = j.at("alpha_c").get<double>();
  r.alpha_ceiling = j.at("alpha_ceiling").get<double>();
  r.binding_j = j.at("binding").at(0).get<int>();
  r.binding_k = j.at("binding").at(1).get<int>();
  r.mirror_j = j.at("mirror").at(0).get<int>();
  r.mirror_k = j.at("mirror").at(1).get<int>();
  r.binding_value = j.at("binding_value").get<double>();
}

namespace detail {

inline nlohmann::json alpha_c_cache_key(int n, const CriterionTarget& target,
                                        const ScanSettings& scan, double horizon_snapped) {
  return nlohmann::json{{"cmd", "alphac"},
                        {"n", n},
                        {"m", {1, n - 1}},
                        {"target", target.name()},
                        {"epsilon", scan.epsilon},
                        {"dalpha", scan.resolution},
                        {"dtau", scan.dtau},
                        {"horizon", horizon_snapped},
                        {"grid",
                         {{"floor", scan.floor},
                          {"span", scan.initial_span},
                          {"cap", scan.hard_cap},
                          {"tail", scan.tail_fraction}}},
                        {"version", tool_version()}};
}

inline AlphaCResult find_alpha_c_cached(int n, const CriterionTarget& target,
                                        const ScanSettings& scan,
                                        std::optional<double> horizon_override,
                                        DecompositionCache* cache,
                                        const ResultCache* results) {
  const double horizon = horizon_override.value_or(target.horizon_for(n));
  const double snapped = TauGrid::over_horizon(horizon, scan.dtau).horizon();
  const nlohmann::json key = alpha_c_cache_key(n, target, scan, snapped);
  if (results) {
    if (auto hit = results->get(key)) return hit->get<AlphaCResult>();
  }
  const AlphaCResult res = find_alpha_c(n, target, scan, horizon_override, cache);
  if (results) results->put(key, nlohmann::json(res));
  return res;
}

}  // namespace detail

// One sweep element; `error` is set (and `result` empty) when that element
// failed while others may have succeeded.
struct SweepEntry {
  int n = 0;
  double horizon = 0.0;
  std::optional<AlphaCResult> result;
  std::string error;
};

inline std::vector<SweepEntry> alpha_c_vs_n(const std::vector<int>& ns,
                                            const CriterionTarget& target,
                                            const ScanSettings& scan = {},
                                            DecompositionCache* cache = nullptr,
                                            const ResultCache* results = nullptr) {
  std::vector<SweepEntry> out;
  out.reserve(ns.size());
  for (const int n : ns) {
    SweepEntry e;
    e.n = n;
    try {
      e.result = detail::find_alpha_c_cached(n, target, scan, std::nullopt, cache, results);
      e.horizon = e.result->horizon;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<SweepEntry> alpha_c_vs_t(int n, const std::vector<double>& horizons,
                                            const CriterionTarget& target,
                                            const ScanSettings& scan = {},
                                            DecompositionCache* cache = nullptr,
                                            const ResultCache* results = nullptr) {
  std::vector<SweepEntry> out;
  out.reserve(horizons.size());
  for (const double t : horizons) {
    SweepEntry e;
    e.n = n;
    e.horizon = t;
    try {
      e.result = detail::find_alpha_c_cached(n, target, scan, t, cache, results);
      e.horizon = e.result->horizon;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Where in the propagator matrix the worst pair sits at the transition, per
// chain length. Records the argmax pair one grid step below alpha_c together
// with its mirror image.
struct ArgmaxRecord {
  int n = 0;
  double alpha_c = 0.0;
  int j = 0;
  int k = 0;
  int j_mirror = 0;
  int k_mirror = 0;
  double delta_j_value = 0.0;
};

inline std::vector<ArgmaxRecord> argmax_transition_map(const std::vector<int>& ns,
                                                       const ScanSettings& scan = {},
                                                       DecompositionCache* cache = nullptr,
                                                       const ResultCache* results = nullptr) {
  std::vector<ArgmaxRecord> out;
  out.reserve(ns.size());
  for (const int n : ns) {
    const AlphaCResult r = detail::find_alpha_c_cached(n, CriterionTarget::full_matrix(), scan,
                                                       std::nullopt, cache, results);
    out.push_back({r.n, r.alpha_c, r.binding_j, r.binding_k, r.mirror_j, r.mirror_k,
                   r.binding_value});
  }
  return out;
}

}
