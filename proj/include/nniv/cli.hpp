#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "criticality.hpp"
#include "discrepancy.hpp"
#include "errors.hpp"
#include "fitting.hpp"
#include "propagator.hpp"
#include "result_cache.hpp"
#include "version.hpp"

namespace nniv {

// ---------------------------------------------------------------- formatting

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Every CSV stream starts with one metadata comment recording the tolerances
// and horizon in effect, then a header row.
inline void emit_meta(std::ostream& out, const std::string& command, double epsilon,
                      double dtau, double dalpha, const std::string& horizon) {
  out << "# command=" << command << " epsilon=" << fmt12(epsilon) << " dtau=" << fmt12(dtau)
      << " dalpha=" << fmt12(dalpha) << " t=" << horizon << " tool_version=" << tool_version()
      << "\n";
}

// -------------------------------------------------------------- range syntax

namespace detail {

inline double parse_number(const std::string& tok, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (...) {
    throw validation_error(std::string("cannot parse ") + what + " '" + tok + "'");
  }
  if (used != tok.size() || !std::isfinite(v))
    throw validation_error(std::string("cannot parse ") + what + " '" + tok + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace detail

// `start:stop:step` (step defaults to 1), inclusive of stop when the grid
// lands on it. A bare number is a one-element range.
inline std::vector<double> parse_range(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() > 3) throw validation_error("range '" + text + "' has too many fields");
  const double start = detail::parse_number(parts[0], "range start");
  const double stop = parts.size() > 1 ? detail::parse_number(parts[1], "range stop") : start;
  const double step = parts.size() > 2 ? detail::parse_number(parts[2], "range step") : 1.0;
  if (step <= 0) throw validation_error("range step must be positive");
  if (stop < start) throw validation_error("range stop precedes start");
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  if (count > 2'000'000) throw validation_error("range '" + text + "' is unreasonably long");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  for (long long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

inline std::vector<int> parse_int_range(const std::string& text) {
  std::vector<int> out;
  for (const double v : parse_range(text)) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw validation_error("range '" + text + "' must contain integers");
    out.push_back(static_cast<int>(r));
  }
  return out;
}

inline std::pair<int, int> parse_pair(const std::string& text) {
  const auto parts = detail::split(text, ',');
  if (parts.size() != 2) throw validation_error("pair must look like J,K");
  const int j = static_cast<int>(detail::parse_number(parts[0], "pair site"));
  const int k = static_cast<int>(detail::parse_number(parts[1], "pair site"));
  return {j, k};
}

// model name -> neighbor range
inline int parse_model(const std::string& model, int n) {
  if (model == "nni") return 1;
  if (model == "ani") return n - 1;
  if (model.rfind("m=", 0) == 0)
    return static_cast<int>(detail::parse_number(model.substr(2), "truncation"));
  throw validation_error("unknown model '" + model + "' (expected nni, ani or m=K)");
}

// ------------------------------------------------------------------ plumbing

namespace detail {

class OutputStream {
 public:
  OutputStream(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw validation_error("cannot open output file '" + path + "'");
      out_ = &file_;
    } else {
      out_ = &fallback;
    }
  }
  std::ostream& get() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const validation_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

inline InitialState load_state_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open state file '" + path + "'");
  std::vector<Complex> amps;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream row(line);
    double re = 0, im = 0;
    if (!(row >> re)) throw validation_error("bad state row '" + line + "'");
    row >> im;
    amps.emplace_back(re, im);
  }
  if (static_cast<int>(amps.size()) != n)
    throw validation_error("state file has " + std::to_string(amps.size()) +
                           " rows, chain has " + std::to_string(n));
  InitialState st{Eigen::VectorXcd::Map(amps.data(), static_cast<Eigen::Index>(amps.size()))};
  st.validate(n);
  return st;
}

}  // namespace detail

// -------------------------------------------------------------------- evolve

struct EvolveConfig {
  int n = 5;
  double alpha = 3.0;
  std::string model = "ani";
  std::string pair;        // "J,K"; empty when a state file is given
  std::string state_file;  // one amplitude per row: "re im" or "re,im"
  int site = 0;            // observed site in state-file mode
  double t_max = 10.0;
  double dtau = 0.05;
  bool both_models = false;
  std::string output;
};

inline int cmd_evolve(const EvolveConfig& cfg, std::ostream& out_stream = std::cout,
                      std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    const TauGrid grid = TauGrid::over_horizon(cfg.t_max, cfg.dtau);
    detail::OutputStream sink(cfg.output, out_stream);
    std::ostream& out = sink.get();

    const bool pair_mode = !cfg.pair.empty();
    if (pair_mode == !cfg.state_file.empty())
      throw validation_error("need exactly one of --pair and --initial-state");

    std::vector<int> ranges;
    if (cfg.both_models) {
      ranges = {1, cfg.n - 1};
    } else {
      ranges = {parse_model(cfg.model, cfg.n)};
    }

    emit_meta(out, "evolve", 0.01, cfg.dtau, 0.01, fmt12(grid.horizon()));
    std::vector<Eigen::VectorXcd> cols;
    if (pair_mode) {
      const auto [j, k] = parse_pair(cfg.pair);
      for (const int m : ranges)
        cols.push_back(amplitude_series(ChainSpec{cfg.n, m, cfg.alpha}, j, k, grid).values);
    } else {
      const InitialState st = detail::load_state_file(cfg.state_file, cfg.n);
      if (cfg.site < 1) throw validation_error("state-file mode needs --site");
      for (const int m : ranges) {
        const SpectralDecomposition dec = decompose(ChainSpec{cfg.n, m, cfg.alpha});
        const Eigen::VectorXcd w = dec.eigenvectors.transpose().cast<Complex>() * st.amplitudes;
        Eigen::VectorXcd col(grid.points());
        for (int s = 0; s < grid.points(); ++s) {
          Complex acc(0.0, 0.0);
          for (int q = 0; q < cfg.n; ++q) {
            const double phase = dec.eigenvalues(q) * grid.tau(s);
            acc += dec.eigenvectors(cfg.site - 1, q) *
                   (Complex(std::cos(phase), -std::sin(phase)) * w(q));
          }
          col(s) = acc;
        }
        cols.push_back(std::move(col));
      }
    }

    if (cfg.both_models) {
      out << "tau,re_p_nni,im_p_nni,prob_nni,re_p_ani,im_p_ani,prob_ani\n";
    } else {
      out << "tau,re_p,im_p,prob\n";
    }
    for (int s = 0; s < grid.points(); ++s) {
      out << fmt12(grid.tau(s));
      for (const auto& col : cols) {
        const Complex v = col(s);
        out << "," << fmt12(v.real()) << "," << fmt12(v.imag()) << "," << fmt12(std::norm(v));
      }
      out << "\n";
    }
    return 0;
  });
}

// -------------------------------------------------------------------- deltaj

struct DeltajConfig {
  std::string n_range = "5:50:5";
  double alpha = 3.0;
  std::string target = "p1n";
  double t_factor = 0.0;  // 0 = horizon factor of the target
  double dtau = 0.05;
  std::string output;
};

inline int cmd_deltaj(const DeltajConfig& cfg, std::ostream& out_stream = std::cout,
                      std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    const CriterionTarget target = CriterionTarget::parse(cfg.target);
    const double factor = cfg.t_factor > 0 ? cfg.t_factor : target.horizon_factor;
    detail::OutputStream sink(cfg.output, out_stream);

    nlohmann::json doc;
    doc["command"] = "deltaj";
    doc["alpha"] = cfg.alpha;
    doc["target"] = target.name();
    doc["t_factor"] = factor;
    doc["dtau"] = cfg.dtau;
    doc["epsilon"] = 0.01;
    doc["tool_version"] = tool_version();
    auto& results = doc["results"] = nlohmann::json::array();
    DecompositionCache& cache = DecompositionCache::global();
    for (const int n : parse_int_range(cfg.n_range)) {
      const double horizon = factor * n;
      DiscrepancyResult r;
      if (target.kind == TargetKind::EndToEnd) {
        r = delta_j_pair(n, cfg.alpha, 1, n, horizon, cfg.dtau, &cache);
      } else {
        r = delta_j_max(n, cfg.alpha, horizon, cfg.dtau, &cache);
      }
      results.push_back(nlohmann::json{
          {"n", n}, {"delta_j", r.value}, {"pair", {r.source, r.target}}});
    }
    sink.get() << doc.dump(1) << "\n";
    return 0;
  });
}

// -------------------------------------------------------------------- alphac

struct AlphacConfig {
  std::string n_range = "10:100:10";
  std::string target = "p1n";
  double epsilon = 0.01;
  double dalpha = 0.01;
  double dtau = 0.05;
  bool fit = false;
  std::string cache_dir;
  std::string output;
};

namespace detail {

inline ScanSettings scan_settings(double epsilon, double dalpha, double dtau) {
  ScanSettings s;
  s.epsilon = epsilon;
  s.resolution = dalpha;
  s.dtau = dtau;
  s.validate();
  return s;
}

inline void emit_sweep_rows(std::ostream& out, const std::vector<SweepEntry>& entries,
                            bool keyed_by_t) {
  out << (keyed_by_t ? "t" : "n")
      << ",alpha_c,alpha_ceiling,horizon,binding_j,binding_k,mirror_j,mirror_k,"
         "binding_value,status\n";
  for (const auto& e : entries) {
    if (keyed_by_t)
      out << fmt12(e.horizon);
    else
      out << e.n;
    if (e.result) {
      const AlphaCResult& r = *e.result;
      out << "," << fmt12(r.alpha_c) << "," << fmt12(r.alpha_ceiling) << ","
          << fmt12(r.horizon) << "," << r.binding_j << "," << r.binding_k << "," << r.mirror_j
          << "," << r.mirror_k << "," << fmt12(r.binding_value) << ",ok\n";
    } else {
      std::string msg = e.error;
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      out << ",,,,,,,," << "," << "error: " << msg << "\n";
    }
  }
}

}  // namespace detail

inline int cmd_alphac(const AlphacConfig& cfg, std::ostream& out_stream = std::cout,
                      std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    const CriterionTarget target = CriterionTarget::parse(cfg.target);
    const ScanSettings scan = detail::scan_settings(cfg.epsilon, cfg.dalpha, cfg.dtau);
    const std::vector<int> ns = parse_int_range(cfg.n_range);
    const ResultCache results = ResultCache::resolve(cfg.cache_dir);
    detail::OutputStream sink(cfg.output, out_stream);
    std::ostream& out = sink.get();

    const auto entries = alpha_c_vs_n(ns, target, scan, &DecompositionCache::global(),
                                      results.active() ? &results : nullptr);
    emit_meta(out, std::string("alphac target=") + target.name(), cfg.epsilon, cfg.dtau,
              cfg.dalpha, fmt12(target.horizon_factor) + "N");
    detail::emit_sweep_rows(out, entries, false);

    bool partial = false;
    std::vector<std::pair<double, double>> points;
    for (const auto& e : entries) {
      if (e.result)
        points.emplace_back(static_cast<double>(e.n), e.result->alpha_c);
      else
        partial = true;
    }
    if (cfg.fit) {
      if (points.size() >= 4) {
        const LogFit f = fit_log(points);
        out << "# fit a=" << fmt12(f.a) << " b=" << fmt12(f.b) << " c=" << fmt12(f.c)
            << " sse=" << fmt12(f.sse) << " n_points=" << f.n_points
            << " n_max=" << fmt12(f.n_max) << "\n";
      } else {
        out << "# fit skipped: fewer than 4 successful rows\n";
      }
    }
    return partial ? 4 : 0;
  });
}

// --------------------------------------------------------------- alphac-vs-t

struct AlphacVsTConfig {
  int n = 20;
  std::string t_range = "10:120:5";
  std::string target = "p1n";
  double epsilon = 0.01;
  double dalpha = 0.01;
  double dtau = 0.05;
  std::string cache_dir;
  std::string output;
};

inline int cmd_alphac_vs_t(const AlphacVsTConfig& cfg, std::ostream& out_stream = std::cout,
                           std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    const CriterionTarget target = CriterionTarget::parse(cfg.target);
    const ScanSettings scan = detail::scan_settings(cfg.epsilon, cfg.dalpha, cfg.dtau);
    const std::vector<double> ts = parse_range(cfg.t_range);
    const ResultCache results = ResultCache::resolve(cfg.cache_dir);
    detail::OutputStream sink(cfg.output, out_stream);

    const auto entries = alpha_c_vs_t(cfg.n, ts, target, scan, &DecompositionCache::global(),
                                      results.active() ? &results : nullptr);
    emit_meta(sink.get(),
              std::string("alphac-vs-t n=") + std::to_string(cfg.n) + " target=" + target.name(),
              cfg.epsilon, cfg.dtau, cfg.dalpha, "sweep");
    detail::emit_sweep_rows(sink.get(), entries, true);
    for (const auto& e : entries)
      if (!e.result) return 4;
    return 0;
  });
}

// ---------------------------------------------------------------- argmax-map

struct ArgmaxMapConfig {
  std::string n_range = "10:40:10";
  double epsilon = 0.01;
  double dalpha = 0.01;
  double dtau = 0.05;
  std::string cache_dir;
  std::string output;
};

inline int cmd_argmax_map(const ArgmaxMapConfig& cfg, std::ostream& out_stream = std::cout,
                          std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    const ScanSettings scan = detail::scan_settings(cfg.epsilon, cfg.dalpha, cfg.dtau);
    const ResultCache results = ResultCache::resolve(cfg.cache_dir);
    detail::OutputStream sink(cfg.output, out_stream);
    std::ostream& out = sink.get();

    const auto records =
        argmax_transition_map(parse_int_range(cfg.n_range), scan,
                              &DecompositionCache::global(), results.active() ? &results : nullptr);
    emit_meta(out, "argmax-map target=full", cfg.epsilon, cfg.dtau, cfg.dalpha, "4N");
    out << "n,j,k,j_mirror,k_mirror,delta_j\n";
    for (const auto& r : records)
      out << r.n << "," << r.j << "," << r.k << "," << r.j_mirror << "," << r.k_mirror << ","
          << fmt12(r.delta_j_value) << "\n";
    return 0;
  });
}

// ----------------------------------------------------------------- a-vs-nmax

struct AVsNmaxConfig {
  std::string input;  // CSV from cmd_alphac; alternatively recompute:
  std::string n_range;
  std::string target = "p1n";
  std::string nmax_range = "50:100:10";
  double epsilon = 0.01;
  double dalpha = 0.01;
  double dtau = 0.05;
  std::string cache_dir;
  std::string output;
};

namespace detail {

inline std::vector<std::pair<double, double>> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open sweep file '" + path + "'");
  std::string line;
  std::vector<std::string> header;
  std::vector<std::pair<double, double>> points;
  int col_n = -1, col_ac = -1, col_status = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (header.empty()) {
      header = cells;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "n") col_n = static_cast<int>(i);
        if (cells[i] == "alpha_c") col_ac = static_cast<int>(i);
        if (cells[i] == "status") col_status = static_cast<int>(i);
      }
      if (col_n < 0 || col_ac < 0)
        throw validation_error("sweep file lacks n and alpha_c columns");
      continue;
    }
    if (col_status >= 0 && col_status < static_cast<int>(cells.size()) &&
        cells[col_status] != "ok")
      continue;
    if (col_n >= static_cast<int>(cells.size()) || col_ac >= static_cast<int>(cells.size()))
      continue;
    points.emplace_back(parse_number(cells[col_n], "n"), parse_number(cells[col_ac], "alpha_c"));
  }
  return points;
}

}  // namespace detail

inline int cmd_a_vs_nmax(const AVsNmaxConfig& cfg, std::ostream& out_stream = std::cout,
                         std::ostream& err = std::cerr) {
  return detail::guarded(err, [&]() -> int {
    std::vector<std::pair<double, double>> points;
    if (!cfg.input.empty()) {
      points = detail::read_sweep_csv(cfg.input);
    } else if (!cfg.n_range.empty()) {
      const CriterionTarget target = CriterionTarget::parse(cfg.target);
      const ScanSettings scan = detail::scan_settings(cfg.epsilon, cfg.dalpha, cfg.dtau);
      const ResultCache results = ResultCache::resolve(cfg.cache_dir);
      const auto entries =
          alpha_c_vs_n(parse_int_range(cfg.n_range), target, scan,
                       &DecompositionCache::global(), results.active() ? &results : nullptr);
      for (const auto& e : entries) {
        if (!e.result) throw numerical_error("sweep failed at n=" + std::to_string(e.n) +
                                             ": " + e.error);
        points.emplace_back(static_cast<double>(e.n), e.result->alpha_c);
      }
    } else {
      throw validation_error("need --input or --n-range");
    }
    const auto rows = a_vs_nmax(points, parse_int_range(cfg.nmax_range));
    detail::OutputStream sink(cfg.output, out_stream);
    std::ostream& out = sink.get();
    emit_meta(out, "a-vs-nmax", cfg.epsilon, cfg.dtau, cfg.dalpha, "sweep");
    out << "n_max,a\n";
    for (const auto& [n_max, a] : rows) out << n_max << "," << fmt12(a) << "\n";
    return 0;
  });
}

}
