#include "herdlv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "herdlv/basin.hpp"
#include "herdlv/integrator.hpp"
#include "herdlv/model.hpp"
#include "herdlv/version.hpp"

namespace herdlv::cli {

using json = nlohmann::ordered_json;

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json state_json(const State& s) { return json::array({s.x, s.y}); }

/// Output sink: a file when a path is given, otherwise the fallback stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw UsageError(fmt::format("cannot open '{}' for writing", path));
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_json(std::ostream& os, const json& doc) { os << doc.dump(2) << '\n'; }

struct ParamFlags {
  double r = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  void add(CLI::App* app, bool beta_required = true) {
    app->add_option("--r", r, "prey birth rate (> 0)")->required();
    app->add_option("--alpha", alpha, "predator death rate (> 0)")->required();
    auto* b = app->add_option("--beta", beta, "biomass conversion efficiency (> 0)");
    if (beta_required) b->required();
  }
  ModelParams params() const { return validate_params(r, alpha, beta); }
  json to_json() const { return json{{"r", r}, {"alpha", alpha}, {"beta", beta}}; }
  void append_args(std::vector<std::string>& args) const {
    args.insert(args.end(), {"--r", format_number(r), "--alpha", format_number(alpha), "--beta", format_number(beta)});
  }
};

struct ConfigFlags {
  IntegratorConfig cfg;

  void add(CLI::App* app) {
    app->add_option("--t-max", cfg.t_max, "integration horizon");
    app->add_option("--rtol", cfg.rtol, "relative tolerance");
    app->add_option("--atol", cfg.atol, "absolute tolerance");
    app->add_option("--event-tol", cfg.event_tol, "extinction-time bracket width");
    app->add_option("--conv-tol", cfg.conv_tol, "convergence radius");
    app->add_option("--conv-window", cfg.conv_window, "dwell time inside the convergence radius");
    app->add_option("--h-init", cfg.h_init, "initial step size");
    app->add_option("--h-min", cfg.h_min, "smallest admissible step size");
    app->add_option("--h-max", cfg.h_max, "largest step size");
  }
  json to_json() const {
    return json{{"rtol", cfg.rtol},           {"atol", cfg.atol},
                {"h_init", cfg.h_init},       {"h_min", cfg.h_min},
                {"h_max", cfg.h_max},         {"t_max", cfg.t_max},
                {"event_tol", cfg.event_tol}, {"conv_tol", cfg.conv_tol},
                {"conv_window", cfg.conv_window}, {"continue_after_extinction", cfg.continue_after_extinction}};
  }
  void append_args(std::vector<std::string>& args) const {
    args.insert(args.end(), {"--t-max", format_number(cfg.t_max), "--rtol", format_number(cfg.rtol), "--atol",
                             format_number(cfg.atol), "--event-tol", format_number(cfg.event_tol), "--conv-tol",
                             format_number(cfg.conv_tol), "--conv-window", format_number(cfg.conv_window),
                             "--h-init", format_number(cfg.h_init), "--h-min", format_number(cfg.h_min), "--h-max",
                             format_number(cfg.h_max)});
  }
};

json manifest(const std::string& command, const std::vector<std::string>& args, json resolved, json outputs) {
  json m;
  m["command"] = command;
  m["tool"] = "herdlv";
  m["version"] = kVersion;
  m["args"] = args;
  m["resolved"] = std::move(resolved);
  m["outputs"] = std::move(outputs);
  return m;
}

std::string derived_path(const std::string& explicit_path, const std::string& out, const char* suffix) {
  if (!explicit_path.empty()) return explicit_path;
  if (!out.empty()) return out + suffix;
  return {};
}

json check_json(const BoundCheck& c) {
  return json{{"applicable", c.applicable}, {"passed", c.passed}, {"worst_slack", c.worst_slack},
              {"worst_t", c.worst_t}};
}

// --- equilibria -------------------------------------------------------------

struct EquilibriaCommand {
  ParamFlags params;
  std::string out;

  void add(CLI::App* app) {
    params.add(app);
    app->add_option("--out", out, "output path (default: standard output)");
  }

  int run(std::ostream& stdout_stream) const {
    const ModelParams p = params.params();
    json doc;
    doc["command"] = "equilibria";
    doc["params"] = params.to_json();
    json list = json::array();
    for (const auto& eq : equilibria(p)) {
      json e{{"kind", to_string(eq.kind)}, {"point", state_json(eq.point)}, {"stability", to_string(eq.stability)}};
      if (eq.kind == EquilibriumKind::Interior) {
        const auto c = classify_interior(p);
        e["alpha_over_beta"] = c.ratio;
        e["inverse_sqrt3"] = kInverseSqrt3;
        e["ratio_exceeds_threshold"] = c.ratio > kInverseSqrt3;
        e["criterion_stability"] = to_string(c.criterion);
        e["eigen_stability"] = to_string(c.eigen);
        e["eigenvalues"] = json::array({json::array({c.eigenvalues[0].real(), c.eigenvalues[0].imag()}),
                                        json::array({c.eigenvalues[1].real(), c.eigenvalues[1].imag()})});
      }
      list.push_back(std::move(e));
    }
    doc["equilibria"] = std::move(list);
    std::vector<std::string> args;
    params.append_args(args);
    doc["manifest"] = manifest("equilibria", args, json{{"params", params.to_json()}}, json{{"out", out}});
    Sink sink(out, stdout_stream);
    write_json(sink.stream(), doc);
    return kSuccess;
  }
};

// --- bound ------------------------------------------------------------------

struct BoundCommand {
  double r = 0.0;
  double alpha = 0.0;
  std::optional<double> beta;
  double x0 = 0.0;
  double y0 = 0.0;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--r", r, "prey birth rate (> 0)")->required();
    app->add_option("--alpha", alpha, "predator death rate (> 0)")->required();
    app->add_option("--beta", beta, "biomass conversion efficiency (recorded, not used by the bound)");
    app->add_option("--x0", x0, "initial prey density")->required();
    app->add_option("--y0", y0, "initial predator density")->required();
    app->add_option("--out", out, "output path (default: standard output)");
  }

  int run(std::ostream& stdout_stream) const {
    // K(x0) does not involve beta; a placeholder keeps ModelParams valid.
    const ModelParams p = validate_params(r, alpha, beta.value_or(1.0));
    const State s0{x0, y0};
    const auto report = extinction_bound(p, s0);
    json doc;
    doc["command"] = "bound";
    doc["params"] = json{{"r", r}, {"alpha", alpha}, {"beta", number_or_null(beta)}};
    doc["x0"] = x0;
    doc["y0"] = y0;
    doc["k_value"] = report.k_value;
    doc["sufficient"] = report.sufficient;
    doc["t_upper"] = number_or_null(report.t_upper);
    doc["envelope_limit"] = std::sqrt(x0) - y0 / (p.r() + 2.0 * p.alpha());
    std::vector<std::string> args{"--r", format_number(r), "--alpha", format_number(alpha)};
    if (beta) args.insert(args.end(), {"--beta", format_number(*beta)});
    args.insert(args.end(), {"--x0", format_number(x0), "--y0", format_number(y0)});
    doc["manifest"] = manifest("bound", args, json{{"params", doc["params"]}, {"x0", x0}, {"y0", y0}},
                               json{{"out", out}});
    Sink sink(out, stdout_stream);
    write_json(sink.stream(), doc);
    return kSuccess;
  }
};

// --- simulate ---------------------------------------------------------------

struct SimulateCommand {
  ParamFlags params;
  ConfigFlags config;
  double x0 = 0.0;
  double y0 = 0.0;
  std::size_t samples = 0;
  std::string out;
  std::string summary;

  void add(CLI::App* app) {
    params.add(app);
    config.add(app);
    app->add_option("--x0", x0, "initial prey density")->required();
    app->add_option("--y0", y0, "initial predator density")->required();
    app->add_option("--samples", samples, "uniform output grid size (default: one row per accepted step)");
    app->add_flag("--continue-after-extinction", config.cfg.continue_after_extinction,
                  "follow the exact prey-free solution up to --t-max after extinction");
    app->add_option("--out", out, "CSV path (default: standard output)");
    app->add_option("--summary", summary,
                    "JSON summary path (default: <out>.summary.json, or standard error when --out is absent)");
  }

  int run(std::ostream& stdout_stream, std::ostream& err) const {
    const ModelParams p = params.params();
    const State s0{x0, y0};
    validate_state(s0);
    if (samples == 1) throw UsageError("--samples must be 0 (step endpoints) or at least 2");

    std::vector<std::string> args;
    params.append_args(args);
    args.insert(args.end(), {"--x0", format_number(x0), "--y0", format_number(y0)});
    config.append_args(args);
    args.insert(args.end(), {"--samples", std::to_string(samples)});
    if (config.cfg.continue_after_extinction) args.push_back("--continue-after-extinction");

    const std::string summary_path = derived_path(summary, out, ".summary.json");
    json doc;
    doc["command"] = "simulate";

    int code = kSuccess;
    std::optional<Trajectory> traj;
    try {
      traj = integrate(p, s0, config.cfg);
    } catch (const IntegrationFailure& failure) {
      doc["terminal"] = "failure";
      doc["failure"] = to_string(failure.kind());
      doc["failure_time"] = failure.time();
      doc["message"] = failure.what();
      code = kNumericalFailure;
    }

    if (traj) {
      Sink sink(out, stdout_stream);
      auto& os = sink.stream();
      os << "t,x,y,u\n";
      const auto rows = samples >= 2 ? traj->resample(samples) : traj->samples();
      for (const auto& row : rows) {
        os << format_number(row.t) << ',' << format_number(row.state.x) << ',' << format_number(row.state.y) << ','
           << format_number(std::sqrt(row.state.x)) << '\n';
      }

      doc["terminal"] = nullptr;
      doc["t_ext"] = nullptr;
      doc["t_ext_lo"] = nullptr;
      doc["t_ext_hi"] = nullptr;
      doc["t_conv"] = nullptr;
      doc["converged_to"] = nullptr;
      const auto& terminal = traj->terminal();
      if (const auto* e = std::get_if<ExtinctionAt>(&terminal)) {
        doc["terminal"] = "extinction";
        doc["t_ext"] = e->t_ext;
        doc["t_ext_lo"] = e->t_lo;
        doc["t_ext_hi"] = e->t_hi;
        doc["event_slope"] = e->slope;
      } else if (const auto* c = std::get_if<ConvergedTo>(&terminal)) {
        doc["terminal"] = "converged";
        doc["t_conv"] = c->t_conv;
        doc["converged_to"] = json{{"kind", to_string(c->target.kind)}, {"point", state_json(c->target.point)}};
      } else {
        doc["terminal"] = "horizon";
        code = kUndetermined;
      }
      const auto& last = traj->samples().back();
      doc["t_final"] = last.t;
      doc["final_state"] = state_json(last.state);
      const auto& st = traj->stats();
      doc["stats"] = json{{"accepted_steps", st.accepted_steps},
                          {"rejected_steps", st.rejected_steps},
                          {"rhs_evaluations", st.rhs_evaluations},
                          {"event_iterations", st.event_iterations}};
      const auto bound = extinction_bound(p, s0);
      doc["k_value"] = bound.k_value;
      doc["sufficient"] = bound.sufficient;
      doc["t_upper"] = number_or_null(bound.t_upper);
      const auto v = verify_theorem_bounds(p, *traj);
      doc["verification"] = json{{"all_passed", v.all_passed()},
                                 {v.predator_lower.name, check_json(v.predator_lower)},
                                 {v.prey_upper.name, check_json(v.prey_upper)},
                                 {v.envelope.name, check_json(v.envelope)},
                                 {v.extinction.name, check_json(v.extinction)}};
    }

    doc["manifest"] = manifest(
        "simulate", args,
        json{{"params", params.to_json()}, {"initial", state_json(s0)}, {"config", config.to_json()},
             {"samples", samples}},
        json{{"out", out}, {"summary", summary_path}});
    Sink summary_sink(summary_path, out.empty() ? err : stdout_stream);
    write_json(summary_sink.stream(), doc);
    return code;
  }
};

// --- basin ------------------------------------------------------------------

struct BasinCommand {
  ParamFlags params;
  ConfigFlags config;
  Region region{0.05, 1.0, 0.05, 1.0};
  std::size_t nx = 20;
  std::size_t ny = 20;
  unsigned workers = 0;
  std::string out;
  std::string manifest_path;

  void add(CLI::App* app) {
    params.add(app);
    config.add(app);
    app->add_option("--x-min", region.x_min, "grid lower x")->capture_default_str();
    app->add_option("--x-max", region.x_max, "grid upper x")->capture_default_str();
    app->add_option("--y-min", region.y_min, "grid lower y")->capture_default_str();
    app->add_option("--y-max", region.y_max, "grid upper y")->capture_default_str();
    app->add_option("--nx", nx, "grid points along x (>= 2)")->capture_default_str();
    app->add_option("--ny", ny, "grid points along y (>= 2)")->capture_default_str();
    app->add_option("--workers", workers, "worker threads (0: all cores)");
    app->add_option("--out", out, "CSV path (default: standard output)");
    app->add_option("--manifest", manifest_path, "manifest path (default: <out>.manifest.json)");
  }

  int run(std::ostream& stdout_stream) const {
    const ModelParams p = params.params();
    if (nx < 2 || ny < 2) throw UsageError(fmt::format("--nx and --ny must be >= 2 (got {} x {})", nx, ny));
    const BasinGrid grid = grid_sweep(p, region, nx, ny, config.cfg, workers);
    {
      Sink sink(out, stdout_stream);
      auto& os = sink.stream();
      os << "x0,y0,outcome,t_ext\n";
      for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
          const State s = grid.initial_condition(i, j);
          const auto& v = grid.cell(i, j);
          os << format_number(s.x) << ',' << format_number(s.y) << ',' << outcome_name(v) << ',';
          if (const auto* e = std::get_if<FiniteTimeExtinction>(&v)) os << format_number(e->t_ext);
          os << '\n';
        }
      }
    }
    const std::string path = derived_path(manifest_path, out, ".manifest.json");
    if (!path.empty()) {
      std::vector<std::string> args;
      params.append_args(args);
      config.append_args(args);
      args.insert(args.end(), {"--x-min", format_number(region.x_min), "--x-max", format_number(region.x_max),
                               "--y-min", format_number(region.y_min), "--y-max", format_number(region.y_max),
                               "--nx", std::to_string(nx), "--ny", std::to_string(ny), "--workers",
                               std::to_string(workers)});
      json resolved{{"params", params.to_json()},
                    {"config", config.to_json()},
                    {"region", {region.x_min, region.x_max, region.y_min, region.y_max}},
                    {"nx", nx},
                    {"ny", ny},
                    {"workers", workers}};
      Sink sink(path, stdout_stream);
      write_json(sink.stream(), manifest("basin", args, resolved, json{{"out", out}, {"manifest", path}}));
    }
    return kSuccess;
  }
};

// --- separatrix -------------------------------------------------------------

struct SeparatrixCommand {
  ParamFlags params;
  ConfigFlags config;
  double x_min = 0.05;
  double x_max = 0.95;
  std::size_t points = 20;
  SeparatrixOptions opts;
  double y_max = 0.0;
  std::string out;
  std::string manifest_path;

  void add(CLI::App* app) {
    params.add(app);
    config.add(app);
    app->add_option("--x-min", x_min, "first scan line")->capture_default_str();
    app->add_option("--x-max", x_max, "last scan line")->capture_default_str();
    app->add_option("--points", points, "number of scan lines")->capture_default_str();
    app->add_option("--bracket-tol", opts.bracket_tol, "bisection bracket width in y")->capture_default_str();
    app->add_option("--y-lo", opts.y_lo_init, "lower bracket end")->capture_default_str();
    app->add_option("--y-max", y_max, "upper bracket end (default: 1.5 K(x))");
    app->add_option("--workers", opts.workers, "worker threads (0: all cores)");
    app->add_option("--out", out, "CSV path (default: standard output)");
    app->add_option("--manifest", manifest_path, "manifest path (default: <out>.manifest.json)");
  }

  int run(std::ostream& stdout_stream) const {
    const ModelParams p = params.params();
    if (points == 0) throw UsageError("--points must be >= 1");
    std::vector<double> xs(points);
    for (std::size_t i = 0; i < points; ++i) {
      xs[i] = points == 1 ? x_min
              : i + 1 == points
                  ? x_max
                  : x_min + static_cast<double>(i) * ((x_max - x_min) / static_cast<double>(points - 1));
    }
    SeparatrixOptions o = opts;
    if (y_max > 0.0) o.y_max = y_max;
    const auto results = separatrix_scan(p, xs, o, config.cfg);
    {
      Sink sink(out, stdout_stream);
      auto& os = sink.stream();
      os << "x,y_crit,y_lo,y_hi,k_of_x\n";
      for (const auto& res : results) {
        os << format_number(res.x) << ',';
        if (res.point) {
          os << format_number(res.point->y_crit) << ',' << format_number(res.point->y_lo) << ','
             << format_number(res.point->y_hi);
        } else {
          os << ",,";
        }
        os << ',' << format_number(k_threshold(p, res.x)) << '\n';
      }
    }
    const std::string path = derived_path(manifest_path, out, ".manifest.json");
    if (!path.empty()) {
      std::vector<std::string> args;
      params.append_args(args);
      config.append_args(args);
      args.insert(args.end(), {"--x-min", format_number(x_min), "--x-max", format_number(x_max), "--points",
                               std::to_string(points), "--bracket-tol", format_number(opts.bracket_tol), "--y-lo",
                               format_number(opts.y_lo_init), "--workers", std::to_string(opts.workers)});
      if (y_max > 0.0) args.insert(args.end(), {"--y-max", format_number(y_max)});
      json failures = json::array();
      for (const auto& res : results) {
        if (res.failure) {
          failures.push_back(json{{"x", res.x},
                                  {"reason", to_string(*res.failure)},
                                  {"lower_outcome", res.lower_outcome},
                                  {"upper_outcome", res.upper_outcome}});
        }
      }
      json resolved{{"params", params.to_json()},   {"config", config.to_json()},
                    {"x_values", xs},                {"bracket_tol", opts.bracket_tol},
                    {"y_lo", opts.y_lo_init},        {"y_max", y_max > 0.0 ? json(y_max) : json(nullptr)},
                    {"workers", opts.workers},       {"failures", failures}};
      Sink sink(path, stdout_stream);
      write_json(sink.stream(), manifest("separatrix", args, resolved, json{{"out", out}, {"manifest", path}}));
    }
    return kSuccess;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Square-root functional-response predator-prey toolkit", "herdlv"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  EquilibriaCommand equilibria_cmd;
  BoundCommand bound_cmd;
  SimulateCommand simulate_cmd;
  BasinCommand basin_cmd;
  SeparatrixCommand separatrix_cmd;
  std::string replay_manifest;
  std::string replay_out;

  auto* eq_app = app.add_subcommand("equilibria", "list equilibria and their stability (JSON)");
  equilibria_cmd.add(eq_app);
  auto* bound_app = app.add_subcommand("bound", "finite-time extinction threshold K(x0) (JSON)");
  bound_cmd.add(bound_app);
  auto* sim_app = app.add_subcommand("simulate", "integrate one trajectory (CSV + JSON summary)");
  simulate_cmd.add(sim_app);
  auto* basin_app = app.add_subcommand("basin", "classify a grid of initial conditions (CSV)");
  basin_cmd.add(basin_app);
  auto* sep_app = app.add_subcommand("separatrix", "bisect for the coexistence/extinction boundary (CSV)");
  separatrix_cmd.add(sep_app);
  auto* replay_app = app.add_subcommand("replay", "re-run a command from its manifest");
  replay_app->add_option("manifest", replay_manifest, "manifest JSON file")->required();
  replay_app->add_option("--out", replay_out, "override the recorded output path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "herdlv: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (eq_app->parsed()) return equilibria_cmd.run(out);
    if (bound_app->parsed()) return bound_cmd.run(out);
    if (sim_app->parsed()) return simulate_cmd.run(out, err);
    if (basin_app->parsed()) return basin_cmd.run(out);
    if (sep_app->parsed()) return separatrix_cmd.run(out);
    if (replay_app->parsed()) {
      std::ifstream in(replay_manifest);
      if (!in) throw UsageError(fmt::format("cannot read manifest '{}'", replay_manifest));
      json m;
      try {
        m = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError(fmt::format("malformed manifest '{}': {}", replay_manifest, e.what()));
      }
      // Summaries and JSON reports carry their manifest under "manifest".
      if (m.contains("manifest") && m["manifest"].is_object()) m = json(m["manifest"]);
      if (!m.contains("command") || !m.contains("args")) {
        throw UsageError(fmt::format("manifest '{}' lacks command/args", replay_manifest));
      }
      std::vector<std::string> replay{m["command"].get<std::string>()};
      for (const auto& a : m["args"]) replay.push_back(a.get<std::string>());
      const json outputs = m.value("outputs", json::object());
      const std::string recorded_out = outputs.value("out", std::string{});
      const std::string target = replay_out.empty() ? recorded_out : replay_out;
      if (!target.empty()) replay.insert(replay.end(), {"--out", target});
      if (replay_out.empty()) {
        if (const auto s = outputs.value("summary", std::string{}); !s.empty() && s != recorded_out + ".summary.json") {
          replay.insert(replay.end(), {"--summary", s});
        }
        if (const auto s = outputs.value("manifest", std::string{});
            !s.empty() && s != recorded_out + ".manifest.json") {
          replay.insert(replay.end(), {"--manifest", s});
        }
      }
      return run(replay, out, err);
    }
  } catch (const RegimeError& e) {
    err << "herdlv: " << e.what() << '\n';
    return kRegimeViolation;
  } catch (const ParameterError& e) {
    err << "herdlv: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "herdlv: " << e.what() << '\n';
    return kUsage;
  } catch (const IntegrationFailure& e) {
    err << "herdlv: integration failed (" << to_string(e.kind()) << " at t = " << format_number(e.time())
        << "): " << e.what() << '\n';
    return kNumericalFailure;
  }
  err << "herdlv: no command given\n";
  return kUsage;
}

}  // namespace herdlv::cli
