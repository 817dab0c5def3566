#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <complex>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "hrigame/errors.hpp"
#include "hrigame/scenario_io.hpp"
#include "live_server.hpp"

namespace hrigame {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

void print_matrix(std::ostream& out, const char* label, const Eigen::MatrixXd& m) {
  out << label << ":\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << " ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
    out << '\n';
  }
}

void print_vector(std::ostream& out, const char* label, const Eigen::VectorXd& v) {
  out << label << ':';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
  out << '\n';
}

std::vector<std::complex<double>> sorted_eigenvalues(const Eigen::MatrixXd& m) {
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

void cmd_gains(const fs::path& path, std::ostream& out) {
  const Scenario s = load_scenario(path).scenario;
  const StateSpace ss = build_state_space(s.plant);
  const GameSolution sol = synthesize(s.controller, ss, s.alpha, s.human, s.robot, s.refs);
  const Eigen::Index n = s.plant.dofs();

  out << "controller: " << to_string(sol.kind) << '\n';
  out << "alpha: " << format_double(s.alpha) << '\n';
  print_matrix(out, "K_h", sol.k_h);
  print_matrix(out, "K_r", sol.k_r);
  if (sol.z_ref) print_vector(out, "z_ref", *sol.z_ref);
  print_vector(out, "ref_h", sol.ref_h);
  print_vector(out, "ref_r", sol.ref_r);

  const ImpedanceEquivalent eq = impedance_equivalent(s.plant, sol.k_r, sol.ref_r.head(n));
  out << "equivalent impedance:\n";
  print_matrix(out, "  damping", eq.params.damping);
  print_matrix(out, "  stiffness", eq.params.stiffness);
  print_vector(out, "  forcing", eq.forcing + sol.k_r.rightCols(n) * sol.ref_r.tail(n));

  if (sol.residuals.size() == 1) {
    out << "are_residual: " << format_double(sol.residuals[0]) << '\n';
  } else {
    out << "are_residual_h: " << format_double(sol.residuals.at(0)) << '\n';
    out << "are_residual_r: " << format_double(sol.residuals.at(1)) << '\n';
  }
  out << "closed_loop_eigenvalues:";
  for (const auto& ev : sorted_eigenvalues(sol.closed_loop(ss))) {
    out << ' ' << format_double(ev.real());
    if (ev.imag() != 0.0) out << (ev.imag() > 0 ? "+" : "") << format_double(ev.imag()) << 'i';
  }
  out << '\n';
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  writer(file);
  file.flush();
  if (!file) throw IoError("failed writing " + path.string());
}

void cmd_simulate(const fs::path& path, const fs::path& out_dir, std::ostream& out) {
  const Scenario s = load_scenario(path).scenario;
  const Trajectory traj = run_closed_loop(s);
  const CostReport costs = cost_report(traj, s);
  make_dir(out_dir);
  write_file(out_dir / "trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, traj); });
  write_file(out_dir / "costs.csv", [&](std::ostream& f) { write_costs_csv(f, costs); });
  out << "wrote " << traj.size() << " samples to " << (out_dir / "trajectory.csv").string() << '\n';
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || end != item.data() + item.size()) {
        throw UsageError("--values: '" + item + "' is not a number");
      }
      values.push_back(v);
    }
    pos = comma + 1;
  }
  return values;
}

int cmd_sweep(const fs::path& path, const std::string& param_name, const std::string& values_text,
              bool values_given, const fs::path& out_dir, std::ostream& out) {
  const ScenarioFile file = load_scenario(path);
  SweepSpec spec;
  if (file.sweep) spec = *file.sweep;
  if (!param_name.empty()) {
    try {
      spec.param = parse_sweep_parameter(param_name);
    } catch (const ValidationError& e) {
      throw UsageError(std::string("--param: ") + e.what());
    }
  }
  if (values_given) spec.values = parse_values(values_text);
  if (spec.values.empty()) {
    throw UsageError("sweep needs values: pass --values or add a sweep block to the scenario");
  }

  const std::vector<SweepResult> results = sweep(file.scenario, spec.param, spec.values);
  make_dir(out_dir);
  int code = kExitOk;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const SweepResult& r = results[k];
    if (r.ok()) {
      write_file(out_dir / ("trajectory_" + std::to_string(k) + ".csv"),
                 [&](std::ostream& f) { write_trajectory_csv(f, *r.trajectory); });
      continue;
    }
    out << "value " << format_double(r.value) << " failed: " << r.error << '\n';
    bool invalid = false;
    try {
      with_parameter(file.scenario, spec.param, r.value).validate();
    } catch (const ValidationError&) {
      invalid = true;
    }
    code = std::max(code, invalid ? int{kExitValidation} : int{kExitSolver});
  }
  write_file(out_dir / "summary.csv", [&](std::ostream& f) { write_summary_csv(f, results); });
  out << "wrote " << results.size() << " runs to " << out_dir.string() << '\n';
  return code;
}

int cmd_serve(const ServerOptions& options, std::ostream& out) {
  LiveServer server(options);
  server.listen();
  out << "listening on http://" << options.address << ':' << server.port() << std::endl;
  server.run();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-player game controllers for physical human-robot interaction", "hrigame"};
  app.require_subcommand(1);

  fs::path scenario;
  fs::path out_dir;
  std::string param;
  std::string values;

  auto* gains = app.add_subcommand("gains", "Print synthesized gains, references and residuals");
  gains->add_option("--scenario", scenario, "Scenario file")->required();

  auto* simulate = app.add_subcommand("simulate", "Run one closed loop and write CSV files");
  simulate->add_option("--scenario", scenario, "Scenario file")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one closed loop per parameter value");
  sweep_cmd->add_option("--scenario", scenario, "Scenario file")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
  sweep_cmd->add_option("--param", param, "alpha, q_rr_scale or r_r (default: the file's sweep)");
  auto* values_opt =
      sweep_cmd->add_option("--values", values, "Comma-separated values (default: the file's)");

  ServerOptions server;
  int port = server.port;
  std::string scenario_dir = server.scenario_dir.string();
  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP and WebSocket");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--address", server.address, "Listen address")->capture_default_str();
  serve->add_option("--scenarios", scenario_dir, "Scenario directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gains) {
      cmd_gains(scenario, out);
      return kExitOk;
    }
    if (*simulate) {
      cmd_simulate(scenario, out_dir, out);
      return kExitOk;
    }
    if (*sweep_cmd) return cmd_sweep(scenario, param, values, values_opt->count() > 0, out_dir, out);
    server.port = static_cast<std::uint16_t>(port);
    server.scenario_dir = scenario_dir;
    server.stop_on_signal = true;
    return cmd_serve(server, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace hrigame
