// homspray: batch front end for homogeneous spray computations.
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure,
// 3 parse error (scene file or command line).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "homspray/commands.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2, kParse = 3 };

homspray::Vec to_vec(const std::vector<double>& v) {
  homspray::Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace homspray;
  CLI::App app{"Homogeneous spray geometry: eta, connection, curvature, transport and chart-oracle checks"};
  app.require_subcommand(1);

  std::string scene_path, out_path, format, mode = "linear", base = "geodesic";
  std::vector<double> y, w;
  std::optional<double> t_end, dt;
  std::optional<std::uint64_t> seed;
  int grid = 16, samples = 20;
  unsigned threads = 0;

  using Runner = int (*)(const Scene&, const CommandOptions&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
      {"validate", "structure, reductivity, convexity, invariance and equivariance checks", cmd_validate},
      {"eta", "spray vector field eta(y), connection columns and homogeneity residuals", cmd_eta},
      {"curvature", "Riemann operator with term breakdown, S, flag and Landsberg curvature", cmd_curvature},
      {"geodesic", "integrate y' = -eta(y) with conserved-quantity columns", cmd_geodesic},
      {"transport", "linear or nonlinear parallel transport along a base velocity curve", cmd_transport},
      {"scan", "flag curvature over a grid of flag directions (multithreaded)", cmd_scan},
      {"oracle-compare", "compare homogeneous formulas against the exponential-chart oracle", cmd_oracle_compare},
  };
  std::map<CLI::App*, Runner> runners;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scene", scene_path, "scene JSON file")->required();
    sub->add_option("--out", out_path, "write output to FILE instead of stdout");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "seed for randomized checks (default: the scene seed, else 42)");
    if (name == "eta" || name == "curvature" || name == "geodesic" || name == "transport" || name == "scan")
      sub->add_option("--y", y, "m-vector, comma separated")->delimiter(',')->required();
    if (name == "geodesic" || name == "transport") {
      sub->add_option("--t-end", t_end, "final time (default 1)");
      sub->add_option("--dt", dt, "step size (default from scene)");
    }
    if (name == "transport") {
      sub->add_option("--w", w, "initial transported vector, comma separated")->delimiter(',')->required();
      sub->add_option("--mode", mode, "linear or nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
      sub->add_option("--base", base, "geodesic or constant base velocity")
          ->check(CLI::IsMember({"geodesic", "constant"}));
    }
    if (name == "scan") {
      sub->add_option("--grid", grid, "angles per basis plane (default 16)")->check(CLI::PositiveNumber);
      sub->add_option("--threads", threads, "worker threads (default: hardware concurrency)");
    }
    if (name == "oracle-compare")
      sub->add_option("--samples", samples, "number of seeded y samples (default 20)")->check(CLI::PositiveNumber);
    runners[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  CLI::App* sub = app.get_subcommands().front();
  CommandOptions opts;
  if (!y.empty()) opts.y = to_vec(y);
  if (!w.empty()) opts.w = to_vec(w);
  opts.t_end = t_end;
  opts.dt = dt;
  if (!format.empty()) opts.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  opts.mode = mode;
  opts.base = base;
  opts.grid = grid;
  opts.samples = samples;
  opts.threads = threads;

  std::ostringstream buf;
  int rc = kOk;
  try {
    const Scene scene = load_scene(scene_path);
    opts.seed = seed ? *seed : scene.seed.value_or(42);
    rc = runners.at(sub)(scene, opts, buf);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }

  if (out_path.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return kParse;
    }
    out << buf.str();
  }
  return rc;
}
