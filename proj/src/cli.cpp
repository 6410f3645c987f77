#include "sobolmat/cli.hpp"

#include <algorithm>
#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sobolmat/bench.hpp"
#include "sobolmat/errors.hpp"
#include "sobolmat/ground_truth.hpp"
#include "sobolmat/gsa.hpp"
#include "sobolmat/rng.hpp"
#include "sobolmat/sampling.hpp"
#include "sobolmat/test_functions.hpp"

namespace sobolmat {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int run_truth(const std::string& out_dir, std::size_t oracle_points, std::uint64_t seed) {
  fs::create_directories(out_dir);
  const std::size_t dims = testfuncs::kActiveAxes;
  for (std::size_t k = dims; k >= 1; --k) {
    const Matrix table = testfuncs::closed_table(k);
    write_csv((fs::path(out_dir) / ("s" + std::to_string(k) + ".csv")).string(), table);
    if (oracle_points == 0) continue;
    const auto f = [](const Matrix& u) { return testfuncs::mnu9(u); };
    const Matrix est = oracle_sobol_matrix(f, dims, AxisSet::prefix(k, dims), oracle_points, seed);
    write_csv((fs::path(out_dir) / ("oracle_s" + std::to_string(k) + ".csv")).string(), est);
    std::cout << "s" << k << ": max |oracle - table| = " << (est - table).cwiseAbs().maxCoeff() << '\n';
  }
  return 0;
}

int run_sample(std::size_t n, std::size_t m, double noise, std::uint64_t seed, const std::string& out_dir) {
  if (n < 2) throw DomainError("--n must be at least 2");
  if (m < testfuncs::kActiveAxes) throw DomainError("--m must be at least 5");
  if (!(noise >= 0.0)) throw DomainError("--noise must be >= 0");
  DesignMatrix d;
  d.inputs = latin_hypercube(n, m, derive_seed(seed, 1));
  d.outputs = testfuncs::add_noise(testfuncs::standardize(testfuncs::mnu9(d.inputs)).values,
                                   {noise, derive_seed(seed, 2)});
  fs::create_directories(out_dir);
  auto out = open_out(fs::path(out_dir) / "design.csv");
  write_design_csv(out, d);
  return 0;
}

int run_fit(const std::string& design_path, const std::string& out_dir, const FitOptions& options) {
  const DesignMatrix d = read_design_csv(design_path);
  const Surrogate s = Surrogate::fit(d, options);
  fs::create_directories(out_dir);
  open_out(fs::path(out_dir) / "model.json") << s.to_json();
  for (std::size_t l = 0; l < s.output_dims(); ++l) {
    const auto& g = s.output(l);
    std::cout << "output " << l << ": log likelihood " << g.diagnostics.log_likelihood
              << ", signal " << g.params.signal_variance << ", noise " << g.params.noise_variance
              << '\n';
  }
  return 0;
}

std::vector<AxisSet> parse_subsets(const std::vector<std::string>& specs, std::size_t dims) {
  std::vector<AxisSet> out;
  for (const auto& spec : specs) {
    // lists are separated by ';' or whitespace, so "0 0,1" and "0;0,1" agree
    std::string flat = spec;
    std::replace(flat.begin(), flat.end(), ';', ' ');
    std::stringstream ss(flat);
    for (std::string part; ss >> part;) out.push_back(AxisSet::parse(part, dims));
  }
  if (out.empty())
    for (std::size_t k = 1; k <= dims; ++k) out.push_back(AxisSet::prefix(k, dims));
  return out;
}

int run_gsa(const std::string& model_path, const std::vector<std::string>& subset_specs,
            const std::string& out_dir, const MomentOptions& options) {
  const Surrogate s = Surrogate::from_json(read_file(model_path));
  const auto subsets = parse_subsets(subset_specs, s.input_dims());
  const auto reports = sobol_reports(s, subsets, options);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  json diag = json::array();
  for (const auto& r : reports) {
    const std::string tag = r.subset.label();
    write_csv((dir / ("S_" + tag + ".csv")).string(), r.S);
    write_csv((dir / ("S_total_" + tag + ".csv")).string(), r.S_total);
    write_csv((dir / ("T_" + tag + ".csv")).string(), r.T);
    write_csv((dir / ("T_total_" + tag + ".csv")).string(), r.T_total);
    write_csv((dir / ("V_" + tag + ".csv")).string(), r.V);
    diag.push_back({{"subset", r.subset.axes()},
                    {"integration_error", r.diagnostics.integration_error},
                    {"relative_spread", finite_or_null(r.diagnostics.relative_spread)},
                    {"clamped_q", r.diagnostics.clamped_q},
                    {"negative_q", r.diagnostics.negative_q}});
  }
  const auto kept = filter_reports(reports);
  json doc = {{"D", std::vector<double>(reports.front().D.data(),
                                        reports.front().D.data() + reports.front().D.size())},
              {"subsets", diag},
              {"filter_removed", kept.removed}};
  open_out(dir / "diagnostics.json") << doc.dump(2) << '\n';
  return 0;
}

int run_bench(const std::string& grid_path, std::optional<std::uint64_t> seed, int workers,
              const std::string& out_dir) {
  BenchmarkGrid grid = BenchmarkGrid::load(grid_path);
  if (seed) grid.seed = *seed;
  const auto start = std::chrono::steady_clock::now();
  const auto cells = run_grid(grid, workers);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const auto rows = flatten(cells);
  {
    auto out = open_out(dir / "cells.csv");
    write_cells_csv(out, rows);
  }
  {
    auto out = open_out(dir / "validation.csv");
    write_validation_csv(out, cells);
  }
  {
    auto out = open_out(dir / "removals.csv");
    write_removals_csv(out, cells);
  }
  std::size_t failed = 0, removed = 0, filtered = 0;
  {
    auto out = open_out(dir / "failures.csv");
    out << "M,N,E,fold,reason\n";
    for (const auto& c : cells) {
      removed += c.removed.size();
      if (!c.failed) continue;
      ++failed;
      std::string reason = c.failure;
      for (char& ch : reason)
        if (ch == ',' || ch == '\n') ch = ' ';
      out << c.M << ',' << c.N << ',' << format_double(c.E) << ',' << c.fold << ',' << reason << '\n';
    }
  }
  for (const auto& r : rows) filtered += r.filtered;
  write_heatmaps(out_dir, rows);
  json summary = {{"cells", cells.size()},     {"failed_cells", failed},
                  {"elements", rows.size()},   {"filtered_elements", filtered},
                  {"removed_outputs", removed}, {"seed", grid.seed},
                  {"workers", workers},        {"elapsed_seconds", elapsed}};
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
  std::cout << rows.size() << " elements from " << cells.size() << " folds (" << failed
            << " failed, " << filtered << " filtered) in " << elapsed << " s\n";
  return 0;
}

int run_report(const std::string& cells_path, const std::string& out_dir) {
  std::ifstream in(cells_path);
  if (!in) throw IoError("cannot open " + cells_path);
  const auto rows = read_cells_csv(in);
  write_heatmaps(out_dir, rows);
  const std::pair<Metric, const char*> metrics[] = {{Metric::A, "A"}, {Metric::score, "A/T"}};
  for (auto [metric, name] : metrics)
    for (double q : {0.5, 0.9}) {
      const Heatmap h = aggregate(rows, metric, q);
      std::cout << name << (q == 0.5 ? " median" : " q90") << " (rows -log10 E, cols log10 N)\n";
      write_heatmap_csv(std::cout, h);
      if (h.empty_cells) std::cout << "empty cells: " << h.empty_cells << '\n';
    }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Sobol' matrices of multi-output Gaussian-process surrogates"};
  app.require_subcommand(1);

  std::string out_dir;
  std::size_t oracle_points = 0;
  std::uint64_t seed = 0;
  auto* truth = app.add_subcommand("truth", "write the tabulated closed Sobol' matrices of mnu9");
  truth->add_option("--out", out_dir, "output directory")->required();
  truth->add_option("--oracle-points", oracle_points, "also estimate each table with this many points");
  truth->add_option("--seed", seed, "oracle seed");

  std::size_t n = 0, m = 5;
  double noise = 0.0;
  auto* sample = app.add_subcommand("sample", "Latin hypercube design of the noisy mnu9 model");
  sample->add_option("--n", n, "rows")->required();
  sample->add_option("--m", m, "input dimensions (>= 5)");
  sample->add_option("--noise", noise, "noise-to-signal ratio E");
  sample->add_option("--seed", seed, "seed");
  sample->add_option("--out", out_dir, "output directory")->required();

  std::string design_path;
  FitOptions fit_options;
  auto* fit = app.add_subcommand("fit", "fit one GP per output column");
  fit->add_option("--design", design_path, "design CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out_dir, "output directory")->required();
  fit->add_option("--restarts", fit_options.restarts, "optimizer restarts");
  fit->add_option("--seed", fit_options.seed, "restart seed");
  fit->add_option("--max-optimization-points", fit_options.max_optimization_points,
                  "rows used to tune hyperparameters");
  fit->add_option("--threads", fit_options.threads, "worker threads");

  std::string model_path;
  std::vector<std::string> subset_specs;
  MomentOptions moment_options;
  std::string method = "closed";
  auto* gsa = app.add_subcommand("gsa", "Sobol' matrices and their standard errors");
  gsa->add_option("--model", model_path, "surrogate JSON")->required()->check(CLI::ExistingFile);
  gsa->add_option("--subsets", subset_specs, "axis lists such as 0 0,1 or \"0;0,1\"");
  gsa->add_option("--out", out_dir, "output directory")->required();
  gsa->add_option("--method", method, "closed or quadrature")
      ->check(CLI::IsMember({"closed", "quadrature"}));
  gsa->add_option("--kernel-offset", moment_options.kernel_offset, "constant added to the kernel");
  gsa->add_option("--threads", moment_options.threads, "worker threads");

  std::string grid_path;
  std::optional<std::uint64_t> bench_seed;
  int workers = 1;
  auto* bench = app.add_subcommand("bench", "benchmark grid over (M, N, E) with two folds");
  bench->add_option("--grid", grid_path, "grid JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--seed", bench_seed, "overrides the grid seed");
  bench->add_option("--workers", workers, "cells run concurrently")->check(CLI::PositiveNumber);
  bench->add_option("--out", out_dir, "output directory")->required();

  std::string cells_path;
  auto* report = app.add_subcommand("report", "heat maps from an existing cells.csv");
  report->add_option("--cells", cells_path, "cells.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*truth) return run_truth(out_dir, oracle_points, seed);
    if (*sample) return run_sample(n, m, noise, seed, out_dir);
    if (*fit) return run_fit(design_path, out_dir, fit_options);
    if (*gsa) {
      moment_options.method = method == "closed" ? IntegrationMethod::closed_form
                                                 : IntegrationMethod::quadrature;
      return run_gsa(model_path, subset_specs, out_dir, moment_options);
    }
    if (*bench) return run_bench(grid_path, bench_seed, workers, out_dir);
    if (*report) return run_report(cells_path, out_dir);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const OddRowCount& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sobolmat
