#include "sobolmat/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "sobolmat/errors.hpp"
#include "sobolmat/ground_truth.hpp"
#include "sobolmat/gsa.hpp"
#include "sobolmat/rng.hpp"
#include "sobolmat/sampling.hpp"
#include "sobolmat/test_functions.hpp"

namespace sobolmat {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// mnu9 reads only the leading five axes, so truth depends only on those.
AxisSet active_part(const AxisSet& m) {
  std::vector<std::size_t> axes;
  for (std::size_t i : m.axes())
    if (i < testfuncs::kActiveAxes) axes.push_back(i);
  return AxisSet(axes, testfuncs::kActiveAxes);
}

std::string cell_csv(double x) { return std::isnan(x) ? "nan" : format_double(x); }

double parse_double(const std::string& s) {
  if (s == "nan" || s.empty()) return kNaN;
  return std::stod(s);
}

}  // namespace

void BenchmarkGrid::validate() const {
  if (M.empty() || N.empty() || E.empty()) throw DomainError("grid lists must be non-empty");
  for (auto m : M)
    if (m < testfuncs::kActiveAxes) throw DomainError("grid M must be at least 5");
  for (auto n : N)
    if (n < 2) throw DomainError("grid N must be at least 2");
  for (double e : E)
    if (!(e >= 0.0) || !std::isfinite(e)) throw DomainError("grid E must be finite and >= 0");
  for (const auto& s : subsets)
    for (auto m : M)
      for (auto a : s)
        if (a >= m) throw DomainError("scheduled subset axis exceeds M");
}

BenchmarkGrid BenchmarkGrid::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("grid json: ") + e.what());
  }
  BenchmarkGrid g;
  try {
    g.M = j.at("M").get<std::vector<std::size_t>>();
    g.N = j.at("N").get<std::vector<std::size_t>>();
    g.E = j.at("E").get<std::vector<double>>();
    g.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("subsets") && !j["subsets"].is_string())
      g.subsets = j["subsets"].get<std::vector<std::vector<std::size_t>>>();
    else if (j.contains("subsets") && j["subsets"].get<std::string>() != "default")
      throw DomainError("subsets must be \"default\" or a list of axis lists");
    g.fit.restarts = j.value("restarts", g.fit.restarts);
    g.fit.max_optimization_points = j.value("max_optimization_points", g.fit.max_optimization_points);
    g.oracle_points = j.value("oracle_points", g.oracle_points);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("grid json: ") + e.what());
  }
  g.validate();
  return g;
}

BenchmarkGrid BenchmarkGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<AxisSet> BenchmarkGrid::schedule(std::size_t m) const {
  if (subsets.empty()) return default_schedule(m);
  std::vector<AxisSet> out;
  for (const auto& s : subsets) out.emplace_back(s, m);
  return out;
}

std::vector<AxisSet> default_schedule(std::size_t M) {
  std::vector<AxisSet> out;
  for (std::size_t k = 1; k <= M; ++k) out.push_back(AxisSet::prefix(k, M));
  for (std::size_t j = 0; j < M; ++j) {
    auto m = AxisSet::full(M).without(j);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

void TruthTable::prepare(const std::vector<AxisSet>& subsets) {
  for (const auto& m : subsets) {
    const AxisSet key = active_part(m);
    const bool known = std::any_of(entries_.begin(), entries_.end(),
                                   [&](const auto& e) { return e.first == key; });
    if (known) continue;
    if (auto table = testfuncs::tabulated_truth(key)) {
      entries_.emplace_back(key, *table);
      continue;
    }
    const auto f = [](const Matrix& u) { return testfuncs::mnu9(u); };
    std::uint64_t bits = 0;
    for (std::size_t i : key.axes()) bits |= std::uint64_t{1} << i;
    entries_.emplace_back(key, oracle_sobol_matrix(f, testfuncs::kActiveAxes, key, points_,
                                                   derive_seed(seed_, bits)));
  }
}

const Matrix& TruthTable::at(const AxisSet& m) const {
  const AxisSet key = active_part(m);
  for (const auto& e : entries_)
    if (e.first == key) return e.second;
  throw DomainError("no ground truth prepared for subset " + m.label());
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t M, std::size_t N, double E) {
  std::uint64_t s = derive_seed(master, M);
  s = derive_seed(s, N);
  return derive_seed(s, std::bit_cast<std::uint64_t>(E));
}

std::array<CellResult, 2> run_cell(std::size_t M, std::size_t N, double E, std::uint64_t seed,
                                   const std::vector<AxisSet>& schedule, const TruthTable& truth,
                                   const FitOptions& fit, const MomentOptions& moments) {
  std::array<CellResult, 2> out;
  for (int f = 0; f < 2; ++f) {
    out[f].M = M;
    out[f].N = N;
    out[f].E = E;
    out[f].fold = f;
  }
  DesignMatrix design;
  design.inputs = latin_hypercube(2 * N, M, derive_seed(seed, 1));
  const auto standardized = testfuncs::standardize(testfuncs::mnu9(design.inputs));
  design.outputs = testfuncs::add_noise(standardized.values, {E, derive_seed(seed, 2)});
  design.seed = seed;
  design.noise = E;
  auto [first, second] = split_two_fold(design, derive_seed(seed, 3));

  for (int f = 0; f < 2; ++f) {
    CellResult& cell = out[f];
    const DesignMatrix& train = f == 0 ? first : second;
    const DesignMatrix& held = f == 0 ? second : first;
    try {
      FitOptions options = fit;
      options.seed = derive_seed(seed, 4 + static_cast<std::uint64_t>(f));
      const Surrogate s = Surrogate::fit(train, options);
      const auto v = s.validate(held);
      for (std::size_t l = 0; l < s.output_dims(); ++l)
        cell.validation.push_back({l, v.rmse[l], v.mean_sd[l]});
      const auto reports = sobol_reports(s, schedule, moments);
      const auto kept = filter_reports(reports);
      cell.removed = kept.removed;
      for (const auto& r : reports) {
        const Matrix& t = truth.at(r.subset);
        for (std::size_t l = 0; l < static_cast<std::size_t>(r.S.rows()); ++l)
          for (std::size_t lp = 0; lp < static_cast<std::size_t>(r.S.cols()); ++lp) {
            ElementResult e;
            e.subset = r.subset;
            e.l = l;
            e.lprime = lp;
            e.S_est = r.S(l, lp);
            e.S_true = t(l, lp);
            e.A = std::abs(e.S_est - e.S_true);
            e.T = r.T(l, lp);
            e.score = e.T > 0.0 ? e.A / e.T : kNaN;
            e.filtered = !kept.keep[l] || !kept.keep[lp];
            cell.elements.push_back(e);
          }
      }
    } catch (const Error& e) {
      cell.failed = true;
      cell.failure = e.what();
      cell.elements.clear();
    }
  }
  return out;
}

std::vector<CellResult> run_grid(const BenchmarkGrid& grid, int workers) {
  grid.validate();
  struct Job {
    std::size_t M, N;
    double E;
  };
  std::vector<Job> jobs;
  std::map<std::size_t, std::vector<AxisSet>> schedules;
  TruthTable truth(grid.oracle_points, derive_seed(grid.seed, 0x7275));
  for (auto M : grid.M) {
    schedules[M] = grid.schedule(M);
    truth.prepare(schedules[M]);
    for (auto N : grid.N)
      for (double E : grid.E) jobs.push_back({M, N, E});
  }

  std::vector<CellResult> results(2 * jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& j = jobs[i];
        auto pair = run_cell(j.M, j.N, j.E, cell_seed(grid.seed, j.M, j.N, j.E), schedules.at(j.M),
                             truth, grid.fit, grid.moments);
        results[2 * i] = std::move(pair[0]);
        results[2 * i + 1] = std::move(pair[1]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::stable_sort(results.begin(), results.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.M, a.N, a.E, a.fold) < std::tie(b.M, b.N, b.E, b.fold);
  });
  return results;
}

std::vector<ElementRow> flatten(const std::vector<CellResult>& cells) {
  std::vector<ElementRow> rows;
  for (const auto& c : cells)
    for (const auto& e : c.elements)
      rows.push_back({c.M, c.N, c.E, c.fold, e.subset.label(), e.l, e.lprime, e.S_est, e.S_true,
                      e.A, e.T, e.score, e.filtered});
  return rows;
}

void write_cells_csv(std::ostream& out, const std::vector<ElementRow>& rows) {
  out << "M,N,E,fold,m,l,lprime,S_est,S_true,A,T,score,filtered\n";
  for (const auto& r : rows)
    out << r.M << ',' << r.N << ',' << format_double(r.E) << ',' << r.fold << ',' << r.m << ','
        << r.l << ',' << r.lprime << ',' << cell_csv(r.S_est) << ',' << cell_csv(r.S_true) << ','
        << cell_csv(r.A) << ',' << cell_csv(r.T) << ',' << cell_csv(r.score) << ','
        << (r.filtered ? "true" : "false") << '\n';
}

std::vector<ElementRow> read_cells_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("M,N,E,fold,m,l,lprime", 0) != 0)
    throw DomainError("cells.csv: missing header");
  std::vector<ElementRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() != 13) throw DomainError("cells.csv: expected 13 fields in '" + line + "'");
    try {
      rows.push_back({std::stoul(f[0]), std::stoul(f[1]), parse_double(f[2]), std::stoi(f[3]), f[4],
                      std::stoul(f[5]), std::stoul(f[6]), parse_double(f[7]), parse_double(f[8]),
                      parse_double(f[9]), parse_double(f[10]), parse_double(f[11]), f[12] == "true"});
    } catch (const std::logic_error&) {
      throw DomainError("cells.csv: bad number in '" + line + "'");
    }
  }
  return rows;
}

void write_validation_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "M,N,E,fold,l,rmse,sd\n";
  for (const auto& c : cells)
    for (const auto& v : c.validation)
      out << c.M << ',' << c.N << ',' << format_double(c.E) << ',' << c.fold << ',' << v.l << ','
          << cell_csv(v.rmse) << ',' << cell_csv(v.sd) << '\n';
}

void write_removals_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "fold,M,N,E,l\n";
  for (const auto& c : cells)
    for (auto l : c.removed)
      out << c.fold << ',' << c.M << ',' << c.N << ',' << format_double(c.E) << ',' << l << '\n';
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Heatmap aggregate(const std::vector<ElementRow>& rows, Metric metric, double quantile,
                  std::optional<std::size_t> M) {
  std::set<double> es, ns;
  std::map<std::pair<double, double>, std::vector<double>> pool;
  for (const auto& r : rows) {
    if (M && r.M != *M) continue;
    es.insert(r.E);
    ns.insert(static_cast<double>(r.N));
    if (r.filtered) continue;
    const double x = metric == Metric::A ? r.A : r.score;
    if (std::isfinite(x)) pool[{r.E, static_cast<double>(r.N)}].push_back(x);
  }
  Heatmap h;
  std::vector<double> e_order(es.begin(), es.end());  // ascending E is descending -log10 E
  std::vector<double> n_order(ns.begin(), ns.end());
  for (double e : e_order) h.row_keys.push_back(-std::log10(e));
  for (double n : n_order) h.col_keys.push_back(std::log10(n));
  h.values = Matrix::Constant(static_cast<Eigen::Index>(e_order.size()),
                              static_cast<Eigen::Index>(n_order.size()), kNaN);
  for (std::size_t i = 0; i < e_order.size(); ++i)
    for (std::size_t j = 0; j < n_order.size(); ++j) {
      auto it = pool.find({e_order[i], n_order[j]});
      if (it == pool.end()) {
        ++h.empty_cells;
        continue;
      }
      h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          nearest_rank(it->second, quantile);
    }
  return h;
}

void write_heatmap_csv(std::ostream& out, const Heatmap& h) {
  out << "neg_log10_E";
  for (double c : h.col_keys) out << ',' << format_double(c);
  out << '\n';
  for (std::size_t i = 0; i < h.row_keys.size(); ++i) {
    out << format_double(h.row_keys[i]);
    for (std::size_t j = 0; j < h.col_keys.size(); ++j)
      out << ',' << cell_csv(h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

void write_heatmaps(const std::string& dir, const std::vector<ElementRow>& rows) {
  std::filesystem::create_directories(dir);
  std::set<std::size_t> dims;
  for (const auto& r : rows) dims.insert(r.M);
  const std::pair<Metric, const char*> metrics[] = {{Metric::A, "A"}, {Metric::score, "score"}};
  const std::pair<double, const char*> stats[] = {{0.5, "median"}, {0.9, "q90"}};
  auto emit = [&](std::optional<std::size_t> M, const std::string& prefix) {
    for (auto [metric, mname] : metrics)
      for (auto [q, qname] : stats) {
        std::ofstream out(dir + "/" + prefix + mname + "_" + qname + ".csv");
        if (!out) throw IoError("cannot write heatmap into " + dir);
        write_heatmap_csv(out, aggregate(rows, metric, q, M));
      }
  };
  emit(std::nullopt, "heatmap_");
  if (dims.size() > 1)
    for (auto M : dims) emit(M, "heatmap_M" + std::to_string(M) + "_");
}

}  // namespace sobolmat
