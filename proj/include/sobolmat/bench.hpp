#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sobolmat/axis_set.hpp"
#include "sobolmat/moments.hpp"
#include "sobolmat/surrogate.hpp"
#include "sobolmat/tensor.hpp"

namespace sobolmat {

/// Sweep over (M, N, E) with two folds per cell.
struct BenchmarkGrid {
  std::vector<std::size_t> M;
  std::vector<std::size_t> N;
  std::vector<double> E;
  std::uint64_t seed = 1;
  /// Explicit subsets per cell; empty means the default schedule.
  std::vector<std::vector<std::size_t>> subsets;
  FitOptions fit;
  MomentOptions moments;
  /// Scrambled Sobol' points for ground truth that no table covers.
  std::size_t oracle_points = std::size_t{1} << 18;

  /// Throws DomainError on empty lists, N < 2, E < 0 or M < 5.
  void validate() const;
  /// {"M":[...],"N":[...],"E":[...],"seed":1,"subsets":"default"|[[0],[0,1]],
  ///  "restarts":8,"max_optimization_points":512,"oracle_points":262144}
  static BenchmarkGrid from_json(const std::string& text);
  static BenchmarkGrid load(const std::string& path);
  /// Subsets scheduled for ambient dimension M.
  std::vector<AxisSet> schedule(std::size_t M) const;
};

/// Leading prefixes (0..k) for k = 1..M, then the full set minus one axis
/// for each axis not already covered.
std::vector<AxisSet> default_schedule(std::size_t M);

/// One closed Sobol' matrix element of one fold.
struct ElementResult {
  AxisSet subset;
  std::size_t l = 0, lprime = 0;
  double S_est = 0.0, S_true = 0.0;
  double A = 0.0;      ///< |S_est - S_true|
  double T = 0.0;      ///< standard error, NaN when unavailable
  double score = 0.0;  ///< A / T, NaN unless T > 0
  bool filtered = false;
};

struct OutputValidation {
  std::size_t l = 0;
  double rmse = 0.0;
  double sd = 0.0;  ///< mean predictive standard deviation
};

struct CellResult {
  std::size_t M = 0, N = 0;
  double E = 0.0;
  int fold = 0;
  std::vector<ElementResult> elements;
  std::vector<OutputValidation> validation;
  std::vector<std::size_t> removed;  ///< outputs dropped by the range filter
  bool failed = false;
  std::string failure;
};

/// Ground-truth closed Sobol' matrices of mnu9 keyed by subset; tables where
/// they apply, the oracle otherwise.
class TruthTable {
 public:
  explicit TruthTable(std::size_t oracle_points = std::size_t{1} << 18, std::uint64_t seed = 0)
      : points_(oracle_points), seed_(seed) {}
  /// Computes (or looks up) every subset up front so lookups are read-only.
  void prepare(const std::vector<AxisSet>& subsets);
  const Matrix& at(const AxisSet& m) const;

 private:
  std::size_t points_;
  std::uint64_t seed_;
  std::vector<std::pair<AxisSet, Matrix>> entries_;
};

/// Seed of the cell (M, N, E) under the grid's master seed.
std::uint64_t cell_seed(std::uint64_t master, std::size_t M, std::size_t N, double E);

/// Both folds of one grid cell. Numerical failures are flagged, not thrown.
std::array<CellResult, 2> run_cell(std::size_t M, std::size_t N, double E, std::uint64_t seed,
                                   const std::vector<AxisSet>& schedule, const TruthTable& truth,
                                   const FitOptions& fit = {}, const MomentOptions& moments = {});

/// Every cell of the grid on `workers` threads, sorted by (M, N, E, fold).
std::vector<CellResult> run_grid(const BenchmarkGrid& grid, int workers = 1);

/// Flat row of cells.csv.
struct ElementRow {
  std::size_t M = 0, N = 0;
  double E = 0.0;
  int fold = 0;
  std::string m;
  std::size_t l = 0, lprime = 0;
  double S_est = 0.0, S_true = 0.0, A = 0.0, T = 0.0, score = 0.0;
  bool filtered = false;
};

std::vector<ElementRow> flatten(const std::vector<CellResult>& cells);
void write_cells_csv(std::ostream& out, const std::vector<ElementRow>& rows);
std::vector<ElementRow> read_cells_csv(std::istream& in);
void write_validation_csv(std::ostream& out, const std::vector<CellResult>& cells);
/// fold,M,N,E,l per removed output.
void write_removals_csv(std::ostream& out, const std::vector<CellResult>& cells);

/// Nearest-rank quantile: the ceil(q n)-th smallest value. NaN when empty.
double nearest_rank(std::vector<double> values, double q);

/// Rows are -log10 E descending, columns log10 N ascending. NaN marks an
/// empty cell.
struct Heatmap {
  std::vector<double> row_keys;  ///< -log10 E
  std::vector<double> col_keys;  ///< log10 N
  Matrix values;
  std::size_t empty_cells = 0;
};

enum class Metric { A, score };

/// Pools folds, elements and subsets of surviving rows per (N, E).
/// `M` restricts to one dimension; nullopt pools every M.
Heatmap aggregate(const std::vector<ElementRow>& rows, Metric metric, double quantile,
                  std::optional<std::size_t> M = std::nullopt);
void write_heatmap_csv(std::ostream& out, const Heatmap& h);

/// Writes heatmap_{A,score}_{median,q90}.csv pooled and per M into `dir`.
void write_heatmaps(const std::string& dir, const std::vector<ElementRow>& rows);

}  // namespace sobolmat
