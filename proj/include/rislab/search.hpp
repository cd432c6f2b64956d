#pragma once

// Codebook search algorithms over the black-box RSSI oracle.
//
// run_alg1 is the influential-element iterative search: an independent row
// sweep and column sweep from the all-off configuration, a merge that
// freezes the cells on which both sweeps agree, and a per-element
// refinement of the remainder. run_benchmark1 sweeps every element
// individually; run_benchmark2 sweeps rows and then columns on top of the
// trained rows. All sweeps commit on strict RSSI improvement only; ties
// keep the incumbent.
//
// Query counting convention: every oracle measure() counts, including the
// initial all-off measurement and the re-measure of the merged partial
// configuration. The exact totals are
//   bench1: 1 + 4N      bench2: 1 + 4R + 4C      alg1: 2 + 4R + 4C + 4(N-I)
// and predicted_queries() returns them in closed form.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rislab/core.hpp"
#include "rislab/oracle.hpp"
#include "rislab/rng.hpp"

#include <nlohmann/json.hpp>

namespace rislab {

enum class AlgorithmId { kAlg1, kBench1, kBench2, kRandom, kExhaustive };

inline std::string to_string(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::kAlg1: return "alg1";
    case AlgorithmId::kBench1: return "bench1";
    case AlgorithmId::kBench2: return "bench2";
    case AlgorithmId::kRandom: return "random";
    case AlgorithmId::kExhaustive: return "exhaustive";
  }
  throw std::logic_error("unreachable algorithm id");
}

inline AlgorithmId algorithm_from_string(const std::string& s) {
  if (s == "alg1") return AlgorithmId::kAlg1;
  if (s == "bench1") return AlgorithmId::kBench1;
  if (s == "bench2") return AlgorithmId::kBench2;
  if (s == "random") return AlgorithmId::kRandom;
  if (s == "exhaustive") return AlgorithmId::kExhaustive;
  throw std::invalid_argument("unknown algorithm id: " + s);
}

struct AcceptedPoint {
  std::uint64_t query_index;  // 1-based oracle query index
  double rssi_dbm;
  friend bool operator==(const AcceptedPoint& a, const AcceptedPoint& b) {
    return a.query_index == b.query_index && a.rssi_dbm == b.rssi_dbm;
  }
};

struct SearchReport {
  AlgorithmId algorithm_id = AlgorithmId::kAlg1;
  Codebook final_codebook;
  double final_rssi_dbm = 0.0;
  std::optional<double> initial_rssi_dbm;  // all-off measurement, when the algorithm takes one
  std::uint64_t queries_used = 0;
  std::vector<AcceptedPoint> accepted_trajectory;
  std::optional<Codebook> phi_h;        // alg1 / bench2
  std::optional<Codebook> phi_v;        // alg1 / bench2
  int influential_count = 0;            // alg1 only
  std::vector<std::uint8_t> influential_mask;  // rows*cols row-major, alg1 only

  explicit SearchReport(Codebook cb) : final_codebook(std::move(cb)) {}
};

inline bool operator==(const SearchReport& a, const SearchReport& b) {
  return a.algorithm_id == b.algorithm_id && a.final_codebook == b.final_codebook &&
         a.final_rssi_dbm == b.final_rssi_dbm && a.initial_rssi_dbm == b.initial_rssi_dbm &&
         a.queries_used == b.queries_used && a.accepted_trajectory == b.accepted_trajectory &&
         a.phi_h == b.phi_h && a.phi_v == b.phi_v && a.influential_count == b.influential_count &&
         a.influential_mask == b.influential_mask;
}

// Records accepted improvements. An entry is appended whenever the
// algorithm commits a measurement that also beats every previously
// recorded value, so the trajectory is strictly increasing by
// construction; sweep-local commits below the global best (possible in
// alg1's independent column sweep) are accepted by the sweep but are not
// trajectory milestones.
class TrajectoryRecorder {
 public:
  void on_commit(std::uint64_t query_index, double rssi_dbm) {
    if (rssi_dbm > best_) {
      best_ = rssi_dbm;
      entries_.push_back({query_index, rssi_dbm});
    }
  }
  const std::vector<AcceptedPoint>& entries() const { return entries_; }

 private:
  double best_ = -std::numeric_limits<double>::infinity();
  std::vector<AcceptedPoint> entries_;
};

// ---------------------------------------------------------------------------
// Sweep primitives

struct AxisSweepResult {
  Codebook best;
  double p_max;
  double p0;  // horizontal sweep only: the initial all-off measurement
};

// Row sweep from all-off (alg1 lines 5-17 of the composed procedure).
// Measures the all-off configuration once, then tries all four states on
// every row in order. Exactly 1 + 4R queries.
inline AxisSweepResult horizontal_search(RssiOracleBase& oracle, const GridSpec& grid,
                                         TrajectoryRecorder* rec = nullptr) {
  Codebook temp = Codebook::all_off(grid);
  Codebook best = temp;
  const double p0 = oracle.measure(temp);
  double p_max = p0;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int s = 0; s < kStateCount; ++s) {
      temp.set_row(r, state_from_index(s));
      const double p = oracle.measure(temp);
      if (p > p_max) {
        best = temp;
        p_max = p;
        if (rec) rec->on_commit(oracle.query_count(), p);
      }
    }
    temp = best;
  }
  return {std::move(best), p_max, p0};
}

// Column sweep from all-off with the running maximum reset to p0 and no
// new measurement for the reset. Exactly 4C queries.
inline AxisSweepResult vertical_search(RssiOracleBase& oracle, const GridSpec& grid, double p0,
                                       TrajectoryRecorder* rec = nullptr) {
  Codebook temp = Codebook::all_off(grid);
  Codebook best = temp;
  double p_max = p0;
  for (int c = 0; c < grid.cols(); ++c) {
    for (int s = 0; s < kStateCount; ++s) {
      temp.set_col(c, state_from_index(s));
      const double p = oracle.measure(temp);
      if (p > p_max) {
        best = temp;
        p_max = p;
        if (rec) rec->on_commit(oracle.query_count(), p);
      }
    }
    temp = best;
  }
  return {std::move(best), p_max, p0};
}

// ---------------------------------------------------------------------------
// Influential merge

struct MergeResult {
  Codebook partial;                            // all-off except influential cells
  std::vector<std::uint8_t> influential_mask;  // rows*cols row-major
  int influential_count;
};

// A controllable cell is influential iff its full (h,v) state matches
// between the row-sweep and column-sweep results; the merged codebook
// keeps those cells and leaves everything else off.
inline MergeResult influential_merge(const Codebook& phi_h, const Codebook& phi_v) {
  if (phi_h.grid() != phi_v.grid())
    throw std::invalid_argument("influential merge requires identical grids");
  const GridSpec& grid = phi_h.grid();
  MergeResult out{Codebook::all_off(grid),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(grid.rows()) * grid.cols(), 0),
                  0};
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (!grid.controllable(r, c)) continue;
      if (phi_h.at(r, c) == phi_v.at(r, c)) {
        out.partial.set(r, c, phi_h.at(r, c));
        out.influential_mask[static_cast<std::size_t>(r) * grid.cols() + c] = 1;
        ++out.influential_count;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-element refinement

struct RefineResult {
  Codebook final;
  double p_max;
};

// Re-measures the merged partial configuration once, then tries all four
// states on every non-influential controllable cell in row-major order.
// Influential cells are never modified. Exactly 1 + 4*(N - I) queries.
inline RefineResult refine_remaining(RssiOracleBase& oracle, const Codebook& partial,
                                     const std::vector<std::uint8_t>& influential_mask,
                                     TrajectoryRecorder* rec = nullptr) {
  const GridSpec& grid = partial.grid();
  if (influential_mask.size() != static_cast<std::size_t>(grid.rows()) * grid.cols())
    throw std::invalid_argument("influential mask size does not match grid");
  Codebook best = partial;
  Codebook temp = partial;
  double p_max = oracle.measure(partial);
  if (rec) rec->on_commit(oracle.query_count(), p_max);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (!grid.controllable(r, c)) continue;
      if (influential_mask[static_cast<std::size_t>(r) * grid.cols() + c]) continue;
      for (int s = 0; s < kStateCount; ++s) {
        temp.set(r, c, state_from_index(s));
        const double p = oracle.measure(temp);
        if (p > p_max) {
          best = temp;
          p_max = p;
          if (rec) rec->on_commit(oracle.query_count(), p);
        }
      }
      temp = best;
    }
  }
  return {std::move(best), p_max};
}

// ---------------------------------------------------------------------------
// Full algorithms

// Influential-element iterative search: row sweep, column sweep, merge,
// per-element refinement of the remainder. 2 + 4R + 4C + 4(N-I) queries.
inline SearchReport run_alg1(RssiOracleBase& oracle, const GridSpec& grid) {
  if (grid.n_controllable() < 1)
    throw std::invalid_argument("search requires at least one controllable element");
  TrajectoryRecorder rec;
  const AxisSweepResult h = horizontal_search(oracle, grid, &rec);
  const AxisSweepResult v = vertical_search(oracle, grid, h.p0, &rec);
  MergeResult merged = influential_merge(h.best, v.best);
  RefineResult refined = refine_remaining(oracle, merged.partial, merged.influential_mask, &rec);

  SearchReport report(std::move(refined.final));
  report.algorithm_id = AlgorithmId::kAlg1;
  report.final_rssi_dbm = refined.p_max;
  report.initial_rssi_dbm = h.p0;
  report.queries_used = oracle.query_count();
  report.accepted_trajectory = rec.entries();
  report.phi_h = h.best;
  report.phi_v = v.best;
  report.influential_count = merged.influential_count;
  report.influential_mask = std::move(merged.influential_mask);
  return report;
}

// Per-element sweep: all four states on every controllable cell in
// row-major order, committing strict improvements. 1 + 4N queries.
inline SearchReport run_benchmark1(RssiOracleBase& oracle, const GridSpec& grid) {
  if (grid.n_controllable() < 1)
    throw std::invalid_argument("search requires at least one controllable element");
  TrajectoryRecorder rec;
  Codebook temp = Codebook::all_off(grid);
  Codebook best = temp;
  const double p0 = oracle.measure(temp);
  double p_max = p0;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (!grid.controllable(r, c)) continue;
      for (int s = 0; s < kStateCount; ++s) {
        temp.set(r, c, state_from_index(s));
        const double p = oracle.measure(temp);
        if (p > p_max) {
          best = temp;
          p_max = p;
          rec.on_commit(oracle.query_count(), p);
        }
      }
      temp = best;
    }
  }
  SearchReport report(std::move(best));
  report.algorithm_id = AlgorithmId::kBench1;
  report.final_rssi_dbm = p_max;
  report.initial_rssi_dbm = p0;
  report.queries_used = oracle.query_count();
  report.accepted_trajectory = rec.entries();
  return report;
}

// Row sweep, then a column sweep applied on top of the trained rows. The
// running maximum carries over from the row sweep (reset_pmax selects the
// variant that restarts it from the all-off measurement instead).
// 1 + 4R + 4C queries.
inline SearchReport run_benchmark2(RssiOracleBase& oracle, const GridSpec& grid,
                                   bool reset_pmax = false) {
  if (grid.n_controllable() < 1)
    throw std::invalid_argument("search requires at least one controllable element");
  TrajectoryRecorder rec;
  const AxisSweepResult h = horizontal_search(oracle, grid, &rec);
  Codebook temp = h.best;
  Codebook best = h.best;
  double p_max = reset_pmax ? h.p0 : h.p_max;
  for (int c = 0; c < grid.cols(); ++c) {
    for (int s = 0; s < kStateCount; ++s) {
      temp.set_col(c, state_from_index(s));
      const double p = oracle.measure(temp);
      if (p > p_max) {
        best = temp;
        p_max = p;
        rec.on_commit(oracle.query_count(), p);
      }
    }
    temp = best;
  }
  SearchReport report(best);
  report.algorithm_id = AlgorithmId::kBench2;
  report.final_rssi_dbm = p_max;
  report.initial_rssi_dbm = h.p0;
  report.queries_used = oracle.query_count();
  report.accepted_trajectory = rec.entries();
  report.phi_h = h.best;
  report.phi_v = std::move(best);
  return report;
}

// Uniform random baseline: evaluates `budget` random codebooks and keeps
// the best. Exactly `budget` queries.
inline SearchReport run_random(RssiOracleBase& oracle, const GridSpec& grid, std::uint64_t budget,
                               std::uint64_t seed) {
  if (grid.n_controllable() < 1)
    throw std::invalid_argument("search requires at least one controllable element");
  if (budget < 1) throw std::invalid_argument("random search budget must be >= 1");
  TrajectoryRecorder rec;
  SplitMix64 rng(substream_seed(seed, stream_tag::kRandomSearch));
  Codebook best = Codebook::all_off(grid);
  double p_max = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < budget; ++i) {
    Codebook cb = Codebook::all_off(grid);
    for (int k = 0; k < cb.n(); ++k)
      cb.set_by_index(k, state_from_index(static_cast<int>(rng.next_below(kStateCount))));
    const double p = oracle.measure(cb);
    if (p > p_max) {
      best = std::move(cb);
      p_max = p;
      rec.on_commit(oracle.query_count(), p);
    }
  }
  SearchReport report(std::move(best));
  report.algorithm_id = AlgorithmId::kRandom;
  report.final_rssi_dbm = p_max;
  report.queries_used = oracle.query_count();
  report.accepted_trajectory = rec.entries();
  return report;
}

// Oracle-driven exhaustive enumeration in lexicographic order. Strict
// improvement keeps the lexicographically smallest maximizer, matching
// exhaustive_optimum on a noiseless oracle. 4^N queries.
inline SearchReport run_exhaustive(RssiOracleBase& oracle, const GridSpec& grid,
                                   std::uint64_t max_configs = kDefaultEnumerationLimit) {
  const int n = grid.n_controllable();
  if (n < 1) throw std::invalid_argument("search requires at least one controllable element");
  if (n > 31 || (1ULL << (2 * n)) > max_configs)
    throw std::invalid_argument("exhaustive search over 4^" + std::to_string(n) +
                                " configurations exceeds the enumeration limit of " +
                                std::to_string(max_configs));
  TrajectoryRecorder rec;
  Codebook cur = Codebook::all_off(grid);
  Codebook best = cur;
  const double p0 = oracle.measure(cur);
  double p_max = p0;
  rec.on_commit(oracle.query_count(), p0);
  std::vector<int> odometer(static_cast<std::size_t>(n), 0);
  const std::uint64_t total = 1ULL << (2 * n);
  for (std::uint64_t step = 1; step < total; ++step) {
    int pos = n - 1;
    while (pos >= 0) {
      if (++odometer[static_cast<std::size_t>(pos)] < kStateCount) break;
      odometer[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    for (int k = pos; k < n; ++k)
      cur.set_by_index(k, state_from_index(odometer[static_cast<std::size_t>(k)]));
    const double p = oracle.measure(cur);
    if (p > p_max) {
      best = cur;
      p_max = p;
      rec.on_commit(oracle.query_count(), p);
    }
  }
  SearchReport report(std::move(best));
  report.algorithm_id = AlgorithmId::kExhaustive;
  report.final_rssi_dbm = p_max;
  report.initial_rssi_dbm = p0;
  report.queries_used = oracle.query_count();
  report.accepted_trajectory = rec.entries();
  return report;
}

// ---------------------------------------------------------------------------
// Query-cost formulas

inline std::uint64_t predicted_queries(AlgorithmId id, int rows, int cols, int n, int influential) {
  if (rows < 1 || cols < 1 || n < 0) throw std::invalid_argument("inconsistent grid parameters");
  const auto r = static_cast<std::uint64_t>(rows);
  const auto c = static_cast<std::uint64_t>(cols);
  const auto nn = static_cast<std::uint64_t>(n);
  switch (id) {
    case AlgorithmId::kBench1:
      return 1 + 4 * nn;
    case AlgorithmId::kBench2:
      return 1 + 4 * r + 4 * c;
    case AlgorithmId::kAlg1: {
      if (influential < 0 || influential > n)
        throw std::invalid_argument("influential count must be in [0,N]");
      return 2 + 4 * r + 4 * c + 4 * (nn - static_cast<std::uint64_t>(influential));
    }
    default:
      throw std::invalid_argument("no closed-form query count for algorithm " + to_string(id));
  }
}

// ---------------------------------------------------------------------------
// Report archival

// One JSON object per report. Codebooks are embedded as their text form;
// the influential mask uses '#' for non-controllable cells, '1'/'0' for
// influential / refined cells.
inline nlohmann::ordered_json report_to_json(const SearchReport& rep) {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(rep.algorithm_id);
  j["rows"] = rep.final_codebook.rows();
  j["cols"] = rep.final_codebook.cols();
  j["n"] = rep.final_codebook.n();
  j["queries"] = rep.queries_used;
  auto dbm_or_null = [](std::optional<double> v) {
    nlohmann::ordered_json out;
    if (v.has_value() && std::isfinite(*v)) out = *v;
    return out;
  };
  j["initial_rssi_dbm"] = dbm_or_null(rep.initial_rssi_dbm);
  j["final_rssi_dbm"] = dbm_or_null(rep.final_rssi_dbm);
  j["final_codebook"] = to_text(rep.final_codebook);
  j["phi_h"] = rep.phi_h ? nlohmann::ordered_json(to_text(*rep.phi_h)) : nlohmann::ordered_json();
  j["phi_v"] = rep.phi_v ? nlohmann::ordered_json(to_text(*rep.phi_v)) : nlohmann::ordered_json();
  if (rep.algorithm_id == AlgorithmId::kAlg1) {
    j["influential_count"] = rep.influential_count;
    std::vector<std::string> mask_rows;
    const GridSpec& grid = rep.final_codebook.grid();
    for (int r = 0; r < grid.rows(); ++r) {
      std::string row;
      for (int c = 0; c < grid.cols(); ++c) {
        if (!grid.controllable(r, c))
          row += '#';
        else
          row += rep.influential_mask[static_cast<std::size_t>(r) * grid.cols() + c] ? '1' : '0';
      }
      mask_rows.push_back(row);
    }
    j["influential_mask"] = mask_rows;
  }
  nlohmann::ordered_json traj = nlohmann::ordered_json::array();
  for (const AcceptedPoint& p : rep.accepted_trajectory)
    traj.push_back({p.query_index, p.rssi_dbm});
  j["accepted_trajectory"] = std::move(traj);
  return j;
}

}  // namespace rislab
