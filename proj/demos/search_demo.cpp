// Runs the three searches on one simulated channel and prints what each
// one achieved for how many RSSI queries.

#include <cstdio>

#include "rislab/rislab.hpp"

using namespace rislab;

int main() {
  // The reference panel: 8 x 10 with a 2 x 2 controller block, N = 76.
  const GridSpec grid = GridSpec::with_blocked_rect(8, 10, 6, 8, 2, 2);
  ChannelSpec spec;
  spec.kind = FadingKind::kRayleigh;
  spec.path_loss_db = 60.0;
  spec.seed = 7;
  ChannelRealization chan = generate_channel(spec, grid.n_controllable());

  const double all_off = cascade_gain(chan, Codebook::all_off(grid)).dbm(chan.tx_power_dbm);
  std::printf("panel %dx%d, N=%d, all-off RSSI %.3f dBm\n\n", grid.rows(), grid.cols(),
              grid.n_controllable(), all_off);
  std::printf("%-8s %8s %14s %10s\n", "search", "queries", "final dBm", "gain dB");

  for (const AlgorithmId alg : {AlgorithmId::kAlg1, AlgorithmId::kBench1, AlgorithmId::kBench2}) {
    SimOracle oracle(chan);
    const SearchReport report = alg == AlgorithmId::kAlg1  ? run_alg1(oracle, grid)
                                : alg == AlgorithmId::kBench1 ? run_benchmark1(oracle, grid)
                                                              : run_benchmark2(oracle, grid);
    std::printf("%-8s %8llu %14.3f %10.3f\n", to_string(alg).c_str(),
                static_cast<unsigned long long>(report.queries_used), report.final_rssi_dbm,
                report.final_rssi_dbm - all_off);
    if (alg == AlgorithmId::kAlg1)
      std::printf("         (%d of %d elements influential)\n", report.influential_count,
                  grid.n_controllable());
  }
  return 0;
}
