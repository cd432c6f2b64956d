#pragma once

// Experiment drivers behind the CLI subcommands. The computational cores
// (run_sweep, run_locations) are plain functions over a Scenario so tests
// can call them without touching the filesystem; the cmd_* wrappers add
// file IO and map failures to the exit-code contract:
//   0 success, 2 usage/config, 3 IO, 4 protocol.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rislab/control_plane.hpp"
#include "rislab/core.hpp"
#include "rislab/oracle.hpp"
#include "rislab/scenario.hpp"
#include "rislab/search.hpp"
#include "rislab/store.hpp"
#include "rislab/transport.hpp"

namespace rislab {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kIo = 3;
inline constexpr int kProtocol = 4;
}  // namespace exit_code

// ---------------------------------------------------------------------------
// Logging (stderr; level from --log-level or the RIS_LAB_LOG variable)

enum class LogLevel { kOff = 0, kInfo = 1, kDebug = 2 };

inline LogLevel& log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("RIS_LAB_LOG");
    if (env == nullptr) return LogLevel::kOff;
    const std::string s(env);
    if (s == "debug") return LogLevel::kDebug;
    if (s == "info") return LogLevel::kInfo;
    return LogLevel::kOff;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[ris-lab] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "[ris-lab] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// Sweep (one row per seed x algorithm)

struct RunRow {
  std::uint64_t seed = 0;
  AlgorithmId algorithm = AlgorithmId::kAlg1;
  int rows = 0;
  int cols = 0;
  int n = 0;
  std::optional<int> influential;  // alg1 only
  std::uint64_t queries = 0;
  double rssi_all_off_dbm = 0.0;
  double rssi_final_dbm = 0.0;
  double gain_db = 0.0;
};

// Runs one (seed, algorithm) cell of the sweep. The channel comes from
// the scenario's first location with the run seed substituted; the
// measurement-noise stream is seeded from the run seed as well, so the
// row is a pure function of (scenario, seed, algorithm).
inline RunRow run_cell(const Scenario& sc, std::uint64_t seed, AlgorithmId alg) {
  const ChannelRealization chan = sc.realize(0, seed, true);
  OracleConfig ocfg = sc.oracle;
  ocfg.noise_seed = seed;
  SimOracle oracle(chan, ocfg);

  SearchReport report = [&] {
    switch (alg) {
      case AlgorithmId::kBench1: return run_benchmark1(oracle, sc.grid);
      case AlgorithmId::kBench2: return run_benchmark2(oracle, sc.grid);
      case AlgorithmId::kRandom:
        return run_random(oracle, sc.grid, sc.random_budget,
                          substream_seed(seed, stream_tag::kRandomSearch));
      case AlgorithmId::kExhaustive: return run_exhaustive(oracle, sc.grid);
      default: return run_alg1(oracle, sc.grid);
    }
  }();

  RunRow row;
  row.seed = seed;
  row.algorithm = alg;
  row.rows = sc.grid.rows();
  row.cols = sc.grid.cols();
  row.n = sc.grid.n_controllable();
  if (alg == AlgorithmId::kAlg1) row.influential = report.influential_count;
  row.queries = report.queries_used;
  // The all-off reference is the idealized (noiseless, averaged) value, so
  // gain_db isolates what the search achieved from measurement noise.
  row.rssi_all_off_dbm = cascade_gain(chan, Codebook::all_off(sc.grid)).dbm(chan.tx_power_dbm);
  row.rssi_final_dbm = report.final_rssi_dbm;
  row.gain_db = row.rssi_final_dbm - row.rssi_all_off_dbm;
  return row;
}

// Row order: seeds in listed order (outer), algorithms in listed order
// (inner) — fixed regardless of any execution interleaving.
inline std::vector<RunRow> run_sweep(const Scenario& sc) {
  std::vector<RunRow> rows;
  rows.reserve(sc.seeds.size() * sc.algorithms.size());
  for (const std::uint64_t seed : sc.seeds)
    for (const AlgorithmId alg : sc.algorithms) {
      log_debug("run seed=" + std::to_string(seed) + " algorithm=" + to_string(alg));
      rows.push_back(run_cell(sc, seed, alg));
    }
  return rows;
}

// ---------------------------------------------------------------------------
// Cross-location matrix

struct LocationRow {
  std::string location;  // where the receiver is
  std::string cb_id;     // which location's codebook is applied
  double rssi_dbm = 0.0;
  bool diag_is_row_max = false;  // same value on every row of one location
};

// Generates one codebook per location with the scenario's first
// algorithm, then evaluates every codebook at every location. The
// evaluation pass reports the idealized averaged RSSI (noiseless), so the
// matrix rerun-diffs clean.
inline std::vector<LocationRow> run_locations(const Scenario& sc) {
  if (sc.locations.size() < 2)
    throw ScenarioError("locations command needs at least two locations");
  const AlgorithmId alg = sc.algorithms.front();

  std::vector<ChannelRealization> chans;
  std::vector<Codebook> cbs;
  for (std::size_t i = 0; i < sc.locations.size(); ++i) {
    ChannelRealization chan = sc.realize(i, 0, false);
    OracleConfig ocfg = sc.oracle;
    ocfg.noise_seed = sc.locations[i].channel.seed;
    SimOracle oracle(chan, ocfg);
    SearchReport report = [&] {
      switch (alg) {
        case AlgorithmId::kBench1: return run_benchmark1(oracle, sc.grid);
        case AlgorithmId::kBench2: return run_benchmark2(oracle, sc.grid);
        case AlgorithmId::kRandom:
          return run_random(oracle, sc.grid, sc.random_budget,
                            substream_seed(sc.locations[i].channel.seed,
                                           stream_tag::kRandomSearch));
        case AlgorithmId::kExhaustive: return run_exhaustive(oracle, sc.grid);
        default: return run_alg1(oracle, sc.grid);
      }
    }();
    log_debug("locations: generated codebook for " + sc.locations[i].id);
    chans.push_back(std::move(chan));
    cbs.push_back(std::move(report.final_codebook));
  }

  std::vector<LocationRow> rows;
  for (std::size_t i = 0; i < sc.locations.size(); ++i) {
    std::vector<double> rssi_row(sc.locations.size());
    for (std::size_t j = 0; j < sc.locations.size(); ++j)
      rssi_row[j] = cascade_gain(chans[i], cbs[j]).dbm(sc.tx_power_dbm);
    const double row_max = *std::max_element(rssi_row.begin(), rssi_row.end());
    const bool diag_max = rssi_row[i] >= row_max;
    for (std::size_t j = 0; j < sc.locations.size(); ++j) {
      LocationRow row;
      row.location = sc.locations[i].id;
      row.cb_id = sc.locations[j].id;
      row.rssi_dbm = rssi_row[j];
      row.diag_is_row_max = diag_max;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV writers (fixed 6-decimal formatting so reruns diff clean)

inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string run_csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  out << "seed,algorithm,rows,cols,n,i,queries,rssi_all_off_dbm,rssi_final_dbm,gain_db\n";
  for (const RunRow& r : rows) {
    out << r.seed << ',' << to_string(r.algorithm) << ',' << r.rows << ',' << r.cols << ','
        << r.n << ',';
    if (r.influential) out << *r.influential;
    out << ',' << r.queries << ',' << format_fixed(r.rssi_all_off_dbm) << ','
        << format_fixed(r.rssi_final_dbm) << ',' << format_fixed(r.gain_db) << '\n';
  }
  return out.str();
}

inline std::string locations_csv(const std::vector<LocationRow>& rows) {
  std::ostringstream out;
  out << "location,cb_id,rssi_dbm,diag_is_row_max\n";
  for (const LocationRow& r : rows)
    out << r.location << ',' << r.cb_id << ',' << format_fixed(r.rssi_dbm) << ','
        << (r.diag_is_row_max ? 1 : 0) << '\n';
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

// ---------------------------------------------------------------------------
// Subcommand bodies

inline int report_failure(std::ostream& err, const std::exception& e, int code) {
  err << "ris-lab: " << e.what() << "\n";
  return code;
}

inline int cmd_run(const std::string& scenario_path, const std::string& out_path,
                   std::ostream& err = std::cerr) {
  try {
    const Scenario sc = Scenario::load(scenario_path);
    write_file(out_path, run_csv(run_sweep(sc)));
    return exit_code::kOk;
  } catch (const ScenarioError& e) {
    return report_failure(err, e, exit_code::kConfig);
  } catch (const IoError& e) {
    return report_failure(err, e, exit_code::kIo);
  } catch (const std::invalid_argument& e) {
    return report_failure(err, e, exit_code::kConfig);
  }
}

inline int cmd_locations(const std::string& scenario_path, const std::string& out_path,
                         std::ostream& err = std::cerr) {
  try {
    const Scenario sc = Scenario::load(scenario_path);
    write_file(out_path, locations_csv(run_locations(sc)));
    return exit_code::kOk;
  } catch (const ScenarioError& e) {
    return report_failure(err, e, exit_code::kConfig);
  } catch (const IoError& e) {
    return report_failure(err, e, exit_code::kIo);
  } catch (const std::invalid_argument& e) {
    return report_failure(err, e, exit_code::kConfig);
  }
}

inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 >= addr.size())
    throw ScenarioError("endpoint must be host:port, got \"" + addr + "\"");
  const std::string host = colon == 0 ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port_text = addr.substr(colon + 1);
  int port = 0;
  std::size_t used = 0;
  try {
    port = std::stoi(port_text, &used);
  } catch (const std::exception&) {
    throw ScenarioError("port must be a number in \"" + addr + "\"");
  }
  if (used != port_text.size() || port < 0 || port > 65535)
    throw ScenarioError("port out of range in \"" + addr + "\"");
  return {host == "localhost" ? "127.0.0.1" : host, static_cast<std::uint16_t>(port)};
}

// Broker service: accepts user/ris/rx connections on a loopback port and
// serves until the user disconnects.
inline int cmd_serve(const std::string& listen_addr, std::ostream& err = std::cerr) {
  try {
    const auto [host, port] = parse_endpoint(listen_addr);
    TcpListener listener(port);
    std::cout << "listening on 127.0.0.1:" << listener.port() << std::endl;
    Broker broker;
    while (!(broker.has_user() && broker.has_ris() && broker.has_rx())) {
      auto conn = listener.accept(std::chrono::milliseconds(500));
      if (!conn) continue;
      broker.attach(std::move(conn));
      log_info("peer attached");
    }
    log_info("all roles connected; serving");
    broker.run();
    return exit_code::kOk;
  } catch (const ScenarioError& e) {
    return report_failure(err, e, exit_code::kConfig);
  } catch (const ProtocolError& e) {
    return report_failure(err, e, exit_code::kProtocol);
  } catch (const std::runtime_error& e) {
    return report_failure(err, e, exit_code::kIo);
  }
}

inline int cmd_agent(const std::string& role, const std::string& connect_addr,
                     const std::string& scenario_path, const std::string& store_path,
                     std::ostream& err = std::cerr) {
  try {
    const auto [host, port] = parse_endpoint(connect_addr);
    if (role == "ris") {
      RisAgent agent(tcp_connect(host, port), store_path);
      agent.run();
      return exit_code::kOk;
    }
    if (role == "rx") {
      if (scenario_path.empty())
        throw ScenarioError("rx agent needs --scenario for its channel");
      const Scenario sc = Scenario::load(scenario_path);
      OracleConfig ocfg = sc.oracle;
      ocfg.noise_seed = sc.locations.front().channel.seed;
      RxAgent agent(tcp_connect(host, port), sc.grid, sc.realize(0, 0, false), ocfg);
      agent.run();
      return exit_code::kOk;
    }
    throw ScenarioError("agent role must be ris or rx, got \"" + role + "\"");
  } catch (const ScenarioError& e) {
    return report_failure(err, e, exit_code::kConfig);
  } catch (const IoError& e) {
    return report_failure(err, e, exit_code::kIo);
  } catch (const ProtocolError& e) {
    return report_failure(err, e, exit_code::kProtocol);
  } catch (const std::runtime_error& e) {
    return report_failure(err, e, exit_code::kIo);
  }
}

// REPL core over an already-connected client; the CLI wraps it in a TCP
// connection. Peer errors print and the loop continues (exit stays 0).
inline int repl_loop(UserClient& client, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string cmd;
    words >> cmd;
    if (cmd.empty()) continue;
    try {
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "help") {
        out << "commands: gen <loc> <algorithm> | apply <loc> | save <loc> | delete <loc>"
               " | list | rssi | quit\n";
      } else if (cmd == "gen") {
        std::string loc, alg;
        words >> loc >> alg;
        if (loc.empty() || alg.empty()) {
          out << "usage: gen <loc> <algorithm>\n";
          continue;
        }
        const UserClient::GenOutcome done = client.generate(loc, alg);
        out << "gen_done location=" << loc << " queries=" << done.queries
            << " rssi_dbm=" << format_fixed(done.rssi_dbm) << "\n";
      } else if (cmd == "apply") {
        std::string loc;
        words >> loc;
        client.apply(loc);
        out << "ok\n";
      } else if (cmd == "save") {
        std::string loc;
        words >> loc;
        client.save(loc);
        out << "ok\n";
      } else if (cmd == "delete") {
        std::string loc;
        words >> loc;
        client.remove(loc);
        out << "ok\n";
      } else if (cmd == "list") {
        const std::vector<std::string> ids = client.list();
        if (ids.empty()) {
          out << "(empty)\n";
        } else {
          for (std::size_t i = 0; i < ids.size(); ++i)
            out << ids[i] << (i + 1 < ids.size() ? ' ' : '\n');
        }
      } else if (cmd == "rssi") {
        out << format_fixed(client.rssi()) << " dBm\n";
      } else {
        out << "unknown command \"" << cmd << "\" (try help)\n";
      }
    } catch (const PeerError& e) {
      out << "error " << e.what() << "\n";
    } catch (const std::logic_error& e) {
      out << "error: " << e.what() << "\n";
    }
  }
  return exit_code::kOk;
}

inline int cmd_repl(const std::string& connect_addr, std::istream& in = std::cin,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto [host, port] = parse_endpoint(connect_addr);
    UserClient client(tcp_connect(host, port));
    const int rc = repl_loop(client, in, out);
    client.close();
    return rc;
  } catch (const ScenarioError& e) {
    return report_failure(err, e, exit_code::kConfig);
  } catch (const ProtocolError& e) {
    return report_failure(err, e, exit_code::kProtocol);
  } catch (const ConnectionClosed& e) {
    return report_failure(err, e, exit_code::kIo);
  } catch (const std::runtime_error& e) {
    return report_failure(err, e, exit_code::kIo);
  }
}

}  // namespace rislab
