#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "rislab/channel.hpp"
#include "rislab/core.hpp"
#include "rislab/harness.hpp"
#include "rislab/oracle.hpp"
#include "rislab/scenario.hpp"
#include "rislab/search.hpp"
#include "lab_support.hpp"

using namespace rislab;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "locations": [{"id": "A"}],
    "algorithms": ["alg1"],
    "seeds": [1]
  })");
}

json sweep_doc() {
  return json::parse(R"({
    "grid": {"rows": 3, "cols": 3},
    "locations": [{"id": "A", "path_loss_db": 10.0, "seed": 5}],
    "algorithms": ["alg1", "bench1", "bench2"],
    "seeds": [7, 8]
  })");
}

bool rows_equal(const RunRow& a, const RunRow& b) {
  return a.seed == b.seed && a.algorithm == b.algorithm && a.rows == b.rows &&
         a.cols == b.cols && a.n == b.n && a.influential == b.influential &&
         a.queries == b.queries && a.rssi_all_off_dbm == b.rssi_all_off_dbm &&
         a.rssi_final_dbm == b.rssi_final_dbm && a.gain_db == b.gain_db;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("scenario defaults fill in the reference setup") {
  const Scenario sc = Scenario::from_json(minimal_doc());

  REQUIRE(sc.grid.rows() == 8);
  REQUIRE(sc.grid.cols() == 10);
  REQUIRE(sc.grid.n_controllable() == 76);
  REQUIRE(!sc.grid.controllable(6, 8));
  REQUIRE(!sc.grid.controllable(7, 9));
  REQUIRE(sc.grid.controllable(5, 8));

  REQUIRE(sc.tx_power_dbm == -10.0);
  REQUIRE(std::isinf(sc.noise_power_dbm));
  REQUIRE(sc.noise_power_dbm < 0.0);
  REQUIRE(sc.alpha == 1.0);
  REQUIRE(sc.background == std::complex<double>(0.0, 0.0));
  REQUIRE(sc.oracle.mode == OracleMode::kAnalytic);
  REQUIRE(sc.oracle.measurement_noise_db == 0.0);
  REQUIRE(sc.oracle.frame_config.frames == 50);
  REQUIRE(sc.oracle.frame_config.samples_per_frame == 1000);
  REQUIRE(sc.oracle.frame_config.modulation_order == 4);
  REQUIRE(sc.random_budget == 200);

  REQUIRE(sc.locations.size() == 1);
  REQUIRE(sc.locations[0].id == "A");
  REQUIRE(sc.locations[0].channel.kind == FadingKind::kRayleigh);
  REQUIRE(sc.locations[0].channel.rician_k == 0.0);
  REQUIRE(sc.locations[0].channel.path_loss_db == 0.0);
  REQUIRE(sc.locations[0].channel.seed == 1);

  REQUIRE(sc.algorithms == std::vector<AlgorithmId>{AlgorithmId::kAlg1});
  REQUIRE(sc.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("scenario json round-trips explicit values") {
  const json doc = json::parse(R"({
    "grid": {"rows": 4, "cols": 6, "blocked": [[0, 0, 2, 1], [3, 5, 1, 1]]},
    "tx_power_dbm": -4.5,
    "noise_power_dbm": -94.25,
    "alpha": 0.8,
    "background": [0.25, -0.5],
    "oracle": {"mode": "empirical", "measurement_noise_db": 1.5, "frames": 10,
               "samples_per_frame": 64, "modulation_order": 8, "noise_seed": 99},
    "locations": [
      {"id": "desk", "fading": "rician", "rician_k": 3.5, "path_loss_db": 41.0, "seed": 12},
      {"id": "shelf", "fading": "rayleigh", "path_loss_db": 47.5, "seed": 13}
    ],
    "algorithms": ["bench2", "random"],
    "seeds": [10, 11, 12],
    "random_budget": 64
  })");
  const Scenario sc = Scenario::from_json(doc);

  REQUIRE(sc.grid.rows() == 4);
  REQUIRE(sc.grid.cols() == 6);
  REQUIRE(sc.grid.n_controllable() == 4 * 6 - 3);
  REQUIRE(!sc.grid.controllable(0, 0));
  REQUIRE(!sc.grid.controllable(1, 0));
  REQUIRE(!sc.grid.controllable(3, 5));
  REQUIRE(sc.tx_power_dbm == -4.5);
  REQUIRE(sc.noise_power_dbm == -94.25);
  REQUIRE(sc.alpha == 0.8);
  REQUIRE(sc.background == std::complex<double>(0.25, -0.5));
  REQUIRE(sc.oracle.mode == OracleMode::kEmpirical);
  REQUIRE(sc.oracle.measurement_noise_db == 1.5);
  REQUIRE(sc.oracle.frame_config.frames == 10);
  REQUIRE(sc.oracle.frame_config.samples_per_frame == 64);
  REQUIRE(sc.oracle.frame_config.modulation_order == 8);
  REQUIRE(sc.oracle.noise_seed == 99);
  REQUIRE(sc.locations[0].channel.kind == FadingKind::kRician);
  REQUIRE(sc.locations[0].channel.rician_k == 3.5);
  REQUIRE(sc.locations[1].channel.kind == FadingKind::kRayleigh);
  REQUIRE(sc.locations[1].channel.seed == 13);
  REQUIRE(sc.algorithms ==
          (std::vector<AlgorithmId>{AlgorithmId::kBench2, AlgorithmId::kRandom}));
  REQUIRE(sc.seeds == (std::vector<std::uint64_t>{10, 11, 12}));
  REQUIRE(sc.random_budget == 64);

  SECTION("null noise power means no receiver noise") {
    json quiet = doc;
    quiet["noise_power_dbm"] = nullptr;
    const Scenario sq = Scenario::from_json(quiet);
    REQUIRE(std::isinf(sq.noise_power_dbm));
    REQUIRE(sq.noise_power_dbm < 0.0);
  }

  SECTION("realize stamps panel-wide settings onto the channel") {
    const ChannelRealization chan = sc.realize(1, 0, false);
    REQUIRE(chan.n() == sc.grid.n_controllable());
    REQUIRE(chan.alpha == 0.8);
    REQUIRE(chan.background == std::complex<double>(0.25, -0.5));
    REQUIRE(chan.tx_power_dbm == -4.5);
    REQUIRE(chan.noise_power_dbm == -94.25);
    // Same location, same seed: identical vectors. Overridden seed: different.
    const ChannelRealization again = sc.realize(1, 0, false);
    REQUIRE(chan.h_h == again.h_h);
    const ChannelRealization other = sc.realize(1, 777, true);
    REQUIRE(chan.h_h != other.h_h);
    REQUIRE_THROWS_AS(sc.realize(2, 0, false), ScenarioError);
  }
}

TEST_CASE("scenario rejects malformed documents") {
  const auto rejects = [](json doc) {
    REQUIRE_THROWS_AS(Scenario::from_json(doc), ScenarioError);
  };

  rejects(json::array());
  rejects(json::parse(R"("just a string")"));

  json doc = minimal_doc();
  doc["grids"] = json::object();
  rejects(doc);

  doc = minimal_doc();
  doc["grid"] = {{"rows", 3}, {"cols", 3}, {"mask", "x"}};
  rejects(doc);

  doc = minimal_doc();
  doc["grid"] = {{"rows", 0}, {"cols", 3}};
  rejects(doc);

  doc = minimal_doc();
  doc["grid"] = {{"rows", 2}, {"cols", 2}, {"blocked", json::parse("[[0,0,3,1]]")}};
  rejects(doc);

  doc = minimal_doc();
  doc["grid"] = {{"rows", 2}, {"cols", 2}, {"blocked", "everything"}};
  rejects(doc);

  doc = minimal_doc();
  doc["grid"] = {{"rows", 2}, {"cols", 2}, {"blocked", json::parse("[[0,0]]")}};
  rejects(doc);

  // Fully blocked panel leaves nothing to control.
  doc = minimal_doc();
  doc["grid"] = {{"rows", 1}, {"cols", 1}, {"blocked", json::parse("[[0,0,1,1]]")}};
  rejects(doc);

  doc = minimal_doc();
  doc["tx_power_dbm"] = "loud";
  rejects(doc);

  doc = minimal_doc();
  doc["background"] = json::parse("[1.0]");
  rejects(doc);

  doc = minimal_doc();
  doc["oracle"] = {{"mode", "psychic"}};
  rejects(doc);

  doc = minimal_doc();
  doc["oracle"] = {{"mode", "analytic"}, {"retries", 3}};
  rejects(doc);

  doc = minimal_doc();
  doc["oracle"] = {{"measurement_noise_db", -1.0}};
  rejects(doc);

  doc = minimal_doc();
  doc["oracle"] = {{"mode", "empirical"}, {"modulation_order", 3}};
  rejects(doc);

  doc = minimal_doc();
  doc.erase("locations");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = "here";
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"seed": 1}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"id": "A", "room": 4}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"id": "A", "fading": "nakagami"}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"id": "A", "fading": "rician", "rician_k": -2.0}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"id": "A"}, {"id": "A"}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::parse(R"([{"id": ""}])");
  rejects(doc);

  doc = minimal_doc();
  doc["locations"][0]["id"] = std::string(65, 'x');
  rejects(doc);

  doc = minimal_doc();
  doc["locations"] = json::array();
  rejects(doc);

  doc = minimal_doc();
  doc.erase("algorithms");
  rejects(doc);

  doc = minimal_doc();
  doc["algorithms"] = json::parse(R"(["alg7"])");
  rejects(doc);

  doc = minimal_doc();
  doc["algorithms"] = json::parse("[42]");
  rejects(doc);

  doc = minimal_doc();
  doc["algorithms"] = json::array();
  rejects(doc);

  doc = minimal_doc();
  doc.erase("seeds");
  rejects(doc);

  doc = minimal_doc();
  doc["seeds"] = json::parse("[-1]");
  rejects(doc);

  doc = minimal_doc();
  doc["seeds"] = json::parse("[1, 1]");
  rejects(doc);

  doc = minimal_doc();
  doc["seeds"] = json::array();
  rejects(doc);

  doc = minimal_doc();
  doc["random_budget"] = 0;
  rejects(doc);

  doc = minimal_doc();
  doc["random_budget"] = -5;
  rejects(doc);

  SECTION("unknown keys are named in the message") {
    json bad = minimal_doc();
    bad["grdi"] = json::object();
    REQUIRE_THROWS_WITH(Scenario::from_json(bad),
                        Catch::Matchers::ContainsSubstring("grdi"));
  }
}

TEST_CASE("scenario file loading distinguishes missing from invalid") {
  const std::string missing = test::temp_path("no_such_scenario.json");
  REQUIRE_THROWS_AS(Scenario::load(missing), IoError);

  const std::string junk = test::temp_path("junk_scenario.json");
  write_text(junk, "{this is not json");
  REQUIRE_THROWS_AS(Scenario::load(junk), ScenarioError);
  REQUIRE_THROWS_WITH(Scenario::load(junk),
                      Catch::Matchers::ContainsSubstring("not valid JSON"));

  const std::string good = test::temp_path("good_scenario.json");
  write_text(good, minimal_doc().dump());
  const Scenario sc = Scenario::load(good);
  REQUIRE(sc.locations.size() == 1);
  std::filesystem::remove(junk);
  std::filesystem::remove(good);
}

TEST_CASE("sweep rows follow seed-major order with exact query counts") {
  const Scenario sc = Scenario::from_json(sweep_doc());
  const std::vector<RunRow> rows = run_sweep(sc);
  REQUIRE(rows.size() == 6);

  const std::vector<std::pair<std::uint64_t, AlgorithmId>> expect_order = {
      {7, AlgorithmId::kAlg1},  {7, AlgorithmId::kBench1}, {7, AlgorithmId::kBench2},
      {8, AlgorithmId::kAlg1},  {8, AlgorithmId::kBench1}, {8, AlgorithmId::kBench2},
  };
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(rows[k].seed == expect_order[k].first);
    REQUIRE(rows[k].algorithm == expect_order[k].second);
    REQUIRE(rows[k].rows == 3);
    REQUIRE(rows[k].cols == 3);
    REQUIRE(rows[k].n == 9);
    REQUIRE(rows[k].gain_db == rows[k].rssi_final_dbm - rows[k].rssi_all_off_dbm);
  }

  for (const RunRow& row : rows) {
    switch (row.algorithm) {
      case AlgorithmId::kAlg1: {
        REQUIRE(row.influential.has_value());
        REQUIRE(*row.influential >= 0);
        REQUIRE(*row.influential <= 9);
        REQUIRE(row.queries == 2 + 4 * 3 + 4 * 3 + 4 * (9 - *row.influential));
        break;
      }
      case AlgorithmId::kBench1:
        REQUIRE(!row.influential.has_value());
        REQUIRE(row.queries == 1 + 4 * 9);
        break;
      default:
        REQUIRE(!row.influential.has_value());
        REQUIRE(row.queries == 1 + 4 * 3 + 4 * 3);
        break;
    }
  }

  // Same seed means same channel, so the all-off reference agrees across
  // algorithms and matches the noiseless cascade directly.
  REQUIRE(rows[0].rssi_all_off_dbm == rows[1].rssi_all_off_dbm);
  REQUIRE(rows[0].rssi_all_off_dbm == rows[2].rssi_all_off_dbm);
  const ChannelRealization chan7 = sc.realize(0, 7, true);
  REQUIRE(rows[0].rssi_all_off_dbm ==
          cascade_gain(chan7, Codebook::all_off(sc.grid)).dbm(chan7.tx_power_dbm));
}

TEST_CASE("sweep rows are pure functions of the scenario") {
  const Scenario sc = Scenario::from_json(sweep_doc());
  const std::vector<RunRow> first = run_sweep(sc);
  const std::vector<RunRow> second = run_sweep(sc);
  REQUIRE(first.size() == second.size());
  for (std::size_t k = 0; k < first.size(); ++k) REQUIRE(rows_equal(first[k], second[k]));

  // One cell cross-checked against driving the search directly.
  const ChannelRealization chan = sc.realize(0, 7, true);
  OracleConfig ocfg = sc.oracle;
  ocfg.noise_seed = 7;
  SimOracle oracle(chan, ocfg);
  const SearchReport direct = run_alg1(oracle, sc.grid);
  REQUIRE(first[0].rssi_final_dbm == direct.final_rssi_dbm);
  REQUIRE(first[0].queries == direct.queries_used);
  REQUIRE(first[0].influential == std::optional<int>(direct.influential_count));
}

TEST_CASE("random and exhaustive cells report their budgets") {
  json doc = json::parse(R"({
    "grid": {"rows": 1, "cols": 2},
    "locations": [{"id": "A", "seed": 21}],
    "algorithms": ["random", "exhaustive"],
    "seeds": [3],
    "random_budget": 40
  })");
  const Scenario sc = Scenario::from_json(doc);
  const std::vector<RunRow> rows = run_sweep(sc);
  REQUIRE(rows.size() == 2);

  REQUIRE(rows[0].algorithm == AlgorithmId::kRandom);
  REQUIRE(rows[0].queries == 40);
  REQUIRE(!rows[0].influential.has_value());

  REQUIRE(rows[1].algorithm == AlgorithmId::kExhaustive);
  REQUIRE(rows[1].queries == 16);  // 4^2 probes
  REQUIRE(!rows[1].influential.has_value());
  const ChannelRealization chan = sc.realize(0, 3, true);
  const ExhaustiveResult best = exhaustive_optimum(chan, sc.grid);
  REQUIRE(rows[1].rssi_final_dbm == best.gain.dbm(chan.tx_power_dbm));
  // Random can never beat the enumerated optimum.
  REQUIRE(rows[0].rssi_final_dbm <= rows[1].rssi_final_dbm);
}

TEST_CASE("run csv is stable to the digit") {
  RunRow a;
  a.seed = 3;
  a.algorithm = AlgorithmId::kAlg1;
  a.rows = 2;
  a.cols = 3;
  a.n = 6;
  a.influential = 4;
  a.queries = 46;
  a.rssi_all_off_dbm = -50.0;
  a.rssi_final_dbm = -45.5;
  a.gain_db = 4.5;

  RunRow b;
  b.seed = 5;
  b.algorithm = AlgorithmId::kBench1;
  b.rows = 2;
  b.cols = 3;
  b.n = 6;
  b.queries = 25;
  b.rssi_all_off_dbm = -50.125;
  b.rssi_final_dbm = -44.5;
  b.gain_db = 5.625;

  const std::string expected =
      "seed,algorithm,rows,cols,n,i,queries,rssi_all_off_dbm,rssi_final_dbm,gain_db\n"
      "3,alg1,2,3,6,4,46,-50.000000,-45.500000,4.500000\n"
      "5,bench1,2,3,6,,25,-50.125000,-44.500000,5.625000\n";
  REQUIRE(run_csv({a, b}) == expected);
  REQUIRE(run_csv({}) ==
          "seed,algorithm,rows,cols,n,i,queries,rssi_all_off_dbm,rssi_final_dbm,gain_db\n");
}

TEST_CASE("locations csv is stable to the digit") {
  LocationRow p;
  p.location = "desk";
  p.cb_id = "desk";
  p.rssi_dbm = -41.0078125;
  p.diag_is_row_max = true;

  LocationRow q;
  q.location = "desk";
  q.cb_id = "shelf";
  q.rssi_dbm = -47.25;
  q.diag_is_row_max = true;

  LocationRow r;
  r.location = "shelf";
  r.cb_id = "desk";
  r.rssi_dbm = -52.5;
  r.diag_is_row_max = false;

  const std::string expected =
      "location,cb_id,rssi_dbm,diag_is_row_max\n"
      "desk,desk,-41.007812,1\n"
      "desk,shelf,-47.250000,1\n"
      "shelf,desk,-52.500000,0\n";
  REQUIRE(locations_csv({p, q, r}) == expected);
}

TEST_CASE("cross-location matrix is square, ordered, and self-consistent") {
  const json doc = json::parse(R"({
    "grid": {"rows": 4, "cols": 4},
    "locations": [
      {"id": "LocA", "path_loss_db": 40.0, "seed": 101},
      {"id": "LocB", "path_loss_db": 42.0, "seed": 202},
      {"id": "LocC", "path_loss_db": 44.0, "seed": 303}
    ],
    "algorithms": ["bench2"],
    "seeds": [1]
  })");
  const Scenario sc = Scenario::from_json(doc);
  const std::vector<LocationRow> rows = run_locations(sc);
  REQUIRE(rows.size() == 9);

  const std::vector<std::string> ids = {"LocA", "LocB", "LocC"};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(rows[3 * i + j].location == ids[i]);
      REQUIRE(rows[3 * i + j].cb_id == ids[j]);
    }

  // Rebuild the codebooks the same way the driver does and check every
  // matrix entry against the noiseless cascade evaluation.
  std::vector<ChannelRealization> chans;
  std::vector<Codebook> cbs;
  for (std::size_t i = 0; i < 3; ++i) {
    ChannelRealization chan = sc.realize(i, 0, false);
    OracleConfig ocfg = sc.oracle;
    ocfg.noise_seed = sc.locations[i].channel.seed;
    SimOracle oracle(chan, ocfg);
    cbs.push_back(run_benchmark2(oracle, sc.grid).final_codebook);
    chans.push_back(std::move(chan));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double row_max = -1e300;
    for (std::size_t j = 0; j < 3; ++j) {
      const double expect = cascade_gain(chans[i], cbs[j]).dbm(sc.tx_power_dbm);
      REQUIRE(rows[3 * i + j].rssi_dbm == expect);
      row_max = std::max(row_max, expect);
    }
    const bool diag_max = rows[3 * i + i].rssi_dbm >= row_max;
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(rows[3 * i + j].diag_is_row_max == diag_max);
  }

  const std::vector<LocationRow> again = run_locations(sc);
  REQUIRE(again.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(again[k].location == rows[k].location);
    REQUIRE(again[k].cb_id == rows[k].cb_id);
    REQUIRE(again[k].rssi_dbm == rows[k].rssi_dbm);
    REQUIRE(again[k].diag_is_row_max == rows[k].diag_is_row_max);
  }
}

TEST_CASE("cross-location matrix needs two locations") {
  const Scenario sc = Scenario::from_json(minimal_doc());
  REQUIRE_THROWS_AS(run_locations(sc), ScenarioError);
}

TEST_CASE("run command writes csv and reports exit codes") {
  const json doc = json::parse(R"({
    "grid": {"rows": 2, "cols": 2},
    "locations": [{"id": "A", "path_loss_db": 30.0, "seed": 9}],
    "algorithms": ["bench2"],
    "seeds": [1, 2]
  })");
  const std::string scenario = test::temp_path("cmd_run_scenario.json");
  const std::string out_path = test::temp_path("cmd_run_out.csv");
  write_text(scenario, doc.dump());

  std::ostringstream err;
  REQUIRE(cmd_run(scenario, out_path, err) == exit_code::kOk);
  REQUIRE(err.str().empty());
  const std::string csv = read_text(out_path);
  const std::vector<std::string> lines = lines_of(csv);
  REQUIRE(lines.size() == 3);
  REQUIRE(lines[0] ==
          "seed,algorithm,rows,cols,n,i,queries,rssi_all_off_dbm,rssi_final_dbm,gain_db");
  REQUIRE(starts_with(lines[1], "1,bench2,2,2,4,,17,"));
  REQUIRE(starts_with(lines[2], "2,bench2,2,2,4,,17,"));

  SECTION("reruns produce identical bytes") {
    const std::string out2 = test::temp_path("cmd_run_out2.csv");
    REQUIRE(cmd_run(scenario, out2, err) == exit_code::kOk);
    REQUIRE(read_text(out2) == csv);
    std::filesystem::remove(out2);
  }

  SECTION("a missing scenario file is an io failure") {
    std::ostringstream err2;
    REQUIRE(cmd_run(test::temp_path("really_absent.json"), out_path, err2) == exit_code::kIo);
    REQUIRE(err2.str().find("cannot open scenario file") != std::string::npos);
  }

  SECTION("an unparseable scenario file is a config failure") {
    const std::string bad = test::temp_path("cmd_run_bad.json");
    write_text(bad, "[not json");
    std::ostringstream err2;
    REQUIRE(cmd_run(bad, out_path, err2) == exit_code::kConfig);
    std::filesystem::remove(bad);
  }

  SECTION("a well-formed but invalid scenario is a config failure") {
    json invalid = doc;
    invalid["seeds"] = json::array();
    const std::string bad = test::temp_path("cmd_run_invalid.json");
    write_text(bad, invalid.dump());
    std::ostringstream err2;
    REQUIRE(cmd_run(bad, out_path, err2) == exit_code::kConfig);
    REQUIRE(err2.str().find("ris-lab:") != std::string::npos);
    std::filesystem::remove(bad);
  }

  SECTION("an unwritable output path is an io failure") {
    std::ostringstream err2;
    REQUIRE(cmd_run(scenario, "/nonexistent_dir_rislab/out.csv", err2) == exit_code::kIo);
    REQUIRE(err2.str().find("cannot open output file") != std::string::npos);
  }

  std::filesystem::remove(scenario);
  std::filesystem::remove(out_path);
}

TEST_CASE("locations command mirrors the exit-code contract") {
  const json doc = json::parse(R"({
    "grid": {"rows": 2, "cols": 2},
    "locations": [
      {"id": "A", "path_loss_db": 30.0, "seed": 9},
      {"id": "B", "path_loss_db": 33.0, "seed": 10}
    ],
    "algorithms": ["bench2"],
    "seeds": [1]
  })");
  const std::string scenario = test::temp_path("cmd_loc_scenario.json");
  const std::string out_path = test::temp_path("cmd_loc_out.csv");
  write_text(scenario, doc.dump());

  std::ostringstream err;
  REQUIRE(cmd_locations(scenario, out_path, err) == exit_code::kOk);
  const std::vector<std::string> lines = lines_of(read_text(out_path));
  REQUIRE(lines.size() == 5);
  REQUIRE(lines[0] == "location,cb_id,rssi_dbm,diag_is_row_max");
  REQUIRE(starts_with(lines[1], "A,A,"));
  REQUIRE(starts_with(lines[2], "A,B,"));
  REQUIRE(starts_with(lines[3], "B,A,"));
  REQUIRE(starts_with(lines[4], "B,B,"));

  SECTION("one location cannot make a matrix") {
    json single = doc;
    single["locations"] = json::parse(R"([{"id": "A", "seed": 9}])");
    const std::string lone = test::temp_path("cmd_loc_single.json");
    write_text(lone, single.dump());
    std::ostringstream err2;
    REQUIRE(cmd_locations(lone, out_path, err2) == exit_code::kConfig);
    REQUIRE(err2.str().find("at least two locations") != std::string::npos);
    std::filesystem::remove(lone);
  }

  std::filesystem::remove(scenario);
  std::filesystem::remove(out_path);
}

TEST_CASE("endpoint strings parse with loopback defaults") {
  const auto [h1, p1] = parse_endpoint("localhost:8080");
  REQUIRE(h1 == "127.0.0.1");
  REQUIRE(p1 == 8080);

  const auto [h2, p2] = parse_endpoint(":9");
  REQUIRE(h2 == "127.0.0.1");
  REQUIRE(p2 == 9);

  const auto [h3, p3] = parse_endpoint("10.0.0.5:65535");
  REQUIRE(h3 == "10.0.0.5");
  REQUIRE(p3 == 65535);

  REQUIRE_THROWS_AS(parse_endpoint("nocolon"), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint("host:"), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint(""), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint("host:abc"), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint("host:12x"), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint("host:70000"), ScenarioError);
  REQUIRE_THROWS_AS(parse_endpoint("host:-1"), ScenarioError);
}

TEST_CASE("repl drives a live lab end to end") {
  const GridSpec grid = GridSpec::full(3, 3);
  ChannelSpec cspec;
  cspec.kind = FadingKind::kRayleigh;
  cspec.path_loss_db = 20.0;
  cspec.seed = 91;
  ChannelRealization chan = generate_channel(cspec, grid.n_controllable());
  OracleConfig ocfg;  // noiseless analytic

  test::Lab lab(test::Transport::kPipe, grid, std::move(chan), ocfg, "repl_store.json");

  std::istringstream script(
      "list\n"
      "gen LocA bench2\n"
      "apply LocA\n"
      "rssi\n"
      "save Copy\n"
      "list\n"
      "delete Copy\n"
      "list\n"
      "apply Nowhere\n"
      "gen LocB\n"
      "bogus\n"
      "help\n"
      "\n"
      "quit\n");
  std::ostringstream out;
  const int rc = repl_loop(lab.user(), script, out);
  REQUIRE(rc == exit_code::kOk);

  const std::vector<std::string> lines = lines_of(out.str());
  REQUIRE(lines.size() == 12);
  REQUIRE(lines[0] == "(empty)");

  const std::string gen_prefix = "gen_done location=LocA queries=25 rssi_dbm=";
  REQUIRE(starts_with(lines[1], gen_prefix));
  const std::string rssi_text = lines[1].substr(gen_prefix.size());
  REQUIRE(!rssi_text.empty());

  REQUIRE(lines[2] == "ok");
  // The applied codebook is the generated one; a noiseless measurement
  // reproduces the reported value digit for digit.
  REQUIRE(lines[3] == rssi_text + " dBm");
  REQUIRE(lines[4] == "ok");
  REQUIRE(lines[5] == "Copy LocA");
  REQUIRE(lines[6] == "ok");
  REQUIRE(lines[7] == "LocA");
  REQUIRE(starts_with(lines[8], "error unknown_location"));
  REQUIRE(lines[9] == "usage: gen <loc> <algorithm>");
  REQUIRE(lines[10] == "unknown command \"bogus\" (try help)");
  REQUIRE(starts_with(lines[11], "commands: gen <loc> <algorithm>"));

  lab.shutdown();
  std::filesystem::remove(lab.store_path());
}

TEST_CASE("repl connect failures exit with the right codes") {
  std::istringstream in("quit\n");
  std::ostringstream out, err;
  REQUIRE(cmd_repl("definitely-not-an-endpoint", in, out, err) == exit_code::kConfig);

  // Grab a port that nothing listens on by releasing a fresh listener.
  std::uint16_t free_port = 0;
  {
    TcpListener probe;
    free_port = probe.port();
  }
  std::ostringstream err2;
  REQUIRE(cmd_repl("127.0.0.1:" + std::to_string(free_port), in, out, err2) == exit_code::kIo);
  REQUIRE(!err2.str().empty());
}

TEST_CASE("agent command validates role and scenario before connecting") {
  std::ostringstream err;
  REQUIRE(cmd_agent("controller", "127.0.0.1:1", "", "store.json", err) == exit_code::kConfig);
  REQUIRE(err.str().find("agent role must be ris or rx") != std::string::npos);

  std::ostringstream err2;
  REQUIRE(cmd_agent("rx", "127.0.0.1:1", "", "", err2) == exit_code::kConfig);
  REQUIRE(err2.str().find("--scenario") != std::string::npos);

  std::ostringstream err3;
  REQUIRE(cmd_agent("ris", "no-port-here", "", "store.json", err3) == exit_code::kConfig);

  std::uint16_t free_port = 0;
  {
    TcpListener probe;
    free_port = probe.port();
  }
  std::ostringstream err4;
  REQUIRE(cmd_agent("ris", "127.0.0.1:" + std::to_string(free_port), "",
                    test::temp_path("agent_store.json"), err4) == exit_code::kIo);
}
