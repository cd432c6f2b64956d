#pragma once

// Experiment configuration: one JSON document fully determines every
// output (panel geometry, per-location channels, oracle settings,
// algorithm and seed lists). Defaults reproduce the reference setup: an
// 8 x 10 panel with a 2 x 2 controller block (76 controllable elements)
// and -10 dBm transmit power.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rislab/channel.hpp"
#include "rislab/core.hpp"
#include "rislab/oracle.hpp"
#include "rislab/search.hpp"

namespace rislab {

// Invalid configuration (exit code 2 at the CLI).
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble (exit code 3 at the CLI).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct LocationSpec {
  std::string id;
  ChannelSpec channel;
};

struct Scenario {
  GridSpec grid = default_grid();
  double tx_power_dbm = -10.0;
  double noise_power_dbm = -std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  std::complex<double> background{0.0, 0.0};
  OracleConfig oracle;  // noise_seed is overridden per run
  std::vector<LocationSpec> locations;
  std::vector<AlgorithmId> algorithms;
  std::vector<std::uint64_t> seeds;
  std::uint64_t random_budget = 200;

  // 8 x 10 panel, 2 x 2 controller block in the bottom-right corner.
  static GridSpec default_grid() { return GridSpec::with_blocked_rect(8, 10, 6, 8, 2, 2); }

  void validate() const {
    if (grid.n_controllable() < 1)
      throw ScenarioError("grid has no controllable elements");
    if (locations.empty()) throw ScenarioError("scenario needs at least one location");
    if (algorithms.empty()) throw ScenarioError("scenario needs at least one algorithm");
    if (seeds.empty()) throw ScenarioError("scenario needs at least one seed");
    std::set<std::uint64_t> seen_seeds(seeds.begin(), seeds.end());
    if (seen_seeds.size() != seeds.size()) throw ScenarioError("seeds must be distinct");
    std::set<std::string> seen_ids;
    for (const LocationSpec& loc : locations) {
      if (loc.id.empty() || loc.id.size() > 64)
        throw ScenarioError("location id must be 1..64 characters");
      if (!seen_ids.insert(loc.id).second)
        throw ScenarioError("duplicate location id \"" + loc.id + "\"");
      if (loc.channel.kind == FadingKind::kRician && loc.channel.rician_k < 0.0)
        throw ScenarioError("rician_k must be nonnegative at \"" + loc.id + "\"");
    }
    if (random_budget < 1) throw ScenarioError("random_budget must be >= 1");
    try {
      oracle.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }

  // Instantiates the channel for one location, optionally replacing the
  // location's seed (the per-run seed in sweeps).
  ChannelRealization realize(std::size_t location_index, std::uint64_t seed_override,
                             bool use_override) const {
    if (location_index >= locations.size())
      throw ScenarioError("location index out of range");
    ChannelSpec spec = locations[location_index].channel;
    if (use_override) spec.seed = seed_override;
    ChannelRealization chan = generate_channel(spec, grid.n_controllable());
    chan.alpha = alpha;
    chan.background = background;
    chan.tx_power_dbm = tx_power_dbm;
    chan.noise_power_dbm = noise_power_dbm;
    return chan;
  }

  static Scenario from_json(const nlohmann::json& doc);
  static Scenario load(const std::string& path);
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (known.find(key) == known.end())
      throw ScenarioError("unknown key \"" + key + "\" in " + where);
}

inline double number_at(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ScenarioError(std::string(key) + " must be a number");
  return obj.at(key).get<double>();
}

}  // namespace detail

inline Scenario Scenario::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  detail::require_keys(doc,
                       {"grid", "tx_power_dbm", "noise_power_dbm", "alpha", "background",
                        "oracle", "locations", "algorithms", "seeds", "random_budget"},
                       "scenario");
  Scenario sc;

  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    detail::require_keys(g, {"rows", "cols", "blocked"}, "grid");
    const int rows = g.value("rows", 8);
    const int cols = g.value("cols", 10);
    if (rows < 1 || cols < 1) throw ScenarioError("grid dimensions must be >= 1");
    GridSpec grid = GridSpec::full(rows, cols);
    if (g.contains("blocked")) {
      if (!g.at("blocked").is_array()) throw ScenarioError("grid.blocked must be an array");
      for (const auto& rect : g.at("blocked")) {
        if (!rect.is_array() || rect.size() != 4)
          throw ScenarioError("grid.blocked entries are [row, col, height, width]");
        const int r0 = rect[0].get<int>(), c0 = rect[1].get<int>();
        const int bh = rect[2].get<int>(), bw = rect[3].get<int>();
        if (r0 < 0 || c0 < 0 || bh < 0 || bw < 0 || r0 + bh > rows || c0 + bw > cols)
          throw ScenarioError("grid.blocked rect out of bounds");
        for (int r = r0; r < r0 + bh; ++r)
          for (int c = c0; c < c0 + bw; ++c) grid.block_cell(r, c);
      }
    }
    sc.grid = grid;
  }

  sc.tx_power_dbm = detail::number_at(doc, "tx_power_dbm", sc.tx_power_dbm);
  if (doc.contains("noise_power_dbm")) {
    if (doc.at("noise_power_dbm").is_null())
      sc.noise_power_dbm = -std::numeric_limits<double>::infinity();
    else
      sc.noise_power_dbm = detail::number_at(doc, "noise_power_dbm", sc.noise_power_dbm);
  }
  sc.alpha = detail::number_at(doc, "alpha", sc.alpha);
  if (doc.contains("background")) {
    const auto& b = doc.at("background");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      throw ScenarioError("background must be [re, im]");
    sc.background = {b[0].get<double>(), b[1].get<double>()};
  }

  if (doc.contains("oracle")) {
    const auto& o = doc.at("oracle");
    detail::require_keys(o,
                         {"mode", "measurement_noise_db", "frames", "samples_per_frame",
                          "modulation_order", "noise_seed"},
                         "oracle");
    const std::string mode = o.value("mode", std::string("analytic"));
    if (mode == "analytic")
      sc.oracle.mode = OracleMode::kAnalytic;
    else if (mode == "empirical")
      sc.oracle.mode = OracleMode::kEmpirical;
    else
      throw ScenarioError("oracle.mode must be analytic or empirical");
    sc.oracle.measurement_noise_db =
        detail::number_at(o, "measurement_noise_db", sc.oracle.measurement_noise_db);
    sc.oracle.frame_config.frames = o.value("frames", sc.oracle.frame_config.frames);
    sc.oracle.frame_config.samples_per_frame =
        o.value("samples_per_frame", sc.oracle.frame_config.samples_per_frame);
    sc.oracle.frame_config.modulation_order =
        o.value("modulation_order", sc.oracle.frame_config.modulation_order);
    sc.oracle.noise_seed = o.value("noise_seed", sc.oracle.noise_seed);
  }

  if (!doc.contains("locations")) throw ScenarioError("scenario needs a locations array");
  if (!doc.at("locations").is_array()) throw ScenarioError("locations must be an array");
  for (const auto& l : doc.at("locations")) {
    detail::require_keys(l, {"id", "fading", "rician_k", "path_loss_db", "seed"}, "location");
    LocationSpec loc;
    if (!l.contains("id") || !l.at("id").is_string())
      throw ScenarioError("every location needs a string id");
    loc.id = l.at("id").get<std::string>();
    const std::string fading = l.value("fading", std::string("rayleigh"));
    try {
      loc.channel.kind = fading_kind_from_string(fading);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
    loc.channel.rician_k = detail::number_at(l, "rician_k", 0.0);
    loc.channel.path_loss_db = detail::number_at(l, "path_loss_db", 0.0);
    loc.channel.seed = l.value("seed", std::uint64_t{1});
    sc.locations.push_back(std::move(loc));
  }

  if (!doc.contains("algorithms")) throw ScenarioError("scenario needs an algorithms array");
  for (const auto& a : doc.at("algorithms")) {
    if (!a.is_string()) throw ScenarioError("algorithms must be strings");
    try {
      sc.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }

  if (!doc.contains("seeds")) throw ScenarioError("scenario needs a seeds array");
  for (const auto& s : doc.at("seeds")) {
    if (!s.is_number_unsigned()) throw ScenarioError("seeds must be nonnegative integers");
    sc.seeds.push_back(s.get<std::uint64_t>());
  }

  if (doc.contains("random_budget")) {
    if (!doc.at("random_budget").is_number_unsigned())
      throw ScenarioError("random_budget must be a nonnegative integer");
    sc.random_budget = doc.at("random_budget").get<std::uint64_t>();
  }

  sc.validate();
  return sc;
}

inline Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("scenario file " + path + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

}  // namespace rislab
