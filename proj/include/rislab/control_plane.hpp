#pragma once

// Networked workflow: a broker drives codebook generation against two
// remote agents and serves a user client.
//
//   user client ── broker ──┬── ris agent (codebook store + live surface)
//                           └── rx agent  (channel + RSSI measurements)
//
// During generation every oracle measure becomes three request/reply
// exchanges: set_codebook -> ris (the surface), set_codebook -> rx (the
// rx-side view of the surface; over the air both see the same state), and
// rssi_request -> rx. On completion the broker pushes the final codebook
// to both agents, saves it at the ris agent, and reports gen_done. From
// then on the stored codebook serves without any broker -> ris traffic;
// ris_messages_sent() exposes the audit counter that proves it.
//
// Each peer answers every request with exactly one ack / error / response
// carrying the request's seq in of_seq. The broker retries a timed-out
// request once (fresh seq), then fails the operation with agent_lost. At
// most one generation runs at a time; user requests arriving mid-run are
// answered with error(code=busy).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rislab/core.hpp"
#include "rislab/oracle.hpp"
#include "rislab/protocol.hpp"
#include "rislab/search.hpp"
#include "rislab/store.hpp"
#include "rislab/transport.hpp"

namespace rislab {

// The lowest representable RSSI on the wire; JSON has no -inf.
inline constexpr double kRssiFloorDbm = -400.0;

// A peer answered a request with error(code, text).
class PeerError : public std::runtime_error {
 public:
  PeerError(std::string code, const std::string& text)
      : std::runtime_error(code + ": " + text), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// A peer failed to answer within the timeout, retry included.
class AgentTimeout : public std::runtime_error {
 public:
  explicit AgentTimeout(const std::string& what) : std::runtime_error(what) {}
};

// One protocol endpoint: a connection plus the outgoing seq counter and
// the incoming strict-monotonicity check. Not thread-safe; each endpoint
// belongs to one message loop.
class Endpoint {
 public:
  explicit Endpoint(std::unique_ptr<Connection> conn) : conn_(std::move(conn)) {}

  std::uint64_t send(MessageType type, Json payload) {
    ControlMessage msg{type, next_seq_, std::move(payload)};
    conn_->send_line(encode(msg));
    return next_seq_++;
  }

  std::optional<ControlMessage> recv(std::chrono::milliseconds timeout) {
    const auto line = conn_->recv_line(timeout);
    if (!line) return std::nullopt;
    ControlMessage msg = decode(*line);
    if (msg.seq <= last_in_seq_)
      throw ProtocolError("seq " + std::to_string(msg.seq) + " not increasing (last " +
                              std::to_string(last_in_seq_) + ")",
                          0);
    last_in_seq_ = msg.seq;
    return msg;
  }

  void close() { conn_->close(); }

 private:
  std::unique_ptr<Connection> conn_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t last_in_seq_ = 0;
};

namespace detail {

inline Json error_payload(std::uint64_t of_seq, const char* code, const std::string& text) {
  Json p;
  p["of_seq"] = of_seq;
  p["code"] = code;
  p["text"] = text;
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Surface-controller agent: owns the persistent store and the live state.

class RisAgent {
 public:
  RisAgent(std::unique_ptr<Connection> conn, std::string store_path)
      : ep_(std::move(conn)),
        store_path_(std::move(store_path)),
        store_(CodebookStore::load(store_path_)) {}

  // Serves until the connection closes. live()/store() are safe to
  // inspect only after run() has returned.
  void run(std::chrono::milliseconds poll = std::chrono::milliseconds(50)) {
    Json hello;
    hello["role"] = "ris";
    ep_.send(MessageType::kHello, hello);
    for (;;) {
      std::optional<ControlMessage> msg;
      try {
        msg = ep_.recv(poll);
      } catch (const ConnectionClosed&) {
        return;
      } catch (const ProtocolError& e) {
        ep_.send(MessageType::kError, detail::error_payload(0, error_code::kBadRequest, e.what()));
        continue;
      }
      if (!msg) continue;
      try {
        handle(*msg);
      } catch (const ConnectionClosed&) {
        return;
      }
    }
  }

  const std::optional<Codebook>& live() const { return live_; }
  const CodebookStore& store() const { return store_; }

 private:
  void handle(const ControlMessage& msg) {
    Json ack;
    ack["of_seq"] = msg.seq;
    switch (msg.type) {
      case MessageType::kSetCodebook:
        live_ = parse_text(msg.payload.at("codebook").get<std::string>());
        ep_.send(MessageType::kAck, ack);
        return;
      case MessageType::kSaveCb: {
        const std::string id = msg.payload.at("location_id").get<std::string>();
        store_.put(id, parse_text(msg.payload.at("codebook").get<std::string>()));
        store_.save(store_path_);
        ep_.send(MessageType::kAck, ack);
        return;
      }
      case MessageType::kApplyCb: {
        const std::string id = msg.payload.at("location_id").get<std::string>();
        const Codebook* cb = store_.find(id);
        if (cb == nullptr) {
          ep_.send(MessageType::kError,
                   detail::error_payload(msg.seq, error_code::kUnknownLocation,
                                         "no codebook stored for \"" + id + "\""));
          return;
        }
        live_ = *cb;
        ep_.send(MessageType::kAck, ack);
        return;
      }
      case MessageType::kDeleteCb: {
        const std::string id = msg.payload.at("location_id").get<std::string>();
        if (!store_.erase(id)) {
          ep_.send(MessageType::kError,
                   detail::error_payload(msg.seq, error_code::kUnknownLocation,
                                         "no codebook stored for \"" + id + "\""));
          return;
        }
        store_.save(store_path_);
        ep_.send(MessageType::kAck, ack);
        return;
      }
      case MessageType::kListCb: {
        Json reply;
        reply["location_ids"] = store_.ids();
        reply["of_seq"] = msg.seq;
        ep_.send(MessageType::kCbList, reply);
        return;
      }
      default:
        ep_.send(MessageType::kError,
                 detail::error_payload(msg.seq, error_code::kBadRequest,
                                       "unexpected " + to_string(msg.type) + " at ris agent"));
    }
  }

  Endpoint ep_;
  std::string store_path_;
  CodebookStore store_;
  std::optional<Codebook> live_;
};

// ---------------------------------------------------------------------------
// Receiver agent: holds the over-the-air view of the surface and answers
// RSSI requests from its own measurement oracle.

class RxAgent {
 public:
  RxAgent(std::unique_ptr<Connection> conn, GridSpec grid, ChannelRealization chan,
          OracleConfig ocfg)
      : ep_(std::move(conn)),
        grid_(std::move(grid)),
        oracle_(std::move(chan), ocfg),
        air_(Codebook::all_off(grid_)) {}

  void run(std::chrono::milliseconds poll = std::chrono::milliseconds(50)) {
    // The hello advertises the panel geometry as an all-off codebook text.
    Json hello;
    hello["role"] = "rx";
    hello["grid"] = to_text(air_);
    ep_.send(MessageType::kHello, hello);
    for (;;) {
      std::optional<ControlMessage> msg;
      try {
        msg = ep_.recv(poll);
      } catch (const ConnectionClosed&) {
        return;
      } catch (const ProtocolError& e) {
        ep_.send(MessageType::kError, detail::error_payload(0, error_code::kBadRequest, e.what()));
        continue;
      }
      if (!msg) continue;
      try {
        handle(*msg);
      } catch (const ConnectionClosed&) {
        return;
      }
    }
  }

  // RSSI requests served so far (readable while running).
  std::uint64_t rssi_queries_served() const { return served_.load(); }

 private:
  void handle(const ControlMessage& msg) {
    switch (msg.type) {
      case MessageType::kSetCodebook: {
        Codebook cb = parse_text(msg.payload.at("codebook").get<std::string>());
        if (cb.rows() != grid_.rows() || cb.cols() != grid_.cols() ||
            cb.grid().mask() != grid_.mask()) {
          ep_.send(MessageType::kError,
                   detail::error_payload(msg.seq, error_code::kBadRequest,
                                         "codebook does not match the panel geometry"));
          return;
        }
        air_ = std::move(cb);
        Json ack;
        ack["of_seq"] = msg.seq;
        ep_.send(MessageType::kAck, ack);
        return;
      }
      case MessageType::kRssiRequest: {
        const double rssi = std::max(oracle_.measure(air_), kRssiFloorDbm);
        served_.fetch_add(1);
        Json reply;
        reply["rssi_dbm"] = rssi;
        reply["frames"] = oracle_.config().mode == OracleMode::kEmpirical
                              ? oracle_.config().frame_config.frames
                              : 1;
        reply["of_seq"] = msg.seq;
        ep_.send(MessageType::kRssiResponse, reply);
        return;
      }
      default:
        ep_.send(MessageType::kError,
                 detail::error_payload(msg.seq, error_code::kBadRequest,
                                       "unexpected " + to_string(msg.type) + " at rx agent"));
    }
  }

  Endpoint ep_;
  GridSpec grid_;
  SimOracle oracle_;
  Codebook air_;
  std::atomic<std::uint64_t> served_{0};
};

// ---------------------------------------------------------------------------
// Broker

struct BrokerOptions {
  std::chrono::milliseconds request_timeout{5000};
  std::chrono::milliseconds poll_interval{20};
};

class Broker {
 public:
  explicit Broker(BrokerOptions opt = {}) : opt_(opt) {}

  // Reads the peer's hello and registers it under its role.
  void attach(std::unique_ptr<Connection> conn) {
    Endpoint ep(std::move(conn));
    std::optional<ControlMessage> hello;
    try {
      hello = ep.recv(opt_.request_timeout);
    } catch (const ConnectionClosed&) {
      throw std::runtime_error("peer closed before hello");
    }
    if (!hello || hello->type != MessageType::kHello)
      throw std::runtime_error("peer did not send hello");
    const std::string role = hello->payload.at("role").get<std::string>();
    if (role == "user") {
      if (user_) throw std::runtime_error("duplicate user connection");
      user_ = std::make_unique<Endpoint>(std::move(ep));
    } else if (role == "ris") {
      if (ris_) throw std::runtime_error("duplicate ris connection");
      ris_ = std::make_unique<Endpoint>(std::move(ep));
    } else {
      if (rx_) throw std::runtime_error("duplicate rx connection");
      if (hello->payload.contains("grid"))
        rx_grid_ = parse_text(hello->payload.at("grid").get<std::string>()).grid();
      rx_ = std::make_unique<Endpoint>(std::move(ep));
    }
  }

  bool has_user() const { return user_ != nullptr; }
  bool has_ris() const { return ris_ != nullptr; }
  bool has_rx() const { return rx_ != nullptr; }

  // Messages sent toward the ris agent since startup (the isolation audit).
  std::uint64_t ris_messages_sent() const { return ris_sent_.load(); }

  // Serves user requests until the user connection closes.
  void run() {
    if (!user_) throw std::runtime_error("broker has no user connection");
    for (;;) {
      std::optional<ControlMessage> msg;
      try {
        msg = user_->recv(opt_.poll_interval);
      } catch (const ConnectionClosed&) {
        return;
      } catch (const ProtocolError& e) {
        if (!send_user_error(0, error_code::kBadRequest, e.what())) return;
        continue;
      }
      if (!msg) continue;
      try {
        handle_user(*msg);
      } catch (const ConnectionClosed&) {
        return;  // user gone
      } catch (const ProtocolError& e) {
        if (!send_user_error(msg->seq, error_code::kBadRequest, e.what())) return;
      }
    }
  }

 private:
  // --- plumbing toward agents ------------------------------------------

  std::uint64_t send_to(Endpoint& peer, MessageType type, const Json& payload) {
    if (&peer == ris_.get()) ris_sent_.fetch_add(1);
    return peer.send(type, payload);
  }

  // One request/reply exchange with a single retry after timeout.
  ControlMessage request(Endpoint& peer, MessageType type, const Json& payload) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::uint64_t seq = send_to(peer, type, payload);
      const auto deadline = std::chrono::steady_clock::now() + opt_.request_timeout;
      for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        const auto reply = peer.recv(left);
        if (!reply) break;
        const std::uint64_t of = reply->payload.value("of_seq", std::uint64_t{0});
        if (of != seq) continue;  // stale reply from a timed-out attempt
        if (reply->type == MessageType::kError)
          throw PeerError(reply->payload.at("code").get<std::string>(),
                          reply->payload.at("text").get<std::string>());
        return *reply;
      }
    }
    throw AgentTimeout("agent did not answer " + to_string(type) + " after retry");
  }

  ControlMessage request_ris(MessageType type, const Json& payload) {
    if (!ris_) throw AgentTimeout("no ris agent connected");
    return request(*ris_, type, payload);
  }

  ControlMessage request_rx(MessageType type, const Json& payload) {
    if (!rx_) throw AgentTimeout("no rx agent connected");
    return request(*rx_, type, payload);
  }

  // --- user-side helpers -----------------------------------------------

  // false if the user connection is gone.
  bool send_user_error(std::uint64_t of_seq, const char* code, const std::string& text) {
    try {
      user_->send(MessageType::kError, detail::error_payload(of_seq, code, text));
      return true;
    } catch (const ConnectionClosed&) {
      return false;
    }
  }

  // While a generation runs, queued user requests are refused, not queued.
  void drain_user_busy() {
    for (;;) {
      std::optional<ControlMessage> queued;
      try {
        queued = user_->recv(std::chrono::milliseconds(0));
      } catch (const ProtocolError&) {
        continue;
      }
      if (!queued) return;
      send_user_error(queued->seq, error_code::kBusy, "a generation session is active");
    }
  }

  // --- generation ------------------------------------------------------

  // Realizes the oracle interface over the wire; counts rssi exchanges.
  class WireOracle : public RssiOracleBase {
   public:
    explicit WireOracle(Broker& broker) : broker_(broker) {}

    double measure(const Codebook& cb) override {
      broker_.drain_user_busy();
      Json set;
      set["codebook"] = to_text(cb);
      broker_.request_ris(MessageType::kSetCodebook, set);
      broker_.request_rx(MessageType::kSetCodebook, set);
      const ControlMessage reply = broker_.request_rx(MessageType::kRssiRequest, Json::object());
      if (reply.type != MessageType::kRssiResponse)
        throw ProtocolError("rssi_request answered by " + to_string(reply.type), 0);
      const double rssi = reply.payload.at("rssi_dbm").get<double>();
      ++log_.count;
      log_.trajectory.push_back({log_.count, digest(cb), rssi});
      return rssi;
    }

    void reset() override { log_ = {}; }
    std::uint64_t query_count() const override { return log_.count; }
    QueryLog take_trajectory() const override { return log_; }

   private:
    Broker& broker_;
    QueryLog log_;
  };

  void handle_gen_request(const ControlMessage& msg) {
    const std::string location_id = msg.payload.at("location_id").get<std::string>();
    const std::string algorithm_id = msg.payload.at("algorithm_id").get<std::string>();
    AlgorithmId alg;
    try {
      alg = algorithm_from_string(algorithm_id);
    } catch (const std::invalid_argument& e) {
      send_user_error(msg.seq, error_code::kBadAlgorithm, e.what());
      return;
    }
    if (alg != AlgorithmId::kAlg1 && alg != AlgorithmId::kBench1 && alg != AlgorithmId::kBench2) {
      send_user_error(msg.seq, error_code::kBadAlgorithm,
                      "algorithm " + algorithm_id + " is not generatable over the wire");
      return;
    }
    if (!rx_grid_) {
      send_user_error(msg.seq, error_code::kAgentLost, "no rx agent advertised a panel");
      return;
    }
    try {
      validate_location_id(location_id);
    } catch (const std::invalid_argument& e) {
      send_user_error(msg.seq, error_code::kBadRequest, e.what());
      return;
    }

    generating_ = true;
    try {
      WireOracle oracle(*this);
      SearchReport report = [&] {
        switch (alg) {
          case AlgorithmId::kBench1: return run_benchmark1(oracle, *rx_grid_);
          case AlgorithmId::kBench2: return run_benchmark2(oracle, *rx_grid_);
          default: return run_alg1(oracle, *rx_grid_);
        }
      }();
      const std::string text = to_text(report.final_codebook);
      Json set;
      set["codebook"] = text;
      request_ris(MessageType::kSetCodebook, set);
      request_rx(MessageType::kSetCodebook, set);
      Json save;
      save["location_id"] = location_id;
      save["codebook"] = text;
      request_ris(MessageType::kSaveCb, save);
      generating_ = false;

      Json done;
      done["location_id"] = location_id;
      done["queries"] = oracle.query_count();
      done["rssi_dbm"] = report.final_rssi_dbm;
      done["of_seq"] = msg.seq;
      done["codebook"] = text;
      user_->send(MessageType::kGenDone, done);
    } catch (const PeerError& e) {
      generating_ = false;
      send_user_error(msg.seq, e.code().c_str(), e.what());
    } catch (const AgentTimeout& e) {
      generating_ = false;
      send_user_error(msg.seq, error_code::kAgentLost, e.what());
    } catch (const ConnectionClosed&) {
      generating_ = false;
      send_user_error(msg.seq, error_code::kAgentLost, "agent disconnected mid-run");
    } catch (const ProtocolError& e) {
      generating_ = false;
      send_user_error(msg.seq, error_code::kBadRequest, e.what());
    }
  }

  // Relay a store operation to the ris agent and translate the outcome.
  void relay_to_ris(const ControlMessage& msg) {
    try {
      const ControlMessage reply = request_ris(msg.type, msg.payload);
      if (reply.type == MessageType::kCbList) {
        Json out;
        out["location_ids"] = reply.payload.at("location_ids");
        out["of_seq"] = msg.seq;
        user_->send(MessageType::kCbList, out);
      } else {
        Json out;
        out["of_seq"] = msg.seq;
        user_->send(MessageType::kAck, out);
      }
    } catch (const PeerError& e) {
      send_user_error(msg.seq, e.code().c_str(), e.what());
    } catch (const AgentTimeout& e) {
      send_user_error(msg.seq, error_code::kAgentLost, e.what());
    }
  }

  void handle_rssi_request(const ControlMessage& msg) {
    try {
      const ControlMessage reply = request_rx(MessageType::kRssiRequest, Json::object());
      Json out;
      out["rssi_dbm"] = reply.payload.at("rssi_dbm");
      out["frames"] = reply.payload.at("frames");
      out["of_seq"] = msg.seq;
      user_->send(MessageType::kRssiResponse, out);
    } catch (const PeerError& e) {
      send_user_error(msg.seq, e.code().c_str(), e.what());
    } catch (const AgentTimeout& e) {
      send_user_error(msg.seq, error_code::kAgentLost, e.what());
    }
  }

  void handle_user(const ControlMessage& msg) {
    switch (msg.type) {
      case MessageType::kGenRequest:
        handle_gen_request(msg);
        return;
      case MessageType::kApplyCb:
      case MessageType::kSaveCb:
      case MessageType::kDeleteCb:
      case MessageType::kListCb:
        relay_to_ris(msg);
        return;
      case MessageType::kRssiRequest:
        handle_rssi_request(msg);
        return;
      default:
        send_user_error(msg.seq, error_code::kBadRequest,
                        "unexpected " + to_string(msg.type) + " from user");
    }
  }

  BrokerOptions opt_;
  std::unique_ptr<Endpoint> user_;
  std::unique_ptr<Endpoint> ris_;
  std::unique_ptr<Endpoint> rx_;
  std::optional<GridSpec> rx_grid_;
  std::atomic<std::uint64_t> ris_sent_{0};
  bool generating_ = false;
};

// ---------------------------------------------------------------------------
// User client

class UserClient {
 public:
  explicit UserClient(std::unique_ptr<Connection> conn) : ep_(std::move(conn)) {
    Json hello;
    hello["role"] = "user";
    ep_.send(MessageType::kHello, hello);
  }

  struct GenOutcome {
    std::uint64_t queries;
    double rssi_dbm;
    std::string codebook_text;
  };

  // Fire a raw request; pair with await().
  std::uint64_t send_request(MessageType type, Json payload) {
    return ep_.send(type, std::move(payload));
  }

  // Blocks until the reply carrying of_seq == seq arrives; replies for
  // other outstanding requests are buffered for their own await() calls.
  ControlMessage await(std::uint64_t seq,
                       std::chrono::milliseconds timeout = std::chrono::minutes(10)) {
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (pending_[i].payload.value("of_seq", std::uint64_t{0}) == seq) {
        ControlMessage msg = pending_[i];
        pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(i));
        return msg;
      }
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw AgentTimeout("no reply for seq " + std::to_string(seq));
      const auto msg = ep_.recv(left);
      if (!msg) continue;
      if (msg->payload.value("of_seq", std::uint64_t{0}) == seq) return *msg;
      pending_.push_back(*msg);
    }
  }

  // Throws PeerError when the reply is an error.
  ControlMessage roundtrip(MessageType type, Json payload,
                           std::chrono::milliseconds timeout = std::chrono::minutes(10)) {
    const std::uint64_t seq = send_request(type, std::move(payload));
    ControlMessage reply = await(seq, timeout);
    if (reply.type == MessageType::kError)
      throw PeerError(reply.payload.at("code").get<std::string>(),
                      reply.payload.at("text").get<std::string>());
    return reply;
  }

  GenOutcome generate(const std::string& location_id, const std::string& algorithm_id,
                      std::chrono::milliseconds timeout = std::chrono::minutes(10)) {
    Json p;
    p["location_id"] = location_id;
    p["algorithm_id"] = algorithm_id;
    const ControlMessage reply = roundtrip(MessageType::kGenRequest, std::move(p), timeout);
    GenOutcome out;
    out.queries = reply.payload.at("queries").get<std::uint64_t>();
    out.rssi_dbm = reply.payload.at("rssi_dbm").get<double>();
    out.codebook_text = reply.payload.value("codebook", std::string());
    if (!out.codebook_text.empty()) last_generated_ = out.codebook_text;
    return out;
  }

  void apply(const std::string& location_id) {
    Json p;
    p["location_id"] = location_id;
    roundtrip(MessageType::kApplyCb, std::move(p));
  }

  // Saves the most recently generated codebook under a (new) location id.
  void save(const std::string& location_id) {
    if (!last_generated_) throw std::logic_error("no codebook generated yet");
    Json p;
    p["location_id"] = location_id;
    p["codebook"] = *last_generated_;
    roundtrip(MessageType::kSaveCb, std::move(p));
  }

  void remove(const std::string& location_id) {
    Json p;
    p["location_id"] = location_id;
    roundtrip(MessageType::kDeleteCb, std::move(p));
  }

  std::vector<std::string> list() {
    const ControlMessage reply = roundtrip(MessageType::kListCb, Json::object());
    return reply.payload.at("location_ids").get<std::vector<std::string>>();
  }

  double rssi() {
    const ControlMessage reply = roundtrip(MessageType::kRssiRequest, Json::object());
    return reply.payload.at("rssi_dbm").get<double>();
  }

  const std::optional<std::string>& last_generated() const { return last_generated_; }

  void close() { ep_.close(); }

 private:
  Endpoint ep_;
  std::optional<std::string> last_generated_;
  std::vector<ControlMessage> pending_;
};

}  // namespace rislab
