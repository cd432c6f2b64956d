#pragma once

// Newline-delimited JSON control protocol shared by the broker, the
// surface-controller agent, the receiver agent and the user client.
//
// Every message is one UTF-8 JSON object per line with exactly the
// top-level keys `type`, `seq`, `payload`, emitted in that order. `seq`
// starts at 1 and increases strictly per connection. The type catalog is
// closed; decode rejects unknown types but ignores unknown payload fields,
// so peers may attach extras (e.g. `of_seq` on responses) without breaking
// older readers.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace rislab {

using Json = nlohmann::ordered_json;

enum class MessageType {
  kHello,
  kAck,
  kError,
  kGenRequest,
  kGenDone,
  kSetCodebook,
  kRssiRequest,
  kRssiResponse,
  kSaveCb,
  kApplyCb,
  kDeleteCb,
  kListCb,
  kCbList,
};

inline std::string to_string(MessageType t) {
  switch (t) {
    case MessageType::kHello: return "hello";
    case MessageType::kAck: return "ack";
    case MessageType::kError: return "error";
    case MessageType::kGenRequest: return "gen_request";
    case MessageType::kGenDone: return "gen_done";
    case MessageType::kSetCodebook: return "set_codebook";
    case MessageType::kRssiRequest: return "rssi_request";
    case MessageType::kRssiResponse: return "rssi_response";
    case MessageType::kSaveCb: return "save_cb";
    case MessageType::kApplyCb: return "apply_cb";
    case MessageType::kDeleteCb: return "delete_cb";
    case MessageType::kListCb: return "list_cb";
    case MessageType::kCbList: return "cb_list";
  }
  throw std::logic_error("unreachable message type");
}

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

struct ControlMessage {
  MessageType type = MessageType::kHello;
  std::uint64_t seq = 0;
  Json payload = Json::object();

  friend bool operator==(const ControlMessage& a, const ControlMessage& b) {
    return a.type == b.type && a.seq == b.seq && a.payload == b.payload;
  }
};

// Error codes used in error.payload.code.
namespace error_code {
inline constexpr const char* kBusy = "busy";
inline constexpr const char* kAgentLost = "agent_lost";
inline constexpr const char* kBadAlgorithm = "bad_algorithm";
inline constexpr const char* kUnknownLocation = "unknown_location";
inline constexpr const char* kBadRequest = "bad_request";
}  // namespace error_code

namespace detail {

inline MessageType message_type_from_string(std::string_view s, std::size_t offset) {
  if (s == "hello") return MessageType::kHello;
  if (s == "ack") return MessageType::kAck;
  if (s == "error") return MessageType::kError;
  if (s == "gen_request") return MessageType::kGenRequest;
  if (s == "gen_done") return MessageType::kGenDone;
  if (s == "set_codebook") return MessageType::kSetCodebook;
  if (s == "rssi_request") return MessageType::kRssiRequest;
  if (s == "rssi_response") return MessageType::kRssiResponse;
  if (s == "save_cb") return MessageType::kSaveCb;
  if (s == "apply_cb") return MessageType::kApplyCb;
  if (s == "delete_cb") return MessageType::kDeleteCb;
  if (s == "list_cb") return MessageType::kListCb;
  if (s == "cb_list") return MessageType::kCbList;
  throw ProtocolError("unknown message type \"" + std::string(s) + "\"", offset);
}

enum class FieldKind { kString, kUnsigned, kNumber, kStringArray };

inline void require_field(const Json& payload, const char* name, FieldKind kind,
                          const std::string& type_name) {
  const auto it = payload.find(name);
  if (it == payload.end())
    throw ProtocolError(type_name + " payload missing field \"" + name + "\"", 0);
  bool ok = false;
  switch (kind) {
    case FieldKind::kString:
      ok = it->is_string();
      break;
    case FieldKind::kUnsigned:
      // Nonnegative integer by value; the in-memory storage class (signed
      // vs unsigned) is a construction detail, not wire semantics.
      ok = it->is_number_unsigned() ||
           (it->is_number_integer() && it->get<std::int64_t>() >= 0);
      break;
    case FieldKind::kNumber:
      ok = it->is_number();
      break;
    case FieldKind::kStringArray:
      ok = it->is_array();
      if (ok)
        for (const auto& e : *it) ok = ok && e.is_string();
      break;
  }
  if (!ok)
    throw ProtocolError(type_name + " payload field \"" + name + "\" has the wrong type", 0);
}

// Required payload fields per catalog entry. Extra fields are permitted
// everywhere (forward compatibility).
inline void validate_payload(MessageType type, const Json& payload) {
  const std::string name = to_string(type);
  if (!payload.is_object()) throw ProtocolError(name + " payload must be an object", 0);
  using FK = FieldKind;
  switch (type) {
    case MessageType::kHello: {
      require_field(payload, "role", FK::kString, name);
      const std::string role = payload.at("role").get<std::string>();
      if (role != "user" && role != "ris" && role != "rx")
        throw ProtocolError("hello role must be one of user/ris/rx", 0);
      break;
    }
    case MessageType::kAck:
      require_field(payload, "of_seq", FK::kUnsigned, name);
      break;
    case MessageType::kError:
      require_field(payload, "of_seq", FK::kUnsigned, name);
      require_field(payload, "code", FK::kString, name);
      require_field(payload, "text", FK::kString, name);
      break;
    case MessageType::kGenRequest:
      require_field(payload, "location_id", FK::kString, name);
      require_field(payload, "algorithm_id", FK::kString, name);
      break;
    case MessageType::kGenDone:
      require_field(payload, "location_id", FK::kString, name);
      require_field(payload, "queries", FK::kUnsigned, name);
      require_field(payload, "rssi_dbm", FK::kNumber, name);
      break;
    case MessageType::kSetCodebook:
      require_field(payload, "codebook", FK::kString, name);
      break;
    case MessageType::kRssiRequest:
      break;
    case MessageType::kRssiResponse:
      require_field(payload, "rssi_dbm", FK::kNumber, name);
      require_field(payload, "frames", FK::kUnsigned, name);
      break;
    case MessageType::kSaveCb:
      require_field(payload, "location_id", FK::kString, name);
      require_field(payload, "codebook", FK::kString, name);
      break;
    case MessageType::kApplyCb:
    case MessageType::kDeleteCb:
      require_field(payload, "location_id", FK::kString, name);
      break;
    case MessageType::kListCb:
      break;
    case MessageType::kCbList:
      require_field(payload, "location_ids", FK::kStringArray, name);
      break;
  }
}

// JSON has no encoding for non-finite numbers (the serializer would emit
// null and silently break the round-trip law), so encode refuses them.
inline void reject_non_finite(const Json& v) {
  if (v.is_number_float() && !std::isfinite(v.get<double>()))
    throw ProtocolError("non-finite number in payload", 0);
  if (v.is_object() || v.is_array())
    for (const auto& e : v) reject_non_finite(e);
}

}  // namespace detail

inline std::string encode(const ControlMessage& msg) {
  if (msg.seq < 1) throw ProtocolError("seq must be >= 1", 0);
  detail::validate_payload(msg.type, msg.payload);
  detail::reject_non_finite(msg.payload);
  Json root;
  root["type"] = to_string(msg.type);
  root["seq"] = msg.seq;
  root["payload"] = msg.payload;
  return root.dump() + "\n";
}

inline ControlMessage decode(std::string_view line) {
  Json root;
  try {
    root = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what(), e.byte);
  }
  if (!root.is_object()) throw ProtocolError("message must be a JSON object", 0);
  const auto type_it = root.find("type");
  if (type_it == root.end() || !type_it->is_string())
    throw ProtocolError("message missing string field \"type\"", 0);
  const auto seq_it = root.find("seq");
  if (seq_it == root.end() || !seq_it->is_number_unsigned())
    throw ProtocolError("message missing unsigned field \"seq\"", 0);
  const auto payload_it = root.find("payload");
  if (payload_it == root.end() || !payload_it->is_object())
    throw ProtocolError("message missing object field \"payload\"", 0);

  ControlMessage msg;
  msg.type = detail::message_type_from_string(type_it->get<std::string>(), 0);
  msg.seq = seq_it->get<std::uint64_t>();
  msg.payload = *payload_it;
  if (msg.seq < 1) throw ProtocolError("seq must be >= 1", 0);
  detail::validate_payload(msg.type, msg.payload);
  return msg;
}

}  // namespace rislab
