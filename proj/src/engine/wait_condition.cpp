#include "minimano/engine/wait_condition.hpp"

#include <json.hpp>

#include "minimano/common/error.hpp"

namespace minimano::engine {

std::string_view to_string(WaitOutcome outcome) noexcept {
  switch (outcome) {
    case WaitOutcome::pending: return "PENDING";
    case WaitOutcome::success: return "SUCCESS";
    case WaitOutcome::timeout: return "TIMEOUT";
    case WaitOutcome::failure_signaled: return "FAILURE_SIGNALED";
  }
  return "PENDING";
}

WaitOutcome wait_outcome_from_string(std::string_view name) {
  if (name == "PENDING") return WaitOutcome::pending;
  if (name == "SUCCESS") return WaitOutcome::success;
  if (name == "TIMEOUT") return WaitOutcome::timeout;
  if (name == "FAILURE_SIGNALED") return WaitOutcome::failure_signaled;
  throw Error(ErrorKind::invalid_argument, "unknown wait outcome " + std::string(name));
}

SignalPayload parse_signal_payload(std::string_view text) {
  auto json = nlohmann::json::parse(text, nullptr, false);
  if (json.is_discarded() || !json.is_object())
    throw Error(ErrorKind::invalid_argument, "malformed signal payload: expected a JSON object");
  SignalPayload payload;
  bool has_status = false;
  for (auto it = json.begin(); it != json.end(); ++it) {
    if (!it.value().is_string())
      throw Error(ErrorKind::invalid_argument, "malformed signal payload: '" + it.key() + "' must be a string");
    const auto value = it.value().get<std::string>();
    if (it.key() == "status") {
      if (value == "SUCCESS") payload.status = SignalStatus::success;
      else if (value == "FAILURE") payload.status = SignalStatus::failure;
      else throw Error(ErrorKind::invalid_argument, "malformed signal payload: status must be SUCCESS or FAILURE");
      has_status = true;
    } else if (it.key() == "id") {
      payload.id = value;
    } else if (it.key() == "data") {
      payload.data = value;
    } else {
      throw Error(ErrorKind::invalid_argument, "malformed signal payload: unexpected key '" + it.key() + "'");
    }
  }
  if (!has_status) throw Error(ErrorKind::invalid_argument, "malformed signal payload: missing status");
  return payload;
}

std::string serialize_signal_payload(const SignalPayload& payload) {
  nlohmann::ordered_json json;
  json["status"] = payload.status == SignalStatus::success ? "SUCCESS" : "FAILURE";
  if (payload.id) json["id"] = *payload.id;
  if (payload.data) json["data"] = *payload.data;
  return json.dump();
}

WaitConditionState WaitConditionState::start(std::string handle_id, std::int64_t count, Tick timeout, Tick now) {
  if (count < 1) throw Error(ErrorKind::invalid_argument, "wait condition count must be positive");
  if (timeout < 1) throw Error(ErrorKind::invalid_argument, "wait condition timeout must be positive");
  WaitConditionState s;
  s.handle_id = std::move(handle_id);
  s.required_count = count;
  s.timeout = timeout;
  s.deadline = now + timeout;
  return s;
}

std::int64_t WaitConditionState::success_count() const {
  std::int64_t n = 0;
  for (const auto& [_, sig] : received)
    if (sig.status == SignalStatus::success) ++n;
  return n;
}

std::string WaitConditionState::data() const {
  std::string out;
  bool first = true;
  for (const auto& [_, sig] : received) {
    if (!first) out += '\n';
    out += sig.data;
    first = false;
  }
  return out;
}

std::string auto_signal_id(const OrderedMap<ReceivedSignal>& received) {
  return std::to_string(received.size() + 1);
}

SignalResult apply_signal(WaitConditionState& state, const SignalPayload& payload, Tick now) {
  if (state.outcome != WaitOutcome::pending) return SignalResult::ignored;
  if (now >= state.deadline) {
    expire(state, now);
    return SignalResult::ignored;
  }
  std::string id = payload.id ? *payload.id : auto_signal_id(state.received);
  state.received.insert_or_assign(id, ReceivedSignal{payload.status, payload.data.value_or("")});
  if (payload.status == SignalStatus::failure) {
    state.outcome = WaitOutcome::failure_signaled;
    return SignalResult::resolved;
  }
  if (state.success_count() >= state.required_count) {
    state.outcome = WaitOutcome::success;
    return SignalResult::resolved;
  }
  return SignalResult::recorded;
}

bool expire(WaitConditionState& state, Tick now) {
  if (state.outcome != WaitOutcome::pending || now < state.deadline) return false;
  state.outcome = WaitOutcome::timeout;
  return true;
}

}  // namespace minimano::engine
