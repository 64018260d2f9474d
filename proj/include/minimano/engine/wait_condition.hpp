#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "minimano/common/event_log.hpp"
#include "minimano/common/ordered_map.hpp"

namespace minimano::engine {

enum class WaitOutcome { pending, success, timeout, failure_signaled };

std::string_view to_string(WaitOutcome outcome) noexcept;
WaitOutcome wait_outcome_from_string(std::string_view name);

enum class SignalStatus { success, failure };

// Wire format: {"status": "SUCCESS"|"FAILURE", "id": "<string>", "data": "<string>"}
struct SignalPayload {
  SignalStatus status = SignalStatus::success;
  std::optional<std::string> id;
  std::optional<std::string> data;

  friend bool operator==(const SignalPayload&, const SignalPayload&) = default;
};

// Throws Error(invalid_argument) on anything but the documented object shape.
SignalPayload parse_signal_payload(std::string_view text);
std::string serialize_signal_payload(const SignalPayload& payload);

struct ReceivedSignal {
  SignalStatus status = SignalStatus::success;
  std::string data;

  friend bool operator==(const ReceivedSignal&, const ReceivedSignal&) = default;
};

struct WaitConditionState {
  std::string handle_id;
  std::int64_t required_count = 1;
  Tick timeout = 0;
  Tick deadline = 0;
  OrderedMap<ReceivedSignal> received;  // keyed by signal id; a repeated id overwrites
  WaitOutcome outcome = WaitOutcome::pending;

  static WaitConditionState start(std::string handle_id, std::int64_t count, Tick timeout, Tick now);

  std::int64_t success_count() const;
  // Newline-joined data of the received signals, in arrival order.
  std::string data() const;

  friend bool operator==(const WaitConditionState&, const WaitConditionState&) = default;
};

enum class SignalResult { recorded, resolved, ignored };

// Records a signal. A signal that arrives after resolution, or at or past the
// deadline, is ignored. FAILURE resolves immediately.
SignalResult apply_signal(WaitConditionState& state, const SignalPayload& payload, Tick now);

// Resolves TIMEOUT once `now` reaches the deadline without enough successes.
bool expire(WaitConditionState& state, Tick now);

// The id a signal without an explicit id receives: one more than the number
// of distinct ids already recorded.
std::string auto_signal_id(const OrderedMap<ReceivedSignal>& received);

}  // namespace minimano::engine
