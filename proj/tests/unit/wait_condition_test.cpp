#include <gtest/gtest.h>

#include "minimano/common/error.hpp"
#include "minimano/engine/wait_condition.hpp"

using namespace minimano;
using namespace minimano::engine;

namespace {

SignalPayload ok(std::optional<std::string> id = std::nullopt, std::optional<std::string> data = std::nullopt) {
  return SignalPayload{SignalStatus::success, std::move(id), std::move(data)};
}

}  // namespace

TEST(WaitCondition, CountOfOneResolvesOnFirstSuccess) {
  auto st = WaitConditionState::start("h", 1, 60, 10);
  EXPECT_EQ(st.deadline, 70);
  EXPECT_EQ(apply_signal(st, ok(), 11), SignalResult::resolved);
  EXPECT_EQ(st.outcome, WaitOutcome::success);
}

TEST(WaitCondition, CountsDistinctIds) {
  auto st = WaitConditionState::start("h", 2, 60, 0);
  EXPECT_EQ(apply_signal(st, ok("a", "x"), 1), SignalResult::recorded);
  apply_signal(st, ok("a", "y"), 2);  // same id overwrites
  EXPECT_EQ(st.outcome, WaitOutcome::pending);
  EXPECT_EQ(st.success_count(), 1);
  apply_signal(st, ok("b", "z"), 3);
  EXPECT_EQ(st.outcome, WaitOutcome::success);
  EXPECT_EQ(st.data(), "y\nz");
}

TEST(WaitCondition, AnonymousSignalsGetFreshIds) {
  auto st = WaitConditionState::start("h", 3, 60, 0);
  for (int i = 0; i < 3; ++i) apply_signal(st, ok(), i);
  EXPECT_EQ(st.outcome, WaitOutcome::success);
}

TEST(WaitCondition, FailureResolvesImmediately) {
  auto st = WaitConditionState::start("h", 5, 60, 0);
  apply_signal(st, ok(), 1);
  apply_signal(st, SignalPayload{SignalStatus::failure, std::nullopt, std::string("boom")}, 2);
  EXPECT_EQ(st.outcome, WaitOutcome::failure_signaled);
}

TEST(WaitCondition, DeadlineIsExclusive) {
  auto st = WaitConditionState::start("h", 1, 5, 0);
  expire(st, 4);
  EXPECT_EQ(st.outcome, WaitOutcome::pending);
  EXPECT_EQ(apply_signal(st, ok(), 5), SignalResult::ignored);
  EXPECT_EQ(st.outcome, WaitOutcome::timeout);
}

TEST(WaitCondition, SignalsAfterResolutionAreIgnored) {
  auto st = WaitConditionState::start("h", 1, 5, 0);
  apply_signal(st, ok(), 1);
  EXPECT_EQ(apply_signal(st, SignalPayload{SignalStatus::failure, std::nullopt, std::nullopt}, 2),
            SignalResult::ignored);
  EXPECT_EQ(st.outcome, WaitOutcome::success);
}

TEST(WaitCondition, PayloadParsingIsStrict) {
  const auto p = parse_signal_payload(R"({"status":"SUCCESS","id":"1","data":"ready"})");
  EXPECT_EQ(p.status, SignalStatus::success);
  EXPECT_EQ(p.id, "1");
  EXPECT_EQ(p.data, "ready");
  EXPECT_EQ(parse_signal_payload(serialize_signal_payload(p)), p);
  for (const char* bad : {"", "not json", "[]", R"({"id":"1"})", R"({"status":"MAYBE"})", R"({"status":1})",
                          R"({"status":"SUCCESS","extra":"x"})", R"({"status":"SUCCESS","data":3})"}) {
    try {
      parse_signal_payload(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_argument) << bad;
    }
  }
}
