#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minimano/autonomic/telemetry.hpp"
#include "minimano/common/event_log.hpp"
#include "minimano/common/ordered_map.hpp"
#include "minimano/common/rng.hpp"
#include "minimano/nfvi/cloud.hpp"

namespace minimano::autonomic {

enum class AlarmState { insufficient_data, ok, alarm };
enum class AlarmAction { scale_out, scale_in, notify };

std::string_view to_string(AlarmState s) noexcept;
std::string_view to_string(AlarmAction a) noexcept;
AlarmState alarm_state_from_string(std::string_view s);
AlarmAction alarm_action_from_string(std::string_view s);

struct AlarmDef {
  std::string name;
  std::string tenant;
  std::string metric;
  Aggregate aggregate = Aggregate::avg;
  Comparison comparison = Comparison::gt;
  double threshold = 0;
  Tick window = 1;
  std::string target;  // scaling group id or instance id
  AlarmAction action = AlarmAction::notify;

  friend bool operator==(const AlarmDef&, const AlarmDef&) = default;
};

struct Alarm {
  std::string id;
  AlarmDef def;
  AlarmState state = AlarmState::insufficient_data;
  std::optional<Tick> last_fired;
  std::optional<double> last_value;

  friend bool operator==(const Alarm&, const Alarm&) = default;
};

struct ScalingGroup {
  std::string id;
  std::string name;
  std::string tenant;
  std::string stack_id;
  std::string resource;
  nfvi::LaunchSpec member_spec;
  int min_size = 1;
  int max_size = 1;
  int desired = 1;
  std::vector<std::string> members;  // instance ids, oldest first
  int launched = 0;                  // serial for member names
  std::optional<Tick> degraded_since;
  bool overdue_reported = false;

  friend bool operator==(const ScalingGroup&, const ScalingGroup&) = default;
};

struct HealerConfig {
  bool enabled = true;
  Tick detect_interval = 5;
  Tick heal_window = 20;

  friend bool operator==(const HealerConfig&, const HealerConfig&) = default;
};

enum class FaultKind { crash, vanish };

std::string_view to_string(FaultKind k) noexcept;
FaultKind fault_kind_from_string(std::string_view s);

struct ScheduledFault {
  Tick at = 0;
  std::string target;  // instance id
  FaultKind kind = FaultKind::crash;

  friend bool operator==(const ScheduledFault&, const ScheduledFault&) = default;
};

// Closes the monitor/analyse/act loop: metric-driven alarms drive scaling,
// and a periodic healer replaces members that are no longer ACTIVE.
class Autonomic {
public:
  Autonomic(nfvi::Cloud& cloud, EventLog& log, const Tick& clock, Rng& rng);
  Autonomic(const Autonomic&) = delete;
  Autonomic& operator=(const Autonomic&) = delete;

  // Samples for FAILED or DELETED instances, or out of tick order, are rejected.
  void record_metric(const std::string& tenant, const std::string& resource, const std::string& metric, double value,
                     Tick tick);

  const ScalingGroup& create_group(const std::string& tenant, const std::string& name, const std::string& stack_id,
                                   const std::string& resource, nfvi::LaunchSpec spec, int min_size, int max_size,
                                   int desired);
  const Alarm& create_alarm(AlarmDef def);
  void set_healer(HealerConfig config);
  const HealerConfig& healer() const noexcept { return healer_; }

  // Ids of the alarms that fired; their actions have been applied.
  std::vector<std::string> evaluate_alarms(Tick now);
  // +1 scales out, -1 scales in, clamped to [min, max]. Returns the new desired size.
  int apply_scaling(const std::string& group_id, int direction);
  // A fault at or before the current tick is applied immediately.
  void inject_fault(const std::string& target, FaultKind kind, Tick at);
  void monitor_detect_correct(Tick now);

  // Advances `clock` one tick at a time: due faults, then `deadlines(tick)`,
  // then alarms, then the healer.
  void advance_clock(Tick& clock, Tick ticks, const std::function<void(Tick)>& deadlines);

  // Tears down the groups built from a stack, their members and their alarms.
  void remove_stack(const std::string& stack_id);

  const ScalingGroup& group(const std::string& tenant, std::string_view id_or_name) const;
  const OrderedMap<ScalingGroup>& groups() const noexcept { return groups_; }
  const OrderedMap<Alarm>& alarms() const noexcept { return alarms_; }
  const std::vector<ScheduledFault>& pending_faults() const noexcept { return faults_; }
  const MetricStore& metrics() const noexcept { return metrics_; }

  nlohmann::ordered_json to_json() const;
  void load(const nlohmann::ordered_json& json);

private:
  std::optional<std::string> launch_member(ScalingGroup& g, const char* why);
  void apply_fault(const ScheduledFault& fault);
  void heal_group(ScalingGroup& g, Tick now);

  nfvi::Cloud& cloud_;
  EventLog& log_;
  const Tick& clock_;
  Rng& rng_;
  MetricStore metrics_;
  OrderedMap<ScalingGroup> groups_;
  OrderedMap<Alarm> alarms_;
  std::vector<ScheduledFault> faults_;
  HealerConfig healer_;
};

}  // namespace minimano::autonomic
