#include "minimano/autonomic/autonomic.hpp"

#include <algorithm>

#include "minimano/common/error.hpp"
#include "minimano/common/value.hpp"

namespace minimano::autonomic {

using json = nlohmann::ordered_json;

std::string_view to_string(AlarmState s) noexcept {
  switch (s) {
    case AlarmState::insufficient_data: return "insufficient_data";
    case AlarmState::ok: return "ok";
    case AlarmState::alarm: return "alarm";
  }
  return "insufficient_data";
}

std::string_view to_string(AlarmAction a) noexcept {
  switch (a) {
    case AlarmAction::scale_out: return "scale_out";
    case AlarmAction::scale_in: return "scale_in";
    case AlarmAction::notify: return "notify";
  }
  return "notify";
}

AlarmState alarm_state_from_string(std::string_view s) {
  if (s == "insufficient_data") return AlarmState::insufficient_data;
  if (s == "ok") return AlarmState::ok;
  if (s == "alarm") return AlarmState::alarm;
  throw Error(ErrorKind::invalid_argument, "unknown alarm state " + std::string(s));
}

AlarmAction alarm_action_from_string(std::string_view s) {
  if (s == "scale_out") return AlarmAction::scale_out;
  if (s == "scale_in") return AlarmAction::scale_in;
  if (s == "notify") return AlarmAction::notify;
  throw Error(ErrorKind::invalid_argument, "alarm action must be scale_out, scale_in or notify");
}

std::string_view to_string(FaultKind k) noexcept { return k == FaultKind::crash ? "crash" : "vanish"; }

FaultKind fault_kind_from_string(std::string_view s) {
  if (s == "crash") return FaultKind::crash;
  if (s == "vanish") return FaultKind::vanish;
  throw Error(ErrorKind::invalid_argument, "fault kind must be crash or vanish");
}

Autonomic::Autonomic(nfvi::Cloud& cloud, EventLog& log, const Tick& clock, Rng& rng)
    : cloud_(cloud), log_(log), clock_(clock), rng_(rng) {}

void Autonomic::record_metric(const std::string& tenant, const std::string& resource, const std::string& metric,
                              double value, Tick tick) {
  const auto* inst = cloud_.find_instance(resource);
  if (!inst || inst->tenant != tenant || inst->state == nfvi::InstanceState::deleted)
    throw Error(ErrorKind::not_found, "instance '" + resource + "' not found");
  if (inst->state == nfvi::InstanceState::failed)
    throw Error(ErrorKind::invalid_state, "instance '" + inst->name + "' is FAILED; sample rejected");
  metrics_.record(resource, metric, value, tick);
}

std::optional<std::string> Autonomic::launch_member(ScalingGroup& g, const char* why) {
  nfvi::LaunchSpec spec = g.member_spec;
  spec.name = g.name + "-" + std::to_string(g.launched + 1);
  try {
    const auto& inst = cloud_.launch_instance(spec);
    ++g.launched;
    g.members.push_back(inst.id);
    log_.append(clock_, "member_launched", g.name, std::string(why) + " id=" + inst.id);
    return inst.id;
  } catch (const Error& e) {
    log_.append(clock_, "member_launch_failed", g.name, std::string(why) + ": " + e.what());
    return std::nullopt;
  }
}

const ScalingGroup& Autonomic::create_group(const std::string& tenant, const std::string& name,
                                            const std::string& stack_id, const std::string& resource,
                                            nfvi::LaunchSpec spec, int min_size, int max_size, int desired) {
  if (name.empty()) throw Error(ErrorKind::invalid_argument, "group name must not be empty");
  if (min_size < 0 || max_size < min_size || desired < min_size || desired > max_size)
    throw Error(ErrorKind::invalid_argument, "group sizes must satisfy 0 <= min <= desired <= max");
  for (const auto& [_, g] : groups_)
    if (g.tenant == tenant && g.name == name) throw Error(ErrorKind::duplicate, "group '" + name + "' already exists");
  ScalingGroup g;
  g.id = rng_.uuid4();
  g.name = name;
  g.tenant = tenant;
  g.stack_id = stack_id;
  g.resource = resource;
  g.member_spec = std::move(spec);
  g.member_spec.tenant = tenant;
  g.min_size = min_size;
  g.max_size = max_size;
  g.desired = desired;
  const std::string id = g.id;
  groups_.insert(id, std::move(g));
  auto& stored = groups_.at(id);
  log_.append(clock_, "group_created", stored.name,
              "id=" + id + " min=" + std::to_string(min_size) + " max=" + std::to_string(max_size) +
                  " desired=" + std::to_string(desired));
  for (int i = 0; i < desired; ++i)
    if (!launch_member(stored, "initial")) break;
  return stored;
}

const ScalingGroup& Autonomic::group(const std::string& tenant, std::string_view id_or_name) const {
  for (const auto& [id, g] : groups_)
    if (g.tenant == tenant && (id == id_or_name || g.name == id_or_name)) return g;
  throw Error(ErrorKind::not_found, "scaling group '" + std::string(id_or_name) + "' not found");
}

const Alarm& Autonomic::create_alarm(AlarmDef def) {
  if (def.name.empty()) throw Error(ErrorKind::invalid_argument, "alarm name must not be empty");
  if (def.metric.empty()) throw Error(ErrorKind::invalid_argument, "alarm needs a metric");
  if (def.window < 1) throw Error(ErrorKind::invalid_argument, "alarm window must be at least one tick");
  bool is_group = false;
  for (auto& [id, g] : groups_) {
    if (g.tenant == def.tenant && (id == def.target || g.name == def.target)) {
      def.target = id;
      is_group = true;
      break;
    }
  }
  if (!is_group) {
    const auto* inst = cloud_.find_instance(def.target);
    if (!inst || inst->tenant != def.tenant || inst->state == nfvi::InstanceState::deleted)
      throw Error(ErrorKind::not_found, "alarm target '" + def.target + "' is neither a group nor an instance");
    if (def.action != AlarmAction::notify)
      throw Error(ErrorKind::invalid_argument, "scaling actions need a scaling group target");
  }
  for (const auto& [_, a] : alarms_)
    if (a.def.tenant == def.tenant && a.def.name == def.name)
      throw Error(ErrorKind::duplicate, "alarm '" + def.name + "' already exists");
  Alarm a;
  a.id = rng_.uuid4();
  a.def = std::move(def);
  const std::string id = a.id;
  log_.append(clock_, "alarm_created", a.def.name,
              std::string(to_string(a.def.aggregate)) + "(" + a.def.metric + ") " + std::string(to_string(a.def.comparison)) +
                  " " + format_number(a.def.threshold) + " over " + std::to_string(a.def.window) + " -> " +
                  std::string(to_string(a.def.action)));
  alarms_.insert(id, std::move(a));
  return alarms_.at(id);
}

void Autonomic::set_healer(HealerConfig config) {
  if (config.detect_interval < 1 || config.heal_window < 1)
    throw Error(ErrorKind::invalid_argument, "healer intervals must be at least one tick");
  healer_ = config;
  log_.append(clock_, "healer_configured", "healer",
              std::string(config.enabled ? "enabled" : "disabled") + " interval=" +
                  std::to_string(config.detect_interval) + " window=" + std::to_string(config.heal_window));
}

int Autonomic::apply_scaling(const std::string& group_id, int direction) {
  auto* g = groups_.find(group_id);
  if (!g) throw Error(ErrorKind::not_found, "scaling group '" + group_id + "' not found");
  if (direction > 0) {
    if (g->desired >= g->max_size) {
      log_.append(clock_, "scale_clamped", g->name, "already at max " + std::to_string(g->max_size));
      return g->desired;
    }
    if (launch_member(*g, "scale_out")) {
      ++g->desired;
      log_.append(clock_, "scale_out", g->name, "desired=" + std::to_string(g->desired));
    } else {
      log_.append(clock_, "scaling_failed", g->name, "no-capacity; desired stays " + std::to_string(g->desired));
    }
  } else if (direction < 0) {
    if (g->desired <= g->min_size) {
      log_.append(clock_, "scale_clamped", g->name, "already at min " + std::to_string(g->min_size));
      return g->desired;
    }
    if (!g->members.empty()) {
      const std::string victim = g->members.back();
      try {
        const auto* inst = cloud_.find_instance(victim);
        if (inst && inst->state != nfvi::InstanceState::deleted) cloud_.terminate_instance(g->tenant, victim);
      } catch (const Error& e) {
        log_.append(clock_, "scaling_failed", g->name, std::string("cannot remove ") + victim + ": " + e.what());
        return g->desired;
      }
      g->members.pop_back();
      metrics_.forget(victim);
    }
    --g->desired;
    log_.append(clock_, "scale_in", g->name, "desired=" + std::to_string(g->desired));
  }
  return g->desired;
}

std::vector<std::string> Autonomic::evaluate_alarms(Tick now) {
  std::vector<std::string> fired;
  for (auto& [id, a] : alarms_) {
    std::vector<std::string> resources;
    const auto* g = groups_.find(a.def.target);
    if (g) resources = g->members;
    else resources.push_back(a.def.target);
    const auto value = metrics_.aggregate(resources, a.def.metric, a.def.aggregate, now, a.def.window);
    const AlarmState next =
        !value ? AlarmState::insufficient_data
               : (compare(*value, a.def.comparison, a.def.threshold) ? AlarmState::alarm : AlarmState::ok);
    const AlarmState prev = a.state;
    a.last_value = value;
    a.state = next;
    if (next == prev) continue;
    log_.append(now, "alarm_state", a.def.name,
                std::string(to_string(prev)) + "->" + std::string(to_string(next)) +
                    (value ? " value=" + format_number(*value) : std::string()));
    if (next != AlarmState::alarm) continue;
    // Fire on entering alarm, at most once per evaluation window.
    if (a.last_fired && now - *a.last_fired < a.def.window) {
      log_.append(now, "alarm_suppressed", a.def.name, "cooldown");
      continue;
    }
    a.last_fired = now;
    fired.push_back(id);
    log_.append(now, "alarm_fired", a.def.name, std::string(to_string(a.def.action)));
  }
  for (const auto& id : fired) {
    const Alarm& a = alarms_.at(id);
    if (a.def.action == AlarmAction::scale_out) apply_scaling(a.def.target, +1);
    else if (a.def.action == AlarmAction::scale_in) apply_scaling(a.def.target, -1);
  }
  return fired;
}

void Autonomic::apply_fault(const ScheduledFault& fault) {
  const auto* inst = cloud_.find_instance(fault.target);
  if (!inst || inst->state == nfvi::InstanceState::deleted) {
    log_.append(clock_, "fault_skipped", fault.target, "instance no longer exists");
    return;
  }
  if (fault.kind == FaultKind::crash) {
    cloud_.crash_instance(fault.target, "injected crash");
  } else {
    cloud_.set_locked(fault.target, false);
    cloud_.terminate_instance(inst->tenant, fault.target);
  }
  log_.append(clock_, "fault_injected", fault.target, std::string(to_string(fault.kind)));
}

void Autonomic::inject_fault(const std::string& target, FaultKind kind, Tick at) {
  const auto* inst = cloud_.find_instance(target);
  if (!inst || inst->state == nfvi::InstanceState::deleted)
    throw Error(ErrorKind::not_found, "instance '" + target + "' not found");
  if (inst->state != nfvi::InstanceState::active)
    throw Error(ErrorKind::invalid_state, "instance '" + inst->name + "' is " + std::string(to_string(inst->state)));
  ScheduledFault fault{at, target, kind};
  for (const auto& f : faults_)
    if (f.target == target && f.at == at)
      throw Error(ErrorKind::duplicate, "a fault for '" + inst->name + "' is already scheduled at " + std::to_string(at));
  if (at <= clock_) {
    apply_fault(fault);
    return;
  }
  faults_.push_back(fault);
  log_.append(clock_, "fault_scheduled", target, std::string(to_string(kind)) + " at=" + std::to_string(at));
}

void Autonomic::heal_group(ScalingGroup& g, Tick now) {
  std::vector<std::string> keep;
  std::vector<std::string> broken;
  for (const auto& m : g.members) {
    const auto* inst = cloud_.find_instance(m);
    if (inst && inst->state == nfvi::InstanceState::active) keep.push_back(m);
    else broken.push_back(m);
  }
  if (!broken.empty() && !g.degraded_since) g.degraded_since = now;
  g.members = keep;
  for (const auto& m : broken) {
    const auto* inst = cloud_.find_instance(m);
    log_.append(now, "heal_detected", g.name,
                "member=" + m + " state=" + std::string(inst ? to_string(inst->state) : "MISSING"));
    if (inst && inst->state != nfvi::InstanceState::deleted) {
      try {
        cloud_.terminate_instance(g.tenant, m);
      } catch (const Error& e) {
        log_.append(now, "heal_failed", g.name, "cannot remove " + m + ": " + e.what());
      }
    }
    metrics_.forget(m);
    if (auto replacement = launch_member(g, "heal")) log_.append(now, "heal_replaced", g.name, m + "->" + *replacement);
  }
  while (static_cast<int>(g.members.size()) < g.desired)
    if (!launch_member(g, "refill")) break;

  if (static_cast<int>(g.members.size()) >= g.desired) {
    if (g.degraded_since) log_.append(now, "heal_complete", g.name, "members=" + std::to_string(g.members.size()));
    g.degraded_since.reset();
    g.overdue_reported = false;
    return;
  }
  if (!g.degraded_since) g.degraded_since = now;
  if (!g.overdue_reported && now - *g.degraded_since >= healer_.heal_window) {
    g.overdue_reported = true;
    log_.append(now, "heal_window_exceeded", g.name,
                "members=" + std::to_string(g.members.size()) + " desired=" + std::to_string(g.desired));
  }
}

void Autonomic::monitor_detect_correct(Tick now) {
  if (!healer_.enabled || now % healer_.detect_interval != 0) return;
  for (auto& [_, g] : groups_) heal_group(g, now);
}

void Autonomic::advance_clock(Tick& clock, Tick ticks, const std::function<void(Tick)>& deadlines) {
  if (ticks < 1) throw Error(ErrorKind::invalid_argument, "clock can only move forward by at least one tick");
  for (Tick i = 0; i < ticks; ++i) {
    ++clock;
    std::vector<ScheduledFault> due;
    std::vector<ScheduledFault> later;
    for (auto& f : faults_) (f.at <= clock ? due : later).push_back(f);
    faults_ = std::move(later);
    for (const auto& f : due) apply_fault(f);
    if (deadlines) deadlines(clock);
    evaluate_alarms(clock);
    monitor_detect_correct(clock);
  }
}

void Autonomic::remove_stack(const std::string& stack_id) {
  std::vector<std::string> doomed;
  for (const auto& [id, g] : groups_)
    if (g.stack_id == stack_id) doomed.push_back(id);
  for (const auto& id : doomed) {
    auto& g = groups_.at(id);
    for (const auto& m : g.members) {
      const auto* inst = cloud_.find_instance(m);
      if (inst && inst->state != nfvi::InstanceState::deleted) {
        cloud_.set_locked(m, false);
        cloud_.terminate_instance(g.tenant, m);
      }
      metrics_.forget(m);
    }
    std::vector<std::string> alarms;
    for (const auto& [aid, a] : alarms_)
      if (a.def.target == id) alarms.push_back(aid);
    for (const auto& aid : alarms) alarms_.erase(aid);
    log_.append(clock_, "group_deleted", g.name, "members=" + std::to_string(g.members.size()));
    groups_.erase(id);
  }
}

json Autonomic::to_json() const {
  json groups = json::array();
  for (const auto& [_, g] : groups_)
    groups.push_back(json{{"id", g.id},
                          {"name", g.name},
                          {"tenant", g.tenant},
                          {"stack_id", g.stack_id},
                          {"resource", g.resource},
                          {"member_spec", nfvi::to_json(g.member_spec)},
                          {"min", g.min_size},
                          {"max", g.max_size},
                          {"desired", g.desired},
                          {"members", g.members},
                          {"launched", g.launched},
                          {"degraded_since", g.degraded_since ? json(*g.degraded_since) : json(nullptr)},
                          {"overdue_reported", g.overdue_reported}});
  json alarms = json::array();
  for (const auto& [_, a] : alarms_)
    alarms.push_back(json{{"id", a.id},
                          {"name", a.def.name},
                          {"tenant", a.def.tenant},
                          {"metric", a.def.metric},
                          {"aggregate", to_string(a.def.aggregate)},
                          {"comparison", to_string(a.def.comparison)},
                          {"threshold", a.def.threshold},
                          {"window", a.def.window},
                          {"target", a.def.target},
                          {"action", to_string(a.def.action)},
                          {"state", to_string(a.state)},
                          {"last_fired", a.last_fired ? json(*a.last_fired) : json(nullptr)},
                          {"last_value", a.last_value ? json(*a.last_value) : json(nullptr)}});
  json faults = json::array();
  for (const auto& f : faults_) faults.push_back(json{{"at", f.at}, {"target", f.target}, {"kind", to_string(f.kind)}});
  return json{{"metrics", metrics_.to_json()},
              {"groups", groups},
              {"alarms", alarms},
              {"faults", faults},
              {"healer",
               json{{"enabled", healer_.enabled},
                    {"detect_interval", healer_.detect_interval},
                    {"heal_window", healer_.heal_window}}}};
}

void Autonomic::load(const json& j) {
  metrics_.load(j.at("metrics"));
  groups_ = {};
  for (const auto& g : j.at("groups")) {
    ScalingGroup sg;
    sg.id = g.at("id").get<std::string>();
    sg.name = g.at("name").get<std::string>();
    sg.tenant = g.at("tenant").get<std::string>();
    sg.stack_id = g.at("stack_id").get<std::string>();
    sg.resource = g.at("resource").get<std::string>();
    sg.member_spec = nfvi::launch_spec_from_json(g.at("member_spec"));
    sg.min_size = g.at("min").get<int>();
    sg.max_size = g.at("max").get<int>();
    sg.desired = g.at("desired").get<int>();
    sg.members = g.at("members").get<std::vector<std::string>>();
    sg.launched = g.at("launched").get<int>();
    if (!g.at("degraded_since").is_null()) sg.degraded_since = g.at("degraded_since").get<Tick>();
    sg.overdue_reported = g.at("overdue_reported").get<bool>();
    groups_.insert(sg.id, std::move(sg));
  }
  alarms_ = {};
  for (const auto& a : j.at("alarms")) {
    Alarm al;
    al.id = a.at("id").get<std::string>();
    al.def.name = a.at("name").get<std::string>();
    al.def.tenant = a.at("tenant").get<std::string>();
    al.def.metric = a.at("metric").get<std::string>();
    al.def.aggregate = aggregate_from_string(a.at("aggregate").get<std::string>());
    al.def.comparison = comparison_from_string(a.at("comparison").get<std::string>());
    al.def.threshold = a.at("threshold").get<double>();
    al.def.window = a.at("window").get<Tick>();
    al.def.target = a.at("target").get<std::string>();
    al.def.action = alarm_action_from_string(a.at("action").get<std::string>());
    al.state = alarm_state_from_string(a.at("state").get<std::string>());
    if (!a.at("last_fired").is_null()) al.last_fired = a.at("last_fired").get<Tick>();
    if (!a.at("last_value").is_null()) al.last_value = a.at("last_value").get<double>();
    alarms_.insert(al.id, std::move(al));
  }
  faults_.clear();
  for (const auto& f : j.at("faults"))
    faults_.push_back(ScheduledFault{f.at("at").get<Tick>(), f.at("target").get<std::string>(),
                                     fault_kind_from_string(f.at("kind").get<std::string>())});
  const auto& h = j.at("healer");
  healer_ = HealerConfig{h.at("enabled").get<bool>(), h.at("detect_interval").get<Tick>(), h.at("heal_window").get<Tick>()};
}

}  // namespace minimano::autonomic
