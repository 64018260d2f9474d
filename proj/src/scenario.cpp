#include "minimano/scenario.hpp"

#include <fstream>
#include <sstream>

#include "minimano/common/error.hpp"

namespace minimano {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nfvi::Capacity capacity_from(const json& j) {
  return {j.value("vcpus", std::int64_t{0}), j.value("ram_mib", std::int64_t{0}), j.value("disk_gib", std::int64_t{0})};
}

std::vector<std::string> string_list(const json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  std::vector<std::string> out;
  for (const auto& s : j) out.push_back(s.get<std::string>());
  return out;
}

struct Runner {
  const fs::path& base_dir;
  const ScenarioOptions& options;
  ScenarioResult result;
  std::string current = "admin";

  const std::string& token(const json& step) const {
    const auto name = step.value("as", current);
    const auto it = result.tokens.find(name);
    if (it == result.tokens.end()) throw Error(ErrorKind::not_found, "no session named '" + name + "'");
    return it->second;
  }

  std::string tenant_of(const std::string& tok) const { return result.world->identity().validate(tok).tenant_id; }

  std::string instance(const json& step, const std::string& key) const {
    const auto& tok = token(step);
    return resolve_selector(*result.world, tenant_of(tok), step.at(key).get<std::string>());
  }

  fs::path template_path(const std::string& name) const {
    const fs::path p(name);
    if (p.is_absolute()) return p;
    if (fs::exists(base_dir / p)) return base_dir / p;
    for (const auto& dir : options.template_dirs)
      if (fs::exists(dir / p)) return dir / p;
    return base_dir / p;
  }

  void login(const std::string& session, const std::string& user, const std::string& credential,
             const std::string& tenant) {
    result.tokens[session] = result.world->authenticate(user, credential, tenant).id;
    current = session;
  }

  void run_step(const json& step) {
    auto& w = *result.world;
    const auto op = step.at("op").get<std::string>();
    if (op == "tenant") {
      const auto& admin = result.tokens.at("admin");
      const auto name = step.at("name").get<std::string>();
      w.create_tenant(admin, name);
      if (step.contains("user")) {
        const auto user = step.at("user").get<std::string>();
        const auto credential = step.value("credential", std::string("secret"));
        if (!w.identity().find_user(user)) w.create_user(admin, user, credential);
        w.assign_role(admin, user, name, step.value("role", std::string("member")));
        login(step.value("session", user), user, credential, name);
      }
    } else if (op == "login") {
      const auto user = step.at("user").get<std::string>();
      login(step.value("session", user), user, step.at("credential").get<std::string>(),
            step.at("tenant").get<std::string>());
    } else if (op == "use") {
      current = step.at("session").get<std::string>();
      token(step);
    } else if (op == "host") {
      w.add_host(token(step), step.at("id").get<std::string>(), capacity_from(step));
    } else if (op == "flavor") {
      w.create_flavor(token(step), step.at("name").get<std::string>(), capacity_from(step));
    } else if (op == "image") {
      nfvi::ImageOptions opts;
      opts.cloud_init = step.value("cloud_init", true);
      opts.generic = step.value("generic", true);
      opts.is_public = step.value("public", false);
      w.register_image(token(step), step.at("name").get<std::string>(), step.value("payload", std::string()), opts);
    } else if (op == "keypair") {
      w.create_keypair(token(step), step.at("name").get<std::string>());
    } else if (op == "secgroup") {
      w.create_security_group(token(step), step.at("name").get<std::string>());
    } else if (op == "rule") {
      nfvi::SecurityRule rule;
      rule.direction = nfvi::direction_from_string(step.value("direction", std::string("ingress")));
      rule.protocol = nfvi::protocol_from_string(step.value("protocol", std::string("any")));
      rule.port_min = step.value("port_min", 1);
      rule.port_max = step.value("port_max", rule.port_min == 1 ? 65535 : rule.port_min);
      rule.remote_cidr = step.value("remote_cidr", std::string());
      rule.remote_group = step.value("remote_group", std::string());
      w.add_security_rule(token(step), step.at("group").get<std::string>(), rule);
    } else if (op == "network") {
      w.create_network(token(step), step.at("name").get<std::string>(), step.at("cidr").get<std::string>(),
                       step.value("gateway", std::string()));
    } else if (op == "router") {
      const auto& tok = token(step);
      const auto r = w.create_router(tok, step.at("name").get<std::string>());
      if (step.contains("networks"))
        for (const auto& n : string_list(step.at("networks"))) w.attach_interface(tok, r.id, n);
      if (step.value("external_gateway", false)) w.set_external_gateway(tok, r.id);
    } else if (op == "floating_ip") {
      const auto& tok = token(step);
      const auto fip = w.allocate_floating_ip(tok);
      if (step.contains("instance")) w.associate_floating_ip(tok, fip.id, instance(step, "instance"));
    } else if (op == "server") {
      nfvi::LaunchSpec spec;
      spec.name = step.at("name").get<std::string>();
      spec.image = step.at("image").get<std::string>();
      spec.flavor = step.at("flavor").get<std::string>();
      spec.key_name = step.value("key_name", std::string());
      if (step.contains("networks")) spec.networks = string_list(step.at("networks"));
      if (step.contains("security_groups")) spec.security_groups = string_list(step.at("security_groups"));
      spec.user_data = step.value("user_data", std::string());
      w.launch_instance(token(step), spec);
    } else if (op == "stack_create") {
      const auto path = template_path(step.at("template").get<std::string>());
      OrderedMap<Value> params;
      if (step.contains("parameters"))
        for (const auto& [k, v] : step.at("parameters").items()) params.insert_or_assign(k, value_from_json(v));
      w.create_stack(token(step), step.at("name").get<std::string>(), read_file(path), params,
                     path.parent_path().string());
    } else if (op == "stack_delete") {
      w.delete_stack(token(step), step.at("name").get<std::string>());
    } else if (op == "wait_stack") {
      const auto& tok = token(step);
      const auto name = step.at("name").get<std::string>();
      const auto limit = step.value("max_ticks", Tick{10000});
      for (Tick i = 0; i < limit && w.show_stack(tok, name).status == engine::StackStatus::create_in_progress; ++i)
        w.wait_tick(tok, name);
    } else if (op == "signal") {
      const auto& tok = token(step);
      const auto st = w.show_stack(tok, step.at("stack").get<std::string>());
      const auto* rec = st.resources.find(step.at("handle").get<std::string>());
      if (!rec) throw Error(ErrorKind::not_found, "no handle resource in stack " + st.name);
      const auto& payload = step.at("payload");
      w.signal(tok, rec->id, payload.is_string() ? payload.get<std::string>() : payload.dump());
    } else if (op == "group_create") {
      w.create_group(token(step), step.at("name").get<std::string>(), step.at("stack").get<std::string>(),
                     step.at("resource").get<std::string>(), step.at("min").get<int>(), step.at("max").get<int>(),
                     step.at("desired").get<int>());
    } else if (op == "alarm_create") {
      autonomic::AlarmDef def;
      def.name = step.at("name").get<std::string>();
      def.metric = step.at("metric").get<std::string>();
      def.aggregate = autonomic::aggregate_from_string(step.value("aggregate", std::string("avg")));
      def.comparison = autonomic::comparison_from_string(step.value("comparison", std::string("gt")));
      def.threshold = step.at("threshold").get<double>();
      def.window = step.value("window", Tick{1});
      const auto target = step.at("target").get<std::string>();
      def.target = target.find('/') == std::string::npos ? target : instance(step, "target");
      def.action = autonomic::alarm_action_from_string(step.value("action", std::string("notify")));
      w.create_alarm(token(step), def);
    } else if (op == "healer") {
      autonomic::HealerConfig cfg;
      cfg.enabled = step.value("enabled", true);
      cfg.detect_interval = step.value("detect_interval", cfg.detect_interval);
      cfg.heal_window = step.value("heal_window", cfg.heal_window);
      w.configure_healer(token(step), cfg);
    } else if (op == "metric") {
      w.push_metric(token(step), instance(step, "target"), step.at("metric").get<std::string>(),
                    step.at("value").get<double>());
    } else if (op == "metric_stream") {
      // One sample per target per tick, then the clock moves one tick.
      const auto& tok = token(step);
      const auto metric = step.at("metric").get<std::string>();
      const auto& clock_tok = result.tokens.at("admin");
      for (const auto& v : step.at("values")) {
        for (const auto& sel : string_list(step.at("targets"))) {
          const auto id = resolve_selector(w, tenant_of(tok), sel);
          w.push_metric(tok, id, metric, v.get<double>());
        }
        w.advance_clock(clock_tok, 1);
      }
    } else if (op == "fault") {
      std::optional<Tick> at;
      if (step.contains("at")) at = step.at("at").get<Tick>();
      if (step.contains("after")) at = w.now() + step.at("after").get<Tick>();
      const auto kind = autonomic::fault_kind_from_string(step.value("kind", std::string("crash")));
      const auto id = resolve_selector(w, step.contains("tenant_of") ? tenant_of(result.tokens.at(step.at("tenant_of")))
                                                                     : tenant_of(token(step)),
                                       step.at("target").get<std::string>());
      w.inject_fault(result.tokens.at("admin"), id, kind, at);
    } else if (op == "advance") {
      w.advance_clock(token(step), step.at("ticks").get<Tick>());
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown scenario op '" + op + "'");
    }
  }
};

}  // namespace

WorldConfig world_config_from_json(const json& j) {
  WorldConfig cfg;
  if (!j.is_object()) return cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.admin_credential = j.value("admin_credential", cfg.admin_credential);
  if (j.contains("hosts")) {
    cfg.hosts.clear();
    for (const auto& h : j.at("hosts")) cfg.hosts.push_back({h.at("id").get<std::string>(), capacity_from(h)});
  }
  cfg.default_flavors = j.value("default_flavors", cfg.default_flavors);
  cfg.external_cidr = j.value("external_cidr", cfg.external_cidr);
  cfg.token_ttl = j.value("token_ttl", cfg.token_ttl);
  cfg.signal_base_url = j.value("signal_base_url", cfg.signal_base_url);
  return cfg;
}

std::string resolve_selector(const Orchestrator& world, const std::string& tenant, const std::string& selector) {
  const auto first = selector.find('/');
  if (first == std::string::npos) return selector;
  const auto second = selector.find('/', first + 1);
  if (second == std::string::npos) throw Error(ErrorKind::invalid_argument, "bad selector '" + selector + "'");
  const auto kind = selector.substr(0, first);
  const auto name = selector.substr(first + 1, second - first - 1);
  const auto tail = selector.substr(second + 1);
  if (kind == "group") {
    const auto& g = world.autonomic().group(tenant, name);
    std::size_t index = 0;
    try {
      index = std::stoul(tail);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument, "bad member index in '" + selector + "'");
    }
    if (index >= g.members.size()) throw Error(ErrorKind::not_found, "group " + name + " has no member " + tail);
    return g.members[index];
  }
  if (kind == "stack") {
    const auto& st = world.engine().show_stack(tenant, name);
    const auto* rec = st.resources.find(tail);
    if (!rec || rec->id.empty()) throw Error(ErrorKind::not_found, "stack " + name + " has no resource " + tail);
    return rec->id;
  }
  throw Error(ErrorKind::invalid_argument, "bad selector '" + selector + "'");
}

ScenarioResult run_scenario(const json& scenario, const fs::path& base_dir, const ScenarioOptions& options) {
  auto cfg = world_config_from_json(scenario.value("world", json::object()));
  if (scenario.contains("seed")) cfg.seed = scenario.at("seed").get<std::uint64_t>();
  if (options.seed) cfg.seed = options.seed;
  if (!cfg.seed) cfg.seed = 42;

  Runner runner{base_dir, options, {}};
  auto dirs = options.template_dirs;
  runner.result.world = std::make_unique<Orchestrator>(cfg, RuntimeConfig{options.policy, dirs});
  runner.login("admin", "admin", cfg.admin_credential, "admin");

  std::size_t index = 0;
  for (const auto& step : scenario.value("steps", json::array())) {
    const auto expected = step.value("expect_error", std::string());
    try {
      runner.run_step(step);
    } catch (const Error& e) {
      if (!expected.empty() && to_string(e.kind()) == expected) {
        ++index;
        continue;
      }
      throw Error(e.kind(), "step " + std::to_string(index) + " (" + step.value("op", std::string("?")) +
                                "): " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::invalid_argument,
                  "step " + std::to_string(index) + ": malformed step: " + std::string(e.what()));
    }
    if (!expected.empty())
      throw Error(ErrorKind::validation, "step " + std::to_string(index) + " expected a " + expected + " error");
    ++index;
  }
  runner.result.events_jsonl = runner.result.world->event_log().to_jsonl();
  runner.result.snapshot = runner.result.world->snapshot();
  return std::move(runner.result);
}

ScenarioResult run_scenario_file(const fs::path& path, const ScenarioOptions& options) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::syntax, path.string() + ": " + e.what());
  }
  return run_scenario(doc, path.parent_path(), options);
}

}  // namespace minimano
