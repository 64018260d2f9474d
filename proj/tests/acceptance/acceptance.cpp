// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "cli_driver.hpp"
#include "cloud_oracles.hpp"
#include "gen.hpp"
#include "minimano/common/error.hpp"
#include "minimano/engine/plan.hpp"
#include "minimano/scenario.hpp"
#include "world.hpp"

using namespace minimano;
using engine::StackStatus;
using testsupport::deploy;
using testsupport::make_demo;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failed(what);
}

std::size_t first_event(const EventLog& log, std::string_view kind, std::string_view subject_prefix) {
  const auto& ev = log.events();
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].kind == kind && ev[i].subject.starts_with(subject_prefix)) return i;
  return ev.size();
}

fs::path scratch_templates(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("minimano-acc-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(testsupport::templates_dir())) fs::copy(e.path(), dir / e.path().filename());
  return dir;
}

// First address handed out on a /24: .1 is the gateway, .2 is reserved.
std::string first_host(const std::string& cidr) {
  const auto base = testsupport::dotted(cidr.substr(0, cidr.find('/')));
  const auto a = base + 3;
  return std::to_string(a >> 24) + "." + std::to_string((a >> 16) & 255) + "." + std::to_string((a >> 8) & 255) + "." +
         std::to_string(a & 255);
}

std::string census_text(const Orchestrator& w) {
  std::ostringstream ss;
  for (const auto& [k, v] : w.cloud().census()) ss << k << '=' << v << ' ';
  return ss.str();
}

// ---- 1 ----
std::string single_server_round_trip() {
  auto d = make_demo();
  const auto before = d.w->cloud().census();
  const auto text = testsupport::read_text(testsupport::templates_dir() / "example1.yaml");
  require(d.w->validate_template(d.alice, text).deployable(), "example1 does not validate");
  const auto st = deploy(d, "one", "example1.yaml");
  require(st.status == StackStatus::create_complete, "stack not CREATE_COMPLETE: " + st.status_reason);
  require(st.resources.size() == 1, "expected one resource");
  const auto inst = d.w->show_instance(d.alice, st.resources.at("my_instance").id);
  require(inst.state == nfvi::InstanceState::active, "instance not ACTIVE");
  require(!inst.host.empty(), "instance has no host");
  require(d.w->cloud().census() != before, "deploy left no footprint");
  const auto gone = d.w->delete_stack(d.alice, "one");
  require(gone.status == StackStatus::delete_complete, "delete did not complete");
  require(d.w->cloud().census() == before, "census not restored: " + census_text(*d.w));
  return "create, ACTIVE on " + inst.host + ", delete, census restored";
}

// ---- 2 ----
std::string parameterised_outputs() {
  auto d = make_demo();
  std::string image_id;
  for (const auto& img : d.w->list_images(d.alice))
    if (img.name == "ubuntu_cloud14") image_id = img.id;
  const auto a = deploy(d, "a", "example2.yaml");
  const auto b = deploy(d, "b", "example2.yaml");
  require(a.status == StackStatus::create_complete && b.status == StackStatus::create_complete, "stacks failed");
  const auto ia = d.w->show_instance(d.alice, a.resources.at("my_instance").id);
  const auto ib = d.w->show_instance(d.alice, b.resources.at("my_instance").id);
  require(ia.image_id == image_id, "default image not used");
  require(ia.flavor == "m1.small" || ia.flavor.find("small") != std::string::npos, "default flavor not used");
  require(ia.key_name == "my_key1", "default key not used");
  const auto ip = a.outputs.at("instance_ip").as_string();
  require(ip == ia.addresses.begin()->second, "instance_ip differs from the fixed address");
  require(ip == first_host("10.0.0.0/24"), "instance_ip " + ip + " is not the first host address");
  require(testsupport::in_cidr(b.outputs.at("instance_ip").as_string(), "10.0.0.0/24"), "second ip off network");
  require(a.id != b.id && ia.id != ib.id, "ids collide");
  const std::regex uuid("[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}");
  require(std::regex_match(a.id, uuid) && std::regex_match(b.id, uuid), "stack ids are not UUIDv4");
  std::vector<std::string> sa, sb;
  for (const auto& [n, r] : a.resources) sa.push_back(n + ":" + r.type + ":" + std::string(engine::to_string(r.state)));
  for (const auto& [n, r] : b.resources) sb.push_back(n + ":" + r.type + ":" + std::string(engine::to_string(r.state)));
  require(sa == sb, "structures differ");
  require(a.outputs.size() == b.outputs.size(), "output sets differ");
  return "defaults bound, instance_ip=" + ip + ", two stacks with distinct ids";
}

// ---- 3 ----
std::pair<std::string, std::string> guest_files(std::uint64_t seed) {
  auto d = make_demo(seed);
  const auto st = deploy(d, "three", "example3.yaml");
  require(st.status == StackStatus::create_complete, "example3 failed: " + st.status_reason);
  return {d.w->read_guest_file(d.alice, st.resources.at("inst_simple").id, "/hello.txt"),
          d.w->read_guest_file(d.alice, st.resources.at("inst_advanced").id, "/hello.txt")};
}

std::string user_data_files() {
  const auto [simple, advanced] = guest_files(42);
  require(simple == "Hello, World!\n", "simple hello.txt is '" + simple + "'");
  std::smatch m;
  const std::regex shape("Hello, my name is student\\. Here is a random number: ([0-9]{4})\\.\n");
  require(std::regex_match(advanced, m, shape), "advanced hello.txt is '" + advanced + "'");
  const auto again = guest_files(42);
  require(again.first == simple && again.second == advanced, "same seed gave different files");
  return "hello.txt exact, random number " + m[1].str() + " reproducible under seed 42";
}

// ---- 4 ----
std::string nested_wait_condition() {
  auto d = make_demo();
  const auto st = deploy(d, "wp", "example4.yaml");
  require(st.status == StackStatus::create_complete, "example4 failed: " + st.status_reason);
  const auto& log = d.w->event_log();
  const auto resolved = first_event(log, "wait_condition_resolved", "wp-mysql/");
  const auto wp_first = first_event(log, "stack_create_in_progress", "wp-wordpress");
  require(resolved < log.size() && wp_first < log.size(), "events missing");
  require(resolved < wp_first, "wordpress started before the database signalled");
  require(log.events()[resolved].detail.find("SUCCESS") != std::string::npos, "signal was not SUCCESS");
  const auto mysql = d.w->show_stack(d.alice, st.resources.at("mysql").nested_stack);
  const auto wordpress = d.w->show_stack(d.alice, st.resources.at("wordpress").nested_stack);
  const auto db = mysql.outputs.at("db_address").as_string();
  const auto conf =
      d.w->read_guest_file(d.alice, wordpress.resources.at("wordpress_instance").id, "/var/www/wp-config.php");
  require(conf.find("define('DB_HOST', '" + db + "');") != std::string::npos, "wp-config lacks the db address");

  // Same templates, but the database never signals.
  const auto dir = scratch_templates("withheld");
  {
    std::istringstream in(testsupport::read_text(dir / "mysql.yaml"));
    std::string line, out;
    while (std::getline(in, line))
      if (line.find("signal __wc_notify__") == std::string::npos) out += line + "\n";
    testsupport::write_text(dir / "mysql.yaml", out);
  }
  auto e = make_demo();
  deploy(e, "wp", "example4.yaml", {}, dir);
  const auto started = e.w->now();
  for (int i = 0; i < 10000 && e.w->show_stack(e.alice, "wp").status == StackStatus::create_in_progress; ++i)
    e.w->wait_tick(e.alice, "wp");
  const auto parked = e.w->show_stack(e.alice, "wp");
  fs::remove_all(dir);
  require(parked.status == StackStatus::create_failed, "withheld signal gave " + std::string(engine::to_string(parked.status)));
  require(first_event(e.w->event_log(), "stack_create_in_progress", "wp-wordpress") == e.w->event_log().size(),
          "wordpress started without a signal");
  return "wordpress after SUCCESS signal, DB_HOST=" + db + "; withheld signal -> CREATE_FAILED after " +
         std::to_string(e.w->now() - started) + " ticks";
}

// ---- 5 ----
std::string plan_against_brute_force() {
  std::mt19937_64 rng(20240);
  int dags = 0, cycles = 0;
  for (int i = 0; i < 500; ++i) {
    const auto g = testsupport::random_graph(rng, 7, true);
    const auto plan = engine::build_plan(g.doc);
    std::vector<std::string> flat;
    for (const auto& w : plan.waves) flat.insert(flat.end(), w.begin(), w.end());
    require(testsupport::all_topological_orders(g).contains(flat), "graph " + std::to_string(i) + ": order is not topological");
    const auto depth = testsupport::longest_chain(g);
    for (int r = 0; r < g.n; ++r)
      require(plan.wave_of(testsupport::res_name(r)) == static_cast<std::size_t>(depth[r]),
              "graph " + std::to_string(i) + ": wrong wave for " + testsupport::res_name(r));
    ++dags;
  }
  for (int i = 0; i < 500; ++i) {
    const auto g = testsupport::random_graph(rng, 7, false);
    try {
      engine::build_plan(g.doc);
      throw Failed("cyclic graph " + std::to_string(i) + " accepted");
    } catch (const Error& e) {
      require(e.kind() == ErrorKind::dependency_cycle, "cyclic graph rejected with the wrong error");
      const std::string msg = e.what();
      const auto colon = msg.find(": ");
      require(colon != std::string::npos, "cycle not named: " + msg);
      std::vector<std::string> names;
      const std::string rest = msg.substr(colon + 2);
      for (std::size_t pos = 0;;) {
        const auto arrow = rest.find(" -> ", pos);
        names.push_back(rest.substr(pos, arrow - pos));
        if (arrow == std::string::npos) break;
        pos = arrow + 4;
      }
      std::set<std::pair<std::string, std::string>> edges;
      for (const auto& [p, c] : g.edges) edges.insert({testsupport::res_name(p), testsupport::res_name(c)});
      bool forward = names.size() >= 3 && names.front() == names.back(), backward = forward;
      for (std::size_t k = 1; k < names.size(); ++k) {
        forward = forward && edges.contains({names[k - 1], names[k]});
        backward = backward && edges.contains({names[k], names[k - 1]});
      }
      require(forward || backward, "named cycle is not a cycle of the graph: " + msg);
      ++cycles;
    }
  }
  return std::to_string(dags) + " DAGs match brute force, " + std::to_string(cycles) + " cycles named";
}

// ---- 6 ----
std::string lifetime_fuzz() {
  const auto rep = testsupport::run_lifetime_fuzz(606, 1000);
  require(rep.violations.empty(), rep.violations.empty() ? "" : rep.violations.front());
  for (const char* op : {"launch", "terminate", "crash", "attach", "detach", "write", "allocate", "release",
                         "associate", "disassociate"})
    require(rep.ops.contains(op), std::string("operation never exercised: ") + op);
  return std::to_string(rep.steps) + " steps, " + std::to_string(rep.succeeded) + " succeeded, 0 violations";
}

// ---- 7 ----
std::string connectivity_oracle() {
  const auto rep = testsupport::run_connectivity_oracle();
  require(rep.mismatches == 0, std::to_string(rep.mismatches) + " mismatches, first: " + rep.first);
  return std::to_string(rep.topologies) + " topologies, " + std::to_string(rep.checks) + " probes agree";
}

// ---- 8 ----
std::string deny_all_and_isolation() {
  testsupport::CliWorkspace ws;
  const auto alice = ws.bootstrap_demo();
  const auto tpl = (testsupport::templates_dir() / "example1.yaml").string();
  ws.must({"stack-create", "one", tpl});
  const auto server = testsupport::CliWorkspace::field(ws.must({"--json", "stack-show", "one"}), "id");
  const auto deny = (testsupport::source_dir() / "policy" / "deny_all.json").string();

  std::mt19937_64 rng(88);
  auto pick = [&](std::vector<std::string> v) { return v[rng() % v.size()]; };
  auto word = [&] { return pick({"x", "web", "one", "my_net1", "edge", "alice", "demo", "ghost", server}); };
  const std::vector<std::function<std::vector<std::string>()>> makers = {
      [&] { return std::vector<std::string>{"tenant-create", word()}; },
      [&] { return std::vector<std::string>{"user-create", word(), "--password", "pw"}; },
      [&] { return std::vector<std::string>{"role-assign", "alice", "demo", pick({"member", "admin"})}; },
      [&] { return std::vector<std::string>{"endpoint-register", "compute", "http://h:1"}; },
      [&] { return std::vector<std::string>{"host-add", word(), "--vcpus", "4", "--ram", "4096", "--disk", "40"}; },
      [&] { return std::vector<std::string>{"flavor-create", word(), "--vcpus", "1", "--ram", "512", "--disk", "1"}; },
      [&] { return std::vector<std::string>{"image-create", word(), "--data", "bits"}; },
      [&] { return std::vector<std::string>{"keypair-create", word()}; },
      [&] { return std::vector<std::string>{"secgroup-create", word()}; },
      [&] { return std::vector<std::string>{"secgroup-rule-add", "default", "--protocol", "tcp", "--port-min", "22"}; },
      [&] { return std::vector<std::string>{"net-create", word(), "10.7.0.0/24"}; },
      [&] { return std::vector<std::string>{"router-create", word()}; },
      [&] { return std::vector<std::string>{"router-interface-add", "edge", word()}; },
      [&] { return std::vector<std::string>{"router-gateway-set", word()}; },
      [&] { return std::vector<std::string>{"fip-allocate"}; },
      [&] { return std::vector<std::string>{"fip-associate", word(), word()}; },
      [&] { return std::vector<std::string>{"fip-disassociate", word()}; },
      [&] { return std::vector<std::string>{"fip-release", word()}; },
      [&] {
        return std::vector<std::string>{"server-create", word(), "--image", "ubuntu_cloud14", "--flavor", "m1.small",
                                        "--net", "my_net1"};
      },
      [&] { return std::vector<std::string>{"server-delete", word()}; },
      [&] { return std::vector<std::string>{"server-lock", word()}; },
      [&] { return std::vector<std::string>{"volume-create", word(), "1"}; },
      [&] { return std::vector<std::string>{"volume-attach", word(), word()}; },
      [&] { return std::vector<std::string>{"volume-detach", word()}; },
      [&] { return std::vector<std::string>{"volume-snapshot", word()}; },
      [&] { return std::vector<std::string>{"object-put", "c", word(), "--data", "d"}; },
      [&] { return std::vector<std::string>{"stack-create", word(), tpl}; },
      [&] { return std::vector<std::string>{"stack-delete", word()}; },
      [&] { return std::vector<std::string>{"signal", word(), R"({"status":"SUCCESS"})"}; },
      [&] { return std::vector<std::string>{"metric-push", word(), "cpu_util", "0.5"}; },
      [&] { return std::vector<std::string>{"group-create", word(), "--stack", "one", "--resource", "my_instance"}; },
      [&] {
        return std::vector<std::string>{"alarm-create", word(), "--metric", "cpu_util", "--threshold", "0.8",
                                        "--target", word()};
      },
      [&] { return std::vector<std::string>{"healer-configure"}; },
      [&] { return std::vector<std::string>{"fault-inject", word()}; },
      [&] { return std::vector<std::string>{"clock-advance", "1"}; },
  };

  const auto before = testsupport::read_text(ws.state());
  std::set<std::string> verbs;
  for (int i = 0; i < 200; ++i) {
    auto args = makers[rng() % makers.size()]();
    verbs.insert(args.front());
    const auto tok = (rng() & 1) ? alice : ws.admin_token();
    args.insert(args.begin(), {"--token", tok});
    auto env = ws.env();
    if (rng() & 1) args.insert(args.begin(), {"--policy", deny});
    else env["MINIMANO_POLICY"] = deny;
    const auto r = ws.run(args, env);
    std::string shown;
    for (const auto& a : args) shown += a + " ";
    require(r.code == 3, "exit " + std::to_string(r.code) + " for: " + shown + "(" + r.err + ")");
    require(testsupport::read_text(ws.state()) == before, "state changed after: " + shown);
  }

  // Isolation: a second tenant sees none of demo's resources.
  ws.with_token(ws.admin_token(), {"tenant-create", "other"});
  ws.with_token(ws.admin_token(), {"user-create", "bob", "--password", "pw"});
  ws.with_token(ws.admin_token(), {"role-assign", "bob", "other", "member"});
  const auto bob = testsupport::CliWorkspace::field(
      ws.must({"--json", "token-issue", "--user", "bob", "--password", "pw", "--tenant", "other"}), "id");
  require(ws.run({"--json", "--token", bob, "stack-list"}).lines().empty(), "foreign stack listed");
  require(ws.run({"--json", "--token", bob, "server-list"}).lines().empty(), "foreign server listed");
  require(ws.run({"--token", bob, "stack-show", server}).code == 6, "foreign stack visible by id");
  require(ws.run({"--token", bob, "stack-delete", "one"}).code == 6, "foreign stack deletable");
  return "200 denied invocations over " + std::to_string(verbs.size()) + " verbs, state untouched; tenant isolated";
}

// ---- 9 ----
std::string autonomic_golden() {
  const auto path = testsupport::source_dir() / "scenarios" / "autonomic.json";
  const auto result = run_scenario_file(path);
  const auto golden = testsupport::read_text(testsupport::source_dir() / "tests" / "golden" / "autonomic_seed42.jsonl");
  require(result.events_jsonl == golden, "event log differs from the golden trace");

  // Properties recomputed from the scenario file itself.
  const auto scn = json::parse(testsupport::read_text(path));
  json stream, alarm, healer, fault, group;
  Tick tick = 0, fault_at = -1;
  for (const auto& s : scn.at("steps")) {
    const auto op = s.at("op").get<std::string>();
    if (op == "metric_stream") stream = s, tick += static_cast<Tick>(s.at("values").size());
    if (op == "alarm_create") alarm = s;
    if (op == "healer") healer = s;
    if (op == "group_create") group = s;
    if (op == "fault") fault = s, fault_at = tick + s.at("after").get<Tick>();
    if (op == "advance") tick += s.at("ticks").get<Tick>();
  }
  // Alarm replay: the stream pushes sample i at tick i and then advances, so
  // the evaluation at tick t sees samples from [t-w+1, t-1]. Edge-triggered.
  const auto vals = stream.at("values").get<std::vector<double>>();
  const auto w = alarm.at("window").get<Tick>();
  const double threshold = alarm.at("threshold").get<double>();
  std::vector<Tick> expected_fires;
  bool in_alarm = false;
  for (Tick t = 1; t <= static_cast<Tick>(vals.size()); ++t) {
    double sum = 0;
    int n = 0;
    for (Tick s = std::max<Tick>(0, t - w + 1); s < t && s < static_cast<Tick>(vals.size()); ++s) sum += vals[s], ++n;
    const bool high = n > 0 && sum / n > threshold;
    if (high && !in_alarm) expected_fires.push_back(t);
    in_alarm = high;
  }
  require(expected_fires.size() == 1, "scenario ramp should fire exactly once");

  std::vector<Event> events;
  for (std::istringstream in(golden); ;) {
    std::string line;
    if (!std::getline(in, line)) break;
    const auto j = json::parse(line);
    events.push_back({j.at("tick").get<Tick>(), j.at("kind").get<std::string>(), j.at("subject").get<std::string>(),
                      j.at("detail").get<std::string>()});
  }
  int outs = 0;
  Tick out_tick = -1, injected = -1, healed = -1;
  for (const auto& e : events) {
    if (e.kind == "scale_out") ++outs, out_tick = e.tick;
    if (e.kind == "fault_injected") injected = e.tick;
    if (e.kind == "heal_complete" && injected >= 0 && healed < 0) healed = e.tick;
  }
  require(outs == 1, std::to_string(outs) + " scale_out events");
  require(out_tick == expected_fires.front(), "scale_out at " + std::to_string(out_tick) + ", replay says " +
                                                  std::to_string(expected_fires.front()));
  require(injected == fault_at, "fault injected at " + std::to_string(injected));
  const auto window = healer.at("heal_window").get<Tick>();
  const auto interval = healer.at("detect_interval").get<Tick>();
  require(healed >= injected && healed <= injected + window, "not healed within the window");
  require(healed == (injected + interval - 1) / interval * interval, "healed off the detect schedule");

  const auto& world = *result.world;
  const auto tok = result.tokens.at("alice");
  const auto g = world.show_group(tok, group.at("name").get<std::string>());
  require(g.desired == group.at("desired").get<int>() + 1, "desired is " + std::to_string(g.desired));
  require(static_cast<int>(g.members.size()) == g.desired, "member count differs from desired");
  for (const auto& m : g.members)
    require(world.show_instance(tok, m).state == nfvi::InstanceState::active, "member " + m + " not ACTIVE");
  return "matches golden; one scale_out at tick " + std::to_string(out_tick) + "; fault at " +
         std::to_string(injected) + " healed at " + std::to_string(healed);
}

// ---- 10 ----
std::string determinism() {
  const auto path = testsupport::source_dir() / "scenarios" / "acceptance.json";
  const auto a = run_scenario_file(path);
  const auto b = run_scenario_file(path);
  require(a.events_jsonl == b.events_jsonl, "event logs differ");
  require(a.snapshot == b.snapshot, "snapshots differ");
  ScenarioOptions other;
  other.seed = 43;
  const auto c = run_scenario_file(path, other);
  require(c.events_jsonl != a.events_jsonl, "seed has no effect");
  const auto lines = std::count(a.events_jsonl.begin(), a.events_jsonl.end(), '\n');
  return std::to_string(lines) + " events and snapshot identical across runs";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"single server create/delete round trip", single_server_round_trip},
      {"parameter defaults and outputs", parameterised_outputs},
      {"user data and random string", user_data_files},
      {"nested stacks gated by wait condition", nested_wait_condition},
      {"deployment order vs brute force, cycles named", plan_against_brute_force},
      {"instance lifetime invariants under fuzz", lifetime_fuzz},
      {"connectivity vs independent oracle", connectivity_oracle},
      {"deny-all policy and tenant isolation", deny_all_and_isolation},
      {"autonomic scenario vs golden trace", autonomic_golden},
      {"seeded determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string verdict = "PASS", detail;
    try {
      detail = criteria[i].second();
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = e.what();
      ++failed;
    }
    std::cout << verdict << "  " << (i + 1) << "  " << criteria[i].first << ": " << detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
