#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "minimano/common/error.hpp"
#include "world.hpp"

using namespace minimano;
using engine::StackStatus;
using testsupport::deploy;
using testsupport::make_demo;
namespace fs = std::filesystem;

namespace {

std::size_t first_event(const EventLog& log, std::string_view kind, std::string_view subject_prefix) {
  const auto& ev = log.events();
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].kind == kind && ev[i].subject.starts_with(subject_prefix)) return i;
  return ev.size();
}

fs::path scratch_templates(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("minimano-tpl-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(testsupport::templates_dir())) fs::copy(e.path(), dir / e.path().filename());
  return dir;
}

void drop_lines_containing(const fs::path& file, const std::string& needle) {
  std::istringstream in(testsupport::read_text(file));
  std::string line, out;
  while (std::getline(in, line))
    if (line.find(needle) == std::string::npos) out += line + "\n";
  testsupport::write_text(file, out);
}

}  // namespace

TEST(Engine, SingleServerStackCompletes) {
  auto d = make_demo();
  const auto st = deploy(d, "one", "example1.yaml");
  EXPECT_EQ(st.status, StackStatus::create_complete) << st.status_reason;
  ASSERT_EQ(st.resources.size(), 1u);
  const auto inst = d.w->show_instance(d.alice, st.resources.at("my_instance").id);
  EXPECT_EQ(inst.state, nfvi::InstanceState::active);
  EXPECT_EQ(inst.name, "one-my_instance");
  EXPECT_EQ(st.history, (std::vector<StackStatus>{StackStatus::create_in_progress, StackStatus::create_complete}));
}

TEST(Engine, OutputsReadResourceAttributes) {
  auto d = make_demo();
  const auto st = deploy(d, "two", "example2.yaml");
  ASSERT_EQ(st.status, StackStatus::create_complete) << st.status_reason;
  const auto inst = d.w->show_instance(d.alice, st.resources.at("my_instance").id);
  ASSERT_EQ(inst.addresses.size(), 1u);
  EXPECT_EQ(st.outputs.at("instance_ip").as_string(), inst.addresses.begin()->second);
}

TEST(Engine, ParameterOverrides) {
  auto d = make_demo();
  d.w->create_network(d.alice, "other", "10.9.0.0/24");
  OrderedMap<Value> p;
  p.insert("private_network", Value("other"));
  const auto st = deploy(d, "two", "example2.yaml", p);
  ASSERT_EQ(st.status, StackStatus::create_complete);
  EXPECT_TRUE(st.outputs.at("instance_ip").as_string().starts_with("10.9.0."));
}

TEST(Engine, MissingImageFailsNamingTheResource) {
  auto d = make_demo();
  OrderedMap<Value> p;
  p.insert("image", Value("missing"));
  const auto st = deploy(d, "bad", "example2.yaml", p);
  EXPECT_EQ(st.status, StackStatus::create_failed);
  EXPECT_NE(st.status_reason.find("my_instance"), std::string::npos) << st.status_reason;
  EXPECT_EQ(st.resources.at("my_instance").state, engine::ResourceState::create_failed);
}

TEST(Engine, UnknownParameterRejectedBeforeAnythingIsCreated) {
  auto d = make_demo();
  OrderedMap<Value> p;
  p.insert("imag", Value("x"));
  try {
    deploy(d, "bad", "example2.yaml", p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_parameter);
  }
  EXPECT_TRUE(d.w->list_stacks(d.alice).empty());
  EXPECT_TRUE(d.w->list_instances(d.alice).empty());
}

TEST(Engine, DuplicateLiveNameRejected) {
  auto d = make_demo();
  deploy(d, "s", "example1.yaml");
  try {
    deploy(d, "s", "example1.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::duplicate);
  }
}

TEST(Engine, RandomStringFeedsUserData) {
  auto d = make_demo();
  const auto st = deploy(d, "three", "example3.yaml");
  ASSERT_EQ(st.status, StackStatus::create_complete) << st.status_reason;
  const auto rnum = st.resources.at("rng").attributes.at("value").as_string();
  EXPECT_TRUE(std::regex_match(rnum, std::regex("[0-9]{4}")));
  EXPECT_EQ(d.w->read_guest_file(d.alice, st.resources.at("inst_simple").id, "/hello.txt"), "Hello, World!\n");
  EXPECT_EQ(d.w->read_guest_file(d.alice, st.resources.at("inst_advanced").id, "/hello.txt"),
            "Hello, my name is student. Here is a random number: " + rnum + ".\n");
}

TEST(Engine, ImageWithoutAgentSkipsUserData) {
  auto d = make_demo();
  nfvi::ImageOptions opts;
  opts.cloud_init = false;
  d.w->register_image(d.alice, "bare", "x", opts);
  OrderedMap<Value> p;
  p.insert("image", Value("bare"));
  const auto st = deploy(d, "three", "example3.yaml", p);
  ASSERT_EQ(st.status, StackStatus::create_complete);
  try {
    d.w->read_guest_file(d.alice, st.resources.at("inst_simple").id, "/hello.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
}

TEST(Engine, NestedStacksRespectWaitCondition) {
  auto d = make_demo();
  const auto st = deploy(d, "wp", "example4.yaml");
  ASSERT_EQ(st.status, StackStatus::create_complete) << st.status_reason;
  const auto& log = d.w->event_log();
  const auto resolved = first_event(log, "wait_condition_resolved", "wp-mysql/");
  const auto wp_first = first_event(log, "stack_create_in_progress", "wp-wordpress");
  ASSERT_LT(resolved, log.size());
  ASSERT_LT(wp_first, log.size());
  EXPECT_LT(resolved, wp_first);
  EXPECT_NE(log.events()[resolved].detail.find("SUCCESS"), std::string::npos);
  const auto mysql = d.w->show_stack(d.alice, st.resources.at("mysql").nested_stack);
  EXPECT_EQ(st.outputs.at("database").as_string(), mysql.outputs.at("db_address").as_string());
  const auto wordpress = d.w->show_stack(d.alice, st.resources.at("wordpress").nested_stack);
  const auto conf =
      d.w->read_guest_file(d.alice, wordpress.resources.at("wordpress_instance").id, "/var/www/wp-config.php");
  EXPECT_NE(conf.find("define('DB_HOST', '" + mysql.outputs.at("db_address").as_string() + "');"), std::string::npos);
}

TEST(Engine, WithheldSignalTimesOut) {
  const auto dir = scratch_templates("withheld");
  drop_lines_containing(dir / "mysql.yaml", "signal __wc_notify__");
  auto d = make_demo();
  auto st = deploy(d, "wp", "example4.yaml", {}, dir);
  EXPECT_EQ(st.status, StackStatus::create_in_progress);
  const auto started = d.w->now();
  while (d.w->show_stack(d.alice, "wp").status == StackStatus::create_in_progress) d.w->wait_tick(d.alice, "wp");
  st = d.w->show_stack(d.alice, "wp");
  EXPECT_EQ(st.status, StackStatus::create_failed);
  EXPECT_EQ(d.w->now() - started, 60);
  EXPECT_NE(st.status_reason.find("timed out"), std::string::npos) << st.status_reason;
  EXPECT_EQ(first_event(d.w->event_log(), "stack_create_in_progress", "wp-wordpress"), d.w->event_log().size());
  fs::remove_all(dir);
}

TEST(Engine, ManualSignalCompletesParkedStack) {
  const auto dir = scratch_templates("manual");
  drop_lines_containing(dir / "mysql.yaml", "signal __wc_notify__");
  auto d = make_demo();
  const auto st = deploy(d, "db", "mysql.yaml", {}, dir);
  ASSERT_EQ(st.status, StackStatus::create_in_progress);
  const auto url = st.resources.at("wait_handle").attributes.at("curl_cli").as_string();
  EXPECT_EQ(d.w->signal(d.alice, url, R"({"status":"SUCCESS","data":"ok"})"), engine::SignalAck::resolved);
  const auto done = d.w->show_stack(d.alice, "db");
  EXPECT_EQ(done.status, StackStatus::create_complete);
  EXPECT_EQ(done.outputs.at("ready").as_string(), "ok");
  EXPECT_EQ(d.w->signal(d.alice, url, R"({"status":"SUCCESS"})"), engine::SignalAck::ignored);
  fs::remove_all(dir);
}

TEST(Engine, FailureSignalFailsStack) {
  const auto dir = scratch_templates("failure");
  drop_lines_containing(dir / "mysql.yaml", "signal __wc_notify__");
  auto d = make_demo();
  const auto st = deploy(d, "db", "mysql.yaml", {}, dir);
  const auto url = st.resources.at("wait_handle").attributes.at("curl_cli").as_string();
  d.w->signal(d.alice, url, R"({"status":"FAILURE","data":"disk full"})");
  const auto done = d.w->show_stack(d.alice, "db");
  EXPECT_EQ(done.status, StackStatus::create_failed);
  EXPECT_NE(done.status_reason.find("disk full"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Engine, SignalFromOtherTenantIsNotFound) {
  const auto dir = scratch_templates("tenant");
  drop_lines_containing(dir / "mysql.yaml", "signal __wc_notify__");
  auto d = make_demo();
  const auto st = deploy(d, "db", "mysql.yaml", {}, dir);
  const auto url = st.resources.at("wait_handle").attributes.at("curl_cli").as_string();
  try {
    d.w->signal(d.admin, url, R"({"status":"SUCCESS"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
  try {
    d.w->signal(d.alice, url, R"({"status":"MAYBE"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
  fs::remove_all(dir);
}

TEST(Engine, DeleteRestoresCensus) {
  auto d = make_demo();
  const auto before = d.w->cloud().census();
  const auto st = deploy(d, "wp", "example4.yaml");
  ASSERT_EQ(st.status, StackStatus::create_complete);
  EXPECT_NE(d.w->cloud().census(), before);
  const auto gone = d.w->delete_stack(d.alice, "wp");
  EXPECT_EQ(gone.status, StackStatus::delete_complete);
  EXPECT_EQ(d.w->cloud().census(), before);
  EXPECT_TRUE(d.w->list_stacks(d.alice).empty());
  try {
    d.w->delete_stack(d.alice, st.resources.at("mysql").nested_stack);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_state);
  }
}

TEST(Engine, DeleteOfLockedServerFails) {
  auto d = make_demo();
  const auto st = deploy(d, "one", "example1.yaml");
  d.w->set_instance_locked(d.admin, st.resources.at("my_instance").id, true);
  const auto res = d.w->delete_stack(d.alice, "one");
  EXPECT_EQ(res.status, StackStatus::delete_failed);
  EXPECT_EQ(res.resources.at("my_instance").state, engine::ResourceState::delete_failed);
}

TEST(Engine, CycleRejectedAtCreate) {
  auto d = make_demo();
  const std::string text = R"(heat_template_version: 2013-05-23
resources:
  a:
    type: OS::Heat::RandomString
    depends_on: b
  b:
    type: OS::Heat::RandomString
    depends_on: a
)";
  try {
    d.w->create_stack(d.alice, "loop", text, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dependency_cycle);
    EXPECT_TRUE(std::regex_search(std::string(e.what()), std::regex("a -> b -> a|b -> a -> b"))) << e.what();
  }
  const auto report = d.w->validate_template(d.alice, text);
  EXPECT_FALSE(report.deployable());
}

TEST(Engine, NestingDepthIsBounded) {
  const auto dir = fs::temp_directory_path() / ("minimano-rec-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  testsupport::write_text(dir / "self.yaml", R"(heat_template_version: 2013-05-23
resources:
  inner:
    type: self.yaml
)");
  auto d = make_demo();
  const auto st = deploy(d, "deep", "self.yaml", {}, dir);
  EXPECT_EQ(st.status, StackStatus::create_failed);
  EXPECT_NE(st.status_reason.find("depth"), std::string::npos) << st.status_reason;
  fs::remove_all(dir);
}

TEST(Engine, TenantIsolation) {
  auto d = make_demo();
  deploy(d, "mine", "example1.yaml");
  const auto id = d.w->show_stack(d.alice, "mine").id;
  EXPECT_TRUE(d.w->list_stacks(d.admin).empty());
  try {
    d.w->show_stack(d.admin, id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
}

TEST(Engine, SnapshotRoundTripPreservesEverything) {
  const auto dir = scratch_templates("snap");
  drop_lines_containing(dir / "mysql.yaml", "signal __wc_notify__");
  auto d = make_demo();
  deploy(d, "three", "example3.yaml");
  const auto parked = deploy(d, "db", "mysql.yaml", {}, dir);
  const auto snap = d.w->snapshot();
  auto copy = Orchestrator::restore(snap);
  EXPECT_EQ(copy->snapshot(), snap);
  // The restored world continues exactly like the original.
  const auto url = parked.resources.at("wait_handle").attributes.at("curl_cli").as_string();
  d.w->signal(d.alice, url, R"({"status":"SUCCESS"})");
  copy->signal(d.alice, url, R"({"status":"SUCCESS"})");
  d.w->advance_clock(d.admin, 3);
  copy->advance_clock(d.admin, 3);
  EXPECT_EQ(copy->snapshot(), d.w->snapshot());
  fs::remove_all(dir);
}
