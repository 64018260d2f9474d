#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minimano/common/event_log.hpp"
#include "minimano/common/ordered_map.hpp"
#include "minimano/common/rng.hpp"
#include "minimano/common/value.hpp"
#include "minimano/engine/plan.hpp"
#include "minimano/engine/wait_condition.hpp"
#include "minimano/hot/registry.hpp"
#include "minimano/hot/template.hpp"
#include "minimano/nfvi/cloud.hpp"

namespace minimano::engine {

enum class StackStatus {
  create_in_progress,
  create_complete,
  create_failed,
  delete_in_progress,
  delete_complete,
  delete_failed,
};

std::string_view to_string(StackStatus s) noexcept;
StackStatus stack_status_from_string(std::string_view s);
bool is_terminal(StackStatus s) noexcept;
bool is_legal_transition(StackStatus from, StackStatus to) noexcept;

enum class ResourceState { init, create_in_progress, create_complete, create_failed, delete_complete, delete_failed };

std::string_view to_string(ResourceState s) noexcept;
ResourceState resource_state_from_string(std::string_view s);

struct ResourceRecord {
  std::string name;
  std::string type;
  std::string id;  // physical id once created
  ResourceState state = ResourceState::init;
  std::string status_reason;
  Value::Map attributes;
  std::optional<WaitConditionState> wait;  // WaitCondition resources only
  std::string nested_stack;               // template resources only

  friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

struct Stack {
  std::string id;
  std::string name;
  std::string tenant;
  StackStatus status = StackStatus::create_in_progress;
  std::string status_reason;
  std::vector<StackStatus> history;  // every status the stack has held, in order
  hot::TemplateDoc templ;
  std::string template_dir;  // base for nested template lookup
  hot::BoundParameters parameters;
  OrderedMap<ResourceRecord> resources;  // declaration order
  Value::Map outputs;
  std::string parent_stack;  // empty for top-level stacks
  std::string parent_resource;
  int depth = 0;
  Tick created_at = 0;
  DeploymentPlan plan;
  std::size_t wave_cursor = 0;
  std::uint64_t seed = 0;
  Rng rng;

  friend bool operator==(const Stack&, const Stack&) = default;
};

struct StackSummary {
  std::string id;
  std::string name;
  StackStatus status;
  Tick created_at;
};

// Signals for a handle are kept here until (and after) its wait condition starts.
struct HandleState {
  std::string id;
  std::string stack_id;
  std::string resource;
  std::string condition;  // name of the bound WaitCondition resource, once started
  std::vector<SignalPayload> signals;

  friend bool operator==(const HandleState&, const HandleState&) = default;
};

struct CreateOptions {
  std::string template_dir;        // directory of the template file, if any
  std::optional<std::uint64_t> seed;  // otherwise drawn from the engine RNG
};

struct EngineConfig {
  std::vector<std::filesystem::path> template_dirs;  // registry of nested templates
  std::string signal_base_url = "http://orchestration.local:8004/v1";
  int max_depth = 8;
};

enum class SignalAck { recorded, resolved, ignored, parked };

std::string_view to_string(SignalAck ack) noexcept;

// Deploys stacks as resumable state machines. Each create walks the plan wave
// by wave; a wave that waits for a signal parks the stack until the signal
// arrives or the clock reaches the deadline.
class Engine {
public:
  Engine(nfvi::Cloud& cloud, EventLog& log, const Tick& clock, Rng& rng, EngineConfig config = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const hot::ResourceTypeRegistry& registry() const noexcept { return registry_; }
  const EngineConfig& config() const noexcept { return config_; }

  // The document must already be valid. Throws duplicate / missing_parameter
  // etc. before any resource is touched; deployment failures show up in the
  // returned stack's status instead.
  const Stack& create_stack(const std::string& tenant, const std::string& name, const hot::TemplateDoc& doc,
                            const OrderedMap<Value>& provided, const CreateOptions& options = {});
  const Stack& delete_stack(const std::string& tenant, std::string_view id_or_name);
  std::vector<StackSummary> list_stacks(const std::string& tenant) const;
  const Stack& show_stack(const std::string& tenant, std::string_view id_or_name) const;

  // Delivers a wait-condition signal. Throws not_found for an unknown handle
  // and invalid_argument for a malformed payload.
  SignalAck signal(std::string_view handle_url_or_id, std::string_view payload);
  // The tenant that owns a handle; throws not_found.
  const std::string& handle_tenant(std::string_view handle_url_or_id) const;

  // Resolves expired wait conditions and advances every runnable stack.
  void process_deadlines(Tick now);
  // Advances every in-progress stack as far as it can go without waiting.
  void pump();

  const Stack* find(std::string_view id) const;
  const std::vector<std::string>& creation_order() const noexcept { return order_; }
  const OrderedMap<HandleState>& handles() const noexcept { return handles_; }

  nlohmann::ordered_json stack_detail(const Stack& stack) const;

  nlohmann::ordered_json to_json() const;
  void load(const nlohmann::ordered_json& json);

private:
  Stack& stack_ref(std::string_view id);
  Stack& insert_stack(Stack stack);
  void set_status(Stack& stack, StackStatus status, std::string reason);
  bool progress(Stack& stack);
  void start_resource(Stack& stack, ResourceRecord& rec);
  bool poll_resource(Stack& stack, ResourceRecord& rec);
  void finish_create(Stack& stack);
  void fail_create(Stack& stack, const std::string& reason);
  void complete_resource(Stack& stack, ResourceRecord& rec);
  void fail_resource(Stack& stack, ResourceRecord& rec, const std::string& reason);
  hot::EvaluationContext context(const Stack& stack) const;
  void start_server(Stack& stack, ResourceRecord& rec, const Value::Map& props);
  void start_random_string(Stack& stack, ResourceRecord& rec, const Value::Map& props);
  void start_wait_condition(Stack& stack, ResourceRecord& rec, const Value::Map& props);
  void start_nested(Stack& stack, ResourceRecord& rec, const Value::Map& props);
  bool delete_resources(Stack& stack);
  std::string handle_id_of(std::string_view handle_url_or_id) const;
  std::string subject(const Stack& stack, std::string_view resource = {}) const;

  nfvi::Cloud& cloud_;
  EventLog& log_;
  const Tick& clock_;
  Rng& rng_;
  EngineConfig config_;
  hot::ResourceTypeRegistry registry_;
  std::vector<std::string> order_;  // stack ids in creation order
  std::map<std::string, Stack, std::less<>> stacks_;
  OrderedMap<HandleState> handles_;
};

// Finds a nested template: the parent template's directory first, then the
// configured registry directories. Returns an empty path when absent.
std::filesystem::path resolve_nested(std::string_view type, const std::filesystem::path& parent_dir,
                                     const std::vector<std::filesystem::path>& registry_dirs);

}  // namespace minimano::engine
