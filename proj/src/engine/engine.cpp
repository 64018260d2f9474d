#include "minimano/engine/engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "minimano/common/error.hpp"

namespace minimano::engine {

using json = nlohmann::ordered_json;

std::string_view to_string(StackStatus s) noexcept {
  switch (s) {
    case StackStatus::create_in_progress: return "CREATE_IN_PROGRESS";
    case StackStatus::create_complete: return "CREATE_COMPLETE";
    case StackStatus::create_failed: return "CREATE_FAILED";
    case StackStatus::delete_in_progress: return "DELETE_IN_PROGRESS";
    case StackStatus::delete_complete: return "DELETE_COMPLETE";
    case StackStatus::delete_failed: return "DELETE_FAILED";
  }
  return "CREATE_IN_PROGRESS";
}

StackStatus stack_status_from_string(std::string_view s) {
  for (auto st : {StackStatus::create_in_progress, StackStatus::create_complete, StackStatus::create_failed,
                  StackStatus::delete_in_progress, StackStatus::delete_complete, StackStatus::delete_failed})
    if (to_string(st) == s) return st;
  throw Error(ErrorKind::invalid_argument, "unknown stack status " + std::string(s));
}

bool is_terminal(StackStatus s) noexcept {
  return s != StackStatus::create_in_progress && s != StackStatus::delete_in_progress;
}

bool is_legal_transition(StackStatus from, StackStatus to) noexcept {
  switch (from) {
    case StackStatus::create_in_progress:
      return to == StackStatus::create_complete || to == StackStatus::create_failed;
    case StackStatus::create_complete:
    case StackStatus::create_failed:
      return to == StackStatus::delete_in_progress;
    case StackStatus::delete_in_progress:
      return to == StackStatus::delete_complete || to == StackStatus::delete_failed;
    case StackStatus::delete_complete:
    case StackStatus::delete_failed:
      return false;
  }
  return false;
}

std::string_view to_string(ResourceState s) noexcept {
  switch (s) {
    case ResourceState::init: return "INIT";
    case ResourceState::create_in_progress: return "CREATE_IN_PROGRESS";
    case ResourceState::create_complete: return "CREATE_COMPLETE";
    case ResourceState::create_failed: return "CREATE_FAILED";
    case ResourceState::delete_complete: return "DELETE_COMPLETE";
    case ResourceState::delete_failed: return "DELETE_FAILED";
  }
  return "INIT";
}

ResourceState resource_state_from_string(std::string_view s) {
  for (auto st : {ResourceState::init, ResourceState::create_in_progress, ResourceState::create_complete,
                  ResourceState::create_failed, ResourceState::delete_complete, ResourceState::delete_failed})
    if (to_string(st) == s) return st;
  throw Error(ErrorKind::invalid_argument, "unknown resource state " + std::string(s));
}

std::string_view to_string(SignalAck ack) noexcept {
  switch (ack) {
    case SignalAck::recorded: return "recorded";
    case SignalAck::resolved: return "resolved";
    case SignalAck::ignored: return "ignored";
    case SignalAck::parked: return "parked";
  }
  return "recorded";
}

std::filesystem::path resolve_nested(std::string_view type, const std::filesystem::path& parent_dir,
                                     const std::vector<std::filesystem::path>& registry_dirs) {
  const std::filesystem::path rel(type);
  if (rel.is_absolute()) return std::filesystem::is_regular_file(rel) ? rel : std::filesystem::path{};
  if (!parent_dir.empty() && std::filesystem::is_regular_file(parent_dir / rel)) return parent_dir / rel;
  for (const auto& dir : registry_dirs)
    if (std::filesystem::is_regular_file(dir / rel)) return dir / rel;
  return {};
}

namespace {

bool valid_stack_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  if (!std::isalpha(static_cast<unsigned char>(name.front()))) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_string(Rng& rng, std::int64_t length, std::string_view sequence) {
  static constexpr std::string_view digits = "0123456789";
  static constexpr std::string_view lower = "abcdefghijklmnopqrstuvwxyz";
  static constexpr std::string_view upper = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string alphabet;
  if (sequence == "digits") alphabet = digits;
  else if (sequence == "lowercase") alphabet = lower;
  else if (sequence == "uppercase") alphabet = upper;
  else alphabet = std::string(lower) + std::string(upper) + std::string(digits);
  std::string out;
  out.reserve(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) out.push_back(alphabet[rng.below(alphabet.size())]);
  return out;
}

ResourceRecord fresh_record(const std::string& name, const std::string& type) {
  ResourceRecord rec;
  rec.name = name;
  rec.type = type;
  return rec;
}

json value_map_json(const Value::Map& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = to_json(v);
  return out;
}

Value::Map value_map_from(const json& j) {
  Value::Map m;
  for (auto it = j.begin(); it != j.end(); ++it) m.insert(it.key(), value_from_json(it.value()));
  return m;
}

}  // namespace

Engine::Engine(nfvi::Cloud& cloud, EventLog& log, const Tick& clock, Rng& rng, EngineConfig config)
    : cloud_(cloud),
      log_(log),
      clock_(clock),
      rng_(rng),
      config_(std::move(config)),
      registry_(hot::ResourceTypeRegistry::builtin()) {
  // Boot scripts deliver signals synchronously; they only record state, the
  // caller's pump picks up any resolution.
  cloud_.set_signal_sink([this](const std::string& url, const std::string& payload) -> std::string {
    try {
      return "signal " + std::string(to_string(signal(url, payload)));
    } catch (const Error& e) {
      return std::string("signal rejected: ") + e.what();
    }
  });
}

std::string Engine::subject(const Stack& stack, std::string_view resource) const {
  return resource.empty() ? stack.name : stack.name + "/" + std::string(resource);
}

Stack& Engine::stack_ref(std::string_view id) {
  auto it = stacks_.find(id);
  if (it == stacks_.end()) throw Error(ErrorKind::not_found, "stack '" + std::string(id) + "' not found");
  return it->second;
}

const Stack* Engine::find(std::string_view id) const {
  auto it = stacks_.find(id);
  return it == stacks_.end() ? nullptr : &it->second;
}

Stack& Engine::insert_stack(Stack stack) {
  const std::string id = stack.id;
  order_.push_back(id);
  return stacks_.emplace(id, std::move(stack)).first->second;
}

void Engine::set_status(Stack& stack, StackStatus status, std::string reason) {
  if (!is_legal_transition(stack.status, status))
    throw Error(ErrorKind::invalid_state, "illegal stack transition " + std::string(to_string(stack.status)) +
                                              " -> " + std::string(to_string(status)));
  stack.status = status;
  stack.status_reason = std::move(reason);
  stack.history.push_back(status);
  std::string kind = "stack_" + std::string(to_string(status));
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
  log_.append(clock_, kind, subject(stack), stack.status_reason);
}

const Stack& Engine::create_stack(const std::string& tenant, const std::string& name, const hot::TemplateDoc& doc,
                                  const OrderedMap<Value>& provided, const CreateOptions& options) {
  if (!valid_stack_name(name))
    throw Error(ErrorKind::invalid_argument,
                "stack name must start with a letter and use only letters, digits, '_', '-' and '.'");
  for (const auto& id : order_) {
    const Stack& s = stacks_.at(id);
    if (s.tenant == tenant && s.parent_stack.empty() && s.name == name && s.status != StackStatus::delete_complete)
      throw Error(ErrorKind::duplicate, "stack '" + name + "' already exists");
  }
  const auto report = hot::validate_template(doc, registry_);
  if (!report.deployable()) throw Error(ErrorKind::validation, report.summary());
  DeploymentPlan plan = build_plan(doc);
  hot::BoundParameters bound = hot::bind_parameters(doc, provided);

  Stack st;
  st.id = rng_.uuid4();
  st.name = name;
  st.tenant = tenant;
  st.history.push_back(StackStatus::create_in_progress);
  st.templ = doc;
  st.template_dir = options.template_dir;
  st.parameters = std::move(bound);
  for (const auto& [rname, def] : doc.resources) st.resources.insert(rname, fresh_record(rname, def.type));
  st.created_at = clock_;
  st.plan = std::move(plan);
  st.seed = options.seed ? *options.seed : rng_.next();
  st.rng = Rng(st.seed);
  Stack& stored = insert_stack(std::move(st));
  log_.append(clock_, "stack_create_in_progress", subject(stored), "id=" + stored.id);
  pump();
  return stored;
}

hot::EvaluationContext Engine::context(const Stack& stack) const {
  hot::EvaluationContext ctx;
  ctx.parameters = &stack.parameters;
  ctx.resource = [&stack](std::string_view name) -> std::optional<hot::ResourceView> {
    const auto* rec = stack.resources.find(name);
    if (!rec || rec->state != ResourceState::create_complete) return std::nullopt;
    return hot::ResourceView{rec->id, &rec->attributes};
  };
  return ctx;
}

void Engine::pump() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      Stack& st = stacks_.at(order_[i]);
      if (st.status == StackStatus::create_in_progress && progress(st)) changed = true;
    }
  }
}

bool Engine::progress(Stack& stack) {
  bool changed = false;
  while (stack.status == StackStatus::create_in_progress) {
    if (stack.wave_cursor >= stack.plan.waves.size()) {
      finish_create(stack);
      return true;
    }
    bool wave_done = true;
    for (const auto& name : stack.plan.waves[stack.wave_cursor]) {
      ResourceRecord& rec = stack.resources.at(name);
      if (rec.state == ResourceState::init) {
        start_resource(stack, rec);
        changed = true;
      }
      if (rec.state == ResourceState::create_in_progress && poll_resource(stack, rec)) changed = true;
      if (rec.state == ResourceState::create_failed) {
        fail_create(stack, "Resource CREATE failed: " + name + ": " + rec.status_reason);
        return true;
      }
      if (rec.state != ResourceState::create_complete) wave_done = false;
    }
    if (!wave_done) break;
    ++stack.wave_cursor;
    changed = true;
  }
  return changed;
}

void Engine::complete_resource(Stack& stack, ResourceRecord& rec) {
  rec.state = ResourceState::create_complete;
  rec.status_reason.clear();
  log_.append(clock_, "resource_create_complete", subject(stack, rec.name), rec.type);
}

void Engine::fail_resource(Stack& stack, ResourceRecord& rec, const std::string& reason) {
  rec.state = ResourceState::create_failed;
  rec.status_reason = reason;
  log_.append(clock_, "resource_create_failed", subject(stack, rec.name), reason);
}

void Engine::start_resource(Stack& stack, ResourceRecord& rec) {
  rec.state = ResourceState::create_in_progress;
  log_.append(clock_, "resource_create_in_progress", subject(stack, rec.name), rec.type);
  const hot::ResourceDef& def = stack.templ.resources.at(rec.name);
  Value::Map props;
  try {
    const auto ctx = context(stack);
    for (const auto& [key, expr] : def.properties) props.insert(key, hot::evaluate_expr(expr, ctx));
  } catch (const Error& e) {
    fail_resource(stack, rec, e.what());
    return;
  }
  if (const auto* schema = registry_.find(rec.type)) {
    for (const auto& p : schema->properties)
      if (!props.contains(p.name) && p.default_value) props.insert(p.name, *p.default_value);
  }
  try {
    if (rec.type == hot::kServerType) {
      start_server(stack, rec, props);
    } else if (rec.type == hot::kRandomStringType) {
      start_random_string(stack, rec, props);
    } else if (rec.type == hot::kWaitHandleType) {
      rec.id = stack.rng.uuid4();
      rec.attributes.insert_or_assign("handle_id", Value(rec.id));
      rec.attributes.insert_or_assign("curl_cli", Value(config_.signal_base_url + "/signal/" + rec.id));
      handles_.insert(rec.id, HandleState{rec.id, stack.id, rec.name, {}, {}});
      complete_resource(stack, rec);
    } else if (rec.type == hot::kWaitConditionType) {
      start_wait_condition(stack, rec, props);
    } else if (hot::ResourceTypeRegistry::is_nested_type(rec.type)) {
      start_nested(stack, rec, props);
    } else {
      fail_resource(stack, rec, "unknown resource type " + rec.type);
    }
  } catch (const Error& e) {
    if (rec.state == ResourceState::create_in_progress) fail_resource(stack, rec, e.what());
  }
}

void Engine::start_server(Stack& stack, ResourceRecord& rec, const Value::Map& props) {
  nfvi::LaunchSpec spec;
  spec.name = stack.name + "-" + rec.name;
  spec.tenant = stack.tenant;
  spec.image = props.at("image").to_text();
  spec.flavor = props.at("flavor").to_text();
  if (const auto* k = props.find("key_name")) spec.key_name = k->to_text();
  if (const auto* nets = props.find("networks")) {
    for (const auto& item : nets->as_list()) {
      if (!item.is_map() || !item.as_map().contains("network"))
        throw Error(ErrorKind::validation, "each networks entry needs a 'network' key");
      spec.networks.push_back(item.as_map().at("network").to_text());
    }
  }
  if (const auto* groups = props.find("security_groups"))
    for (const auto& g : groups->as_list()) spec.security_groups.push_back(g.to_text());
  if (const auto* ud = props.find("user_data")) spec.user_data = ud->to_text();

  const nfvi::Instance& inst = cloud_.launch_instance(spec);
  rec.id = inst.id;
  rec.attributes.insert_or_assign("instance_id", Value(inst.id));
  rec.attributes.insert_or_assign("name", Value(inst.name));
  rec.attributes.insert_or_assign("first_address",
                                  Value(inst.addresses.empty() ? std::string() : inst.addresses.begin()->second));
  log_.append(clock_, "instance_launched", subject(stack, rec.name), "id=" + inst.id + " host=" + inst.host);
  complete_resource(stack, rec);
}

void Engine::start_random_string(Stack& stack, ResourceRecord& rec, const Value::Map& props) {
  const double length = props.at("length").as_number();
  if (length < 1 || length > 4096 || length != static_cast<double>(static_cast<std::int64_t>(length)))
    throw Error(ErrorKind::validation, "length must be an integer between 1 and 4096");
  const std::string sequence = props.at("sequence").to_text();
  rec.id = stack.rng.uuid4();
  rec.attributes.insert_or_assign("value",
                                  Value(random_string(stack.rng, static_cast<std::int64_t>(length), sequence)));
  complete_resource(stack, rec);
}

void Engine::start_wait_condition(Stack& stack, ResourceRecord& rec, const Value::Map& props) {
  const std::string handle_id = props.at("handle").to_text();
  HandleState* handle = handles_.find(handle_id);
  if (!handle || handle->stack_id != stack.id)
    throw Error(ErrorKind::validation, "handle does not name a wait condition handle of this stack");
  if (!handle->condition.empty())
    throw Error(ErrorKind::validation, "handle is already bound to wait condition " + handle->condition);
  const auto count = static_cast<std::int64_t>(props.at("count").as_number());
  const auto timeout = static_cast<Tick>(props.at("timeout").as_number());
  rec.id = stack.rng.uuid4();
  rec.wait = WaitConditionState::start(handle_id, count, timeout, clock_);
  handle->condition = rec.name;
  // Signals that arrived before the condition started count towards it.
  for (const auto& payload : handle->signals) apply_signal(*rec.wait, payload, clock_);
  if (rec.wait->outcome != WaitOutcome::pending)
    log_.append(clock_, "wait_condition_resolved", subject(stack, rec.name),
                std::string(to_string(rec.wait->outcome)));
}

bool Engine::poll_resource(Stack& stack, ResourceRecord& rec) {
  if (rec.wait) {
    switch (rec.wait->outcome) {
      case WaitOutcome::pending: return false;
      case WaitOutcome::success:
        rec.attributes.insert_or_assign("data", Value(rec.wait->data()));
        complete_resource(stack, rec);
        return true;
      case WaitOutcome::timeout:
        fail_resource(stack, rec, "wait condition timed out after " + std::to_string(rec.wait->timeout) + " ticks");
        return true;
      case WaitOutcome::failure_signaled:
        fail_resource(stack, rec, "wait condition received a FAILURE signal: " + rec.wait->data());
        return true;
    }
  }
  if (!rec.nested_stack.empty()) {
    const Stack& child = stacks_.at(rec.nested_stack);
    if (child.status == StackStatus::create_complete) {
      rec.attributes = child.outputs;
      complete_resource(stack, rec);
      return true;
    }
    if (child.status == StackStatus::create_failed) {
      fail_resource(stack, rec, "nested stack " + child.name + " failed: " + child.status_reason);
      return true;
    }
  }
  return false;
}

void Engine::start_nested(Stack& stack, ResourceRecord& rec, const Value::Map& props) {
  if (stack.depth + 1 > config_.max_depth)
    throw Error(ErrorKind::validation, "nesting depth limit of " + std::to_string(config_.max_depth) + " exceeded");
  const auto path = resolve_nested(rec.type, stack.template_dir, config_.template_dirs);
  if (path.empty()) throw Error(ErrorKind::not_found, "nested template " + rec.type + " not found");
  hot::TemplateDoc doc = hot::parse_template(read_file(path));
  const auto report = hot::validate_template(doc, registry_);
  if (!report.deployable())
    throw Error(ErrorKind::validation, "nested template " + rec.type + " is invalid: " + report.summary());
  DeploymentPlan plan = build_plan(doc);
  hot::BoundParameters bound = hot::bind_parameters(doc, props);

  Stack child;
  child.id = stack.rng.uuid4();
  child.name = stack.name + "-" + rec.name;
  child.tenant = stack.tenant;
  child.history.push_back(StackStatus::create_in_progress);
  child.template_dir = path.parent_path().string();
  child.parameters = std::move(bound);
  for (const auto& [rname, def] : doc.resources) child.resources.insert(rname, fresh_record(rname, def.type));
  child.templ = std::move(doc);
  child.parent_stack = stack.id;
  child.parent_resource = rec.name;
  child.depth = stack.depth + 1;
  child.created_at = clock_;
  child.plan = std::move(plan);
  child.seed = stack.rng.next();
  child.rng = Rng(child.seed);
  rec.id = child.id;
  rec.nested_stack = child.id;
  Stack& stored = insert_stack(std::move(child));
  log_.append(clock_, "stack_create_in_progress", subject(stored), "id=" + stored.id + " parent=" + stack.name);
  progress(stored);
}

void Engine::finish_create(Stack& stack) {
  Value::Map outputs;
  try {
    const auto ctx = context(stack);
    for (const auto& [name, out] : stack.templ.outputs) outputs.insert(name, hot::evaluate_expr(out.value, ctx));
  } catch (const Error& e) {
    fail_create(stack, std::string("output evaluation failed: ") + e.what());
    return;
  }
  stack.outputs = std::move(outputs);
  set_status(stack, StackStatus::create_complete, "Stack CREATE completed successfully");
}

void Engine::fail_create(Stack& stack, const std::string& reason) {
  for (auto& [_, rec] : stack.resources) {
    if (rec.state != ResourceState::create_in_progress) continue;
    if (!rec.nested_stack.empty()) {
      Stack& child = stacks_.at(rec.nested_stack);
      if (child.status == StackStatus::create_in_progress) fail_create(child, "parent stack " + stack.name + " failed");
    }
    fail_resource(stack, rec, "cancelled: stack creation failed");
  }
  set_status(stack, StackStatus::create_failed, reason);
}

SignalAck Engine::signal(std::string_view handle_url_or_id, std::string_view payload_text) {
  const std::string id = handle_id_of(handle_url_or_id);
  const SignalPayload payload = parse_signal_payload(payload_text);
  HandleState& handle = handles_.at(id);
  handle.signals.push_back(payload);
  Stack& stack = stack_ref(handle.stack_id);
  const std::string detail = "status=" + std::string(payload.status == SignalStatus::success ? "SUCCESS" : "FAILURE") +
                             (payload.id ? " id=" + *payload.id : std::string());
  if (handle.condition.empty()) {
    log_.append(clock_, "wait_handle_signal", subject(stack, handle.resource), detail + " (no condition yet)");
    return SignalAck::parked;
  }
  ResourceRecord& rec = stack.resources.at(handle.condition);
  if (stack.status != StackStatus::create_in_progress || rec.state != ResourceState::create_in_progress) {
    log_.append(clock_, "wait_condition_signal_ignored", subject(stack, rec.name), detail);
    return SignalAck::ignored;
  }
  switch (apply_signal(*rec.wait, payload, clock_)) {
    case SignalResult::ignored:
      log_.append(clock_, "wait_condition_signal_ignored", subject(stack, rec.name), detail);
      return SignalAck::ignored;
    case SignalResult::recorded:
      log_.append(clock_, "wait_condition_signal", subject(stack, rec.name), detail);
      return SignalAck::recorded;
    case SignalResult::resolved:
      log_.append(clock_, "wait_condition_signal", subject(stack, rec.name), detail);
      log_.append(clock_, "wait_condition_resolved", subject(stack, rec.name),
                  std::string(to_string(rec.wait->outcome)));
      return SignalAck::resolved;
  }
  return SignalAck::ignored;
}

std::string Engine::handle_id_of(std::string_view handle_url_or_id) const {
  std::string_view id = handle_url_or_id;
  const auto marker = id.rfind("/signal/");
  if (marker != std::string_view::npos) id = id.substr(marker + 8);
  if (!handles_.contains(id))
    throw Error(ErrorKind::not_found, "unknown wait condition handle '" + std::string(handle_url_or_id) + "'");
  return std::string(id);
}

const std::string& Engine::handle_tenant(std::string_view handle_url_or_id) const {
  const auto& handle = handles_.at(handle_id_of(handle_url_or_id));
  return stacks_.at(handle.stack_id).tenant;
}

void Engine::process_deadlines(Tick now) {
  for (const auto& id : order_) {
    Stack& st = stacks_.at(id);
    if (st.status != StackStatus::create_in_progress) continue;
    for (auto& [name, rec] : st.resources) {
      if (!rec.wait || rec.state != ResourceState::create_in_progress) continue;
      if (expire(*rec.wait, now))
        log_.append(now, "wait_condition_resolved", subject(st, name), std::string(to_string(rec.wait->outcome)));
    }
  }
  pump();
}

const Stack& Engine::show_stack(const std::string& tenant, std::string_view id_or_name) const {
  if (const Stack* st = find(id_or_name); st && st->tenant == tenant) return *st;
  // By name: the live top-level stack, else the most recent one.
  const Stack* match = nullptr;
  for (const auto& id : order_) {
    const Stack& st = stacks_.at(id);
    if (st.tenant != tenant || !st.parent_stack.empty() || st.name != id_or_name) continue;
    if (!match || match->status == StackStatus::delete_complete || st.status != StackStatus::delete_complete)
      match = &st;
  }
  if (!match) throw Error(ErrorKind::not_found, "stack '" + std::string(id_or_name) + "' not found");
  return *match;
}

std::vector<StackSummary> Engine::list_stacks(const std::string& tenant) const {
  std::vector<StackSummary> out;
  for (const auto& id : order_) {
    const Stack& st = stacks_.at(id);
    if (st.tenant == tenant && st.parent_stack.empty() && st.status != StackStatus::delete_complete)
      out.push_back(StackSummary{st.id, st.name, st.status, st.created_at});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const StackSummary& a, const StackSummary& b) { return a.created_at < b.created_at; });
  return out;
}

const Stack& Engine::delete_stack(const std::string& tenant, std::string_view id_or_name) {
  Stack& st = const_cast<Stack&>(show_stack(tenant, id_or_name));
  if (!st.parent_stack.empty())
    throw Error(ErrorKind::invalid_state, "stack " + st.name + " is nested; delete its parent instead");
  if (st.status == StackStatus::create_in_progress)
    throw Error(ErrorKind::invalid_state, "stack " + st.name + " is still being created");
  if (!is_legal_transition(st.status, StackStatus::delete_in_progress))
    throw Error(ErrorKind::invalid_state,
                "stack " + st.name + " cannot be deleted from " + std::string(to_string(st.status)));
  delete_resources(st);
  return st;
}

bool Engine::delete_resources(Stack& stack) {
  set_status(stack, StackStatus::delete_in_progress, "Stack DELETE started");
  std::vector<std::string> problems;
  for (auto wave = stack.plan.waves.rbegin(); wave != stack.plan.waves.rend(); ++wave) {
    for (auto name = wave->rbegin(); name != wave->rend(); ++name) {
      ResourceRecord& rec = stack.resources.at(*name);
      if (rec.state == ResourceState::delete_complete) continue;
      try {
        if (rec.type == hot::kServerType && !rec.id.empty()) {
          const auto* inst = cloud_.find_instance(rec.id);
          if (inst && inst->state != nfvi::InstanceState::deleted) cloud_.terminate_instance(stack.tenant, rec.id);
        } else if (rec.type == hot::kWaitHandleType && !rec.id.empty()) {
          handles_.erase(rec.id);
        } else if (!rec.nested_stack.empty()) {
          Stack& child = stacks_.at(rec.nested_stack);
          if (child.status == StackStatus::create_in_progress) fail_create(child, "parent stack deleted");
          if (child.status != StackStatus::delete_complete && !delete_resources(child))
            throw Error(ErrorKind::deployment_failed, "nested stack " + child.name + ": " + child.status_reason);
        }
        rec.state = ResourceState::delete_complete;
        rec.status_reason.clear();
        log_.append(clock_, "resource_delete_complete", subject(stack, rec.name), rec.type);
      } catch (const Error& e) {
        rec.state = ResourceState::delete_failed;
        rec.status_reason = e.what();
        problems.push_back(rec.name + ": " + e.what());
        log_.append(clock_, "resource_delete_failed", subject(stack, rec.name), e.what());
      }
    }
  }
  if (problems.empty()) {
    set_status(stack, StackStatus::delete_complete, "Stack DELETE completed successfully");
    return true;
  }
  std::string reason = "Resource DELETE failed: ";
  for (std::size_t i = 0; i < problems.size(); ++i) reason += (i ? "; " : "") + problems[i];
  set_status(stack, StackStatus::delete_failed, reason);
  return false;
}

json Engine::stack_detail(const Stack& stack) const {
  json resources = json::array();
  for (const auto& [name, rec] : stack.resources) {
    json r{{"name", name},
           {"type", rec.type},
           {"id", rec.id},
           {"state", to_string(rec.state)},
           {"status_reason", rec.status_reason},
           {"attributes", value_map_json(rec.attributes)}};
    if (!rec.nested_stack.empty()) r["nested_stack"] = rec.nested_stack;
    if (rec.wait) {
      r["wait"] = json{{"outcome", to_string(rec.wait->outcome)},
                       {"received", rec.wait->received.size()},
                       {"required", rec.wait->required_count},
                       {"deadline", rec.wait->deadline}};
    }
    resources.push_back(std::move(r));
  }
  return json{{"id", stack.id},
              {"name", stack.name},
              {"tenant", stack.tenant},
              {"status", to_string(stack.status)},
              {"status_reason", stack.status_reason},
              {"created_at", stack.created_at},
              {"parent", stack.parent_stack.empty() ? json(nullptr) : json(stack.parent_stack)},
              {"parameters", value_map_json(stack.parameters.values)},
              {"outputs", value_map_json(stack.outputs)},
              {"resources", std::move(resources)}};
}

json Engine::to_json() const {
  json stacks = json::array();
  for (const auto& id : order_) {
    const Stack& st = stacks_.at(id);
    json history = json::array();
    for (auto h : st.history) history.push_back(to_string(h));
    json records = json::array();
    for (const auto& [name, rec] : st.resources) {
      json r{{"name", name},
             {"type", rec.type},
             {"id", rec.id},
             {"state", to_string(rec.state)},
             {"status_reason", rec.status_reason},
             {"attributes", value_map_json(rec.attributes)},
             {"nested_stack", rec.nested_stack}};
      if (rec.wait) {
        json received = json::array();
        for (const auto& [sid, sig] : rec.wait->received)
          received.push_back(json{{"id", sid}, {"status", sig.status == SignalStatus::success ? "SUCCESS" : "FAILURE"},
                                  {"data", sig.data}});
        r["wait"] = json{{"handle", rec.wait->handle_id}, {"count", rec.wait->required_count},
                         {"timeout", rec.wait->timeout},  {"deadline", rec.wait->deadline},
                         {"outcome", to_string(rec.wait->outcome)}, {"received", received}};
      }
      records.push_back(std::move(r));
    }
    stacks.push_back(json{{"id", st.id},
                          {"name", st.name},
                          {"tenant", st.tenant},
                          {"status", to_string(st.status)},
                          {"status_reason", st.status_reason},
                          {"history", history},
                          {"template", hot::serialize_template(st.templ)},
                          {"template_dir", st.template_dir},
                          {"parameters", value_map_json(st.parameters.values)},
                          {"resources", records},
                          {"outputs", value_map_json(st.outputs)},
                          {"parent_stack", st.parent_stack},
                          {"parent_resource", st.parent_resource},
                          {"depth", st.depth},
                          {"created_at", st.created_at},
                          {"wave_cursor", st.wave_cursor},
                          {"seed", st.seed},
                          {"rng", st.rng.state()}});
  }
  json handles = json::array();
  for (const auto& [id, h] : handles_) {
    json signals = json::array();
    for (const auto& s : h.signals) signals.push_back(serialize_signal_payload(s));
    handles.push_back(json{{"id", id}, {"stack", h.stack_id}, {"resource", h.resource},
                           {"condition", h.condition}, {"signals", signals}});
  }
  return json{{"stacks", stacks}, {"handles", handles}};
}

void Engine::load(const json& j) {
  order_.clear();
  stacks_.clear();
  handles_ = {};
  for (const auto& s : j.at("stacks")) {
    Stack st;
    st.id = s.at("id").get<std::string>();
    st.name = s.at("name").get<std::string>();
    st.tenant = s.at("tenant").get<std::string>();
    st.status = stack_status_from_string(s.at("status").get<std::string>());
    st.status_reason = s.at("status_reason").get<std::string>();
    for (const auto& h : s.at("history")) st.history.push_back(stack_status_from_string(h.get<std::string>()));
    st.templ = hot::parse_template(s.at("template").get<std::string>());
    st.template_dir = s.at("template_dir").get<std::string>();
    st.parameters.values = value_map_from(s.at("parameters"));
    for (const auto& r : s.at("resources")) {
      ResourceRecord rec;
      rec.name = r.at("name").get<std::string>();
      rec.type = r.at("type").get<std::string>();
      rec.id = r.at("id").get<std::string>();
      rec.state = resource_state_from_string(r.at("state").get<std::string>());
      rec.status_reason = r.at("status_reason").get<std::string>();
      rec.attributes = value_map_from(r.at("attributes"));
      rec.nested_stack = r.at("nested_stack").get<std::string>();
      if (r.contains("wait")) {
        const auto& w = r.at("wait");
        WaitConditionState ws;
        ws.handle_id = w.at("handle").get<std::string>();
        ws.required_count = w.at("count").get<std::int64_t>();
        ws.timeout = w.at("timeout").get<Tick>();
        ws.deadline = w.at("deadline").get<Tick>();
        ws.outcome = wait_outcome_from_string(w.at("outcome").get<std::string>());
        for (const auto& sig : w.at("received"))
          ws.received.insert(sig.at("id").get<std::string>(),
                             ReceivedSignal{sig.at("status").get<std::string>() == "SUCCESS" ? SignalStatus::success
                                                                                             : SignalStatus::failure,
                                            sig.at("data").get<std::string>()});
        rec.wait = std::move(ws);
      }
      st.resources.insert(rec.name, std::move(rec));
    }
    st.outputs = value_map_from(s.at("outputs"));
    st.parent_stack = s.at("parent_stack").get<std::string>();
    st.parent_resource = s.at("parent_resource").get<std::string>();
    st.depth = s.at("depth").get<int>();
    st.created_at = s.at("created_at").get<Tick>();
    st.plan = build_plan(st.templ);
    st.wave_cursor = s.at("wave_cursor").get<std::size_t>();
    st.seed = s.at("seed").get<std::uint64_t>();
    st.rng.restore(s.at("rng").get<std::string>());
    insert_stack(std::move(st));
  }
  for (const auto& h : j.at("handles")) {
    HandleState hs;
    hs.id = h.at("id").get<std::string>();
    hs.stack_id = h.at("stack").get<std::string>();
    hs.resource = h.at("resource").get<std::string>();
    hs.condition = h.at("condition").get<std::string>();
    for (const auto& s : h.at("signals")) hs.signals.push_back(parse_signal_payload(s.get<std::string>()));
    handles_.insert(hs.id, std::move(hs));
  }
}

}  // namespace minimano::engine
