#include "minimano/cli/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "minimano/orchestrator.hpp"
#include "minimano/scenario.hpp"

namespace minimano::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::unauthorized:
    case ErrorKind::forbidden:
      return kExitAuth;
    case ErrorKind::no_capacity:
    case ErrorKind::deployment_failed:
    case ErrorKind::unavailable:
      return kExitDeploy;
    case ErrorKind::io:
      return kExitIo;
    case ErrorKind::not_found:
      return kExitNotFound;
    default:
      return kExitUsage;
  }
}

OrderedMap<Value> parse_parameters(const std::vector<std::string>& items) {
  OrderedMap<Value> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      if (eq == 0 || eq == std::string::npos)
        throw Error(ErrorKind::invalid_argument, "parameter '" + pair + "' is not key=value");
      out.insert_or_assign(pair.substr(0, eq), Value(pair.substr(eq + 1)));
    }
  }
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "cannot read " + path.string());
  return ss.str();
}

// Holds the exclusive lock on <state>.lock while open. Every invocation is a
// full load / mutate / save cycle, so concurrent processes serialize here.
class Session {
public:
  Session(fs::path path, RuntimeConfig runtime, WorldConfig bootstrap)
      : path_(std::move(path)), runtime_(std::move(runtime)), bootstrap_(std::move(bootstrap)) {}
  ~Session() { close(); }

  void open() {
    const auto lock_path = path_.string() + ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0600);
    if (fd_ < 0) throw Error(ErrorKind::io, "cannot open lock file " + lock_path);
    if (::flock(fd_, LOCK_EX) != 0) {
      close();
      throw Error(ErrorKind::io, "cannot lock " + lock_path);
    }
    existed_ = fs::exists(path_);
    if (existed_) {
      json snap;
      try {
        snap = json::parse(read_file(path_));
      } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorKind::io, "state file " + path_.string() + " is not valid JSON");
      }
      world_ = Orchestrator::restore(snap, runtime_);
      before_ = snap.dump();
    } else {
      world_ = std::make_unique<Orchestrator>(bootstrap_, runtime_);
      before_.clear();
    }
  }

  void commit() {
    const auto now = world_->snapshot().dump();
    if (existed_ && now == before_) return;
    const auto tmp = path_.string() + ".tmp." + std::to_string(::getpid());
    {
      std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
      if (!o) throw Error(ErrorKind::io, "cannot write " + tmp);
      o << now;
      o.flush();
      if (!o) throw Error(ErrorKind::io, "cannot write " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot replace " + path_.string() + ": " + ec.message());
    before_ = now;
    existed_ = true;
  }

  void close() noexcept {
    world_.reset();
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
      fd_ = -1;
    }
  }

  void replace(std::unique_ptr<Orchestrator> world) {
    world_ = std::move(world);
    before_.clear();
    existed_ = false;
  }

  bool existed() const noexcept { return existed_; }
  Orchestrator& world() { return *world_; }

private:
  fs::path path_;
  RuntimeConfig runtime_;
  WorldConfig bootstrap_;
  int fd_ = -1;
  bool existed_ = false;
  std::string before_;
  std::unique_ptr<Orchestrator> world_;
};

struct Globals {
  std::string state;
  std::string token;
  std::string policy;
  std::vector<std::string> templates;
  bool machine = false;
  int tick_ms = 0;
  std::optional<std::uint64_t> seed;
};

struct Ctx {
  Session& session;
  const Globals& g;
  std::ostream& out;
  std::ostream& err;

  Orchestrator& w() { return session.world(); }
  const std::string& token() const { return g.token; }
};

// ---- rendering ----

std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& c = i < r.size() ? r[i] : std::string();
      s += c;
      if (i + 1 < header.size()) s += std::string(width[i] - c.size() + 2, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void emit(Ctx& c, const json& obj) {
  if (c.g.machine) {
    c.out << obj.dump() << '\n';
    return;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : obj.items()) rows.push_back({k, cell(v)});
  print_table(c.out, {"field", "value"}, rows);
}

void emit_list(Ctx& c, const json& arr, const std::vector<std::string>& columns) {
  if (c.g.machine) {
    for (const auto& o : arr) c.out << o.dump() << '\n';
    return;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& o : arr) {
    std::vector<std::string> r;
    for (const auto& col : columns) r.push_back(o.contains(col) ? cell(o.at(col)) : "");
    rows.push_back(std::move(r));
  }
  print_table(c.out, columns, rows);
}

// ---- views ----

json view(const identity::Token& t) {
  return {{"id", t.id},         {"user", t.user_name},        {"tenant", t.tenant_name},
          {"tenant_id", t.tenant_id}, {"roles", t.roles}, {"issued_at", t.issued_at},
          {"expires_at", t.expires_at}};
}

json view(const nfvi::Image& i) {
  return {{"id", i.id},
          {"name", i.name},
          {"owner", i.owner},
          {"public", i.options.is_public},
          {"cloud_init", i.options.cloud_init},
          {"generic", i.options.generic},
          {"size", i.payload.size()}};
}

json view(const nfvi::Flavor& f) {
  return {{"name", f.name}, {"vcpus", f.size.vcpus}, {"ram_mib", f.size.ram_mib}, {"disk_gib", f.size.disk_gib}};
}

json view(const nfvi::SecurityGroup& g) {
  json rules = json::array();
  for (const auto& r : g.rules)
    rules.push_back({{"direction", nfvi::to_string(r.direction)},
                     {"protocol", nfvi::to_string(r.protocol)},
                     {"port_min", r.port_min},
                     {"port_max", r.port_max},
                     {"remote_group", r.remote_group},
                     {"remote_cidr", r.remote_cidr}});
  return {{"id", g.id}, {"name", g.name}, {"rules", rules}};
}

json view(const nfvi::Network& n) {
  return {{"id", n.id},
          {"name", n.name},
          {"cidr", n.cidr.to_string()},
          {"gateway", nfvi::format_ipv4(n.gateway)},
          {"router", n.router}};
}

json view(const nfvi::Router& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"interfaces", r.interfaces},
          {"external_gateway", r.external_gateway},
          {"gateway_address", r.gateway_address}};
}

json view(const nfvi::FloatingIp& f) {
  return {{"id", f.id}, {"address", f.address}, {"instance", f.instance}, {"fixed_address", f.fixed_address}};
}

json view(const nfvi::Instance& i) {
  json addrs = json::object();
  for (const auto& [net, ip] : i.addresses) addrs[net] = ip;
  return {{"id", i.id},
          {"name", i.name},
          {"status", nfvi::to_string(i.state)},
          {"image", i.image_id},
          {"flavor", i.flavor},
          {"host", i.host},
          {"addresses", addrs},
          {"key_name", i.key_name},
          {"security_groups", i.security_groups},
          {"locked", i.locked},
          {"fault", i.fault},
          {"created_at", i.created_at}};
}

json view(const nfvi::Volume& v) {
  return {{"id", v.id},
          {"name", v.name},
          {"size_gib", v.size_gib},
          {"attached_to", v.attached_to},
          {"snapshots", v.snapshots.size()}};
}

json view(const autonomic::ScalingGroup& g) {
  return {{"id", g.id},           {"name", g.name},         {"stack", g.stack_id},
          {"resource", g.resource}, {"min", g.min_size},      {"max", g.max_size},
          {"desired", g.desired},   {"members", g.members}};
}

json view(const autonomic::Alarm& a) {
  return {{"id", a.id},
          {"name", a.def.name},
          {"state", autonomic::to_string(a.state)},
          {"metric", a.def.metric},
          {"aggregate", autonomic::to_string(a.def.aggregate)},
          {"comparison", autonomic::to_string(a.def.comparison)},
          {"threshold", a.def.threshold},
          {"window", a.def.window},
          {"target", a.def.target},
          {"action", autonomic::to_string(a.def.action)}};
}

json stack_row(const engine::Stack& s) {
  return {{"id", s.id},
          {"name", s.name},
          {"status", engine::to_string(s.status)},
          {"status_reason", s.status_reason},
          {"created_at", s.created_at}};
}

void show_stack_human(Ctx& c, const json& d) {
  std::vector<std::vector<std::string>> rows;
  for (const auto* k : {"id", "name", "status", "status_reason", "created_at", "parent"})
    if (d.contains(k)) rows.push_back({k, cell(d.at(k))});
  for (const auto& [k, v] : d.at("parameters").items()) rows.push_back({"parameter." + k, cell(v)});
  for (const auto& [k, v] : d.at("outputs").items()) rows.push_back({"output." + k, cell(v)});
  print_table(c.out, {"field", "value"}, rows);
  c.out << '\n';
  std::vector<std::vector<std::string>> res;
  for (const auto& r : d.at("resources"))
    res.push_back({cell(r.at("name")), cell(r.at("type")), cell(r.at("state")), cell(r.at("id")),
                   cell(r.at("status_reason"))});
  print_table(c.out, {"resource", "type", "state", "physical_id", "reason"}, res);
}

// Blocks until the stack leaves an in-progress status by driving the logical
// clock. With --tick-ms the lock is released between ticks so that other
// invocations (a signal, for instance) can get in.
engine::Stack wait_for_stack(Ctx& c, const std::string& id, engine::StackStatus busy) {
  for (;;) {
    auto st = c.w().show_stack(c.token(), id);
    if (st.status != busy) return st;
    if (busy == engine::StackStatus::create_in_progress) c.w().wait_tick(c.token(), id);
    if (c.g.tick_ms > 0) {
      c.session.commit();
      c.session.close();
      std::this_thread::sleep_for(std::chrono::milliseconds(c.g.tick_ms));
      c.session.open();
    }
  }
}

int finish_stack(Ctx& c, const engine::Stack& st) {
  emit(c, stack_row(st));
  switch (st.status) {
    case engine::StackStatus::create_failed:
    case engine::StackStatus::delete_failed:
      c.err << "error: " << st.status_reason << '\n';
      return kExitDeploy;
    default:
      return kExitOk;
  }
}

nfvi::Endpoint endpoint(const std::string& s) {
  if (s == "external") return nfvi::Endpoint::external();
  if (s.starts_with("external:")) return nfvi::Endpoint::external(s.substr(9));
  return nfvi::Endpoint::of_instance(s);
}

using Handler = std::function<int(Ctx&)>;

}  // namespace

int run(const std::vector<std::string>& args, const Env& env, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale cloud orchestrator: identity, compute, network, stacks and autonomic loops"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::optional<std::uint64_t> seed;
  app.add_option("--state", g.state, "State file (env MINIMANO_STATE, default ./minimano-state.json)");
  app.add_option("--token", g.token, "Token id (env MINIMANO_TOKEN)");
  app.add_option("--policy", g.policy, "Policy JSON file (env MINIMANO_POLICY)");
  app.add_option("--templates", g.templates, "Extra directories searched for nested templates");
  app.add_flag("--json", g.machine, "Machine output: one JSON object per line");
  app.add_option("--tick-ms", g.tick_ms, "Real milliseconds per logical tick while blocking")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Seed for a freshly created world");

  std::vector<std::pair<CLI::App*, Handler>> verbs;
  auto verb = [&](const char* name, const char* desc, Handler h) {
    auto* sub = app.add_subcommand(name, desc);
    verbs.emplace_back(sub, std::move(h));
    return sub;
  };

  // ---- world ----
  std::string world_file;
  bool force = false;
  auto* init = verb("init", "Create a fresh state file", [&](Ctx& c) {
    if (c.session.existed() && !force)
      throw Error(ErrorKind::duplicate, "state file already exists; use --force to replace it");
    auto cfg = world_file.empty() ? WorldConfig{} : world_config_from_json(json::parse(read_file(world_file)));
    if (seed) cfg.seed = seed;
    RuntimeConfig rt;
    rt.policy = c.w().identity().policy();
    for (const auto& t : g.templates) rt.template_dirs.emplace_back(t);
    c.session.replace(std::make_unique<Orchestrator>(cfg, rt));
    emit(c, json{{"state", g.state}, {"clock", c.w().now()}});
    return kExitOk;
  });
  init->add_option("--world", world_file, "World description (hosts, external CIDR, seed)");
  init->add_flag("--force", force, "Replace an existing state file");

  // ---- identity ----
  std::string user, password, tenant, name, role, service, url;
  auto* tok = verb("token-issue", "Authenticate and print a token", [&](Ctx& c) {
    emit(c, view(c.w().authenticate(user, password, tenant)));
    return kExitOk;
  });
  tok->add_option("--user", user)->required();
  tok->add_option("--password", password)->required();
  tok->add_option("--tenant", tenant)->required();

  verb("tenant-create", "Create a tenant", [&](Ctx& c) {
    const auto t = c.w().create_tenant(c.token(), name);
    emit(c, json{{"id", t.id}, {"name", t.name}});
    return kExitOk;
  })->add_option("name", name)->required();

  auto* uc = verb("user-create", "Create a user", [&](Ctx& c) {
    const auto u = c.w().create_user(c.token(), name, password);
    emit(c, json{{"id", u.id}, {"name", u.name}});
    return kExitOk;
  });
  uc->add_option("name", name)->required();
  uc->add_option("--password", password)->required();

  auto* ra = verb("role-assign", "Grant a role on a tenant", [&](Ctx& c) {
    c.w().assign_role(c.token(), user, tenant, role);
    emit(c, json{{"user", user}, {"tenant", tenant}, {"role", role}});
    return kExitOk;
  });
  ra->add_option("user", user)->required();
  ra->add_option("tenant", tenant)->required();
  ra->add_option("role", role)->required();

  auto* ep = verb("endpoint-register", "Register a service endpoint", [&](Ctx& c) {
    c.w().register_endpoint(c.token(), service, url);
    emit(c, json{{"service", service}, {"url", url}});
    return kExitOk;
  });
  ep->add_option("service", service)->required();
  ep->add_option("url", url)->required();

  verb("endpoint-show", "Look up a service endpoint", [&](Ctx& c) {
    emit(c, json{{"service", service}, {"url", c.w().lookup_endpoint(c.token(), service)}});
    return kExitOk;
  })->add_option("service", service)->required();

  // ---- compute inventory ----
  nfvi::Capacity cap{};
  auto capacity_opts = [&](CLI::App* a) {
    a->add_option("--vcpus", cap.vcpus)->required();
    a->add_option("--ram", cap.ram_mib, "MiB")->required();
    a->add_option("--disk", cap.disk_gib, "GiB")->required();
  };
  auto* ha = verb("host-add", "Add a compute host", [&](Ctx& c) {
    c.w().add_host(c.token(), name, cap);
    emit(c, json{{"id", name}, {"vcpus", cap.vcpus}, {"ram_mib", cap.ram_mib}, {"disk_gib", cap.disk_gib}});
    return kExitOk;
  });
  ha->add_option("id", name)->required();
  capacity_opts(ha);

  auto* fc = verb("flavor-create", "Create a flavor", [&](Ctx& c) {
    emit(c, view(c.w().create_flavor(c.token(), name, cap)));
    return kExitOk;
  });
  fc->add_option("name", name)->required();
  capacity_opts(fc);

  verb("flavor-list", "List flavors", [&](Ctx& c) {
    json arr = json::array();
    for (const auto& f : c.w().list_flavors(c.token())) arr.push_back(view(f));
    emit_list(c, arr, {"name", "vcpus", "ram_mib", "disk_gib"});
    return kExitOk;
  });

  std::string payload_file, payload;
  bool no_cloud_init = false, baked = false, is_public = false;
  auto* ic = verb("image-create", "Register an image", [&](Ctx& c) {
    nfvi::ImageOptions opts;
    opts.cloud_init = !no_cloud_init;
    opts.generic = !baked;
    opts.is_public = is_public;
    std::string data = payload_file.empty() ? payload : read_file(payload_file);
    emit(c, view(c.w().register_image(c.token(), name, std::move(data), opts)));
    return kExitOk;
  });
  ic->add_option("name", name)->required();
  ic->add_option("--file", payload_file, "Image payload file");
  ic->add_option("--data", payload, "Inline image payload");
  ic->add_flag("--no-cloud-init", no_cloud_init, "Image has no boot-time configuration agent");
  ic->add_flag("--baked", baked, "Image carries a baked host identity (MAC, host key)");
  ic->add_flag("--public", is_public, "Visible to every tenant (admin only)");

  verb("image-list", "List images", [&](Ctx& c) {
    json arr = json::array();
    for (const auto& i : c.w().list_images(c.token())) arr.push_back(view(i));
    emit_list(c, arr, {"id", "name", "public", "cloud_init"});
    return kExitOk;
  });

  std::string public_key;
  auto* kc = verb("keypair-create", "Generate or import a keypair", [&](Ctx& c) {
    if (!public_key.empty()) {
      const auto k = c.w().import_keypair(c.token(), name, public_key);
      emit(c, json{{"name", k.name}, {"fingerprint", k.fingerprint}, {"public_key", k.public_key}});
      return kExitOk;
    }
    const auto k = c.w().create_keypair(c.token(), name);
    if (c.g.machine) {
      c.out << json{{"name", k.keypair.name},
                    {"fingerprint", k.keypair.fingerprint},
                    {"public_key", k.keypair.public_key},
                    {"private_key", k.private_key}}
                   .dump()
            << '\n';
    } else {
      c.out << k.private_key;
      if (!k.private_key.ends_with('\n')) c.out << '\n';
      c.err << "fingerprint " << k.keypair.fingerprint << "; the private key is not stored and will not be shown again\n";
    }
    return kExitOk;
  });
  kc->add_option("name", name)->required();
  kc->add_option("--public-key", public_key, "Import this public key instead of generating one");

  // ---- network ----
  verb("secgroup-create", "Create a security group", [&](Ctx& c) {
    emit(c, view(c.w().create_security_group(c.token(), name)));
    return kExitOk;
  })->add_option("name", name)->required();

  std::string direction = "ingress", protocol = "any", remote_cidr, remote_group;
  int port_min = 1, port_max = 0;
  auto* sr = verb("secgroup-rule-add", "Add a rule to a security group", [&](Ctx& c) {
    nfvi::SecurityRule r;
    r.direction = nfvi::direction_from_string(direction);
    r.protocol = nfvi::protocol_from_string(protocol);
    r.port_min = port_min;
    r.port_max = port_max == 0 ? (port_min == 1 ? 65535 : port_min) : port_max;
    r.remote_cidr = remote_cidr;
    r.remote_group = remote_group;
    emit(c, view(c.w().add_security_rule(c.token(), name, r)));
    return kExitOk;
  });
  sr->add_option("group", name)->required();
  sr->add_option("--direction", direction, "ingress or egress");
  sr->add_option("--protocol", protocol, "any, tcp, udp or icmp");
  sr->add_option("--port-min", port_min);
  sr->add_option("--port-max", port_max);
  sr->add_option("--remote-cidr", remote_cidr);
  sr->add_option("--remote-group", remote_group);

  std::string cidr, gateway;
  auto* nc = verb("net-create", "Create a tenant network", [&](Ctx& c) {
    emit(c, view(c.w().create_network(c.token(), name, cidr, gateway)));
    return kExitOk;
  });
  nc->add_option("name", name)->required();
  nc->add_option("cidr", cidr)->required();
  nc->add_option("--gateway", gateway);

  verb("router-create", "Create a router", [&](Ctx& c) {
    emit(c, view(c.w().create_router(c.token(), name)));
    return kExitOk;
  })->add_option("name", name)->required();

  std::string router, network;
  auto* ri = verb("router-interface-add", "Attach a network to a router", [&](Ctx& c) {
    emit(c, view(c.w().attach_interface(c.token(), router, network)));
    return kExitOk;
  });
  ri->add_option("router", router)->required();
  ri->add_option("network", network)->required();

  verb("router-gateway-set", "Connect a router to the external network", [&](Ctx& c) {
    emit(c, view(c.w().set_external_gateway(c.token(), router)));
    return kExitOk;
  })->add_option("router", router)->required();

  std::string fip, instance;
  verb("fip-allocate", "Allocate a floating IP", [&](Ctx& c) {
    emit(c, view(c.w().allocate_floating_ip(c.token())));
    return kExitOk;
  });
  auto* fa = verb("fip-associate", "Bind a floating IP to an instance", [&](Ctx& c) {
    emit(c, view(c.w().associate_floating_ip(c.token(), fip, instance)));
    return kExitOk;
  });
  fa->add_option("fip", fip)->required();
  fa->add_option("instance", instance)->required();
  verb("fip-disassociate", "Unbind a floating IP", [&](Ctx& c) {
    emit(c, view(c.w().disassociate_floating_ip(c.token(), fip)));
    return kExitOk;
  })->add_option("fip", fip)->required();
  verb("fip-release", "Return a floating IP to the pool", [&](Ctx& c) {
    c.w().release_floating_ip(c.token(), fip);
    emit(c, json{{"id", fip}, {"released", true}});
    return kExitOk;
  })->add_option("fip", fip)->required();

  std::string src, dst;
  int port = 0;
  auto* cc = verb("connectivity-check", "Ask whether traffic can flow between two endpoints", [&](Ctx& c) {
    const auto v = c.w().check_connectivity(c.token(), endpoint(src), endpoint(dst),
                                            nfvi::protocol_from_string(protocol), port);
    emit(c, json{{"allowed", v.allowed},
                 {"reason", v.reason},
                 {"source_address", v.source_address},
                 {"destination_address", v.destination_address}});
    return kExitOk;
  });
  cc->add_option("source", src, "Instance, 'external' or 'external:ADDRESS'")->required();
  cc->add_option("destination", dst)->required();
  cc->add_option("--protocol", protocol);
  cc->add_option("--port", port);

  // ---- servers ----
  std::string image, flavor, key_name, user_data_file;
  std::vector<std::string> nets, groups;
  auto* sc = verb("server-create", "Launch an instance", [&](Ctx& c) {
    nfvi::LaunchSpec spec;
    spec.name = name;
    spec.image = image;
    spec.flavor = flavor;
    spec.key_name = key_name;
    spec.networks = nets;
    spec.security_groups = groups;
    if (!user_data_file.empty()) spec.user_data = read_file(user_data_file);
    emit(c, view(c.w().launch_instance(c.token(), spec)));
    return kExitOk;
  });
  sc->add_option("name", name)->required();
  sc->add_option("--image", image)->required();
  sc->add_option("--flavor", flavor)->required();
  sc->add_option("--key", key_name);
  sc->add_option("--net", nets)->required();
  sc->add_option("--secgroup", groups);
  sc->add_option("--user-data", user_data_file, "File passed to the guest at first boot");

  verb("server-list", "List instances", [&](Ctx& c) {
    json arr = json::array();
    for (const auto& i : c.w().list_instances(c.token())) arr.push_back(view(i));
    emit_list(c, arr, {"id", "name", "status", "addresses"});
    return kExitOk;
  });
  verb("server-show", "Show an instance", [&](Ctx& c) {
    emit(c, view(c.w().show_instance(c.token(), instance)));
    return kExitOk;
  })->add_option("instance", instance)->required();
  verb("server-delete", "Terminate an instance", [&](Ctx& c) {
    c.w().terminate_instance(c.token(), instance);
    emit(c, json{{"id", instance}, {"status", "DELETED"}});
    return kExitOk;
  })->add_option("instance", instance)->required();
  bool unlock = false;
  auto* sl = verb("server-lock", "Protect an instance from termination", [&](Ctx& c) {
    c.w().set_instance_locked(c.token(), instance, !unlock);
    emit(c, json{{"id", instance}, {"locked", !unlock}});
    return kExitOk;
  });
  sl->add_option("instance", instance)->required();
  sl->add_flag("--unlock", unlock);

  std::string path;
  auto* gc = verb("guest-cat", "Print a file from an instance's ephemeral disk", [&](Ctx& c) {
    c.out << c.w().read_guest_file(c.token(), instance, path);
    return kExitOk;
  });
  gc->add_option("instance", instance)->required();
  gc->add_option("path", path)->required();

  // ---- block and object storage ----
  std::int64_t size_gib = 1;
  auto* vc = verb("volume-create", "Create a volume", [&](Ctx& c) {
    emit(c, view(c.w().create_volume(c.token(), name, size_gib)));
    return kExitOk;
  });
  vc->add_option("name", name)->required();
  vc->add_option("size", size_gib, "GiB")->required();
  std::string volume;
  auto* va = verb("volume-attach", "Attach a volume to an instance", [&](Ctx& c) {
    emit(c, view(c.w().attach_volume(c.token(), volume, instance)));
    return kExitOk;
  });
  va->add_option("volume", volume)->required();
  va->add_option("instance", instance)->required();
  verb("volume-detach", "Detach a volume", [&](Ctx& c) {
    emit(c, view(c.w().detach_volume(c.token(), volume)));
    return kExitOk;
  })->add_option("volume", volume)->required();
  verb("volume-snapshot", "Snapshot a volume", [&](Ctx& c) {
    const auto s = c.w().snapshot_volume(c.token(), volume);
    emit(c, json{{"id", s.id}, {"volume", volume}, {"created_at", s.created_at}});
    return kExitOk;
  })->add_option("volume", volume)->required();

  std::string container, object;
  auto* op = verb("object-put", "Store an object", [&](Ctx& c) {
    std::string data = payload_file.empty() ? payload : read_file(payload_file);
    const auto size = data.size();
    c.w().put_object(c.token(), container, object, std::move(data));
    emit(c, json{{"container", container}, {"name", object}, {"size", size}});
    return kExitOk;
  });
  op->add_option("container", container)->required();
  op->add_option("name", object)->required();
  op->add_option("--file", payload_file);
  op->add_option("--data", payload);
  auto* og = verb("object-get", "Print an object", [&](Ctx& c) {
    c.out << c.w().get_object(c.token(), container, object);
    return kExitOk;
  });
  og->add_option("container", container)->required();
  og->add_option("name", object)->required();

  // ---- stacks ----
  std::string template_path;
  verb("template-validate", "Check a template without deploying it", [&](Ctx& c) {
    const auto report = c.w().validate_template(c.token(), read_file(template_path));
    json arr = json::array();
    for (const auto& f : report.findings)
      arr.push_back({{"severity", f.severity == hot::Severity::error ? "error" : "warning"},
                     {"path", f.path},
                     {"message", f.message}});
    if (c.g.machine) {
      c.out << json{{"valid", report.deployable()}, {"findings", arr}}.dump() << '\n';
    } else if (arr.empty()) {
      c.out << "template is valid\n";
    } else {
      emit_list(c, arr, {"severity", "path", "message"});
    }
    return report.deployable() ? kExitOk : kExitUsage;
  })->add_option("template", template_path)->required();

  std::vector<std::string> parameters;
  bool no_wait = false;
  auto* stc = verb("stack-create", "Deploy a template as a stack", [&](Ctx& c) {
    const auto text = read_file(template_path);
    const auto dir = fs::absolute(fs::path(template_path)).parent_path().string();
    auto st = c.w().create_stack(c.token(), name, text, parse_parameters(parameters), dir);
    if (!no_wait) st = wait_for_stack(c, st.id, engine::StackStatus::create_in_progress);
    return finish_stack(c, st);
  });
  stc->add_option("name", name)->required();
  stc->add_option("template", template_path)->required();
  stc->add_option("-P,--parameters", parameters, "key=value[,key=value...]");
  stc->add_flag("--no-wait", no_wait, "Return while the stack is still being created");

  verb("stack-list", "List stacks", [&](Ctx& c) {
    json arr = json::array();
    for (const auto& s : c.w().list_stacks(c.token()))
      arr.push_back({{"id", s.id}, {"name", s.name}, {"status", engine::to_string(s.status)},
                     {"created_at", s.created_at}});
    emit_list(c, arr, {"id", "name", "status", "created_at"});
    return kExitOk;
  });

  std::string stack;
  verb("stack-show", "Show a stack, its resources and outputs", [&](Ctx& c) {
    const auto d = c.w().stack_detail(c.token(), stack);
    if (c.g.machine)
      c.out << d.dump() << '\n';
    else
      show_stack_human(c, d);
    return kExitOk;
  })->add_option("stack", stack)->required();

  verb("stack-delete", "Delete a stack and everything it created", [&](Ctx& c) {
    const auto st = c.w().delete_stack(c.token(), stack);
    return finish_stack(c, st);
  })->add_option("stack", stack)->required();

  std::string handle;
  auto* sig = verb("signal", "Send a wait-condition signal to a handle URL", [&](Ctx& c) {
    const auto ack = c.w().signal(c.token(), handle, payload);
    if (ack == engine::SignalAck::ignored)
      c.err << "warning: the wait condition has already been resolved; signal ignored\n";
    emit(c, json{{"handle", handle}, {"result", engine::to_string(ack)}});
    return kExitOk;
  });
  sig->add_option("handle", handle, "Handle URL or id")->required();
  sig->add_option("payload", payload, "JSON object")->required();

  // ---- telemetry and autonomic ----
  std::string metric;
  double value = 0;
  std::optional<Tick> at;
  auto* mp = verb("metric-push", "Record a metric sample", [&](Ctx& c) {
    c.w().push_metric(c.token(), instance, metric, value, at);
    emit(c, json{{"resource", instance}, {"metric", metric}, {"value", value}, {"tick", at.value_or(c.w().now())}});
    return kExitOk;
  });
  mp->add_option("instance", instance)->required();
  mp->add_option("metric", metric)->required();
  mp->add_option("value", value)->required();
  mp->add_option("--tick", at);

  std::string resource;
  int min_size = 1, max_size = 1, desired = 1;
  auto* grc = verb("group-create", "Create a scaling group from a stack server", [&](Ctx& c) {
    emit(c, view(c.w().create_group(c.token(), name, stack, resource, min_size, max_size, desired)));
    return kExitOk;
  });
  grc->add_option("name", name)->required();
  grc->add_option("--stack", stack)->required();
  grc->add_option("--resource", resource)->required();
  grc->add_option("--min", min_size);
  grc->add_option("--max", max_size);
  grc->add_option("--desired", desired);
  verb("group-show", "Show a scaling group", [&](Ctx& c) {
    emit(c, view(c.w().show_group(c.token(), name)));
    return kExitOk;
  })->add_option("group", name)->required();

  std::string aggregate = "avg", comparison = "gt", target, action = "notify";
  double threshold = 0;
  Tick window = 1;
  auto* ac = verb("alarm-create", "Create a threshold alarm", [&](Ctx& c) {
    autonomic::AlarmDef def;
    def.name = name;
    def.metric = metric;
    def.aggregate = autonomic::aggregate_from_string(aggregate);
    def.comparison = autonomic::comparison_from_string(comparison);
    def.threshold = threshold;
    def.window = window;
    def.target = target;
    def.action = autonomic::alarm_action_from_string(action);
    emit(c, view(c.w().create_alarm(c.token(), def)));
    return kExitOk;
  });
  ac->add_option("name", name)->required();
  ac->add_option("--metric", metric)->required();
  ac->add_option("--aggregate", aggregate, "avg, max or min");
  ac->add_option("--comparison", comparison, "gt, ge, lt or le");
  ac->add_option("--threshold", threshold)->required();
  ac->add_option("--window", window, "Ticks");
  ac->add_option("--target", target, "Scaling group or instance")->required();
  ac->add_option("--action", action, "scale_out, scale_in or notify");

  bool disable = false;
  Tick detect_interval = 5, heal_window = 20;
  auto* hc = verb("healer-configure", "Configure the self-healing loop", [&](Ctx& c) {
    c.w().configure_healer(c.token(), autonomic::HealerConfig{!disable, detect_interval, heal_window});
    emit(c, json{{"enabled", !disable}, {"detect_interval", detect_interval}, {"heal_window", heal_window}});
    return kExitOk;
  });
  hc->add_flag("--disable", disable);
  hc->add_option("--detect-interval", detect_interval);
  hc->add_option("--heal-window", heal_window);

  std::string kind = "crash";
  auto* fi = verb("fault-inject", "Crash or remove an instance now or at a later tick", [&](Ctx& c) {
    c.w().inject_fault(c.token(), instance, autonomic::fault_kind_from_string(kind), at);
    emit(c, json{{"target", instance}, {"kind", kind}, {"at", at.value_or(c.w().now())}});
    return kExitOk;
  });
  fi->add_option("instance", instance)->required();
  fi->add_option("--kind", kind, "crash or vanish");
  fi->add_option("--at", at, "Tick");

  Tick ticks = 0;
  verb("clock-advance", "Advance the logical clock", [&](Ctx& c) {
    emit(c, json{{"clock", c.w().advance_clock(c.token(), ticks)}});
    return kExitOk;
  })->add_option("ticks", ticks)->required();

  std::size_t from = 0;
  verb("events-tail", "Print the event log", [&](Ctx& c) {
    json arr = json::array();
    for (const auto& e : c.w().events(c.token(), from)) arr.push_back(EventLog::to_json(e));
    emit_list(c, arr, {"tick", "kind", "subject", "detail"});
    return kExitOk;
  })->add_option("--from", from, "Index of the first event");

  std::string scenario_file, events_out;
  auto* scn = app.add_subcommand("scenario-run", "Replay a scenario file in memory and print its event log");
  scn->add_option("file", scenario_file)->required();
  scn->add_option("--events-out", events_out, "Also write the event log here");
  std::string snapshot_out;
  scn->add_option("--snapshot-out", snapshot_out, "Write the final state snapshot here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  auto from_env = [&](std::string& field, const char* var) {
    if (!field.empty()) return;
    if (const auto it = env.find(var); it != env.end()) field = it->second;
  };
  from_env(g.state, "MINIMANO_STATE");
  from_env(g.token, "MINIMANO_TOKEN");
  from_env(g.policy, "MINIMANO_POLICY");
  if (g.state.empty()) g.state = "minimano-state.json";
  g.seed = seed;

  try {
    RuntimeConfig rt;
    if (!g.policy.empty()) rt.policy = identity::Policy::load_file(g.policy);
    for (const auto& t : g.templates) rt.template_dirs.emplace_back(t);

    if (scn->parsed()) {
      ScenarioOptions opts;
      opts.seed = seed;
      opts.template_dirs = rt.template_dirs;
      opts.policy = rt.policy;
      const auto result = run_scenario_file(scenario_file, opts);
      out << result.events_jsonl;
      if (!events_out.empty()) std::ofstream(events_out, std::ios::binary) << result.events_jsonl;
      if (!snapshot_out.empty()) std::ofstream(snapshot_out, std::ios::binary) << result.snapshot.dump(1);
      return kExitOk;
    }

    WorldConfig boot;
    boot.seed = seed;
    Session session(g.state, rt, boot);
    session.open();
    Ctx ctx{session, g, out, err};
    for (auto& [sub, handler] : verbs) {
      if (!sub->parsed()) continue;
      const int code = handler(ctx);
      session.commit();
      return code;
    }
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace minimano::cli
