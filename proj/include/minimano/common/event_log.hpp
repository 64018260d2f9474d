#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace minimano {

using Tick = std::int64_t;

struct Event {
  Tick tick = 0;
  std::string kind;
  std::string subject;
  std::string detail;

  friend bool operator==(const Event&, const Event&) = default;
};

// Append-only orchestration event log; rendered one JSON object per line.
class EventLog {
public:
  void append(Tick tick, std::string kind, std::string subject, std::string detail = {}) {
    events_.push_back(Event{tick, std::move(kind), std::move(subject), std::move(detail)});
  }

  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }

  std::string to_jsonl(std::size_t from = 0) const {
    std::string out;
    for (std::size_t i = from; i < events_.size(); ++i) {
      out += to_json(events_[i]).dump();
      out += '\n';
    }
    return out;
  }

  static nlohmann::ordered_json to_json(const Event& e) {
    return nlohmann::ordered_json{
        {"tick", e.tick}, {"kind", e.kind}, {"subject", e.subject}, {"detail", e.detail}};
  }

  nlohmann::ordered_json to_json() const {
    auto out = nlohmann::ordered_json::array();
    for (const auto& e : events_) out.push_back(to_json(e));
    return out;
  }

  void load(const nlohmann::ordered_json& json) {
    events_.clear();
    for (const auto& e : json)
      events_.push_back(Event{e.at("tick").get<Tick>(), e.at("kind").get<std::string>(),
                              e.at("subject").get<std::string>(), e.at("detail").get<std::string>()});
  }

private:
  std::vector<Event> events_;
};

}  // namespace minimano
