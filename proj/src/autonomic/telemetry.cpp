#include "minimano/autonomic/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include "minimano/common/error.hpp"

namespace minimano::autonomic {

using json = nlohmann::ordered_json;

std::string_view to_string(Aggregate a) noexcept {
  switch (a) {
    case Aggregate::avg: return "avg";
    case Aggregate::max: return "max";
    case Aggregate::min: return "min";
  }
  return "avg";
}

std::string_view to_string(Comparison c) noexcept {
  switch (c) {
    case Comparison::gt: return "gt";
    case Comparison::ge: return "ge";
    case Comparison::lt: return "lt";
    case Comparison::le: return "le";
  }
  return "gt";
}

Aggregate aggregate_from_string(std::string_view s) {
  if (s == "avg") return Aggregate::avg;
  if (s == "max") return Aggregate::max;
  if (s == "min") return Aggregate::min;
  throw Error(ErrorKind::invalid_argument, "aggregate must be avg, max or min");
}

Comparison comparison_from_string(std::string_view s) {
  if (s == "gt" || s == ">") return Comparison::gt;
  if (s == "ge" || s == ">=") return Comparison::ge;
  if (s == "lt" || s == "<") return Comparison::lt;
  if (s == "le" || s == "<=") return Comparison::le;
  throw Error(ErrorKind::invalid_argument, "comparison must be gt, ge, lt or le");
}

bool compare(double value, Comparison op, double threshold) noexcept {
  switch (op) {
    case Comparison::gt: return value > threshold;
    case Comparison::ge: return value >= threshold;
    case Comparison::lt: return value < threshold;
    case Comparison::le: return value <= threshold;
  }
  return false;
}

void MetricStore::record(const std::string& resource, const std::string& metric, double value, Tick tick) {
  if (resource.empty() || metric.empty())
    throw Error(ErrorKind::invalid_argument, "metric samples need a resource and a metric name");
  if (!std::isfinite(value)) throw Error(ErrorKind::invalid_argument, "metric value must be finite");
  auto& series = series_[{resource, metric}];
  if (!series.empty() && tick < series.back().tick)
    throw Error(ErrorKind::invalid_argument, "sample at tick " + std::to_string(tick) + " is older than tick " +
                                                 std::to_string(series.back().tick) + " already recorded");
  series.push_back(MetricSample{tick, value});
  const Tick horizon = tick - retention_;
  auto keep = std::find_if(series.begin(), series.end(), [&](const MetricSample& s) { return s.tick > horizon; });
  series.erase(series.begin(), keep);
}

std::vector<MetricSample> MetricStore::window(const std::string& resource, const std::string& metric, Tick now,
                                              Tick window) const {
  std::vector<MetricSample> out;
  auto it = series_.find({resource, metric});
  if (it == series_.end()) return out;
  for (const auto& s : it->second)
    if (s.tick > now - window && s.tick <= now) out.push_back(s);
  return out;
}

std::optional<double> MetricStore::aggregate(const std::vector<std::string>& resources, const std::string& metric,
                                             Aggregate agg, Tick now, Tick win) const {
  double sum = 0, best = 0;
  std::size_t n = 0;
  for (const auto& r : resources) {
    for (const auto& s : window(r, metric, now, win)) {
      if (n == 0) best = s.value;
      else if (agg == Aggregate::max) best = std::max(best, s.value);
      else if (agg == Aggregate::min) best = std::min(best, s.value);
      sum += s.value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return agg == Aggregate::avg ? sum / static_cast<double>(n) : best;
}

void MetricStore::forget(const std::string& resource) {
  std::erase_if(series_, [&](const auto& entry) { return entry.first.first == resource; });
}

std::size_t MetricStore::sample_count() const {
  std::size_t n = 0;
  for (const auto& [_, s] : series_) n += s.size();
  return n;
}

json MetricStore::to_json() const {
  json out = json::array();
  for (const auto& [key, samples] : series_) {
    json pts = json::array();
    for (const auto& s : samples) pts.push_back(json::array({s.tick, s.value}));
    out.push_back(json{{"resource", key.first}, {"metric", key.second}, {"samples", pts}});
  }
  return out;
}

void MetricStore::load(const json& j) {
  series_.clear();
  for (const auto& s : j) {
    auto& series = series_[{s.at("resource").get<std::string>(), s.at("metric").get<std::string>()}];
    for (const auto& p : s.at("samples")) series.push_back(MetricSample{p.at(0).get<Tick>(), p.at(1).get<double>()});
  }
}

}  // namespace minimano::autonomic
