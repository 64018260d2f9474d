#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "minimano/common/event_log.hpp"

namespace minimano::autonomic {

struct MetricSample {
  Tick tick = 0;
  double value = 0;

  friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

enum class Aggregate { avg, max, min };
enum class Comparison { gt, ge, lt, le };

std::string_view to_string(Aggregate a) noexcept;
std::string_view to_string(Comparison c) noexcept;
Aggregate aggregate_from_string(std::string_view s);
Comparison comparison_from_string(std::string_view s);

bool compare(double value, Comparison op, double threshold) noexcept;

// Per (resource, metric) series, tick-ordered. Samples older than the
// retention horizon are dropped as new ones arrive.
class MetricStore {
public:
  explicit MetricStore(Tick retention = 1000) : retention_(retention) {}

  // Throws invalid_argument when `tick` precedes the newest sample of the series.
  void record(const std::string& resource, const std::string& metric, double value, Tick tick);

  // Samples with tick in (now - window, now].
  std::vector<MetricSample> window(const std::string& resource, const std::string& metric, Tick now,
                                   Tick window) const;

  // Aggregate over the window; nullopt when no sample falls inside it.
  std::optional<double> aggregate(const std::vector<std::string>& resources, const std::string& metric, Aggregate agg,
                                  Tick now, Tick window) const;

  void forget(const std::string& resource);
  std::size_t sample_count() const;

  nlohmann::ordered_json to_json() const;
  void load(const nlohmann::ordered_json& json);

  friend bool operator==(const MetricStore&, const MetricStore&) = default;

private:
  Tick retention_;
  std::map<std::pair<std::string, std::string>, std::vector<MetricSample>> series_;
};

}  // namespace minimano::autonomic
