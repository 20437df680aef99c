#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "urb/domain.hpp"
#include "urb/ingest.hpp"
#include "urb/metrics.hpp"
#include "urb/regression.hpp"

namespace urb {

// One declarative run configuration; every analysis parameter lives here so
// runs are reproducible. Serializes losslessly to JSON.
struct RunConfig {
  struct Paths {
    std::string geounits;
    std::string population;
    std::string acs;
    std::string crimes;
    std::string lots;
    std::string properties;
    std::string listings;
    std::string category_map;
    std::string locations;  // optional: vibrancy query points (id, lat, lon)
    std::string out_dir = "out";
  } paths;

  std::string timezone = "America/New_York";
  std::string as_of_date;  // empty: latest property sale date in the data

  ingest::PopulationFilter population_filter;
  ingest::DedupParams dedup;
  reg::HuberOptions huber;
  metrics::PovertyWeights poverty_weights;
  int association_min_n = 10;
  double vibrancy_radius_m = 50.0;

  struct Matching {
    double grid_m = 10.0;
    double high_low_min_separation_m = 100.0;
    double hours_crime_radius_m = 70.0;
    double hours_min_separation_m = 140.0;
    UnitLevel business_level = UnitLevel::block;
    UnitLevel landuse_level = UnitLevel::block_group;
    UnitLevel hours_level = UnitLevel::block_group;
    double alpha = 0.05;
    double short_quantile = 0.25;
    double long_quantile = 0.75;
  } matching;

  std::vector<hours::TimeWindow> windows;  // defaults to the three standard windows

  void validate() const;  // throws ValidationError
};

RunConfig default_config();

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

// Fingerprint of the canonical JSON form; stage manifests carry it so stale
// output mixes are refused.
std::string config_hash(const RunConfig& config);

// Applies a dotted-path override ("matching.alpha=0.01", "paths.out_dir=x").
// Values parse as JSON scalars first, then fall back to strings.
void apply_override(nlohmann::json& config_json, const std::string& key_eq_value);

}  // namespace urb
