#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "urb/config.hpp"
#include "urb/domain.hpp"
#include "urb/regression.hpp"

namespace urb::pipeline {

// In-memory view of the normalized bundle that `ingest` writes.
struct Dataset {
  std::vector<GeoUnit> units;
  std::vector<CrimeEvent> crimes;
  std::vector<Business> businesses;
  std::vector<LandLot> lots;
  std::vector<PropertyRecord> properties;
  CivilDate as_of;
};

// Stage drivers. Each writes its outputs plus a manifest carrying the config
// hash; downstream stages refuse manifests from a different config.
void run_ingest(const RunConfig& config);
void run_metrics(const RunConfig& config);
void run_regress(const RunConfig& config);
void run_match(const RunConfig& config);
void run_report(const RunConfig& config);

// Loads the normalized bundle (requires a matching ingest manifest).
Dataset load_bundle(const RunConfig& config);

// Crimes per unit id at one census level, split violent / non-violent.
std::map<std::string, reg::UnitCrimeCounts> count_crimes_by_unit(
    std::span<const GeoUnit> units, UnitLevel level, std::span<const CrimeEvent> crimes);

}  // namespace urb::pipeline
