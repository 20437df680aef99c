#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urb/domain.hpp"

namespace urb::metrics {

// Linearly decreasing bracket weights, poorest bracket first.
struct PovertyWeights {
  std::array<double, 7> w = {1.0, 5.0 / 6.0, 4.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0, 0.0};
  void validate() const;  // non-increasing, w[0] == 1, w[6] == 0
};

// Weighted sum of bracket proportions; in [0, 1]. Throws ValidationError when
// the proportions do not sum to 1 (+-1e-6).
double poverty_index(const std::array<double, 7>& brackets, const PovertyWeights& weights = {});

struct LanduseProps {
  std::optional<double> vacant_prop;
  std::optional<double> comres_prop;   // absent when commercial + residential area is 0
  std::optional<double> mixeduse_prop;
};

// Area proportions over a set of lots; all fields absent when the lots span
// no area.
LanduseProps landuse_props(std::span<const LandLot* const> lots);

// Persons per square kilometer; absent when the unit has no usable area or no
// population value.
std::optional<double> population_density_km2(const GeoUnit& unit);

struct UnitMetricsRow {
  std::string unit_id;
  UnitLevel level = UnitLevel::block;
  std::optional<long long> population;
  std::optional<double> population_density;
  std::optional<double> poverty;
  std::optional<double> vacant_prop;
  std::optional<double> comres_prop;
  std::optional<double> mixeduse_prop;
};

// Per-unit table: density for all units, poverty where brackets exist,
// land-use proportions from the lots whose centroid falls in the unit.
std::vector<UnitMetricsRow> compute_unit_metrics(std::span<const GeoUnit> units,
                                                 std::span<const LandLot> lots,
                                                 const PovertyWeights& weights = {});

// Mean open hours within a window per business type, over schedule-bearing
// businesses city-wide.
class ConsensusTable {
 public:
  static ConsensusTable compute(std::span<const Business> businesses,
                                const hours::TimeWindow& window);

  std::optional<double> hours(BusinessType t) const;  // absent if no qualifying business
  int count(BusinessType t) const { return n_[static_cast<int>(t)]; }

 private:
  std::array<double, kNumBusinessTypes> sum_{};
  std::array<int, kNumBusinessTypes> n_{};
};

// Open hours of one business inside a window; absent without a schedule.
std::optional<double> business_window_hours(const Business& b, const hours::TimeWindow& window);

// (business hours in window) - consensus; may be negative. Absent when the
// business has no schedule or no consensus exists for the type.
std::optional<double> excess_hours(const Business& b, BusinessType t,
                                   const ConsensusTable& consensus,
                                   const hours::TimeWindow& window);

struct VibrancyAtLocation {
  geo::GeoPoint center;
  double radius_m = 0;
  std::array<int, kNumBusinessTypes> counts{};
  std::array<std::optional<double>, kNumBusinessTypes> mean_excess_hours;
  std::optional<double> tenure_years;
};

// Prebuilt spatial indices over businesses and residential properties so
// per-location queries stay cheap. Immutable once constructed.
class VibrancyContext {
 public:
  VibrancyContext(std::span<const Business> businesses,
                  std::span<const PropertyRecord> properties, CivilDate as_of);

  VibrancyAtLocation at(const geo::GeoPoint& center, double radius_m,
                        const ConsensusTable& consensus, const hours::TimeWindow& window) const;

  // Mean years since last sale over residential properties in the radius.
  std::optional<double> tenure_years(const geo::GeoPoint& center, double radius_m) const;

  CivilDate as_of() const { return as_of_; }

 private:
  std::span<const Business> businesses_;
  std::span<const PropertyRecord> properties_;
  geo::PointIndex business_idx_;
  geo::PointIndex residential_idx_;
  std::vector<std::uint32_t> residential_ids_;  // index into properties_
  CivilDate as_of_;
};

inline constexpr double kDaysPerYear = 365.2425;

}  // namespace urb::metrics
