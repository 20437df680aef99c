#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urb/domain.hpp"
#include "urb/metrics.hpp"

namespace urb::match {

struct TTestResult {
  double mean = 0;
  double t = 0;
  double p = 1;
  bool degenerate = false;  // zero variance with nonzero mean
};

// Matched-pairs t statistic with two-sided Student-t p-value (n-1 df).
// Requires n >= 2.
TTestResult paired_t(std::span<const double> d);

struct BonferroniResult {
  std::vector<bool> significant;
  size_t m = 0;
  double alpha = 0.05;
};

// flag[i] = raw_p[i] < alpha / m with m = raw_p.size().
BonferroniResult bonferroni(std::span<const double> raw_p, double alpha = 0.05);

struct ExtremeParams {
  double radius_m = 50;
  double grid_m = 10;
  double min_separation_m = 100;
};

struct ExtremePair {
  geo::GeoPoint hi, lo;
  size_t hi_count = 0, lo_count = 0;
  double separation_m = 0;
};

// Highest- and lowest-crime-frequency locations inside a unit: candidates are
// a grid_m lattice clipped to the unit polygon, frequency is the crime count
// within radius_m, ties break by (row, col) scan order. Returns nullopt when
// the unit holds no qualifying crime, no candidate scores above zero, or the
// extremes are closer than min_separation_m. `crimes` must already be
// filtered to the crime super-category and time window under study.
std::optional<ExtremePair> locate_extreme_crime(const geo::GeoShape& unit,
                                                const geo::PointIndex& crimes,
                                                const ExtremeParams& params = {});

struct PairReportRow {
  std::string study;
  std::string measure;
  std::string crime_type;
  std::string window;
  int n = 0;
  std::optional<double> mean_diff;
  std::optional<double> t;
  std::optional<double> p_raw;
  int m = 0;  // Bonferroni family size (cells with a computed t)
  bool significant = false;
  bool degenerate = false;
};

struct HighLowConfig {
  std::vector<hours::TimeWindow> windows;  // empty -> whole week only
  ExtremeParams extreme;
  UnitLevel business_level = UnitLevel::block;
  UnitLevel landuse_level = UnitLevel::block_group;
  double alpha = 0.05;
};

// Within-unit high-crime vs low-crime comparison. Differences are
// (low-crime location) - (high-crime location). Business count and excess-
// hour measures run at business_level; land-use proportions and ownership
// tenure at landuse_level. Bonferroni families follow the two emitted
// tables.
std::vector<PairReportRow> study_high_low(std::span<const GeoUnit> units,
                                          std::span<const CrimeEvent> crimes,
                                          std::span<const Business> businesses,
                                          std::span<const PropertyRecord> properties,
                                          std::span<const LandLot> lots, CivilDate as_of,
                                          const HighLowConfig& config);

struct HoursStudyConfig {
  std::vector<hours::TimeWindow> windows;
  double crime_radius_m = 70;
  double min_separation_m = 140;
  UnitLevel level = UnitLevel::block_group;
  double alpha = 0.05;
  double short_quantile = 0.25;
  double long_quantile = 0.75;
};

// Within-unit open-shorter vs open-longer comparison per business type.
// Differences are crimes(short) - crimes(long) within crime_radius_m. When a
// unit holds several qualifying pairs of a type, the pair with the largest
// separation wins (ties by business id).
std::vector<PairReportRow> study_hours(std::span<const GeoUnit> units,
                                       std::span<const CrimeEvent> crimes,
                                       std::span<const Business> businesses,
                                       const HoursStudyConfig& config);

// Interpolated quantile (linear between order statistics) used for the
// short/long hour thresholds.
double quantile(std::vector<double> values, double q);

}  // namespace urb::match
