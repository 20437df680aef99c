#include "urb/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "urb/error.hpp"
#include "urb/log.hpp"

namespace urb::match {

namespace {

constexpr double kDegPerMeterLat = 180.0 / (std::numbers::pi * geo::kEarthRadiusM);

bool any_crime_in_shape(const geo::PointIndex& crimes, const geo::GeoShape& shape,
                        const geo::BBox& box) {
  for (std::uint32_t id : crimes.bbox_query(box)) {
    if (geo::contains(shape, crimes.point(id))) return true;
  }
  return false;
}

}  // namespace

TTestResult paired_t(std::span<const double> d) {
  if (d.size() < 2) throw ValidationError("paired_t: need at least 2 differences");
  const double n = static_cast<double>(d.size());
  double mean = 0;
  for (double x : d) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : d) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (n - 1));

  TTestResult res;
  res.mean = mean;
  if (sd == 0) {
    if (mean == 0) {
      res.t = 0;
      res.p = 1;
    } else {
      res.t = mean > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      res.p = 0;
      res.degenerate = true;
    }
    return res;
  }
  res.t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1);
  res.p = 2.0 * boost::math::cdf(dist, -std::abs(res.t));
  return res;
}

BonferroniResult bonferroni(std::span<const double> raw_p, double alpha) {
  BonferroniResult res;
  res.alpha = alpha;
  res.m = raw_p.size();
  res.significant.reserve(raw_p.size());
  double threshold = res.m > 0 ? alpha / static_cast<double>(res.m) : alpha;
  for (double p : raw_p) res.significant.push_back(p < threshold);
  return res;
}

std::optional<ExtremePair> locate_extreme_crime(const geo::GeoShape& unit,
                                                const geo::PointIndex& crimes,
                                                const ExtremeParams& params) {
  geo::BBox box = geo::bbox_of(unit);
  if (!any_crime_in_shape(crimes, unit, box)) return std::nullopt;

  double lat_c = (box.min_lat + box.max_lat) / 2.0;
  double dlat = params.grid_m * kDegPerMeterLat;
  double coslat = std::cos(lat_c * std::numbers::pi / 180.0);
  if (coslat < 1e-6) return std::nullopt;
  double dlon = params.grid_m * kDegPerMeterLat / coslat;

  // Row-major scan from the southwest corner; first strict improvement wins,
  // so ties resolve to the earliest (row, col). Candidate coordinates come
  // from index arithmetic (min + i * step) so the grid is well-defined.
  int rows = static_cast<int>(std::floor((box.max_lat - box.min_lat) / dlat)) + 1;
  int cols = static_cast<int>(std::floor((box.max_lon - box.min_lon) / dlon)) + 1;
  bool have = false;
  geo::GeoPoint hi{}, lo{};
  size_t hi_count = 0, lo_count = 0;
  for (int row = 0; row < rows; ++row) {
    double lat = box.min_lat + row * dlat;
    for (int col = 0; col < cols; ++col) {
      geo::GeoPoint cand{box.min_lon + col * dlon, lat};
      if (!geo::contains(unit, cand)) continue;
      size_t freq = crimes.radius_count(cand, params.radius_m);
      if (!have) {
        hi = lo = cand;
        hi_count = lo_count = freq;
        have = true;
        continue;
      }
      if (freq > hi_count) {
        hi = cand;
        hi_count = freq;
      }
      if (freq < lo_count) {
        lo = cand;
        lo_count = freq;
      }
    }
  }
  if (!have || hi_count == 0) return std::nullopt;
  double sep = geo::distance_m(hi, lo);
  if (sep < params.min_separation_m) return std::nullopt;
  return ExtremePair{hi, lo, hi_count, lo_count, sep};
}

namespace {

// Accumulates per-cell paired differences, then renders rows with one shared
// Bonferroni family per table.
class CellTable {
 public:
  explicit CellTable(std::string study) : study_(std::move(study)) {}

  void declare(const std::string& measure, const std::string& crime_type,
               const std::string& window) {
    key_order_.push_back(key(measure, crime_type, window));
    cells_[key_order_.back()];  // materialize
  }

  void add(const std::string& measure, const std::string& crime_type, const std::string& window,
           double diff) {
    cells_[key(measure, crime_type, window)].push_back(diff);
  }

  std::vector<PairReportRow> rows(double alpha) const {
    std::vector<PairReportRow> out;
    std::vector<size_t> tested;  // indices into out with a computed t
    std::vector<double> pvals;
    for (const auto& k : key_order_) {
      const std::vector<double>& d = cells_.at(k);
      PairReportRow row;
      row.study = study_;
      auto [measure, crime_type, window] = unkey(k);
      row.measure = measure;
      row.crime_type = crime_type;
      row.window = window;
      row.n = static_cast<int>(d.size());
      if (!d.empty()) {
        double mean = 0;
        for (double x : d) mean += x;
        row.mean_diff = mean / static_cast<double>(d.size());
      }
      if (d.size() >= 2) {
        TTestResult t = paired_t(d);
        row.t = t.t;
        row.p_raw = t.p;
        row.degenerate = t.degenerate;
        tested.push_back(out.size());
        pvals.push_back(t.p);
      }
      out.push_back(std::move(row));
    }
    BonferroniResult bonf = bonferroni(pvals, alpha);
    for (size_t i = 0; i < tested.size(); ++i) {
      out[tested[i]].m = static_cast<int>(bonf.m);
      // Zero-variance cells carry no valid t-test; they stay visible through
      // the degenerate marker but never claim significance.
      out[tested[i]].significant = bonf.significant[i] && !out[tested[i]].degenerate;
    }
    return out;
  }

 private:
  static std::string key(const std::string& measure, const std::string& crime_type,
                         const std::string& window) {
    return measure + "\x1f" + crime_type + "\x1f" + window;
  }
  static std::tuple<std::string, std::string, std::string> unkey(const std::string& k) {
    auto a = k.find('\x1f');
    auto b = k.find('\x1f', a + 1);
    return {k.substr(0, a), k.substr(a + 1, b - a - 1), k.substr(b + 1)};
  }

  std::string study_;
  std::vector<std::string> key_order_;
  std::map<std::string, std::vector<double>> cells_;
};

std::string type_slug(BusinessType t) {
  std::string s = to_string(t);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

geo::PointIndex filtered_crime_index(std::span<const CrimeEvent> crimes,
                                     std::optional<CrimeSuper> super,
                                     const hours::TimeWindow& window) {
  std::vector<geo::GeoPoint> pts;
  for (const CrimeEvent& c : crimes) {
    if (super && c.super != *super) continue;
    if (!hours::in_window(c.week_minute, window)) continue;
    pts.push_back(c.where);
  }
  return geo::PointIndex::build(std::move(pts));
}

std::vector<const GeoUnit*> units_at_level(std::span<const GeoUnit> units, UnitLevel level) {
  std::vector<const GeoUnit*> out;
  for (const GeoUnit& u : units) {
    if (u.level == level && u.passes_population_filter) out.push_back(&u);
  }
  std::sort(out.begin(), out.end(),
            [](const GeoUnit* a, const GeoUnit* b) { return a->id < b->id; });
  return out;
}

}  // namespace

std::vector<PairReportRow> study_high_low(std::span<const GeoUnit> units,
                                          std::span<const CrimeEvent> crimes,
                                          std::span<const Business> businesses,
                                          std::span<const PropertyRecord> properties,
                                          std::span<const LandLot> lots, CivilDate as_of,
                                          const HighLowConfig& config) {
  std::vector<hours::TimeWindow> windows = config.windows;
  if (windows.empty()) windows.push_back(hours::whole_week());
  const std::array<CrimeSuper, 2> supers = {CrimeSuper::violent, CrimeSuper::non_violent};

  metrics::VibrancyContext vibrancy(businesses, properties, as_of);
  std::vector<geo::GeoPoint> lot_pts;
  lot_pts.reserve(lots.size());
  for (const LandLot& lot : lots) lot_pts.push_back(lot.location);
  geo::PointIndex lot_idx = geo::PointIndex::build(std::move(lot_pts));

  CellTable business_table("high_low_business");
  CellTable landuse_table("high_low_landuse");

  // Fixed cell enumeration so empty cells still appear in the report.
  for (const auto& window : windows) {
    for (CrimeSuper super : supers) {
      for (BusinessType t : kAllBusinessTypes) {
        business_table.declare("business_count_" + type_slug(t), to_string(super), window.name);
      }
      for (BusinessType t : kAllBusinessTypes) {
        business_table.declare("excess_hours_" + type_slug(t), to_string(super), window.name);
      }
      for (const char* m : {"vacant_prop", "mixeduse_prop", "comres_prop", "tenure_years"}) {
        landuse_table.declare(m, to_string(super), window.name);
      }
    }
  }

  auto landuse_at = [&](const geo::GeoPoint& center) {
    std::vector<const LandLot*> near;
    for (std::uint32_t id : lot_idx.radius_query(center, config.extreme.radius_m)) {
      near.push_back(&lots[id]);
    }
    return metrics::landuse_props(near);
  };

  std::vector<const GeoUnit*> business_units = units_at_level(units, config.business_level);
  std::vector<const GeoUnit*> landuse_units = units_at_level(units, config.landuse_level);

  for (const auto& window : windows) {
    metrics::ConsensusTable consensus = metrics::ConsensusTable::compute(businesses, window);
    for (CrimeSuper super : supers) {
      geo::PointIndex crime_idx = filtered_crime_index(crimes, super, window);

      for (const GeoUnit* unit : business_units) {
        auto pair = locate_extreme_crime(unit->shape, crime_idx, config.extreme);
        if (!pair) continue;
        auto vib_hi = vibrancy.at(pair->hi, config.extreme.radius_m, consensus, window);
        auto vib_lo = vibrancy.at(pair->lo, config.extreme.radius_m, consensus, window);
        for (BusinessType t : kAllBusinessTypes) {
          int i = static_cast<int>(t);
          // Units with no business of the type near either location do not
          // enter that type's comparison.
          if (vib_hi.counts[i] + vib_lo.counts[i] > 0) {
            business_table.add("business_count_" + type_slug(t), to_string(super), window.name,
                               static_cast<double>(vib_lo.counts[i] - vib_hi.counts[i]));
          }
          if (vib_hi.mean_excess_hours[i] && vib_lo.mean_excess_hours[i]) {
            business_table.add("excess_hours_" + type_slug(t), to_string(super), window.name,
                               *vib_lo.mean_excess_hours[i] - *vib_hi.mean_excess_hours[i]);
          }
        }
      }

      for (const GeoUnit* unit : landuse_units) {
        auto pair = locate_extreme_crime(unit->shape, crime_idx, config.extreme);
        if (!pair) continue;
        metrics::LanduseProps hi_props = landuse_at(pair->hi);
        metrics::LanduseProps lo_props = landuse_at(pair->lo);
        auto add_prop = [&](const char* name, std::optional<double> hi_v,
                            std::optional<double> lo_v) {
          if (hi_v && lo_v) {
            landuse_table.add(name, to_string(super), window.name, *lo_v - *hi_v);
          }
        };
        add_prop("vacant_prop", hi_props.vacant_prop, lo_props.vacant_prop);
        add_prop("mixeduse_prop", hi_props.mixeduse_prop, lo_props.mixeduse_prop);
        add_prop("comres_prop", hi_props.comres_prop, lo_props.comres_prop);
        add_prop("tenure_years", vibrancy.tenure_years(pair->hi, config.extreme.radius_m),
                 vibrancy.tenure_years(pair->lo, config.extreme.radius_m));
      }
    }
  }

  std::vector<PairReportRow> rows = business_table.rows(config.alpha);
  std::vector<PairReportRow> more = landuse_table.rows(config.alpha);
  rows.insert(rows.end(), std::make_move_iterator(more.begin()),
              std::make_move_iterator(more.end()));
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of empty set");
  std::sort(values.begin(), values.end());
  q = std::clamp(q, 0.0, 1.0);
  double pos = q * static_cast<double>(values.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return values[lo] * (1 - frac) + values[hi] * frac;
}

std::vector<PairReportRow> study_hours(std::span<const GeoUnit> units,
                                       std::span<const CrimeEvent> crimes,
                                       std::span<const Business> businesses,
                                       const HoursStudyConfig& config) {
  std::vector<hours::TimeWindow> windows = config.windows;
  if (windows.empty()) windows.push_back(hours::whole_week());

  // Total weekly open hours per schedule-bearing business, per type.
  hours::TimeWindow week = hours::whole_week();
  std::array<std::vector<double>, kNumBusinessTypes> hours_by_type;
  for (const Business& b : businesses) {
    if (auto h = metrics::business_window_hours(b, week)) {
      for (BusinessType t : types_in(b.types)) {
        hours_by_type[static_cast<int>(t)].push_back(*h);
      }
    }
  }
  std::array<std::optional<std::pair<double, double>>, kNumBusinessTypes> thresholds;
  for (int i = 0; i < kNumBusinessTypes; ++i) {
    if (!hours_by_type[i].empty()) {
      thresholds[i] = std::make_pair(quantile(hours_by_type[i], config.short_quantile),
                                     quantile(hours_by_type[i], config.long_quantile));
    }
  }

  std::vector<const GeoUnit*> study_units = units_at_level(units, config.level);
  std::vector<geo::ShapeIndex::Entry> entries;
  entries.reserve(study_units.size());
  for (const GeoUnit* u : study_units) entries.push_back({u->id, u->shape, u->area_m2});
  geo::ShapeIndex unit_idx = geo::ShapeIndex::build(std::move(entries));

  // Businesses of each type in each unit, split long/short.
  struct Candidates {
    std::vector<const Business*> longs, shorts;
  };
  std::map<std::pair<std::uint32_t, int>, Candidates> by_unit_type;
  for (const Business& b : businesses) {
    auto h = metrics::business_window_hours(b, week);
    if (!h) continue;
    auto unit = unit_idx.locate(b.where);
    if (!unit) continue;
    for (BusinessType t : types_in(b.types)) {
      int i = static_cast<int>(t);
      if (!thresholds[i]) continue;
      if (*h > thresholds[i]->second) {
        by_unit_type[{*unit, i}].longs.push_back(&b);
      } else if (*h < thresholds[i]->first) {
        by_unit_type[{*unit, i}].shorts.push_back(&b);
      }
    }
  }

  // One pair per (unit, type): maximize separation, ties by business ids.
  struct ChosenPair {
    std::uint32_t unit;
    int type;
    const Business* long_b;
    const Business* short_b;
  };
  std::vector<ChosenPair> pairs;
  for (auto& [key, cand] : by_unit_type) {
    auto by_id = [](const Business* a, const Business* b) { return a->id < b->id; };
    std::sort(cand.longs.begin(), cand.longs.end(), by_id);
    std::sort(cand.shorts.begin(), cand.shorts.end(), by_id);
    const Business* best_long = nullptr;
    const Business* best_short = nullptr;
    double best_sep = -1;
    for (const Business* lb : cand.longs) {
      for (const Business* sb : cand.shorts) {
        if (lb == sb) continue;
        double sep = geo::distance_m(lb->where, sb->where);
        if (sep < config.min_separation_m) continue;
        if (sep > best_sep) {
          best_sep = sep;
          best_long = lb;
          best_short = sb;
        }
      }
    }
    if (best_long) {
      pairs.push_back({key.first, key.second, best_long, best_short});
    }
  }

  CellTable table("open_hours");
  const std::array<std::optional<CrimeSuper>, 3> crime_types = {
      std::optional<CrimeSuper>{CrimeSuper::violent},
      std::optional<CrimeSuper>{CrimeSuper::non_violent}, std::nullopt};
  auto crime_name = [](const std::optional<CrimeSuper>& s) {
    return s ? to_string(*s) : std::string("all");
  };

  for (const auto& window : windows) {
    for (const auto& super : crime_types) {
      for (BusinessType t : kAllBusinessTypes) {
        table.declare("crime_count_" + type_slug(t), crime_name(super), window.name);
      }
    }
  }

  for (const auto& window : windows) {
    for (const auto& super : crime_types) {
      geo::PointIndex crime_idx = filtered_crime_index(crimes, super, window);
      for (const ChosenPair& pair : pairs) {
        double short_crimes =
            static_cast<double>(crime_idx.radius_count(pair.short_b->where, config.crime_radius_m));
        double long_crimes =
            static_cast<double>(crime_idx.radius_count(pair.long_b->where, config.crime_radius_m));
        table.add("crime_count_" + type_slug(static_cast<BusinessType>(pair.type)),
                  crime_name(super), window.name, short_crimes - long_crimes);
      }
    }
  }
  return table.rows(config.alpha);
}

}  // namespace urb::match
