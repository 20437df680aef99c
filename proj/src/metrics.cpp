#include "urb/metrics.hpp"

#include <cmath>
#include <unordered_map>

#include "urb/error.hpp"
#include "urb/util.hpp"

namespace urb::metrics {

void PovertyWeights::validate() const {
  if (w[0] != 1.0 || w[6] != 0.0) {
    throw ValidationError("poverty weights must have w1 = 1 and w7 = 0");
  }
  for (int q = 1; q < 7; ++q) {
    if (w[q] > w[q - 1]) throw ValidationError("poverty weights must be non-increasing");
  }
}

double poverty_index(const std::array<double, 7>& brackets, const PovertyWeights& weights) {
  weights.validate();
  double sum = 0;
  for (double p : brackets) {
    if (p < 0) throw ValidationError("bracket proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError("bracket proportions sum to " + fmt_double(sum) + ", expected 1");
  }
  double idx = 0;
  for (int q = 0; q < 7; ++q) idx += weights.w[q] * brackets[q];
  return idx;
}

LanduseProps landuse_props(std::span<const LandLot* const> lots) {
  double total = 0, vacant = 0, commercial = 0, residential = 0, mixed = 0;
  for (const LandLot* lot : lots) {
    total += lot->area_m2;
    switch (lot->zoning) {
      case Zoning::vacant: vacant += lot->area_m2; break;
      case Zoning::commercial: commercial += lot->area_m2; break;
      case Zoning::residential: residential += lot->area_m2; break;
      case Zoning::mixed_use: mixed += lot->area_m2; break;
      default: break;
    }
  }
  LanduseProps props;
  if (total > 0) {
    props.vacant_prop = vacant / total;
    props.mixeduse_prop = mixed / total;
    if (commercial + residential > 0) {
      props.comres_prop = commercial / (commercial + residential);
    }
  }
  return props;
}

std::optional<double> population_density_km2(const GeoUnit& unit) {
  if (!unit.population || !(unit.area_m2 > 0)) return std::nullopt;
  return static_cast<double>(*unit.population) / (unit.area_m2 / 1e6);
}

std::vector<UnitMetricsRow> compute_unit_metrics(std::span<const GeoUnit> units,
                                                 std::span<const LandLot> lots,
                                                 const PovertyWeights& weights) {
  // Blocks nest inside block groups, so lot assignment runs per level; a lot
  // contributes to its block and to its block group.
  std::vector<std::vector<const LandLot*>> lots_by_unit(units.size());
  for (UnitLevel level : {UnitLevel::block, UnitLevel::block_group}) {
    std::vector<geo::ShapeIndex::Entry> entries;
    std::vector<size_t> unit_of_entry;
    for (size_t i = 0; i < units.size(); ++i) {
      if (units[i].level != level) continue;
      entries.push_back({units[i].id, units[i].shape, units[i].area_m2});
      unit_of_entry.push_back(i);
    }
    if (entries.empty()) continue;
    geo::ShapeIndex index = geo::ShapeIndex::build(std::move(entries));
    for (const LandLot& lot : lots) {
      if (auto entry = index.locate(lot.location)) {
        lots_by_unit[unit_of_entry[*entry]].push_back(&lot);
      }
    }
  }

  std::vector<UnitMetricsRow> out;
  out.reserve(units.size());
  for (size_t i = 0; i < units.size(); ++i) {
    const GeoUnit& u = units[i];
    UnitMetricsRow row;
    row.unit_id = u.id;
    row.level = u.level;
    row.population = u.population;
    row.population_density = population_density_km2(u);
    if (u.poverty_brackets) {
      row.poverty = poverty_index(*u.poverty_brackets, weights);
    }
    LanduseProps props = landuse_props(lots_by_unit[i]);
    row.vacant_prop = props.vacant_prop;
    row.comres_prop = props.comres_prop;
    row.mixeduse_prop = props.mixeduse_prop;
    out.push_back(std::move(row));
  }
  return out;
}

ConsensusTable ConsensusTable::compute(std::span<const Business> businesses,
                                       const hours::TimeWindow& window) {
  ConsensusTable table;
  for (const Business& b : businesses) {
    if (!b.schedule) continue;
    double h = b.schedule->overlap_minutes(window.intervals) / 60.0;
    for (BusinessType t : types_in(b.types)) {
      table.sum_[static_cast<int>(t)] += h;
      ++table.n_[static_cast<int>(t)];
    }
  }
  return table;
}

std::optional<double> ConsensusTable::hours(BusinessType t) const {
  int i = static_cast<int>(t);
  if (n_[i] == 0) return std::nullopt;
  return sum_[i] / n_[i];
}

std::optional<double> business_window_hours(const Business& b, const hours::TimeWindow& window) {
  if (!b.schedule) return std::nullopt;
  return b.schedule->overlap_minutes(window.intervals) / 60.0;
}

std::optional<double> excess_hours(const Business& b, BusinessType t,
                                   const ConsensusTable& consensus,
                                   const hours::TimeWindow& window) {
  auto own = business_window_hours(b, window);
  if (!own) return std::nullopt;
  auto c = consensus.hours(t);
  if (!c) return std::nullopt;
  return *own - *c;
}

VibrancyContext::VibrancyContext(std::span<const Business> businesses,
                                 std::span<const PropertyRecord> properties, CivilDate as_of)
    : businesses_(businesses), properties_(properties), as_of_(as_of) {
  std::vector<geo::GeoPoint> biz_pts;
  biz_pts.reserve(businesses.size());
  for (const Business& b : businesses) biz_pts.push_back(b.where);
  business_idx_ = geo::PointIndex::build(std::move(biz_pts));

  std::vector<geo::GeoPoint> res_pts;
  for (std::uint32_t i = 0; i < properties.size(); ++i) {
    if (properties[i].residential) {
      residential_ids_.push_back(i);
      res_pts.push_back(properties[i].where);
    }
  }
  residential_idx_ = geo::PointIndex::build(std::move(res_pts));
}

std::optional<double> VibrancyContext::tenure_years(const geo::GeoPoint& center,
                                                    double radius_m) const {
  double sum = 0;
  int n = 0;
  for (std::uint32_t k : residential_idx_.radius_query(center, radius_m)) {
    const PropertyRecord& p = properties_[residential_ids_[k]];
    sum += static_cast<double>(days_between(p.last_sale_date, as_of_)) / kDaysPerYear;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

VibrancyAtLocation VibrancyContext::at(const geo::GeoPoint& center, double radius_m,
                                       const ConsensusTable& consensus,
                                       const hours::TimeWindow& window) const {
  VibrancyAtLocation v;
  v.center = center;
  v.radius_m = radius_m;
  std::array<double, kNumBusinessTypes> excess_sum{};
  std::array<int, kNumBusinessTypes> excess_n{};
  for (std::uint32_t k : business_idx_.radius_query(center, radius_m)) {
    const Business& b = businesses_[k];
    for (BusinessType t : types_in(b.types)) {
      int i = static_cast<int>(t);
      ++v.counts[i];
      if (auto e = excess_hours(b, t, consensus, window)) {
        excess_sum[i] += *e;
        ++excess_n[i];
      }
    }
  }
  for (int i = 0; i < kNumBusinessTypes; ++i) {
    if (excess_n[i] > 0) v.mean_excess_hours[i] = excess_sum[i] / excess_n[i];
  }
  v.tenure_years = tenure_years(center, radius_m);
  return v;
}

}  // namespace urb::metrics
