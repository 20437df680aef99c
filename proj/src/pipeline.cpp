#include "urb/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "urb/csv.hpp"
#include "urb/error.hpp"
#include "urb/ingest.hpp"
#include "urb/log.hpp"
#include "urb/matching.hpp"
#include "urb/metrics.hpp"
#include "urb/util.hpp"

namespace urb::pipeline {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path out_dir(const RunConfig& c) { return fs::path(c.paths.out_dir); }
fs::path bundle_dir(const RunConfig& c) { return out_dir(c) / "normalized"; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_manifest(const RunConfig& c, const std::string& stage, json extra) {
  extra["stage"] = stage;
  extra["config_hash"] = config_hash(c);
  open_out(out_dir(c) / (stage + "_manifest.json")) << extra.dump(2) << "\n";
}

json require_manifest(const RunConfig& c, const std::string& stage) {
  fs::path path = out_dir(c) / (stage + "_manifest.json");
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("missing output of stage '" + stage + "' (" + path.string() +
                          "); run that stage first");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (j.value("config_hash", "") != config_hash(c)) {
    throw ValidationError("stage '" + stage +
                          "' outputs were produced with a different configuration; rerun it");
  }
  return j;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

void require_path(const std::string& p, const std::string& what) {
  if (p.empty()) throw ValidationError("config: paths." + what + " is not set");
  if (!fs::exists(p)) throw ValidationError(what + " file not found: " + p);
}

}  // namespace

void run_ingest(const RunConfig& config) {
  config.validate();
  require_path(config.paths.geounits, "geounits");
  require_path(config.paths.population, "population");
  require_path(config.paths.acs, "acs");
  require_path(config.paths.crimes, "crimes");
  require_path(config.paths.lots, "lots");
  require_path(config.paths.properties, "properties");
  require_path(config.paths.listings, "listings");
  require_path(config.paths.category_map, "category_map");
  fs::create_directories(bundle_dir(config));

  json report;
  auto record = [&report](const char* name, const ingest::LoadStats& stats) {
    report["files"][name] = {{"rows", stats.rows},
                             {"loaded", stats.loaded},
                             {"skipped", stats.skipped},
                             {"warnings", stats.warnings}};
  };

  std::optional<CivilDate> as_of;
  if (!config.as_of_date.empty()) as_of = parse_date(config.as_of_date);

  try {
    auto units_result = ingest::load_geounits(config.paths.geounits, config.paths.population,
                                              config.paths.acs, config.population_filter);
    record("geounits", units_result.stats);
    report["files"]["geounits"]["flagged_by_population_filter"] = units_result.flagged;
    report["files"]["geounits"]["unmatched_population_ids"] =
        units_result.unmatched_population_ids;
    report["files"]["geounits"]["unmatched_acs_ids"] = units_result.unmatched_acs_ids;

    ingest::LoadStats crime_stats;
    auto crimes = ingest::load_crimes(config.paths.crimes, crime_stats);
    record("crimes", crime_stats);

    ingest::LoadStats lot_stats;
    auto lots = ingest::load_lots(config.paths.lots, lot_stats);
    record("lots", lot_stats);

    ingest::LoadStats prop_stats;
    auto properties = ingest::load_properties(config.paths.properties, as_of, prop_stats);
    record("properties", prop_stats);
    if (!as_of) {
      CivilDate latest{1800, 1, 1};
      for (const auto& p : properties) latest = std::max(latest, p.last_sale_date);
      as_of = latest;
      log::info("as_of_date resolved to latest sale date ", to_string(latest));
    }

    ingest::LoadStats listing_stats;
    auto listings = ingest::load_listings(config.paths.listings, listing_stats);
    record("listings", listing_stats);

    auto category_map = ingest::load_category_map(config.paths.category_map);
    auto dedup = ingest::dedup_businesses(listings, category_map, config.dedup);
    report["dedup"] = {{"listings_in", dedup.listings_in},
                       {"businesses_out", dedup.businesses.size()},
                       {"merged_listings", dedup.merge_log.size()},
                       {"warnings", dedup.warnings.size()}};
    if (listings.empty()) log::warn("no listings loaded; business measures will be empty");

    // --- normalized bundle ---
    {
      auto out = open_out(bundle_dir(config) / "units.jsonl");
      for (const GeoUnit& u : units_result.units) {
        json j = {{"id", u.id},
                  {"level", to_string(u.level)},
                  {"area_m2", u.area_m2},
                  {"passes_filter", u.passes_population_filter},
                  {"geometry", ingest::geometry_to_geojson(u.shape)}};
        if (u.population) j["population"] = *u.population;
        if (u.per_capita_income) j["per_capita_income"] = *u.per_capita_income;
        if (u.poverty_brackets) j["brackets"] = *u.poverty_brackets;
        out << j.dump() << "\n";
      }
    }
    {
      auto out = open_out(bundle_dir(config) / "crimes.csv");
      csv::Writer w(out);
      w.row({"id", "datetime", "lat", "lon", "category"});
      for (const CrimeEvent& c : crimes) {
        w.row({c.id, to_string(c.when), fmt_double(c.where.lat), fmt_double(c.where.lon),
               to_string(c.category)});
      }
    }
    {
      auto out = open_out(bundle_dir(config) / "businesses.jsonl");
      for (const Business& b : dedup.businesses) {
        json types = json::array();
        for (BusinessType t : types_in(b.types)) types.push_back(to_string(t));
        json prov = json::array();
        for (const auto& [src, id] : b.provenance) {
          prov.push_back(json::array({to_string(src), id}));
        }
        json j = {{"id", b.id},     {"name", b.canonical_name}, {"lat", b.where.lat},
                  {"lon", b.where.lon}, {"types", types},       {"provenance", prov}};
        if (b.schedule) {
          json ivs = json::array();
          for (const auto& iv : b.schedule->intervals()) {
            ivs.push_back(json::array({iv.begin, iv.end}));
          }
          j["schedule"] = ivs;
        }
        out << j.dump() << "\n";
      }
    }
    {
      auto out = open_out(bundle_dir(config) / "lots.csv");
      csv::Writer w(out);
      w.row({"id", "lat", "lon", "area_m2", "zoning"});
      for (const LandLot& l : lots) {
        w.row({l.id, fmt_double(l.location.lat), fmt_double(l.location.lon),
               fmt_double(l.area_m2), to_string(l.zoning)});
      }
    }
    {
      auto out = open_out(bundle_dir(config) / "properties.csv");
      csv::Writer w(out);
      w.row({"id", "lat", "lon", "residential", "last_sale_date"});
      for (const PropertyRecord& p : properties) {
        w.row({p.id, fmt_double(p.where.lat), fmt_double(p.where.lon), p.residential ? "1" : "0",
               to_string(p.last_sale_date)});
      }
    }
    {
      auto out = open_out(out_dir(config) / "dedup_log.csv");
      csv::Writer w(out);
      w.row({"business_id", "absorbed_source", "absorbed_id", "kept_source", "kept_id"});
      for (const auto& entry : dedup.merge_log) {
        w.row({entry.business_id, to_string(entry.absorbed_source), entry.absorbed_id,
               to_string(entry.kept_source), entry.kept_id});
      }
    }

    report["counts"] = {{"units", units_result.units.size()},
                        {"crimes", crimes.size()},
                        {"lots", lots.size()},
                        {"properties", properties.size()},
                        {"listings", listings.size()},
                        {"businesses", dedup.businesses.size()}};
    open_out(out_dir(config) / "ingest_report.json") << report.dump(2) << "\n";
    write_manifest(config, "ingest",
                   json{{"as_of", to_string(*as_of)}, {"counts", report["counts"]}});
  } catch (const ValidationError&) {
    // Leave whatever report content we have for debugging, then surface.
    fs::create_directories(out_dir(config));
    open_out(out_dir(config) / "ingest_report.json") << report.dump(2) << "\n";
    throw;
  }
}

Dataset load_bundle(const RunConfig& config) {
  json manifest = require_manifest(config, "ingest");
  Dataset ds;
  auto as_of = parse_date(manifest.value("as_of", ""));
  if (!as_of) throw ValidationError("ingest manifest: missing as_of date");
  ds.as_of = *as_of;

  {
    std::ifstream in(bundle_dir(config) / "units.jsonl");
    if (!in) throw ValidationError("missing normalized units; rerun ingest");
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j = json::parse(line);
      GeoUnit u;
      u.id = j.at("id").get<std::string>();
      u.level = *unit_level_from_string(j.at("level").get<std::string>());
      u.area_m2 = j.at("area_m2").get<double>();
      u.passes_population_filter = j.at("passes_filter").get<bool>();
      u.shape = ingest::parse_geojson_geometry(j.at("geometry"), "unit " + u.id);
      if (j.contains("population")) u.population = j["population"].get<long long>();
      if (j.contains("per_capita_income")) u.per_capita_income = j["per_capita_income"].get<double>();
      if (j.contains("brackets")) u.poverty_brackets = j["brackets"].get<std::array<double, 7>>();
      ds.units.push_back(std::move(u));
    }
  }
  {
    ingest::LoadStats stats;
    ds.crimes = ingest::load_crimes(bundle_dir(config) / "crimes.csv", stats);
  }
  {
    std::ifstream in(bundle_dir(config) / "businesses.jsonl");
    if (!in) throw ValidationError("missing normalized businesses; rerun ingest");
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j = json::parse(line);
      Business b;
      b.id = j.at("id").get<std::string>();
      b.canonical_name = j.at("name").get<std::string>();
      b.where = {j.at("lon").get<double>(), j.at("lat").get<double>()};
      for (const auto& t : j.at("types")) {
        b.types |= mask_of(*business_type_from_string(t.get<std::string>()));
      }
      for (const auto& p : j.at("provenance")) {
        b.provenance.emplace_back(*source_from_string(p.at(0).get<std::string>()),
                                  p.at(1).get<std::string>());
      }
      if (j.contains("schedule")) {
        std::vector<hours::Interval> ivs;
        for (const auto& iv : j["schedule"]) {
          ivs.push_back({iv.at(0).get<int>(), iv.at(1).get<int>()});
        }
        b.schedule = hours::WeeklySchedule::from_intervals(std::move(ivs));
      }
      ds.businesses.push_back(std::move(b));
    }
  }
  {
    csv::Table t = csv::read_file(bundle_dir(config) / "lots.csv");
    for (const auto& row : t.rows) {
      LandLot lot;
      lot.id = row[0];
      lot.location = {*parse_double(row[2]), *parse_double(row[1])};
      lot.area_m2 = *parse_double(row[3]);
      auto z = zoning_from_raw(row[4]);
      if (!z) throw ValidationError("normalized lots.csv: bad zoning " + row[4]);
      lot.zoning = *z;
      ds.lots.push_back(std::move(lot));
    }
  }
  {
    ingest::LoadStats stats;
    ds.properties = ingest::load_properties(bundle_dir(config) / "properties.csv", ds.as_of, stats);
  }
  return ds;
}

std::map<std::string, reg::UnitCrimeCounts> count_crimes_by_unit(
    std::span<const GeoUnit> units, UnitLevel level, std::span<const CrimeEvent> crimes) {
  std::vector<geo::ShapeIndex::Entry> entries;
  std::vector<const GeoUnit*> selected;
  for (const GeoUnit& u : units) {
    if (u.level != level) continue;
    entries.push_back({u.id, u.shape, u.area_m2});
    selected.push_back(&u);
  }
  geo::ShapeIndex index = geo::ShapeIndex::build(std::move(entries));
  std::map<std::string, reg::UnitCrimeCounts> counts;
  for (const GeoUnit* u : selected) counts[u->id];  // zero rows for crime-free units
  for (const CrimeEvent& c : crimes) {
    auto hit = index.locate(c.where);
    if (!hit) continue;
    auto& cell = counts[index.entry(*hit).id];
    if (c.super == CrimeSuper::violent) {
      cell.violent += 1;
    } else {
      cell.non_violent += 1;
    }
  }
  return counts;
}

void run_metrics(const RunConfig& config) {
  config.validate();
  Dataset ds = load_bundle(config);

  auto rows = metrics::compute_unit_metrics(ds.units, ds.lots, config.poverty_weights);
  {
    auto out = open_out(out_dir(config) / "unit_metrics.csv");
    csv::Writer w(out);
    w.row({"unit_id", "level", "population", "population_density", "poverty", "vacant_prop",
           "comres_prop", "mixeduse_prop"});
    for (const auto& r : rows) {
      w.row({r.unit_id, to_string(r.level),
             r.population ? std::to_string(*r.population) : std::string(),
             opt_str(r.population_density), opt_str(r.poverty), opt_str(r.vacant_prop),
             opt_str(r.comres_prop), opt_str(r.mixeduse_prop)});
    }
  }

  {
    auto out = open_out(out_dir(config) / "consensus_hours.csv");
    csv::Writer w(out);
    w.row({"window", "business_type", "n", "consensus_hours"});
    for (const auto& window : config.windows) {
      auto consensus = metrics::ConsensusTable::compute(ds.businesses, window);
      for (BusinessType t : kAllBusinessTypes) {
        auto h = consensus.hours(t);
        w.row({window.name, to_string(t), std::to_string(consensus.count(t)), opt_str(h)});
      }
    }
  }

  if (!config.paths.locations.empty()) {
    require_path(config.paths.locations, "locations");
    csv::Table t = csv::read_file(config.paths.locations);
    metrics::VibrancyContext ctx(ds.businesses, ds.properties, ds.as_of);
    std::vector<metrics::ConsensusTable> consensus_by_window;
    for (const auto& window : config.windows) {
      consensus_by_window.push_back(metrics::ConsensusTable::compute(ds.businesses, window));
    }
    auto out = open_out(out_dir(config) / "vibrancy.csv");
    csv::Writer w(out);
    std::vector<std::string> header = {"location_id", "window", "radius_m"};
    for (BusinessType bt : kAllBusinessTypes) header.push_back("count_" + to_string(bt));
    for (BusinessType bt : kAllBusinessTypes) header.push_back("excess_hours_" + to_string(bt));
    header.push_back("tenure_years");
    w.row(header);
    for (const auto& row : t.rows) {
      if (row.size() < 3) throw ValidationError("locations file rows need id, lat, lon");
      auto lat = parse_double(row[1]);
      auto lon = parse_double(row[2]);
      if (!lat || !lon) throw ValidationError("locations file: bad coordinates for " + row[0]);
      geo::GeoPoint p{*lon, *lat};
      for (size_t wi = 0; wi < config.windows.size(); ++wi) {
        const auto& window = config.windows[wi];
        const auto& consensus = consensus_by_window[wi];
        auto v = ctx.at(p, config.vibrancy_radius_m, consensus, window);
        std::vector<std::string> fields = {row[0], window.name,
                                           fmt_double(config.vibrancy_radius_m)};
        for (int i = 0; i < kNumBusinessTypes; ++i) fields.push_back(std::to_string(v.counts[i]));
        for (int i = 0; i < kNumBusinessTypes; ++i) fields.push_back(opt_str(v.mean_excess_hours[i]));
        fields.push_back(opt_str(v.tenure_years));
        w.row(fields);
      }
    }
  }

  write_manifest(config, "metrics", json{{"units", rows.size()}});
}

void run_regress(const RunConfig& config) {
  config.validate();
  Dataset ds = load_bundle(config);
  auto counts = count_crimes_by_unit(ds.units, UnitLevel::block_group, ds.crimes);
  auto metrics_rows = metrics::compute_unit_metrics(ds.units, ds.lots, config.poverty_weights);

  std::vector<const GeoUnit*> groups;
  for (const GeoUnit& u : ds.units) {
    if (u.level == UnitLevel::block_group) groups.push_back(&u);
  }
  std::vector<GeoUnit> group_units;
  group_units.reserve(groups.size());
  for (const GeoUnit* u : groups) group_units.push_back(*u);

  {
    auto out = open_out(out_dir(config) / "excess_crime.csv");
    csv::Writer w(out);
    w.row({"unit_id", "model", "excess_violent", "excess_non_violent"});
    for (reg::ModelSpec spec : {reg::ModelSpec::pop, reg::ModelSpec::pop_income_poverty}) {
      auto excess =
          reg::excess_crime(group_units, counts, spec, config.poverty_weights, config.huber);
      if (!excess.violent_fit.converged || !excess.non_violent_fit.converged) {
        throw NumericalError("excess_crime: robust fit did not converge for model " +
                             to_string(spec));
      }
      for (const auto& r : excess.rows) {
        w.row({r.unit_id, to_string(spec), fmt_double(r.excess_violent),
               fmt_double(r.excess_non_violent)});
      }
    }
  }
  {
    auto rows = reg::association_report(group_units, counts, metrics_rows, config.poverty_weights,
                                        config.huber, config.association_min_n);
    auto out = open_out(out_dir(config) / "associations.csv");
    csv::Writer w(out);
    w.row({"predictor", "outcome", "r", "t", "n", "low_n"});
    for (const auto& r : rows) {
      w.row({r.predictor, r.outcome, fmt_double(r.r), fmt_double(r.t), std::to_string(r.n),
             r.low_n ? "1" : "0"});
    }
  }
  write_manifest(config, "regress", json{{"block_groups", group_units.size()}});
}

namespace {

void write_pair_rows(const fs::path& path, const std::vector<match::PairReportRow>& rows,
                     bool append, std::ofstream& out) {
  if (!append) {
    out = open_out(path);
    csv::Writer w(out);
    w.row({"study", "measure", "crime_type", "window", "n", "mean_diff", "t", "p_raw", "m",
           "significant"});
  }
  csv::Writer w(out);
  for (const auto& r : rows) {
    w.row({r.study, r.measure, r.crime_type, r.window, std::to_string(r.n), opt_str(r.mean_diff),
           opt_str(r.t), opt_str(r.p_raw), std::to_string(r.m), r.significant ? "1" : "0"});
  }
}

}  // namespace

void run_match(const RunConfig& config) {
  config.validate();
  Dataset ds = load_bundle(config);

  match::HighLowConfig hl;
  hl.windows = config.windows;
  hl.extreme.radius_m = config.vibrancy_radius_m;
  hl.extreme.grid_m = config.matching.grid_m;
  hl.extreme.min_separation_m = config.matching.high_low_min_separation_m;
  hl.business_level = config.matching.business_level;
  hl.landuse_level = config.matching.landuse_level;
  hl.alpha = config.matching.alpha;
  auto high_low_rows = match::study_high_low(ds.units, ds.crimes, ds.businesses, ds.properties,
                                             ds.lots, ds.as_of, hl);

  match::HoursStudyConfig hs;
  hs.windows = config.windows;
  hs.crime_radius_m = config.matching.hours_crime_radius_m;
  hs.min_separation_m = config.matching.hours_min_separation_m;
  hs.level = config.matching.hours_level;
  hs.alpha = config.matching.alpha;
  hs.short_quantile = config.matching.short_quantile;
  hs.long_quantile = config.matching.long_quantile;
  auto hours_rows = match::study_hours(ds.units, ds.crimes, ds.businesses, hs);

  fs::path path = out_dir(config) / "matched_pairs.csv";
  std::ofstream out;
  write_pair_rows(path, high_low_rows, false, out);
  write_pair_rows(path, hours_rows, true, out);
  write_manifest(config, "match",
                 json{{"rows", high_low_rows.size() + hours_rows.size()}});
}

void run_report(const RunConfig& config) {
  config.validate();
  require_manifest(config, "regress");
  require_manifest(config, "match");
  fs::path figures = out_dir(config) / "figures";
  fs::create_directories(figures);

  {
    csv::Table pairs = csv::read_file(out_dir(config) / "matched_pairs.csv");
    auto emit = [&](const std::string& file, const std::string& study) {
      auto out = open_out(figures / file);
      csv::Writer w(out);
      w.row(pairs.header);
      for (const auto& row : pairs.rows) {
        if (row[0] == study) w.row(row);
      }
    };
    emit("fig2_business_vibrancy.csv", "high_low_business");
    emit("fig3_landuse_tenure.csv", "high_low_landuse");
    emit("figS7_open_hours.csv", "open_hours");
  }
  {
    csv::Table assoc = csv::read_file(out_dir(config) / "associations.csv");
    auto emit = [&](const std::string& file, const std::vector<std::string>& predictors) {
      auto out = open_out(figures / file);
      csv::Writer w(out);
      w.row(assoc.header);
      for (const auto& row : assoc.rows) {
        if (std::find(predictors.begin(), predictors.end(), row[0]) != predictors.end()) {
          w.row(row);
        }
      }
    };
    emit("figS4_population.csv", {"pop_count", "pop_density"});
    emit("figS5_economic.csv", {"per_capita_income", "poverty"});
    emit("figS6_landuse.csv", {"vacant_prop", "mixeduse_prop", "comres_prop"});
  }
  write_manifest(config, "report", json::object());
}

}  // namespace urb::pipeline
