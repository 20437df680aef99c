#include "urb/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "urb/error.hpp"
#include "urb/util.hpp"

namespace urb {

using nlohmann::json;

void RunConfig::validate() const {
  if (vibrancy_radius_m <= 0 || matching.grid_m <= 0 || matching.hours_crime_radius_m <= 0) {
    throw ValidationError("config: radii and grid spacing must be positive");
  }
  if (matching.high_low_min_separation_m <= 0 || matching.hours_min_separation_m <= 0) {
    throw ValidationError("config: separations must be positive");
  }
  if (population_filter.block_min < 0 || population_filter.block_group_min < 0) {
    throw ValidationError("config: population thresholds must be non-negative");
  }
  if (dedup.min_jaccard < 0 || dedup.min_jaccard > 1 || dedup.max_distance_m <= 0) {
    throw ValidationError("config: dedup thresholds out of range");
  }
  if (huber.k <= 0 || huber.tol <= 0 || huber.max_iter < 1) {
    throw ValidationError("config: bad robust-regression parameters");
  }
  if (matching.alpha <= 0 || matching.alpha >= 1) {
    throw ValidationError("config: alpha must be in (0, 1)");
  }
  if (!(matching.short_quantile < matching.long_quantile)) {
    throw ValidationError("config: short_quantile must be below long_quantile");
  }
  if (timezone.empty()) throw ValidationError("config: timezone must be set");
  if (!as_of_date.empty() && !parse_date(as_of_date)) {
    throw ValidationError("config: bad as_of_date '" + as_of_date + "'");
  }
  poverty_weights.validate();
  for (const auto& w : windows) {
    if (w.name.empty()) throw ValidationError("config: window without a name");
    for (const auto& iv : w.intervals) {
      if (iv.begin < 0 || iv.end > hours::kMinutesPerWeek || iv.begin >= iv.end) {
        throw ValidationError("config: window '" + w.name + "' has an out-of-range interval");
      }
    }
  }
}

RunConfig default_config() {
  RunConfig c;
  c.windows = {hours::whole_week(), hours::weekday_evenings(), hours::weekend_nights()};
  return c;
}

json to_json(const RunConfig& c) {
  json windows = json::array();
  for (const auto& w : c.windows) {
    json ivs = json::array();
    for (const auto& iv : w.intervals) ivs.push_back(json::array({iv.begin, iv.end}));
    windows.push_back({{"name", w.name}, {"intervals", ivs}});
  }
  return json{
      {"paths",
       {{"geounits", c.paths.geounits},
        {"population", c.paths.population},
        {"acs", c.paths.acs},
        {"crimes", c.paths.crimes},
        {"lots", c.paths.lots},
        {"properties", c.paths.properties},
        {"listings", c.paths.listings},
        {"category_map", c.paths.category_map},
        {"locations", c.paths.locations},
        {"out_dir", c.paths.out_dir}}},
      {"timezone", c.timezone},
      {"as_of_date", c.as_of_date},
      {"population_filter",
       {{"block_min", c.population_filter.block_min},
        {"block_group_min", c.population_filter.block_group_min}}},
      {"dedup",
       {{"min_jaccard", c.dedup.min_jaccard}, {"max_distance_m", c.dedup.max_distance_m}}},
      {"huber",
       {{"k", c.huber.k},
        {"tol", c.huber.tol},
        {"max_iter", c.huber.max_iter},
        {"mad_factor", c.huber.mad_factor}}},
      {"poverty_weights", c.poverty_weights.w},
      {"association_min_n", c.association_min_n},
      {"vibrancy_radius_m", c.vibrancy_radius_m},
      {"matching",
       {{"grid_m", c.matching.grid_m},
        {"high_low_min_separation_m", c.matching.high_low_min_separation_m},
        {"hours_crime_radius_m", c.matching.hours_crime_radius_m},
        {"hours_min_separation_m", c.matching.hours_min_separation_m},
        {"business_level", to_string(c.matching.business_level)},
        {"landuse_level", to_string(c.matching.landuse_level)},
        {"hours_level", to_string(c.matching.hours_level)},
        {"alpha", c.matching.alpha},
        {"short_quantile", c.matching.short_quantile},
        {"long_quantile", c.matching.long_quantile}}},
      {"windows", windows}};
}

namespace {

UnitLevel level_from_json(const json& j, const std::string& key) {
  auto level = unit_level_from_string(j.get<std::string>());
  if (!level) throw ValidationError("config: bad unit level for " + key);
  return *level;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c = default_config();
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    c.paths.geounits = p.value("geounits", c.paths.geounits);
    c.paths.population = p.value("population", c.paths.population);
    c.paths.acs = p.value("acs", c.paths.acs);
    c.paths.crimes = p.value("crimes", c.paths.crimes);
    c.paths.lots = p.value("lots", c.paths.lots);
    c.paths.properties = p.value("properties", c.paths.properties);
    c.paths.listings = p.value("listings", c.paths.listings);
    c.paths.category_map = p.value("category_map", c.paths.category_map);
    c.paths.locations = p.value("locations", c.paths.locations);
    c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
  }
  c.timezone = j.value("timezone", c.timezone);
  c.as_of_date = j.value("as_of_date", c.as_of_date);
  if (j.contains("population_filter")) {
    const auto& f = j["population_filter"];
    c.population_filter.block_min = f.value("block_min", c.population_filter.block_min);
    c.population_filter.block_group_min =
        f.value("block_group_min", c.population_filter.block_group_min);
  }
  if (j.contains("dedup")) {
    const auto& d = j["dedup"];
    c.dedup.min_jaccard = d.value("min_jaccard", c.dedup.min_jaccard);
    c.dedup.max_distance_m = d.value("max_distance_m", c.dedup.max_distance_m);
  }
  if (j.contains("huber")) {
    const auto& h = j["huber"];
    c.huber.k = h.value("k", c.huber.k);
    c.huber.tol = h.value("tol", c.huber.tol);
    c.huber.max_iter = h.value("max_iter", c.huber.max_iter);
    c.huber.mad_factor = h.value("mad_factor", c.huber.mad_factor);
  }
  if (j.contains("poverty_weights")) {
    auto w = j["poverty_weights"].get<std::vector<double>>();
    if (w.size() != 7) throw ValidationError("config: poverty_weights needs 7 entries");
    std::copy(w.begin(), w.end(), c.poverty_weights.w.begin());
  }
  c.association_min_n = j.value("association_min_n", c.association_min_n);
  c.vibrancy_radius_m = j.value("vibrancy_radius_m", c.vibrancy_radius_m);
  if (j.contains("matching")) {
    const auto& m = j["matching"];
    c.matching.grid_m = m.value("grid_m", c.matching.grid_m);
    c.matching.high_low_min_separation_m =
        m.value("high_low_min_separation_m", c.matching.high_low_min_separation_m);
    c.matching.hours_crime_radius_m =
        m.value("hours_crime_radius_m", c.matching.hours_crime_radius_m);
    c.matching.hours_min_separation_m =
        m.value("hours_min_separation_m", c.matching.hours_min_separation_m);
    if (m.contains("business_level")) {
      c.matching.business_level = level_from_json(m["business_level"], "business_level");
    }
    if (m.contains("landuse_level")) {
      c.matching.landuse_level = level_from_json(m["landuse_level"], "landuse_level");
    }
    if (m.contains("hours_level")) {
      c.matching.hours_level = level_from_json(m["hours_level"], "hours_level");
    }
    c.matching.alpha = m.value("alpha", c.matching.alpha);
    c.matching.short_quantile = m.value("short_quantile", c.matching.short_quantile);
    c.matching.long_quantile = m.value("long_quantile", c.matching.long_quantile);
  }
  if (j.contains("windows")) {
    c.windows.clear();
    for (const auto& wj : j["windows"]) {
      hours::TimeWindow w;
      w.name = wj.at("name").get<std::string>();
      for (const auto& iv : wj.at("intervals")) {
        w.intervals.push_back({iv.at(0).get<int>(), iv.at(1).get<int>()});
      }
      c.windows.push_back(std::move(w));
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << to_json(config).dump(2) << "\n";
}

std::string config_hash(const RunConfig& config) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

void apply_override(json& config_json, const std::string& key_eq_value) {
  auto eq = key_eq_value.find('=');
  if (eq == std::string::npos) {
    throw UsageError("override must look like key.path=value: " + key_eq_value);
  }
  std::string path = key_eq_value.substr(0, eq);
  std::string value = key_eq_value.substr(eq + 1);
  json* node = &config_json;
  for (const auto& part : split(path, '.')) {
    if (part.empty()) throw UsageError("bad override path: " + path);
    node = &(*node)[part];
  }
  json parsed = json::parse(value, nullptr, false);
  *node = parsed.is_discarded() ? json(value) : parsed;
}

}  // namespace urb
