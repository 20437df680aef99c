#include "urb/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "urb/csv.hpp"
#include "urb/error.hpp"
#include "urb/log.hpp"
#include "urb/util.hpp"

namespace urb::ingest {

using nlohmann::json;

void LoadStats::skip(size_t line, const std::string& why) {
  ++skipped;
  if (warnings.size() < 50) {
    warnings.push_back(file + " line " + std::to_string(line) + ": " + why);
  }
}

void LoadStats::enforce_skip_budget(double max_skip_frac) const {
  if (rows == 0) return;
  double frac = static_cast<double>(skipped) / static_cast<double>(rows);
  if (frac > max_skip_frac) {
    throw ValidationError(file + ": " + std::to_string(skipped) + " of " + std::to_string(rows) +
                          " records skipped (over the " + std::to_string(max_skip_frac * 100) +
                          "% budget); first: " + (warnings.empty() ? "?" : warnings.front()));
  }
}

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  return j;
}

geo::Ring parse_ring(const json& coords, const std::string& what) {
  geo::Ring ring;
  if (!coords.is_array() || coords.size() < 4) {
    throw ValidationError(what + ": ring must be an array of at least 4 positions");
  }
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw ValidationError(what + ": position must be [lon, lat]");
    }
    ring.pts.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

geo::GeoPolygon parse_polygon_coords(const json& coords, const std::string& what) {
  if (!coords.is_array() || coords.empty()) {
    throw ValidationError(what + ": polygon needs at least an exterior ring");
  }
  geo::GeoPolygon poly;
  poly.exterior = parse_ring(coords[0], what);
  for (size_t i = 1; i < coords.size(); ++i) {
    poly.holes.push_back(parse_ring(coords[i], what));
  }
  return poly;
}

// Column lookup by (case-insensitive) header name.
size_t column(const csv::Table& t, const std::string& name, const std::string& file) {
  for (size_t i = 0; i < t.header.size(); ++i) {
    if (to_lower_ascii(trim(t.header[i])) == name) return i;
  }
  throw ValidationError(file + ": missing required column '" + name + "'");
}

std::optional<geo::GeoPoint> parse_point_fields(const std::string& lat_s,
                                                const std::string& lon_s) {
  auto lat = parse_double(lat_s);
  auto lon = parse_double(lon_s);
  if (!lat || !lon) return std::nullopt;
  geo::GeoPoint p{*lon, *lat};
  if (!geo::valid(p)) return std::nullopt;
  return p;
}

}  // namespace

geo::GeoShape parse_geojson_geometry(const json& geom, const std::string& what) {
  if (!geom.is_object() || !geom.contains("type")) {
    throw ValidationError(what + ": missing geometry type");
  }
  std::string type = geom["type"].get<std::string>();
  geo::GeoShape shape;
  if (type == "Polygon") {
    shape.parts.push_back(parse_polygon_coords(geom.at("coordinates"), what));
  } else if (type == "MultiPolygon") {
    for (const auto& part : geom.at("coordinates")) {
      shape.parts.push_back(parse_polygon_coords(part, what));
    }
  } else {
    throw ValidationError(what + ": unsupported geometry type '" + type + "'");
  }
  geo::validate_shape(shape, what);
  return shape;
}

json geometry_to_geojson(const geo::GeoShape& shape) {
  auto ring_json = [](const geo::Ring& r) {
    json arr = json::array();
    for (const auto& p : r.pts) arr.push_back(json::array({p.lon, p.lat}));
    return arr;
  };
  auto poly_json = [&](const geo::GeoPolygon& poly) {
    json arr = json::array();
    arr.push_back(ring_json(poly.exterior));
    for (const auto& h : poly.holes) arr.push_back(ring_json(h));
    return arr;
  };
  if (shape.parts.size() == 1) {
    return json{{"type", "Polygon"}, {"coordinates", poly_json(shape.parts[0])}};
  }
  json coords = json::array();
  for (const auto& part : shape.parts) coords.push_back(poly_json(part));
  return json{{"type", "MultiPolygon"}, {"coordinates", coords}};
}

GeoUnitsResult load_geounits(const std::filesystem::path& geojson_path,
                             const std::filesystem::path& population_csv,
                             const std::filesystem::path& acs_csv,
                             const PopulationFilter& filter) {
  GeoUnitsResult result;
  result.stats.file = geojson_path.string();

  json root = load_json_file(geojson_path);
  if (!root.contains("features") || !root["features"].is_array()) {
    throw ValidationError(geojson_path.string() + ": not a FeatureCollection");
  }
  std::unordered_map<std::string, size_t> by_id;
  size_t feature_idx = 0;
  for (const auto& feature : root["features"]) {
    std::string what = geojson_path.filename().string() + " feature " + std::to_string(feature_idx);
    ++feature_idx;
    if (!feature.contains("properties") || !feature["properties"].is_object()) {
      throw ValidationError(what + ": missing properties");
    }
    const auto& props = feature["properties"];
    if (!props.contains("id") || !props.contains("level")) {
      throw ValidationError(what + ": properties need 'id' and 'level'");
    }
    GeoUnit unit;
    unit.id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
    auto level = unit_level_from_string(props["level"].get<std::string>());
    if (!level) {
      throw ValidationError(what + ": unknown level '" + props["level"].dump() + "'");
    }
    unit.level = *level;
    unit.shape = parse_geojson_geometry(feature.at("geometry"), what + " (id " + unit.id + ")");
    if (props.contains("area_m2") && props["area_m2"].is_number()) {
      unit.area_m2 = props["area_m2"].get<double>();
    } else {
      unit.area_m2 = geo::planar_area_m2(unit.shape);
    }
    if (!(unit.area_m2 > 0)) {
      throw ValidationError(what + ": unit " + unit.id + " has non-positive area");
    }
    if (by_id.count(unit.id)) {
      throw ValidationError(what + ": duplicate unit id '" + unit.id + "'");
    }
    by_id[unit.id] = result.units.size();
    result.units.push_back(std::move(unit));
    ++result.stats.rows;
  }

  // Population join.
  {
    csv::Table t = csv::read_file(population_csv);
    size_t c_id = column(t, "id", population_csv.string());
    size_t c_pop = column(t, "population", population_csv.string());
    for (size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      std::string where = population_csv.string() + " line " + std::to_string(t.row_lines[r]);
      if (row.size() <= std::max(c_id, c_pop)) {
        throw ValidationError(where + ": too few fields");
      }
      auto pop = parse_int(row[c_pop]);
      if (!pop || *pop < 0) {
        throw ValidationError(where + ": bad population '" + row[c_pop] + "'");
      }
      auto it = by_id.find(row[c_id]);
      if (it == by_id.end()) {
        result.unmatched_population_ids.push_back(row[c_id]);
        continue;
      }
      result.units[it->second].population = *pop;
    }
    if (t.rows.empty()) {
      result.stats.warnings.push_back(population_csv.string() +
                                      ": empty population file, all units flagged");
      log::warn("empty population file ", population_csv.string(), "; all units flagged");
    }
  }

  // ACS economics join (block groups).
  {
    csv::Table t = csv::read_file(acs_csv);
    size_t c_id = column(t, "id", acs_csv.string());
    size_t c_inc = column(t, "per_capita_income", acs_csv.string());
    std::array<size_t, 7> c_b{};
    for (int q = 0; q < 7; ++q) {
      c_b[q] = column(t, "b" + std::to_string(q + 1), acs_csv.string());
    }
    for (size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      std::string where = acs_csv.string() + " line " + std::to_string(t.row_lines[r]);
      auto it = by_id.find(row[c_id]);
      if (it == by_id.end()) {
        result.unmatched_acs_ids.push_back(row[c_id]);
        continue;
      }
      auto income = parse_double(row[c_inc]);
      if (!income) throw ValidationError(where + ": bad per_capita_income");
      std::array<double, 7> brackets{};
      double sum = 0;
      for (int q = 0; q < 7; ++q) {
        auto v = parse_double(row[c_b[q]]);
        if (!v || *v < 0) {
          throw ValidationError(where + ": bad bracket proportion b" + std::to_string(q + 1));
        }
        brackets[q] = *v;
        sum += *v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError(where + ": bracket proportions sum to " + fmt_double(sum) +
                              ", expected 1");
      }
      GeoUnit& unit = result.units[it->second];
      unit.per_capita_income = *income;
      unit.poverty_brackets = brackets;
    }
  }

  for (GeoUnit& unit : result.units) {
    long long threshold =
        unit.level == UnitLevel::block ? filter.block_min : filter.block_group_min;
    unit.passes_population_filter = unit.population.has_value() && *unit.population >= threshold;
    if (!unit.passes_population_filter) ++result.flagged;
    ++result.stats.loaded;
  }
  if (!result.unmatched_population_ids.empty()) {
    result.stats.warnings.push_back(std::to_string(result.unmatched_population_ids.size()) +
                                    " population ids not present in the geometry file");
  }
  if (!result.unmatched_acs_ids.empty()) {
    result.stats.warnings.push_back(std::to_string(result.unmatched_acs_ids.size()) +
                                    " acs ids not present in the geometry file");
  }
  return result;
}

std::vector<CrimeEvent> load_crimes(const std::filesystem::path& csv_path, LoadStats& stats) {
  stats.file = csv_path.string();
  csv::Table t = csv::read_file(csv_path);
  size_t c_id = column(t, "id", stats.file);
  size_t c_dt = column(t, "datetime", stats.file);
  size_t c_lat = column(t, "lat", stats.file);
  size_t c_lon = column(t, "lon", stats.file);
  size_t c_cat = column(t, "category", stats.file);
  std::vector<CrimeEvent> out;
  out.reserve(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ++stats.rows;
    size_t line = t.row_lines[r];
    if (row.size() <= std::max({c_id, c_dt, c_lat, c_lon, c_cat})) {
      stats.skip(line, "too few fields");
      continue;
    }
    auto when = parse_datetime(row[c_dt]);
    if (!when) {
      stats.skip(line, "bad datetime '" + row[c_dt] + "'");
      continue;
    }
    auto where = parse_point_fields(row[c_lat], row[c_lon]);
    if (!where) {
      stats.skip(line, "bad coordinates");
      continue;
    }
    auto cat = crime_category_from_string(row[c_cat]);
    if (!cat) {
      stats.skip(line, "unknown category '" + row[c_cat] + "'");
      continue;
    }
    CrimeEvent ev;
    ev.id = row[c_id];
    ev.when = *when;
    ev.where = *where;
    ev.category = *cat;
    ev.super = super_of(*cat);
    ev.week_minute = minute_of_week(*when);
    out.push_back(std::move(ev));
    ++stats.loaded;
  }
  stats.enforce_skip_budget();
  return out;
}

std::vector<LandLot> load_lots(const std::filesystem::path& geojson_path, LoadStats& stats) {
  stats.file = geojson_path.string();
  json root = load_json_file(geojson_path);
  if (!root.contains("features") || !root["features"].is_array()) {
    throw ValidationError(stats.file + ": not a FeatureCollection");
  }
  std::vector<LandLot> out;
  size_t idx = 0;
  for (const auto& feature : root["features"]) {
    size_t feature_no = idx++;
    ++stats.rows;
    const auto props_it = feature.find("properties");
    if (props_it == feature.end() || !props_it->is_object() || !props_it->contains("id") ||
        !props_it->contains("zoning")) {
      stats.skip(feature_no, "missing id/zoning properties");
      continue;
    }
    const auto& props = *props_it;
    auto zoning = zoning_from_raw(props["zoning"].get<std::string>());
    if (!zoning) {
      stats.skip(feature_no, "unknown zoning '" + props["zoning"].get<std::string>() + "'");
      continue;
    }
    LandLot lot;
    lot.id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
    lot.zoning = *zoning;
    const auto geom_it = feature.find("geometry");
    if (geom_it == feature.end()) {
      stats.skip(feature_no, "missing geometry");
      continue;
    }
    try {
      if (geom_it->value("type", "") == "Point") {
        const auto& coords = geom_it->at("coordinates");
        lot.location = {coords.at(0).get<double>(), coords.at(1).get<double>()};
        if (!geo::valid(lot.location)) throw ValidationError("coordinates out of range");
        if (!props.contains("area_m2") || !props["area_m2"].is_number()) {
          stats.skip(feature_no, "point lot without area_m2");
          continue;
        }
        lot.area_m2 = props["area_m2"].get<double>();
      } else {
        geo::GeoShape shape = parse_geojson_geometry(*geom_it, "lot " + lot.id);
        lot.location = geo::shape_centroid(shape);
        // The registered area wins when the dataset carries it.
        lot.area_m2 = props.contains("area_m2") && props["area_m2"].is_number()
                          ? props["area_m2"].get<double>()
                          : geo::planar_area_m2(shape);
      }
    } catch (const ValidationError& e) {
      stats.skip(feature_no, e.what());
      continue;
    }
    if (!(lot.area_m2 > 0)) {
      stats.skip(feature_no, "non-positive lot area");
      continue;
    }
    out.push_back(std::move(lot));
    ++stats.loaded;
  }
  stats.enforce_skip_budget();
  return out;
}

std::vector<PropertyRecord> load_properties(const std::filesystem::path& csv_path,
                                            const std::optional<CivilDate>& as_of,
                                            LoadStats& stats) {
  stats.file = csv_path.string();
  csv::Table t = csv::read_file(csv_path);
  size_t c_id = column(t, "id", stats.file);
  size_t c_lat = column(t, "lat", stats.file);
  size_t c_lon = column(t, "lon", stats.file);
  size_t c_res = column(t, "residential", stats.file);
  size_t c_date = column(t, "last_sale_date", stats.file);
  std::vector<PropertyRecord> out;
  out.reserve(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ++stats.rows;
    size_t line = t.row_lines[r];
    if (row.size() <= std::max({c_id, c_lat, c_lon, c_res, c_date})) {
      stats.skip(line, "too few fields");
      continue;
    }
    auto where = parse_point_fields(row[c_lat], row[c_lon]);
    if (!where) {
      stats.skip(line, "bad coordinates");
      continue;
    }
    std::string res = std::string(trim(row[c_res]));
    if (res != "0" && res != "1") {
      stats.skip(line, "residential must be 0 or 1");
      continue;
    }
    auto sale = parse_date(row[c_date]);
    if (!sale) {
      stats.skip(line, "bad last_sale_date '" + row[c_date] + "'");
      continue;
    }
    if (as_of && *sale > *as_of) {
      stats.skip(line, "last_sale_date after the ingestion date");
      continue;
    }
    out.push_back({row[c_id], *where, res == "1", *sale});
    ++stats.loaded;
  }
  stats.enforce_skip_budget();
  return out;
}

std::vector<RawListing> load_listings(const std::filesystem::path& jsonl_path, LoadStats& stats) {
  stats.file = jsonl_path.string();
  std::ifstream in(jsonl_path);
  if (!in) throw ValidationError("cannot open " + jsonl_path.string());
  std::vector<RawListing> out;
  std::set<std::pair<Source, std::string>> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++stats.rows;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      stats.skip(line_no, "invalid JSON");
      continue;
    }
    RawListing l;
    auto src = j.contains("source") && j["source"].is_string()
                   ? source_from_string(j["source"].get<std::string>())
                   : std::nullopt;
    if (!src) {
      stats.skip(line_no, "missing/unknown source");
      continue;
    }
    l.source = *src;
    if (!j.contains("source_id") || !j["source_id"].is_string() ||
        j["source_id"].get<std::string>().empty()) {
      stats.skip(line_no, "missing source_id");
      continue;
    }
    l.source_id = j["source_id"].get<std::string>();
    if (!seen.insert({l.source, l.source_id}).second) {
      stats.skip(line_no, "duplicate (source, source_id) " + to_string(l.source) + ":" + l.source_id);
      continue;
    }
    l.name = j.value("name", "");
    if (!j.contains("lat") || !j.contains("lon") || !j["lat"].is_number() || !j["lon"].is_number()) {
      stats.skip(line_no, "missing coordinates");
      continue;
    }
    l.where = {j["lon"].get<double>(), j["lat"].get<double>()};
    if (!geo::valid(l.where)) {
      stats.skip(line_no, "coordinates out of range");
      continue;
    }
    if (j.contains("categories") && j["categories"].is_array()) {
      for (const auto& c : j["categories"]) {
        if (c.is_string()) l.raw_categories.push_back(c.get<std::string>());
      }
    }
    if (j.contains("hours") && j["hours"].is_object()) {
      std::map<std::string, std::vector<std::string>> per_day;
      for (const auto& [day, val] : j["hours"].items()) {
        std::vector<std::string>& tokens = per_day[day];
        if (val.is_string()) {
          tokens.push_back(val.get<std::string>());
        } else if (val.is_array()) {
          for (const auto& tok : val) {
            if (tok.is_string()) tokens.push_back(tok.get<std::string>());
          }
        }
      }
      l.hours_text = std::move(per_day);
    }
    out.push_back(std::move(l));
    ++stats.loaded;
  }
  stats.enforce_skip_budget();
  return out;
}

CategoryMap load_category_map(const std::filesystem::path& csv_path) {
  csv::Table t = csv::read_file(csv_path);
  size_t c_raw = column(t, "raw_category", csv_path.string());
  size_t c_type = column(t, "business_type", csv_path.string());
  CategoryMap map;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::string where = csv_path.string() + " line " + std::to_string(t.row_lines[r]);
    if (row.size() <= std::max(c_raw, c_type)) throw ValidationError(where + ": too few fields");
    auto type = business_type_from_string(row[c_type]);
    if (!type) throw ValidationError(where + ": unknown business_type '" + row[c_type] + "'");
    map[to_lower_ascii(trim(row[c_raw]))] |= mask_of(*type);
  }
  return map;
}

TypeMask map_categories(const std::vector<std::string>& raw_categories, const CategoryMap& map,
                        std::vector<std::string>* warnings) {
  TypeMask mask = 0;
  for (const std::string& raw : raw_categories) {
    auto it = map.find(to_lower_ascii(trim(raw)));
    if (it != map.end()) {
      mask |= it->second;
    } else if (warnings) {
      warnings->push_back("unmapped category '" + raw + "'");
    }
  }
  if (mask == 0) {
    if (warnings) warnings->push_back("no mapped categories; defaulting to Institution");
    mask = mask_of(BusinessType::institution);
  }
  return mask;
}

namespace {

// ASCII fold for the Latin-1 supplement and Latin Extended-A blocks; anything
// else non-alphanumeric becomes a space.
void append_folded(std::string& out, char32_t cp) {
  // Apostrophes vanish ("Joe's" == "Joes"); other punctuation separates.
  if (cp == '\'' || cp == 0x2019 || cp == 0x02BC) return;
  if (cp < 0x80) {
    char c = static_cast<char>(cp);
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      out.push_back(' ');
    }
    return;
  }
  if (cp >= 0x00C0 && cp <= 0x00FF) {
    static const char* kLatin1[64] = {
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
        "d", "n", "o", "o", "o", "o", "o", " ", "o", "u", "u", "u", "u", "y", "th", "ss",
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
        "d", "n", "o", "o", "o", "o", "o", " ", "o", "u", "u", "u", "u", "y", "th", "y"};
    out += kLatin1[cp - 0x00C0];
    return;
  }
  if (cp == 0x0132 || cp == 0x0133) {
    out += "ij";
    return;
  }
  if (cp == 0x0152 || cp == 0x0153) {
    out += "oe";
    return;
  }
  if (cp >= 0x0100 && cp <= 0x017F) {
    // One base letter per codepoint; the IJ/OE ligatures are special-cased
    // above and hold placeholders here.
    static const char kExtA[129] =
        "aaaaaa"          // 0x100 A-ogonek family
        "cccccccc"        // 0x106
        "dddd"            // 0x10E
        "eeeeeeeeee"      // 0x112
        "gggggggg"        // 0x11C
        "hhhh"            // 0x124
        "iiiiiiiiii"      // 0x128
        "ii"              // 0x132 (ligature, handled above)
        "jj"              // 0x134
        "kkk"             // 0x136
        "llllllllll"      // 0x139
        "nnnnnnnnn"       // 0x143
        "oooooo"          // 0x14C
        "oo"              // 0x152 (ligature, handled above)
        "rrrrrr"          // 0x154
        "ssssssss"        // 0x15A
        "tttttt"          // 0x162
        "uuuuuuuuuuuu"    // 0x168
        "ww"              // 0x174
        "yyy"             // 0x176
        "zzzzzz"          // 0x179
        "s";              // 0x17F long s
    out.push_back(kExtA[cp - 0x0100]);
    return;
  }
  out.push_back(' ');
}

}  // namespace

std::string normalize_name(std::string_view name) {
  std::string folded;
  folded.reserve(name.size());
  size_t i = 0;
  while (i < name.size()) {
    unsigned char c = static_cast<unsigned char>(name[i]);
    char32_t cp = 0;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < name.size()) {
      cp = (static_cast<char32_t>(c & 0x1F) << 6) | (name[i + 1] & 0x3F);
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < name.size()) {
      cp = (static_cast<char32_t>(c & 0x0F) << 12) |
           (static_cast<char32_t>(name[i + 1] & 0x3F) << 6) | (name[i + 2] & 0x3F);
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < name.size()) {
      cp = 0x10000;  // outside anything we fold; treated as a separator
      len = 4;
    } else {
      cp = ' ';
    }
    append_folded(folded, cp);
    i += len;
  }
  // Collapse runs of spaces.
  std::string out;
  out.reserve(folded.size());
  bool pending = false;
  for (char c : folded) {
    if (c == ' ') {
      pending = !out.empty();
      continue;
    }
    if (pending) {
      out.push_back(' ');
      pending = false;
    }
    out.push_back(c);
  }
  return out;
}

double token_jaccard(const std::string& norm_a, const std::string& norm_b) {
  std::set<std::string> a, b;
  for (const auto& tok : split(norm_a, ' ')) {
    if (!tok.empty()) a.insert(tok);
  }
  for (const auto& tok : split(norm_b, ' ')) {
    if (!tok.empty()) b.insert(tok);
  }
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  size_t inter = 0;
  for (const auto& tok : a) inter += b.count(tok);
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::pair<int, std::string> listing_key(const RawListing& l) {
  return {static_cast<int>(l.source), l.source_id};
}

}  // namespace

DedupResult dedup_businesses(const std::vector<RawListing>& listings, const CategoryMap& map,
                             const DedupParams& params) {
  DedupResult result;
  result.listings_in = listings.size();
  const size_t n = listings.size();

  std::vector<std::string> norm(n);
  std::vector<geo::GeoPoint> pts(n);
  for (size_t i = 0; i < n; ++i) {
    norm[i] = normalize_name(listings[i].name);
    pts[i] = listings[i].where;
  }

  geo::PointIndex idx = geo::PointIndex::build(pts);
  UnionFind uf(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j : idx.radius_query(pts[i], params.max_distance_m)) {
      if (j <= i) continue;
      if (token_jaccard(norm[i], norm[j]) >= params.min_jaccard) {
        uf.unite(i, j);
      }
    }
  }

  // Components ordered by their smallest (source, source_id) member so the
  // result is invariant under input permutation.
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> comps;
  for (std::uint32_t i = 0; i < n; ++i) comps[uf.find(i)].push_back(i);
  std::vector<std::vector<std::uint32_t>> clusters;
  clusters.reserve(comps.size());
  for (auto& [root, members] : comps) {
    std::sort(members.begin(), members.end(), [&](std::uint32_t a, std::uint32_t b) {
      return listing_key(listings[a]) < listing_key(listings[b]);
    });
    clusters.push_back(std::move(members));
  }
  std::sort(clusters.begin(), clusters.end(),
            [&](const auto& a, const auto& b) {
              return listing_key(listings[a.front()]) < listing_key(listings[b.front()]);
            });

  result.businesses.reserve(clusters.size());
  char idbuf[32];
  for (size_t c = 0; c < clusters.size(); ++c) {
    const auto& members = clusters[c];
    Business b;
    std::snprintf(idbuf, sizeof(idbuf), "B%06zu", c + 1);
    b.id = idbuf;
    b.canonical_name = listings[members.front()].name;

    double lon = 0, lat = 0;
    int best_minutes = -1;
    for (std::uint32_t m : members) {
      const RawListing& l = listings[m];
      lon += l.where.lon;
      lat += l.where.lat;
      b.types |= map_categories(l.raw_categories, map, &result.warnings);
      b.provenance.emplace_back(l.source, l.source_id);
      if (l.hours_text) {
        std::string err;
        auto sched = hours::parse_hours(*l.hours_text, &err);
        if (!sched) {
          result.warnings.push_back("listing " + to_string(l.source) + ":" + l.source_id + ": " +
                                    err + "; schedule dropped");
        } else if (sched->total_minutes() > best_minutes) {
          best_minutes = sched->total_minutes();
          b.schedule = std::move(sched);
        }
      }
    }
    b.where = {lon / static_cast<double>(members.size()), lat / static_cast<double>(members.size())};
    std::sort(b.provenance.begin(), b.provenance.end());
    if (members.size() > 1) {
      const RawListing& kept = listings[members.front()];
      for (size_t m = 1; m < members.size(); ++m) {
        const RawListing& l = listings[members[m]];
        result.merge_log.push_back({b.id, l.source, l.source_id, kept.source, kept.source_id});
      }
    }
    result.businesses.push_back(std::move(b));
  }
  return result;
}

}  // namespace urb::ingest
