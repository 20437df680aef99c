#include "urb/synth.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urb/domain.hpp"
#include "urb/error.hpp"
#include "urb/ingest.hpp"
#include "urb/metrics.hpp"
#include "urb/rng.hpp"
#include "urb/util.hpp"

namespace urb::synth {

using nlohmann::json;

namespace {

constexpr double kDegPerMeterLat = 180.0 / (std::numbers::pi * geo::kEarthRadiusM);

struct Frame {
  double origin_lon, origin_lat, deg_per_m_lon, deg_per_m_lat;

  static Frame of(const SynthSpec& spec) {
    double coslat = std::cos(spec.origin_lat * std::numbers::pi / 180.0);
    return {spec.origin_lon, spec.origin_lat, kDegPerMeterLat / coslat, kDegPerMeterLat};
  }

  geo::GeoPoint at(double x_m, double y_m) const {
    return {origin_lon + x_m * deg_per_m_lon, origin_lat + y_m * deg_per_m_lat};
  }
};

geo::GeoShape square(const Frame& f, double x0, double y0, double side) {
  geo::Ring ring;
  ring.pts = {f.at(x0, y0), f.at(x0 + side, y0), f.at(x0 + side, y0 + side),
              f.at(x0, y0 + side), f.at(x0, y0)};
  geo::GeoPolygon poly;
  poly.exterior = std::move(ring);
  geo::GeoShape shape;
  shape.parts.push_back(std::move(poly));
  return shape;
}

CivilDate add_days(const CivilDate& d, long long days) {
  namespace chr = std::chrono;
  chr::sys_days sd{chr::year_month_day{chr::year{d.year}, chr::month{static_cast<unsigned>(d.month)},
                                       chr::day{static_cast<unsigned>(d.day)}}};
  sd += chr::days{days};
  chr::year_month_day out{sd};
  return {static_cast<int>(out.year()), static_cast<int>(static_cast<unsigned>(out.month())),
          static_cast<int>(static_cast<unsigned>(out.day()))};
}

CivilDate first_monday(int year) {
  namespace chr = std::chrono;
  chr::sys_days jan1{chr::year_month_day{chr::year{year}, chr::January, chr::day{1}}};
  int iso = static_cast<int>(chr::weekday{jan1}.iso_encoding());  // Monday = 1
  return add_days({year, 1, 1}, (8 - iso) % 7);
}

std::string idstr(const char* prefix, size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, n);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

// Planted in-block positions, as fractions of the block edge. The hotspot
// stays central enough that its crime cluster and 50 m discs cannot reach
// into neighboring blocks.
constexpr double kHotspotFx = 0.55, kHotspotFy = 0.65;
constexpr double kVacantFx = 0.12, kVacantFy = 0.12;
constexpr double kLongGymFx = 0.10, kLongGymFy = 0.10;

const std::array<const char*, 20> kAdjectives = {
    "Copper", "Golden",   "Silver", "Liberty", "Broad",  "Cedar",  "Walnut",
    "Spruce", "Keystone", "Harbor", "Summit",  "Willow", "Union",  "Crescent",
    "Granite", "Maple",   "Juniper", "Quince", "Ivory",  "Cobalt"};
const std::array<const char*, 20> kNouns = {
    "Kettle", "Anchor", "Lantern", "Garden", "Fox",   "Finch",  "Mill",  "Depot",
    "Parlor", "Works",  "House",   "Commons", "Yard", "Point",  "Row",   "Bridge",
    "Square", "Grove",  "Forge",   "Atlas"};
// One trailing word per business type, indexed like kAllBusinessTypes.
const std::array<const char*, kNumBusinessTypes> kTypeWords = {
    "Cafe", "Market", "Gym", "Hall", "Spirits", "Inn", "Tavern", "Pharmacy", "Kitchen", "Shop"};

// Raw categories emitted in listings; category_map.csv maps them back.
const std::array<std::vector<const char*>, kNumBusinessTypes> kRawCategories = {{
    {"cafe", "bakery", "coffee_shop"},
    {"convenience_store", "corner_store"},
    {"gym", "fitness_center"},
    {"bank", "school", "church", "post_office"},
    {"liquor_store"},
    {"hotel", "motel"},
    {"bar", "night_club"},
    {"pharmacy", "drugstore"},
    {"restaurant", "meal_takeaway", "diner"},
    {"clothing_store", "hardware_store", "bookstore"},
}};

struct PendingListing {
  std::string source;
  std::string source_id;
  std::string name;
  geo::GeoPoint where;
  std::string raw_category;
  std::optional<json> hours;
};

json daily_hours(int open_minute, int close_minute) {
  char buf[16];
  auto clock = [&](int m) {
    std::snprintf(buf, sizeof(buf), "%02d:%02d", m / 60, m % 60);
    return std::string(buf);
  };
  std::string token = clock(open_minute) + "-" + clock(close_minute);
  json obj = json::object();
  for (const auto& day : urb::hours::kDayKeys) {
    obj[day] = json::array({token});
  }
  return obj;
}

std::string noisy_name(const std::string& base, int kind) {
  switch (kind % 3) {
    case 0: {  // uppercase
      std::string s = base;
      for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return s;
    }
    case 1: {  // first 'e' gains an acute accent
      std::string s = base;
      auto pos = s.find('e');
      if (pos != std::string::npos) s.replace(pos, 1, "\xC3\xA9");
      return s;
    }
    default:  // trailing punctuation
      return base + ".";
  }
}

}  // namespace

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  s.seed = j.value("seed", s.seed);
  s.blocks_per_side = j.value("blocks_per_side", s.blocks_per_side);
  s.group_side = j.value("group_side", s.group_side);
  s.block_edge_m = j.value("block_edge_m", s.block_edge_m);
  s.origin_lon = j.value("origin_lon", s.origin_lon);
  s.origin_lat = j.value("origin_lat", s.origin_lat);
  s.pop_mean = j.value("pop_mean", s.pop_mean);
  s.pop_sd = j.value("pop_sd", s.pop_sd);
  s.context_ring = j.value("context_ring", s.context_ring);
  s.income_mean = j.value("income_mean", s.income_mean);
  s.income_sd = j.value("income_sd", s.income_sd);
  s.crime_c0 = j.value("crime_c0", s.crime_c0);
  s.crime_c_pop = j.value("crime_c_pop", s.crime_c_pop);
  s.crime_c_income = j.value("crime_c_income", s.crime_c_income);
  s.crime_c_poverty = j.value("crime_c_poverty", s.crime_c_poverty);
  s.crime_noise_sd = j.value("crime_noise_sd", s.crime_noise_sd);
  s.violent_share = j.value("violent_share", s.violent_share);
  s.crime_hotspots = j.value("crime_hotspots", s.crime_hotspots);
  s.hotspot_sigma_m = j.value("hotspot_sigma_m", s.hotspot_sigma_m);
  s.window_crime_frac = j.value("window_crime_frac", s.window_crime_frac);
  s.start_year = j.value("start_year", s.start_year);
  s.weeks = j.value("weeks", s.weeks);
  s.lots_per_block = j.value("lots_per_block", s.lots_per_block);
  s.lot_area_mean_m2 = j.value("lot_area_mean_m2", s.lot_area_mean_m2);
  s.lot_area_jitter = j.value("lot_area_jitter", s.lot_area_jitter);
  s.vacancy_far_from_hotspot = j.value("vacancy_far_from_hotspot", s.vacancy_far_from_hotspot);
  s.vacant_frac = j.value("vacant_frac", s.vacant_frac);
  s.businesses_per_block = j.value("businesses_per_block", s.businesses_per_block);
  s.gym_contrast = j.value("gym_contrast", s.gym_contrast);
  s.hours_attach_frac = j.value("hours_attach_frac", s.hours_attach_frac);
  s.duplicate_frac = j.value("duplicate_frac", s.duplicate_frac);
  s.max_extra_listings = j.value("max_extra_listings", s.max_extra_listings);
  s.dup_jitter_m = j.value("dup_jitter_m", s.dup_jitter_m);
  s.properties_per_block = j.value("properties_per_block", s.properties_per_block);
  s.tenure_contrast = j.value("tenure_contrast", s.tenure_contrast);
  s.as_of_date = j.value("as_of_date", s.as_of_date);
  return s;
}

json to_json(const SynthSpec& s) {
  return json{{"seed", s.seed},
              {"blocks_per_side", s.blocks_per_side},
              {"group_side", s.group_side},
              {"block_edge_m", s.block_edge_m},
              {"origin_lon", s.origin_lon},
              {"origin_lat", s.origin_lat},
              {"pop_mean", s.pop_mean},
              {"pop_sd", s.pop_sd},
              {"context_ring", s.context_ring},
              {"income_mean", s.income_mean},
              {"income_sd", s.income_sd},
              {"crime_c0", s.crime_c0},
              {"crime_c_pop", s.crime_c_pop},
              {"crime_c_income", s.crime_c_income},
              {"crime_c_poverty", s.crime_c_poverty},
              {"crime_noise_sd", s.crime_noise_sd},
              {"violent_share", s.violent_share},
              {"crime_hotspots", s.crime_hotspots},
              {"hotspot_sigma_m", s.hotspot_sigma_m},
              {"window_crime_frac", s.window_crime_frac},
              {"start_year", s.start_year},
              {"weeks", s.weeks},
              {"lots_per_block", s.lots_per_block},
              {"lot_area_mean_m2", s.lot_area_mean_m2},
              {"lot_area_jitter", s.lot_area_jitter},
              {"vacancy_far_from_hotspot", s.vacancy_far_from_hotspot},
              {"vacant_frac", s.vacant_frac},
              {"businesses_per_block", s.businesses_per_block},
              {"gym_contrast", s.gym_contrast},
              {"hours_attach_frac", s.hours_attach_frac},
              {"duplicate_frac", s.duplicate_frac},
              {"max_extra_listings", s.max_extra_listings},
              {"dup_jitter_m", s.dup_jitter_m},
              {"properties_per_block", s.properties_per_block},
              {"tenure_contrast", s.tenure_contrast},
              {"as_of_date", s.as_of_date}};
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  return synth_spec_from_json(j);
}

void generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.blocks_per_side <= 0 || spec.group_side <= 0 ||
      spec.blocks_per_side % spec.group_side != 0) {
    throw ValidationError("blocks_per_side must be a positive multiple of group_side");
  }
  if (spec.block_edge_m <= 0) throw ValidationError("block_edge_m must be positive");
  auto as_of = parse_date(spec.as_of_date);
  if (!as_of) throw ValidationError("bad as_of_date '" + spec.as_of_date + "'");

  std::filesystem::create_directories(out_dir);
  Rng rng(spec.seed);
  Frame frame = Frame::of(spec);

  const int side = spec.blocks_per_side;
  const int gside = side / spec.group_side;
  const double edge = spec.block_edge_m;
  const int n_blocks = side * side;
  const int n_groups = gside * gside;

  auto block_id = [&](int bi, int bj) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "B%05d", bi * side + bj + 1);
    return std::string(buf);
  };
  auto group_id = [&](int gi, int gj) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "G%04d", gi * gside + gj + 1);
    return std::string(buf);
  };
  auto group_of = [&](int bi, int bj) {
    return std::pair<int, int>{bi / spec.group_side, bj / spec.group_side};
  };

  auto in_ring = [&](int bi, int bj) {
    return spec.context_ring && (bi == 0 || bj == 0 || bi == side - 1 || bj == side - 1);
  };

  // --- draws, in a fixed pass order ---
  std::vector<long long> block_pop(n_blocks);
  for (int bi = 0; bi < side; ++bi) {
    for (int bj = 0; bj < side; ++bj) {
      long long pop = std::max<long long>(0, std::llround(rng.normal(spec.pop_mean, spec.pop_sd)));
      block_pop[bi * side + bj] = in_ring(bi, bj) ? 0 : pop;
    }
  }
  std::vector<double> group_income(n_groups), group_poverty(n_groups);
  std::vector<std::array<double, 7>> group_brackets(n_groups);
  const std::array<double, 7> rich = {0.02, 0.02, 0.03, 0.03, 0.05, 0.05, 0.80};
  const std::array<double, 7> poor = {0.30, 0.25, 0.15, 0.10, 0.10, 0.05, 0.05};
  for (int g = 0; g < n_groups; ++g) {
    group_income[g] = std::max(2000.0, rng.normal(spec.income_mean, spec.income_sd));
    double theta = rng.uniform();
    for (int q = 0; q < 7; ++q) {
      group_brackets[g][q] = (1 - theta) * rich[q] + theta * poor[q];
    }
    group_poverty[g] = metrics::poverty_index(group_brackets[g]);
  }

  // --- geounits.geojson ---
  {
    json features = json::array();
    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        json f;
        f["type"] = "Feature";
        f["properties"] = {{"id", block_id(bi, bj)}, {"level", "block"}};
        f["geometry"] =
            ingest::geometry_to_geojson(square(frame, bj * edge, bi * edge, edge));
        features.push_back(std::move(f));
      }
    }
    double gedge = edge * spec.group_side;
    for (int gi = 0; gi < gside; ++gi) {
      for (int gj = 0; gj < gside; ++gj) {
        json f;
        f["type"] = "Feature";
        f["properties"] = {{"id", group_id(gi, gj)}, {"level", "block_group"}};
        f["geometry"] =
            ingest::geometry_to_geojson(square(frame, gj * gedge, gi * gedge, gedge));
        features.push_back(std::move(f));
      }
    }
    json root = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    open_out(out_dir / "geounits.geojson") << root.dump() << "\n";
  }

  // --- population.csv (blocks, then groups) ---
  {
    auto out = open_out(out_dir / "population.csv");
    out << "id,population\n";
    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        out << block_id(bi, bj) << "," << block_pop[bi * side + bj] << "\n";
      }
    }
    for (int gi = 0; gi < gside; ++gi) {
      for (int gj = 0; gj < gside; ++gj) {
        long long total = 0;
        for (int bi = gi * spec.group_side; bi < (gi + 1) * spec.group_side; ++bi) {
          for (int bj = gj * spec.group_side; bj < (gj + 1) * spec.group_side; ++bj) {
            total += block_pop[bi * side + bj];
          }
        }
        out << group_id(gi, gj) << "," << total << "\n";
      }
    }
  }

  // --- acs.csv ---
  {
    auto out = open_out(out_dir / "acs.csv");
    out << "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n";
    for (int gi = 0; gi < gside; ++gi) {
      for (int gj = 0; gj < gside; ++gj) {
        int g = gi * gside + gj;
        out << group_id(gi, gj) << "," << fmt_double(group_income[g]);
        for (int q = 0; q < 7; ++q) out << "," << fmt_double(group_brackets[g][q]);
        out << "\n";
      }
    }
  }

  // --- crimes.csv ---
  size_t n_crimes = 0;
  json hotspots = json::array();
  {
    auto out = open_out(out_dir / "crimes.csv");
    out << "id,datetime,lat,lon,category\n";
    CivilDate anchor = first_monday(spec.start_year);
    hours::TimeWindow evenings = hours::weekday_evenings();
    hours::TimeWindow nights = hours::weekend_nights();
    const std::array<CrimeCategory, 4> violent_cats = {
        CrimeCategory::homicide, CrimeCategory::sexual, CrimeCategory::robbery,
        CrimeCategory::assault};
    const std::array<CrimeCategory, 6> nonviolent_cats = {
        CrimeCategory::burglary, CrimeCategory::theft, CrimeCategory::motor_theft,
        CrimeCategory::arson, CrimeCategory::vandalism, CrimeCategory::disorderly_conduct};

    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        int b = bi * side + bj;
        auto [gi, gj] = group_of(bi, bj);
        int g = gi * gside + gj;
        // Ring blocks keep a mean-population crime rate so the crime field
        // stays homogeneous across the analyzed interior.
        double pop_for_crime =
            in_ring(bi, bj) ? spec.pop_mean : static_cast<double>(block_pop[b]);
        double lambda = spec.crime_c0 + spec.crime_c_pop * pop_for_crime +
                        spec.crime_c_income * (group_income[g] / 1000.0) +
                        spec.crime_c_poverty * group_poverty[g] +
                        rng.normal(0, spec.crime_noise_sd);
        long long count = std::max<long long>(0, std::llround(lambda));
        double hx = kHotspotFx * edge, hy = kHotspotFy * edge;
        if (spec.crime_hotspots) {
          hotspots.push_back(json{{"block_id", block_id(bi, bj)},
                                  {"lon", frame.at(bj * edge + hx, bi * edge + hy).lon},
                                  {"lat", frame.at(bj * edge + hx, bi * edge + hy).lat}});
        }
        for (long long c = 0; c < count; ++c) {
          double x, y;
          if (spec.crime_hotspots) {
            x = std::clamp(hx + rng.normal(0, spec.hotspot_sigma_m), 2.0, edge - 2.0);
            y = std::clamp(hy + rng.normal(0, spec.hotspot_sigma_m), 2.0, edge - 2.0);
          } else {
            x = rng.uniform(1.0, edge - 1.0);
            y = rng.uniform(1.0, edge - 1.0);
          }
          geo::GeoPoint where = frame.at(bj * edge + x, bi * edge + y);

          int week_minute;
          if (rng.bernoulli(spec.window_crime_frac)) {
            const hours::TimeWindow& w = rng.bernoulli(0.5) ? evenings : nights;
            int offset = static_cast<int>(rng.uniform_int(0, w.total_minutes() - 1));
            week_minute = 0;
            for (const auto& iv : w.intervals) {
              int len = iv.end - iv.begin;
              if (offset < len) {
                week_minute = iv.begin + offset;
                break;
              }
              offset -= len;
            }
          } else {
            week_minute = static_cast<int>(rng.uniform_int(0, hours::kMinutesPerWeek - 1));
          }
          long long week = rng.uniform_int(0, spec.weeks - 1);
          CivilDate date = add_days(anchor, week * 7 + week_minute / hours::kMinutesPerDay);
          int mod = week_minute % hours::kMinutesPerDay;
          CivilDateTime when{date, mod / 60, mod % 60, 0};

          CrimeCategory cat =
              rng.bernoulli(spec.violent_share)
                  ? violent_cats[static_cast<size_t>(rng.uniform_int(0, 3))]
                  : nonviolent_cats[static_cast<size_t>(rng.uniform_int(0, 5))];
          out << idstr("C", ++n_crimes) << "," << to_string(when) << "," << fmt_double(where.lat)
              << "," << fmt_double(where.lon) << "," << to_string(cat) << "\n";
        }
      }
    }
  }

  // --- lots.geojson ---
  size_t n_lots = 0;
  {
    json features = json::array();
    auto push_lot = [&](double cx, double cy, double area, const char* zoning_raw) {
      double half = std::sqrt(area) / 2.0;
      json f;
      f["type"] = "Feature";
      f["properties"] = {{"id", idstr("L", ++n_lots)}, {"zoning", zoning_raw}};
      f["geometry"] =
          ingest::geometry_to_geojson(square(frame, cx - half, cy - half, 2 * half));
      features.push_back(std::move(f));
    };
    // Rotating raw designations exercise the zoning merges.
    const std::array<const char*, 3> res_raw = {"Residential Low", "Residential Medium",
                                                "Residential High"};
    const std::array<const char*, 2> com_raw = {"Commercial Consumer", "Commercial Business"};
    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        double x0 = bj * edge, y0 = bi * edge;
        auto area = [&] {
          return spec.lot_area_mean_m2 *
                 (1.0 + rng.uniform(-spec.lot_area_jitter, spec.lot_area_jitter));
        };
        if (spec.vacancy_far_from_hotspot) {
          double hx = kHotspotFx * edge, hy = kHotspotFy * edge;
          double vx = kVacantFx * edge, vy = kVacantFy * edge;
          // Vacant cluster opposite the hotspot corner.
          push_lot(x0 + vx + rng.uniform(-6, 6), y0 + vy + rng.uniform(-6, 6), area(), "Vacant");
          push_lot(x0 + vx + 12 + rng.uniform(-4, 4), y0 + vy + rng.uniform(-6, 6), area(),
                   "Vacant");
          push_lot(x0 + vx + rng.uniform(-4, 4), y0 + vy + 12 + rng.uniform(-4, 4), area(),
                   "Vacant");
          push_lot(x0 + 0.20 * edge + rng.uniform(-4, 4), y0 + 0.10 * edge + rng.uniform(-4, 4),
                   area(), res_raw[(bi + bj) % 3]);
          // Residential ring at the hotspot.
          push_lot(x0 + hx - 14 + rng.uniform(-3, 3), y0 + hy - 8 + rng.uniform(-3, 3), area(),
                   res_raw[bi % 3]);
          push_lot(x0 + hx + 10 + rng.uniform(-3, 3), y0 + hy - 14 + rng.uniform(-3, 3), area(),
                   res_raw[bj % 3]);
          push_lot(x0 + hx - 6 + rng.uniform(-3, 3), y0 + hy + 8 + rng.uniform(-3, 3), area(),
                   res_raw[(bi + 2 * bj) % 3]);
          // Mid-block filler away from both anchors.
          push_lot(x0 + 0.55 * edge + rng.uniform(-5, 5), y0 + 0.45 * edge + rng.uniform(-5, 5),
                   area(), com_raw[(bi + bj) % 2]);
        } else {
          for (int l = 0; l < spec.lots_per_block; ++l) {
            double cx = x0 + rng.uniform(0.08 * edge, 0.92 * edge);
            double cy = y0 + rng.uniform(0.08 * edge, 0.92 * edge);
            const char* zoning;
            if (rng.bernoulli(spec.vacant_frac)) {
              zoning = "Vacant";
            } else {
              double u = rng.uniform();
              if (u < 0.45) zoning = res_raw[l % 3];
              else if (u < 0.65) zoning = com_raw[l % 2];
              else if (u < 0.75) zoning = "Commercial / Residential Mixed";
              else if (u < 0.85) zoning = "Industrial";
              else if (u < 0.95) zoning = "Park";
              else zoning = "Civic";
            }
            push_lot(cx, cy, area(), zoning);
          }
        }
      }
    }
    json root = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    open_out(out_dir / "lots.geojson") << root.dump() << "\n";
  }

  // --- listings.jsonl + duplicates ---
  size_t n_listings = 0;
  size_t n_businesses = 0;
  json duplicate_clusters = json::array();
  {
    std::vector<PendingListing> listings;
    const std::array<const char*, 3> sources = {"A", "B", "C"};
    auto next_source_id = [&](int source_idx) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "%s-%06zu", sources[source_idx], ++n_listings);
      return std::string(buf);
    };

    auto add_business = [&](const std::string& name, geo::GeoPoint where, int type_idx,
                            std::optional<json> hours) {
      ++n_businesses;
      int base_source = static_cast<int>(n_businesses % 3);
      const auto& raws = kRawCategories[type_idx];
      PendingListing base;
      base.source = sources[base_source];
      base.source_id = next_source_id(base_source);
      base.name = name;
      base.where = where;
      base.raw_category = raws[n_businesses % raws.size()];
      base.hours = hours;
      json cluster = json::array();
      cluster.push_back(base.source + ":" + base.source_id);
      listings.push_back(base);

      if (spec.duplicate_frac > 0 && rng.bernoulli(spec.duplicate_frac)) {
        int copies = static_cast<int>(rng.uniform_int(1, std::max(1, spec.max_extra_listings)));
        for (int k = 1; k <= copies; ++k) {
          PendingListing dup;
          int src = (base_source + k) % 3;
          dup.source = sources[src];
          dup.source_id = next_source_id(src);
          dup.name = noisy_name(name, static_cast<int>(rng.uniform_int(0, 2)));
          double ang = rng.uniform(0, 2 * std::numbers::pi);
          double rad = rng.uniform(0, spec.dup_jitter_m);
          dup.where = {where.lon + rad * std::cos(ang) * frame.deg_per_m_lon,
                       where.lat + rad * std::sin(ang) * frame.deg_per_m_lat};
          dup.raw_category = raws[(n_businesses + k) % raws.size()];
          if (hours && rng.bernoulli(0.5)) dup.hours = hours;
          cluster.push_back(dup.source + ":" + dup.source_id);
          listings.push_back(std::move(dup));
        }
      }
      if (cluster.size() > 1) duplicate_clusters.push_back(std::move(cluster));
    };

    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        double x0 = bj * edge, y0 = bi * edge;
        auto name_for = [&](int type_idx) {
          char serial[16];
          std::snprintf(serial, sizeof(serial), "%04zu", n_businesses + 1);
          return std::string(kAdjectives[rng.uniform_int(0, 19)]) + " " +
                 kNouns[rng.uniform_int(0, 19)] + " " + kTypeWords[type_idx] + " " + serial;
        };

        if (spec.gym_contrast) {
          int gym = static_cast<int>(BusinessType::gym);
          double lx = x0 + kLongGymFx * edge + rng.uniform(-2, 2);
          double ly = y0 + kLongGymFy * edge + rng.uniform(-2, 2);
          int open_shift = static_cast<int>(rng.uniform_int(0, 1));
          add_business(name_for(gym), frame.at(lx, ly), gym,
                       daily_hours(5 * 60 + open_shift * 30, 23 * 60));
          double sx = x0 + kHotspotFx * edge + rng.uniform(-2, 2);
          double sy = y0 + kHotspotFy * edge + rng.uniform(-2, 2);
          add_business(name_for(gym), frame.at(sx, sy), gym,
                       daily_hours(11 * 60, 15 * 60 - open_shift * 30));
        }

        int extra = static_cast<int>(spec.businesses_per_block) +
                    (rng.bernoulli(spec.businesses_per_block -
                                   std::floor(spec.businesses_per_block))
                         ? 1
                         : 0);
        for (int e = 0; e < extra; ++e) {
          int type_idx = static_cast<int>(rng.uniform_int(0, kNumBusinessTypes - 1));
          // Uniform over the whole block so business density is seamless
          // across block boundaries; count exposure must not dip at corners.
          double cx = x0 + rng.uniform(0.0, edge);
          double cy = y0 + rng.uniform(0.0, edge);
          std::optional<json> hours;
          if (rng.bernoulli(spec.hours_attach_frac)) {
            int open_m = static_cast<int>(rng.uniform_int(6, 11)) * 60;
            int close_m = static_cast<int>(rng.uniform_int(15, 23)) * 60;
            hours = daily_hours(open_m, close_m);
          }
          add_business(name_for(type_idx), frame.at(cx, cy), type_idx, hours);
        }
      }
    }

    auto out = open_out(out_dir / "listings.jsonl");
    for (const PendingListing& l : listings) {
      json j = {{"source", l.source},      {"source_id", l.source_id}, {"name", l.name},
                {"lat", l.where.lat},      {"lon", l.where.lon},
                {"categories", json::array({l.raw_category})}};
      if (l.hours) j["hours"] = *l.hours;
      out << j.dump() << "\n";
    }
  }

  // --- properties.csv ---
  size_t n_properties = 0;
  {
    auto out = open_out(out_dir / "properties.csv");
    out << "id,lat,lon,residential,last_sale_date\n";
    auto push_prop = [&](double x, double y, bool residential, long long days_ago) {
      geo::GeoPoint p = frame.at(x, y);
      out << idstr("P", ++n_properties) << "," << fmt_double(p.lat) << "," << fmt_double(p.lon)
          << "," << (residential ? 1 : 0) << "," << to_string(add_days(*as_of, -days_ago)) << "\n";
    };
    for (int bi = 0; bi < side; ++bi) {
      for (int bj = 0; bj < side; ++bj) {
        double x0 = bj * edge, y0 = bi * edge;
        if (spec.tenure_contrast) {
          double hx = kHotspotFx * edge, hy = kHotspotFy * edge;
          for (int k = 0; k < 3; ++k) {
            push_prop(x0 + hx + rng.uniform(-15, 15), y0 + hy + rng.uniform(-15, 15), true,
                      rng.uniform_int(365, 3 * 365));
          }
          double vx = kVacantFx * edge, vy = kVacantFy * edge;
          for (int k = 0; k < 3; ++k) {
            push_prop(x0 + vx + rng.uniform(-15, 15), y0 + vy + rng.uniform(-15, 15), true,
                      rng.uniform_int(8 * 365, 12 * 365));
          }
        } else {
          for (int k = 0; k < spec.properties_per_block; ++k) {
            push_prop(x0 + rng.uniform(0.05 * edge, 0.95 * edge),
                      y0 + rng.uniform(0.05 * edge, 0.95 * edge), rng.bernoulli(0.8),
                      rng.uniform_int(30, 15 * 365));
          }
        }
      }
    }
  }

  // --- category_map.csv ---
  {
    auto out = open_out(out_dir / "category_map.csv");
    out << "raw_category,business_type\n";
    for (int t = 0; t < kNumBusinessTypes; ++t) {
      for (const char* raw : kRawCategories[t]) {
        out << raw << "," << to_string(kAllBusinessTypes[t]) << "\n";
      }
    }
  }

  // --- ground_truth.json ---
  {
    int k2 = spec.group_side * spec.group_side;
    json gt = {
        {"seed", spec.seed},
        {"as_of_date", spec.as_of_date},
        {"counts",
         {{"blocks", n_blocks},
          {"block_groups", n_groups},
          {"units", n_blocks + n_groups},
          {"crimes", n_crimes},
          {"lots", n_lots},
          {"properties", n_properties},
          {"listings", n_listings},
          {"businesses", n_businesses}}},
        {"crime_model",
         {{"c0", spec.crime_c0},
          {"c_pop", spec.crime_c_pop},
          {"c_income_per_1000", spec.crime_c_income},
          {"c_poverty", spec.crime_c_poverty},
          {"group_c0", k2 * spec.crime_c0},
          {"group_c_pop", spec.crime_c_pop},
          {"group_c_income_per_1000", k2 * spec.crime_c_income},
          {"group_c_poverty", k2 * spec.crime_c_poverty},
          {"noise_sd", spec.crime_noise_sd}}},
        {"duplicate_clusters", std::move(duplicate_clusters)},
        {"hotspots", std::move(hotspots)},
    };
    open_out(out_dir / "ground_truth.json") << gt.dump(2) << "\n";
  }
}

}  // namespace urb::synth
