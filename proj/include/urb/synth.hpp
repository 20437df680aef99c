#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace urb::synth {

// Deterministic synthetic city: identical spec + seed produces byte-identical
// files. Grid of square blocks grouped into square block groups, with
// optional planted structure for oracle tests.
struct SynthSpec {
  std::uint64_t seed = 1;
  int blocks_per_side = 10;   // must be divisible by group_side
  int group_side = 2;         // block group = group_side x group_side blocks
  double block_edge_m = 150.0;
  double origin_lon = -75.16;
  double origin_lat = 39.95;

  // population per block
  double pop_mean = 120.0;
  double pop_sd = 25.0;

  // When set, the outermost block ring keeps its businesses, lots,
  // properties and a mean-population crime rate but reports zero population,
  // so the population filter drops it from analysis. Analyzed units then sit
  // in a homogeneous field with no city-boundary exposure artifacts.
  bool context_ring = false;

  // block-group economics
  double income_mean = 30000.0;
  double income_sd = 8000.0;

  // crime count per block:
  //   max(0, round(c0 + c_pop*pop + c_income*(income/1000) + c_poverty*poverty + N(0, noise)))
  double crime_c0 = 0.0;
  double crime_c_pop = 0.1;
  double crime_c_income = 0.0;   // per $1000
  double crime_c_poverty = 0.0;
  double crime_noise_sd = 1.0;
  double violent_share = 0.35;
  bool crime_hotspots = false;   // cluster crimes around a planted per-block hotspot
  double hotspot_sigma_m = 12.0;
  double window_crime_frac = 0.5;  // crimes placed inside the high-crime windows
  int start_year = 2012;
  int weeks = 104;

  // land lots; the planted layout puts vacancy opposite the hotspot corner
  int lots_per_block = 8;
  double lot_area_mean_m2 = 300.0;
  double lot_area_jitter = 0.2;
  bool vacancy_far_from_hotspot = false;
  double vacant_frac = 0.2;  // uniform mode

  // businesses
  double businesses_per_block = 1.0;
  bool gym_contrast = false;  // long-hours gym far from the hotspot, short-hours gym at it
  double hours_attach_frac = 0.8;

  // duplicate listings for linkage tests
  double duplicate_frac = 0.0;
  int max_extra_listings = 2;
  double dup_jitter_m = 12.0;

  // properties
  int properties_per_block = 6;
  bool tenure_contrast = false;  // older sales far from the hotspot

  std::string as_of_date = "2015-12-31";
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);
SynthSpec load_synth_spec(const std::filesystem::path& path);

// Writes geounits.geojson, population.csv, acs.csv, crimes.csv, lots.geojson,
// listings.jsonl, properties.csv, category_map.csv and ground_truth.json into
// out_dir.
void generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace urb::synth
