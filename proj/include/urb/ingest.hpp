#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "urb/domain.hpp"

#include <nlohmann/json_fwd.hpp>

namespace urb::ingest {

struct PopulationFilter {
  long long block_min = 25;
  long long block_group_min = 400;
};

// Per-file load accounting. Loaders skip and count malformed records; more
// than `max_skip_frac` skips is a hard failure.
struct LoadStats {
  std::string file;
  size_t rows = 0;
  size_t loaded = 0;
  size_t skipped = 0;
  std::vector<std::string> warnings;

  void skip(size_t line, const std::string& why);
  void enforce_skip_budget(double max_skip_frac = 0.01) const;
};

// GeoJSON helpers shared by the loaders, the normalized-bundle codec and the
// synthetic generator.
geo::GeoShape parse_geojson_geometry(const nlohmann::json& geom, const std::string& what);
nlohmann::json geometry_to_geojson(const geo::GeoShape& shape);

struct GeoUnitsResult {
  std::vector<GeoUnit> units;
  std::vector<std::string> unmatched_population_ids;  // in CSV but not in the geometry file
  std::vector<std::string> unmatched_acs_ids;
  size_t flagged = 0;  // units failing the population filter (kept, flagged)
  LoadStats stats;
};

// Joins geometries with population and ACS economics. Malformed rows in any
// of the three files are hard errors naming the line; filter failures only
// flag the unit.
GeoUnitsResult load_geounits(const std::filesystem::path& geojson_path,
                             const std::filesystem::path& population_csv,
                             const std::filesystem::path& acs_csv,
                             const PopulationFilter& filter = {});

std::vector<CrimeEvent> load_crimes(const std::filesystem::path& csv_path, LoadStats& stats);
std::vector<LandLot> load_lots(const std::filesystem::path& geojson_path, LoadStats& stats);
// Rows with a sale date after `as_of` violate the tenure invariant and are
// skipped.
std::vector<PropertyRecord> load_properties(const std::filesystem::path& csv_path,
                                            const std::optional<CivilDate>& as_of,
                                            LoadStats& stats);
std::vector<RawListing> load_listings(const std::filesystem::path& jsonl_path, LoadStats& stats);

// Raw category (normalized lowercase) -> set of business types. Many-to-many.
using CategoryMap = std::map<std::string, TypeMask>;

CategoryMap load_category_map(const std::filesystem::path& csv_path);

// Non-empty by construction: inputs mapping to nothing yield Institution and
// a warning.
TypeMask map_categories(const std::vector<std::string>& raw_categories, const CategoryMap& map,
                        std::vector<std::string>* warnings = nullptr);

// Lowercases, folds common Latin diacritics, and replaces punctuation with
// spaces. Token set of the result feeds the Jaccard match.
std::string normalize_name(std::string_view name);
double token_jaccard(const std::string& norm_a, const std::string& norm_b);

struct DedupParams {
  double min_jaccard = 0.7;
  double max_distance_m = 50.0;
};

struct MergeLogEntry {
  std::string business_id;
  Source absorbed_source;
  std::string absorbed_id;
  Source kept_source;
  std::string kept_id;
};

struct DedupResult {
  std::vector<Business> businesses;
  std::vector<MergeLogEntry> merge_log;  // one entry per absorbed listing
  std::vector<std::string> warnings;
  size_t listings_in = 0;
};

// Connected-component merge over the pairwise match relation
// (token-set Jaccard >= min_jaccard AND distance <= max_distance_m).
// Output ids and field choices depend only on the input as a set, not its
// order. Listings must have unique (source, source_id) keys.
DedupResult dedup_businesses(const std::vector<RawListing>& listings, const CategoryMap& map,
                             const DedupParams& params = {});

}  // namespace urb::ingest
