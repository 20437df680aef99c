#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urb/geo.hpp"
#include "urb/hours.hpp"

namespace urb {

enum class UnitLevel { block, block_group };

std::string to_string(UnitLevel level);
std::optional<UnitLevel> unit_level_from_string(const std::string& s);

// Census geographic unit, joined from geometry, population and ACS inputs.
struct GeoUnit {
  std::string id;
  UnitLevel level = UnitLevel::block;
  geo::GeoShape shape;
  double area_m2 = 0;
  std::optional<long long> population;
  std::optional<double> per_capita_income;              // block groups only
  std::optional<std::array<double, 7>> poverty_brackets;  // block groups only
  bool passes_population_filter = false;
};

enum class Zoning {
  commercial,
  residential,
  mixed_use,
  industrial,
  vacant,
  transportation,
  water,
  park,
  civic,
  recreation,
  culture,
  cemetery,
};

std::string to_string(Zoning z);
// Maps a raw designation (case-insensitive) onto the merged set: the two
// commercial sub-designations collapse to commercial, the residential
// densities to residential, and "commercial / residential mixed" to
// mixed_use. Unknown strings yield nullopt.
std::optional<Zoning> zoning_from_raw(const std::string& raw);

struct LandLot {
  std::string id;
  geo::GeoPoint location;  // centroid
  double area_m2 = 0;
  Zoning zoning = Zoning::vacant;
};

enum class CrimeCategory {
  homicide,
  sexual,
  robbery,
  assault,
  burglary,
  theft,
  motor_theft,
  arson,
  vandalism,
  disorderly_conduct,
};

enum class CrimeSuper { violent, non_violent };

inline constexpr std::array<CrimeCategory, 10> kAllCrimeCategories = {
    CrimeCategory::homicide,      CrimeCategory::sexual,    CrimeCategory::robbery,
    CrimeCategory::assault,       CrimeCategory::burglary,  CrimeCategory::theft,
    CrimeCategory::motor_theft,   CrimeCategory::arson,     CrimeCategory::vandalism,
    CrimeCategory::disorderly_conduct,
};

CrimeSuper super_of(CrimeCategory c);
std::string to_string(CrimeCategory c);
std::string to_string(CrimeSuper s);
std::optional<CrimeCategory> crime_category_from_string(const std::string& s);

struct CivilDate {
  int year = 0, month = 0, day = 0;
  friend auto operator<=>(const CivilDate&, const CivilDate&) = default;
};

struct CivilDateTime {
  CivilDate date;
  int hour = 0, minute = 0, second = 0;
  friend auto operator<=>(const CivilDateTime&, const CivilDateTime&) = default;
};

// Both return nullopt on malformed or impossible values.
std::optional<CivilDate> parse_date(const std::string& s);  // YYYY-MM-DD
// ISO-8601 local wall-clock, 'T' or space separator, seconds optional.
// Strings carrying a UTC designator or offset are rejected; inputs are
// expected in the configured local timezone already.
std::optional<CivilDateTime> parse_datetime(const std::string& s);

std::string to_string(const CivilDate& d);
std::string to_string(const CivilDateTime& t);

// Minutes since Monday 00:00 of the civil date's week.
int minute_of_week(const CivilDateTime& t);

// Days between two civil dates (b - a).
long long days_between(const CivilDate& a, const CivilDate& b);

struct CrimeEvent {
  std::string id;
  CivilDateTime when;
  geo::GeoPoint where;
  CrimeCategory category = CrimeCategory::theft;
  CrimeSuper super = CrimeSuper::non_violent;
  int week_minute = 0;
};

enum class Source { A, B, C };
std::string to_string(Source s);
std::optional<Source> source_from_string(const std::string& s);

struct RawListing {
  Source source = Source::A;
  std::string source_id;
  std::string name;
  geo::GeoPoint where;
  std::vector<std::string> raw_categories;
  std::optional<std::map<std::string, std::vector<std::string>>> hours_text;
};

enum class BusinessType {
  cafe,
  convenience,
  gym,
  institution,
  liquor,
  lodging,
  nightlife,
  pharmacy,
  restaurant,
  retail,
};

inline constexpr int kNumBusinessTypes = 10;
inline constexpr std::array<BusinessType, kNumBusinessTypes> kAllBusinessTypes = {
    BusinessType::cafe,     BusinessType::convenience, BusinessType::gym,
    BusinessType::institution, BusinessType::liquor,   BusinessType::lodging,
    BusinessType::nightlife,   BusinessType::pharmacy, BusinessType::restaurant,
    BusinessType::retail,
};

std::string to_string(BusinessType t);
std::optional<BusinessType> business_type_from_string(const std::string& s);

// Bitmask over BusinessType; a business can belong to several types.
using TypeMask = std::uint16_t;

constexpr TypeMask mask_of(BusinessType t) {
  return static_cast<TypeMask>(1u << static_cast<int>(t));
}
constexpr bool has_type(TypeMask m, BusinessType t) { return (m & mask_of(t)) != 0; }

std::vector<BusinessType> types_in(TypeMask m);

struct Business {
  std::string id;
  geo::GeoPoint where;
  std::string canonical_name;
  TypeMask types = 0;  // non-empty
  std::optional<hours::WeeklySchedule> schedule;
  std::vector<std::pair<Source, std::string>> provenance;  // sorted, unique
};

struct PropertyRecord {
  std::string id;
  geo::GeoPoint where;
  bool residential = false;
  CivilDate last_sale_date;
};

}  // namespace urb
