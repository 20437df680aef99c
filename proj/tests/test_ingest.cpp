#include <doctest.h>

#include <string>

#include "test_util.hpp"
#include "urb/error.hpp"
#include "urb/ingest.hpp"

using namespace urb;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Two blocks plus the block group containing them, on a small degree grid.
const char* kGeoUnits = R"({"type":"FeatureCollection","features":[
{"type":"Feature","properties":{"id":"BLK1","level":"block"},"geometry":{"type":"Polygon","coordinates":[[[-75.20,39.90],[-75.19,39.90],[-75.19,39.91],[-75.20,39.91],[-75.20,39.90]]]}},
{"type":"Feature","properties":{"id":"BLK2","level":"block"},"geometry":{"type":"Polygon","coordinates":[[[-75.19,39.90],[-75.18,39.90],[-75.18,39.91],[-75.19,39.91],[-75.19,39.90]]]}},
{"type":"Feature","properties":{"id":"GRP1","level":"block_group"},"geometry":{"type":"Polygon","coordinates":[[[-75.20,39.90],[-75.18,39.90],[-75.18,39.91],[-75.20,39.91],[-75.20,39.90]]]}}
]})";

}  // namespace

TEST_CASE("load_geounits joins population and economics, flags small units") {
  TempDir dir("geounits");
  auto geo = write_file(dir / "units.geojson", kGeoUnits);
  auto pop = write_file(dir / "population.csv",
                        "id,population\nBLK1,24\nBLK2,180\nGRP1,400\nNOPE,5\n");
  auto acs = write_file(dir / "acs.csv",
                        "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n"
                        "GRP1,31000,0.1,0.1,0.1,0.1,0.1,0.1,0.4\n");

  auto result = ingest::load_geounits(geo, pop, acs);
  REQUIRE(result.units.size() == 3);
  const GeoUnit& blk1 = result.units[0];
  CHECK(blk1.id == "BLK1");
  CHECK(blk1.population == 24);
  CHECK_FALSE(blk1.passes_population_filter);  // below the 25-person block threshold
  CHECK(result.units[1].passes_population_filter);
  const GeoUnit& grp = result.units[2];
  CHECK(grp.passes_population_filter);  // exactly 400 is included
  CHECK(grp.per_capita_income == 31000);
  REQUIRE(grp.poverty_brackets.has_value());
  CHECK((*grp.poverty_brackets)[6] == doctest::Approx(0.4));
  CHECK(grp.area_m2 > 0);  // computed fallback, no area property present
  REQUIRE(result.unmatched_population_ids.size() == 1);
  CHECK(result.unmatched_population_ids[0] == "NOPE");
  CHECK(result.flagged == 1);
}

TEST_CASE("load_geounits: empty population file flags everything with a warning") {
  TempDir dir("geounits_empty");
  auto geo = write_file(dir / "units.geojson", kGeoUnits);
  auto pop = write_file(dir / "population.csv", "id,population\n");
  auto acs = write_file(dir / "acs.csv", "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n");
  auto result = ingest::load_geounits(geo, pop, acs);
  CHECK(result.flagged == 3);
  bool warned = false;
  for (const auto& w : result.stats.warnings) {
    if (w.find("empty population") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("load_geounits: malformed rows fail hard with the line number") {
  TempDir dir("geounits_bad");
  auto geo = write_file(dir / "units.geojson", kGeoUnits);
  auto acs = write_file(dir / "acs.csv", "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n");

  auto bad_pop = write_file(dir / "population.csv", "id,population\nBLK1,abc\n");
  CHECK_THROWS_WITH_AS(ingest::load_geounits(geo, bad_pop, acs),
                       doctest::Contains("line 2"), ValidationError);

  auto pop = write_file(dir / "population2.csv", "id,population\nBLK1,100\n");
  auto bad_acs = write_file(dir / "acs_bad.csv",
                            "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n"
                            "GRP1,31000,0.5,0.1,0.1,0.1,0.1,0.1,0.4\n");  // sums to 1.4
  CHECK_THROWS_WITH_AS(ingest::load_geounits(geo, pop, bad_acs), doctest::Contains("sum"),
                       ValidationError);
}

TEST_CASE("load_crimes: categories, supers, and skip accounting") {
  TempDir dir("crimes");
  auto path = write_file(dir / "crimes.csv",
                         "id,datetime,lat,lon,category\n"
                         "c1,2015-06-01T09:30:00,39.95,-75.16,Theft\n"
                         "c2,2015-06-01T23:30:00,39.95,-75.16,Homicide\n"
                         "c3,2015-06-02T01:00:00,91.0,-75.16,Theft\n"      // bad latitude
                         "c4,not-a-date,39.95,-75.16,Theft\n"              // bad datetime
                         "c5,2015-06-02T01:00:00,39.95,-75.16,Jaywalking\n"  // unknown category
                         "c6,2015-06-06T02:30:00,39.95,-75.16,Motor Theft\n");
  ingest::LoadStats stats;
  // 3 of 6 rows skipped blows the 1% budget.
  CHECK_THROWS_AS(ingest::load_crimes(path, stats), ValidationError);
  CHECK(stats.skipped == 3);
  CHECK(stats.loaded == 3);

  auto good = write_file(dir / "good.csv",
                         "id,datetime,lat,lon,category\n"
                         "c1,2015-06-01T09:30:00,39.95,-75.16,Theft\n"
                         "c2,2015-06-01T23:30:00,39.95,-75.16,Homicide\n"
                         "c6,2015-06-06T02:30:00,39.95,-75.16,Motor Theft\n");
  ingest::LoadStats ok_stats;
  auto crimes = ingest::load_crimes(good, ok_stats);
  REQUIRE(crimes.size() == 3);
  CHECK(crimes[0].super == CrimeSuper::non_violent);
  CHECK(crimes[1].super == CrimeSuper::violent);
  CHECK(crimes[2].category == CrimeCategory::motor_theft);
  CHECK(crimes[0].week_minute == 570);
}

TEST_CASE("crime super-categories partition the ten categories") {
  int violent = 0, non_violent = 0;
  for (CrimeCategory c : kAllCrimeCategories) {
    (super_of(c) == CrimeSuper::violent ? violent : non_violent)++;
  }
  CHECK(violent == 4);
  CHECK(non_violent == 6);
  CHECK(super_of(CrimeCategory::homicide) == CrimeSuper::violent);
  CHECK(super_of(CrimeCategory::sexual) == CrimeSuper::violent);
  CHECK(super_of(CrimeCategory::robbery) == CrimeSuper::violent);
  CHECK(super_of(CrimeCategory::assault) == CrimeSuper::violent);
  CHECK(super_of(CrimeCategory::disorderly_conduct) == CrimeSuper::non_violent);
}

TEST_CASE("load_lots: zoning merges and rejection") {
  TempDir dir("lots");
  const std::string good_features =
      R"({"type":"Feature","properties":{"id":"L1","zoning":"Commercial Consumer"},"geometry":{"type":"Polygon","coordinates":[[[-75.2000,39.9000],[-75.1999,39.9000],[-75.1999,39.9001],[-75.2000,39.9001],[-75.2000,39.9000]]]}},
{"type":"Feature","properties":{"id":"L2","zoning":"Residential High","area_m2":420.5},"geometry":{"type":"Point","coordinates":[-75.19,39.905]}},
{"type":"Feature","properties":{"id":"L3","zoning":"Commercial / Residential Mixed","area_m2":100},"geometry":{"type":"Point","coordinates":[-75.18,39.905]}})";
  const std::string bad_feature =
      R"({"type":"Feature","properties":{"id":"L4","zoning":"Spaceport","area_m2":100},"geometry":{"type":"Point","coordinates":[-75.18,39.906]}})";

  auto path = write_file(dir / "lots.geojson", R"({"type":"FeatureCollection","features":[)" +
                                                   good_features + ",\n" + bad_feature + "]}");
  ingest::LoadStats stats;
  CHECK_THROWS_AS(ingest::load_lots(path, stats), ValidationError);  // 1 of 4 over budget
  CHECK(stats.skipped == 1);

  // Without the unknown zoning record everything loads.
  auto path2 = write_file(dir / "lots_ok.geojson",
                          R"({"type":"FeatureCollection","features":[)" + good_features + "]}");
  ingest::LoadStats stats2;
  auto loaded = ingest::load_lots(path2, stats2);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].zoning == Zoning::commercial);
  CHECK(loaded[0].area_m2 > 0);  // computed from the polygon
  CHECK(loaded[1].zoning == Zoning::residential);
  CHECK(loaded[1].area_m2 == doctest::Approx(420.5));
  CHECK(loaded[2].zoning == Zoning::mixed_use);
}

TEST_CASE("MultiPolygon features load as one unit with several parts") {
  TempDir dir("multipoly");
  auto geo = write_file(dir / "units.geojson", R"({"type":"FeatureCollection","features":[
{"type":"Feature","properties":{"id":"TWIN","level":"block"},"geometry":{"type":"MultiPolygon","coordinates":[
 [[[-75.20,39.90],[-75.19,39.90],[-75.19,39.91],[-75.20,39.91],[-75.20,39.90]]],
 [[[-75.17,39.90],[-75.16,39.90],[-75.16,39.91],[-75.17,39.91],[-75.17,39.90]]]]}}]})");
  auto pop = write_file(dir / "population.csv", "id,population\nTWIN,100\n");
  auto acs = write_file(dir / "acs.csv", "id,per_capita_income,b1,b2,b3,b4,b5,b6,b7\n");
  auto result = ingest::load_geounits(geo, pop, acs);
  REQUIRE(result.units.size() == 1);
  const GeoUnit& u = result.units[0];
  CHECK(u.shape.parts.size() == 2);
  CHECK(urb::geo::contains(u.shape, {-75.195, 39.905}));
  CHECK(urb::geo::contains(u.shape, {-75.165, 39.905}));
  CHECK_FALSE(urb::geo::contains(u.shape, {-75.18, 39.905}));  // the gap between parts
  // Area is the sum over parts: two squares of the same size.
  urb::geo::GeoPolygon one = u.shape.parts[0];
  CHECK(u.area_m2 == doctest::Approx(2 * urb::geo::planar_area_m2(one)).epsilon(1e-6));
}

TEST_CASE("zoning_from_raw covers the merges") {
  CHECK(zoning_from_raw("commercial business") == Zoning::commercial);
  CHECK(zoning_from_raw("Commercial Consumer") == Zoning::commercial);
  CHECK(zoning_from_raw("residential low") == Zoning::residential);
  CHECK(zoning_from_raw("RESIDENTIAL MEDIUM") == Zoning::residential);
  CHECK(zoning_from_raw("commercial / residential mixed") == Zoning::mixed_use);
  CHECK(zoning_from_raw("mixed use") == Zoning::mixed_use);
  CHECK(zoning_from_raw("cemetery") == Zoning::cemetery);
  CHECK_FALSE(zoning_from_raw("zeppelin hangar").has_value());
}

TEST_CASE("load_properties: future sale dates violate the tenure invariant") {
  TempDir dir("props");
  auto path = write_file(dir / "properties.csv",
                         "id,lat,lon,residential,last_sale_date\n"
                         "p1,39.95,-75.16,1,2010-04-10\n"
                         "p2,39.95,-75.16,0,2014-01-01\n"
                         "p3,39.95,-75.16,1,2016-06-01\n");  // after as_of
  ingest::LoadStats stats;
  CivilDate as_of{2015, 12, 31};
  CHECK_THROWS_AS(ingest::load_properties(path, as_of, stats), ValidationError);
  CHECK(stats.skipped == 1);

  auto path2 = write_file(dir / "ok.csv",
                          "id,lat,lon,residential,last_sale_date\n"
                          "p1,39.95,-75.16,1,2010-04-10\n"
                          "p2,39.95,-75.16,0,2014-01-01\n");
  ingest::LoadStats stats2;
  auto props = ingest::load_properties(path2, as_of, stats2);
  REQUIRE(props.size() == 2);
  CHECK(props[0].residential);
  CHECK_FALSE(props[1].residential);
  CHECK(props[0].last_sale_date == CivilDate{2010, 4, 10});
}

TEST_CASE("load_listings: uniqueness and hours payloads") {
  TempDir dir("listings");
  auto path = write_file(
      dir / "listings.jsonl",
      R"({"source":"A","source_id":"1","name":"Joe's Cafe","lat":39.95,"lon":-75.16,"categories":["cafe"],"hours":{"mon":["09:00-17:00"]}})"
      "\n"
      R"({"source":"B","source_id":"1","name":"Joes Cafe","lat":39.95,"lon":-75.16,"categories":["cafe"]})"
      "\n"
      R"({"source":"B","source_id":"1","name":"Duplicate Key","lat":39.95,"lon":-75.16,"categories":[]})"
      "\n");
  ingest::LoadStats stats;
  CHECK_THROWS_AS(ingest::load_listings(path, stats), ValidationError);  // dup key over budget
  CHECK(stats.skipped == 1);
  CHECK(stats.loaded == 2);
}

TEST_CASE("map_categories") {
  TempDir dir("catmap");
  auto path = write_file(dir / "category_map.csv",
                         "raw_category,business_type\n"
                         "bakery,Cafe\n"
                         "cafe,Cafe\n"
                         "meal_takeaway,Restaurant\n"
                         "bank,Institution\n"
                         "bar,Nightlife\n"
                         "deli,Restaurant\n"
                         "deli,Retail\n");
  auto map = ingest::load_category_map(path);

  CHECK(ingest::map_categories({"bakery"}, map) == mask_of(BusinessType::cafe));
  CHECK(ingest::map_categories({"meal_takeaway"}, map) == mask_of(BusinessType::restaurant));
  CHECK(ingest::map_categories({"bank", "bar"}, map) ==
        (mask_of(BusinessType::institution) | mask_of(BusinessType::nightlife)));
  // Many-to-many: one raw category can feed several types.
  CHECK(ingest::map_categories({"deli"}, map) ==
        (mask_of(BusinessType::restaurant) | mask_of(BusinessType::retail)));

  std::vector<std::string> warnings;
  CHECK(ingest::map_categories({"submarine_base"}, map, &warnings) ==
        mask_of(BusinessType::institution));
  CHECK(warnings.size() == 2);  // unmapped + default note

  auto bad = write_file(dir / "bad.csv", "raw_category,business_type\nbakery,Bakeshop\n");
  CHECK_THROWS_AS(ingest::load_category_map(bad), ValidationError);
}
