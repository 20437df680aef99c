#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "urb/csv.hpp"
#include "urb/ingest.hpp"
#include "urb/pipeline.hpp"
#include "urb/synth.hpp"

using namespace urb;
using nlohmann::json;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

RunConfig config_for(const std::filesystem::path& city, const std::filesystem::path& out) {
  RunConfig config = default_config();
  config.paths.geounits = (city / "geounits.geojson").string();
  config.paths.population = (city / "population.csv").string();
  config.paths.acs = (city / "acs.csv").string();
  config.paths.crimes = (city / "crimes.csv").string();
  config.paths.lots = (city / "lots.geojson").string();
  config.paths.properties = (city / "properties.csv").string();
  config.paths.listings = (city / "listings.jsonl").string();
  config.paths.category_map = (city / "category_map.csv").string();
  config.paths.out_dir = out.string();
  config.as_of_date = "2015-12-31";
  return config;
}

}  // namespace

TEST_CASE("regress recovers planted crime coefficients within two standard errors") {
  TempDir dir("coef_recovery");
  synth::SynthSpec spec;
  spec.seed = 2105;
  spec.blocks_per_side = 30;
  spec.group_side = 3;  // 100 block groups
  spec.crime_c0 = 2.0;
  spec.crime_c_pop = 0.08;
  spec.crime_c_income = -0.25;  // per $1000
  spec.crime_c_poverty = 30.0;
  spec.crime_noise_sd = 2.0;
  spec.income_sd = 9000;
  synth::generate(spec, dir / "city");
  json gt = json::parse(read_file(dir / "city" / "ground_truth.json"));

  RunConfig config = config_for(dir / "city", dir / "out");
  pipeline::run_ingest(config);
  pipeline::Dataset ds = pipeline::load_bundle(config);
  auto counts = pipeline::count_crimes_by_unit(ds.units, UnitLevel::block_group, ds.crimes);

  std::vector<GeoUnit> groups;
  for (const GeoUnit& u : ds.units) {
    if (u.level == UnitLevel::block_group) groups.push_back(u);
  }
  auto excess = reg::excess_crime(groups, counts, reg::ModelSpec::pop_income_poverty);
  REQUIRE(excess.violent_fit.converged);
  REQUIRE(excess.non_violent_fit.converged);

  // The sidecar records total-crime coefficients at block-group level; each
  // super-category inherits its share of the total.
  const auto& model = gt["crime_model"];
  std::array<double, 4> group_coef = {
      model["group_c0"].get<double>(),
      model["group_c_pop"].get<double>(),
      model["group_c_income_per_1000"].get<double>() / 1000.0,  // fit uses dollars
      model["group_c_poverty"].get<double>(),
  };
  auto check_fit = [&](const reg::RegressionFit& fit, double share) {
    for (int j = 0; j < 4; ++j) {
      CAPTURE(j);
      CAPTURE(fit.coef[j]);
      CAPTURE(share * group_coef[j]);
      CHECK(std::abs(fit.coef[j] - share * group_coef[j]) <= 2.0 * fit.coef_se[j]);
    }
  };
  check_fit(excess.violent_fit, 0.35);
  check_fit(excess.non_violent_fit, 0.65);
}

TEST_CASE("null city: associations stay inside the sampling bound") {
  TempDir dir("null_assoc");
  synth::SynthSpec spec;
  spec.seed = 2203;
  spec.blocks_per_side = 40;
  spec.group_side = 2;  // 400 block groups
  spec.crime_c0 = 20.0;
  spec.crime_c_pop = 0.0;  // crime independent of everything
  spec.crime_noise_sd = 4.0;
  spec.businesses_per_block = 0.5;
  spec.properties_per_block = 2;
  synth::generate(spec, dir / "city");

  RunConfig config = config_for(dir / "city", dir / "out");
  pipeline::run_ingest(config);
  pipeline::Dataset ds = pipeline::load_bundle(config);
  auto counts = pipeline::count_crimes_by_unit(ds.units, UnitLevel::block_group, ds.crimes);
  auto metrics_rows = metrics::compute_unit_metrics(ds.units, ds.lots);
  std::vector<GeoUnit> groups;
  for (const GeoUnit& u : ds.units) {
    if (u.level == UnitLevel::block_group) groups.push_back(u);
  }
  auto rows = reg::association_report(groups, counts, metrics_rows);
  REQUIRE(rows.size() == 14);
  for (const auto& row : rows) {
    CAPTURE(row.predictor);
    CAPTURE(row.outcome);
    CHECK(row.n >= 350);  // a few groups drop below the 400-person filter
    CHECK(std::abs(row.r) < 0.1);
  }
}

TEST_CASE("planted pop-driven crime leaves residuals orthogonal to population") {
  TempDir dir("resid_orth");
  synth::SynthSpec spec;
  spec.seed = 2301;
  spec.blocks_per_side = 20;
  spec.group_side = 2;
  spec.crime_c0 = 0.0;
  spec.crime_c_pop = 0.1;
  spec.crime_noise_sd = 1.0;
  synth::generate(spec, dir / "city");

  RunConfig config = config_for(dir / "city", dir / "out");
  pipeline::run_ingest(config);
  pipeline::Dataset ds = pipeline::load_bundle(config);
  auto counts = pipeline::count_crimes_by_unit(ds.units, UnitLevel::block_group, ds.crimes);
  std::vector<GeoUnit> groups;
  for (const GeoUnit& u : ds.units) {
    if (u.level == UnitLevel::block_group && u.passes_population_filter) groups.push_back(u);
  }
  auto excess = reg::excess_crime(groups, counts, reg::ModelSpec::pop);
  std::vector<double> pop, resid_v, resid_nv, w(excess.rows.size(), 1.0);
  for (size_t i = 0; i < excess.rows.size(); ++i) {
    pop.push_back(static_cast<double>(*groups[i].population));
    resid_v.push_back(excess.rows[i].excess_violent);
    resid_nv.push_back(excess.rows[i].excess_non_violent);
  }
  CHECK(std::abs(reg::weighted_pearson(pop, resid_v, w)) < 0.05);
  CHECK(std::abs(reg::weighted_pearson(pop, resid_nv, w)) < 0.05);
}

TEST_CASE("metrics stage emits vibrancy rows for queried locations") {
  TempDir dir("vibrancy_csv");
  synth::SynthSpec spec;
  spec.seed = 2404;
  spec.blocks_per_side = 4;
  spec.businesses_per_block = 3;
  synth::generate(spec, dir / "city");

  RunConfig config = config_for(dir / "city", dir / "out");
  write_file(dir / "locations.csv", "id,lat,lon\nq1,39.9507,-75.1593\nq2,39.9512,-75.1588\n");
  config.paths.locations = (dir / "locations.csv").string();
  pipeline::run_ingest(config);
  pipeline::run_metrics(config);

  csv::Table t = csv::read_file(dir / "out" / "vibrancy.csv");
  REQUIRE(t.header.size() == 3 + 2 * kNumBusinessTypes + 1);
  CHECK(t.header[0] == "location_id");
  CHECK(t.header[3] == "count_Cafe");
  CHECK(t.header.back() == "tenure_years");
  // One row per location per configured window.
  CHECK(t.rows.size() == 2 * config.windows.size());

  csv::Table consensus = csv::read_file(dir / "out" / "consensus_hours.csv");
  CHECK(consensus.rows.size() == config.windows.size() * kNumBusinessTypes);
}
