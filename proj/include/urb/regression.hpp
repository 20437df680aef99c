#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urb/domain.hpp"
#include "urb/metrics.hpp"

namespace urb::reg {

struct HuberOptions {
  double k = 1.345;          // threshold in units of scale (95% Gaussian efficiency)
  double tol = 1e-8;         // convergence on max |delta beta|
  int max_iter = 50;
  double mad_factor = 1.4826;  // MAD-to-sigma under normality
};

struct RegressionFit {
  std::vector<std::string> names;   // "intercept" first, then predictors
  std::vector<double> coef;
  std::vector<double> coef_se;
  std::vector<double> coef_t;
  std::vector<double> weights;      // final IRLS weights, in (0, 1]
  std::vector<double> residuals;    // y - X beta
  double scale = 0;                 // mad_factor * MAD of residuals
  double weighted_r = 0;            // sign(slope) * sqrt(weighted R^2); simple fits
  double weighted_r2 = 0;
  int iterations = 0;
  bool converged = false;
  int n = 0;
  int p = 0;  // predictor count excluding the intercept
};

// IRLS M-estimation with the Huber weight function; an intercept column is
// always prepended. Constant predictor columns duplicate the intercept and
// are dropped from the solve with a zero coefficient; any remaining rank
// deficiency throws NumericalError naming the collinear columns.
// Non-convergence is reported via the flag, not an error.
RegressionFit huber_fit(const std::vector<std::vector<double>>& predictors,
                        std::span<const double> y, const std::vector<std::string>& names,
                        const HuberOptions& opts = {});

// Pearson correlation with observation weights.
double weighted_pearson(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w);

enum class ModelSpec { pop, pop_income_poverty };
std::string to_string(ModelSpec spec);

struct UnitCrimeCounts {
  double violent = 0;
  double non_violent = 0;
};

struct ExcessCrimeRow {
  std::string unit_id;
  double excess_violent = 0;
  double excess_non_violent = 0;
};

struct ExcessResult {
  ModelSpec model = ModelSpec::pop;
  std::vector<ExcessCrimeRow> rows;
  RegressionFit violent_fit;
  RegressionFit non_violent_fit;
  std::vector<std::string> excluded_units;  // filtered out or missing predictors
};

// Residual crime beyond the robust-regression expectation, per unit. Only
// units passing the population filter and carrying every predictor of the
// chosen model enter the fit; the rest are listed in excluded_units.
ExcessResult excess_crime(std::span<const GeoUnit> units,
                          const std::map<std::string, UnitCrimeCounts>& counts, ModelSpec spec,
                          const metrics::PovertyWeights& weights = {},
                          const HuberOptions& opts = {});

struct AssociationRow {
  std::string predictor;
  std::string outcome;
  double r = 0;
  double t = 0;
  int n = 0;
  bool low_n = false;
};

// One simple robust regression per (predictor, outcome) cell: population
// measures against raw counts, economic measures against population-adjusted
// excess crime, land-use measures against fully adjusted excess crime.
std::vector<AssociationRow> association_report(std::span<const GeoUnit> units,
                                               const std::map<std::string, UnitCrimeCounts>& counts,
                                               std::span<const metrics::UnitMetricsRow> metrics_rows,
                                               const metrics::PovertyWeights& weights = {},
                                               const HuberOptions& opts = {}, int min_n = 10);

}  // namespace urb::reg
