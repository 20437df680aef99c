#include "urb/regression.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "urb/error.hpp"
#include "urb/log.hpp"

namespace urb::reg {

namespace {

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return (v[mid - 1] + hi) / 2.0;
}

double mad(const Eigen::VectorXd& r) {
  std::vector<double> v(r.data(), r.data() + r.size());
  double med = median_inplace(v);
  for (double& x : v) x = std::abs(x - med);
  return median_inplace(v);
}

}  // namespace

RegressionFit huber_fit(const std::vector<std::vector<double>>& predictors,
                        std::span<const double> y, const std::vector<std::string>& names,
                        const HuberOptions& opts) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(predictors.size());
  if (names.size() != predictors.size()) {
    throw ValidationError("huber_fit: one name per predictor column required");
  }
  for (const auto& col : predictors) {
    if (static_cast<int>(col.size()) != n) {
      throw ValidationError("huber_fit: predictor column length mismatch");
    }
  }
  if (n <= p + 1) {
    throw ValidationError("huber_fit: need more observations than coefficients");
  }

  RegressionFit fit;
  fit.n = n;
  fit.p = p;
  fit.names.push_back("intercept");
  for (const auto& name : names) fit.names.push_back(name);

  // Constant predictors duplicate the intercept; they are dropped from the
  // solve (coefficient 0) so degenerate designs still fit through the
  // intercept. Collinearity among the remaining columns is an error.
  std::vector<int> active;  // indices into predictors
  for (int j = 0; j < p; ++j) {
    auto [lo, hi] = std::minmax_element(predictors[j].begin(), predictors[j].end());
    if (*lo != *hi) active.push_back(j);
  }
  const int pa = static_cast<int>(active.size());

  Eigen::MatrixXd X(n, pa + 1);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    Y(i) = y[i];
  }
  for (int j = 0; j < pa; ++j) {
    for (int i = 0; i < n; ++i) X(i, j + 1) = predictors[active[j]][i];
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < pa + 1) {
      auto perm = qr.colsPermutation().indices();
      std::string collinear;
      for (int j = qr.rank(); j < pa + 1; ++j) {
        int col = perm[j];
        if (!collinear.empty()) collinear += ", ";
        collinear += col == 0 ? fit.names[0] : names[active[col - 1]];
      }
      throw NumericalError("huber_fit: rank-deficient design; collinear columns: " + collinear);
    }
  }

  // A scale this far below the response magnitude is an exact fit
  // numerically; the MAD estimate is no longer meaningful there.
  double y_mag = Y.cwiseAbs().maxCoeff();
  const double scale_floor = 1e-12 * (y_mag > 0 ? y_mag : 1.0);

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pa + 1);
  double scale = 0;
  bool converged = false;
  int iter = 0;
  while (iter < opts.max_iter) {
    ++iter;
    Eigen::VectorXd sw = w.array().sqrt();
    Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    Eigen::VectorXd Yw = sw.asDiagonal() * Y;
    Eigen::VectorXd beta_new = Xw.colPivHouseholderQr().solve(Yw);
    double delta = (beta_new - beta).cwiseAbs().maxCoeff();
    beta = beta_new;

    Eigen::VectorXd r = Y - X * beta;
    scale = opts.mad_factor * mad(r);
    if (scale <= scale_floor || !std::isfinite(scale)) {
      // Majority of residuals vanished: keep the current weights and stop.
      converged = true;
      break;
    }
    double threshold = opts.k * scale;
    for (int i = 0; i < n; ++i) {
      double a = std::abs(r(i));
      w(i) = a <= threshold ? 1.0 : threshold / a;
    }
    if (iter > 1 && delta < opts.tol) {
      converged = true;
      break;
    }
  }

  Eigen::VectorXd resid = Y - X * beta;
  fit.coef.assign(p + 1, 0.0);
  fit.coef_se.assign(p + 1, 0.0);
  fit.coef_t.assign(p + 1, 0.0);
  fit.coef[0] = beta(0);
  for (int j = 0; j < pa; ++j) fit.coef[active[j] + 1] = beta(j + 1);
  fit.weights.assign(w.data(), w.data() + n);
  fit.residuals.assign(resid.data(), resid.data() + n);
  fit.scale = scale;
  fit.iterations = iter;
  fit.converged = converged;

  // Classic weighted-LS standard errors with the final weights.
  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  double wrss = (sw.asDiagonal() * resid).squaredNorm();
  double sigma2 = wrss / std::max(1, n - (pa + 1));
  Eigen::MatrixXd xtx_inv = (Xw.transpose() * Xw).ldlt().solve(
      Eigen::MatrixXd::Identity(pa + 1, pa + 1));
  auto set_se = [&](int dest, int src) {
    double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(src, src)));
    fit.coef_se[dest] = se;
    fit.coef_t[dest] = se > 0 ? fit.coef[dest] / se : 0.0;
  };
  set_se(0, 0);
  for (int j = 0; j < pa; ++j) set_se(active[j] + 1, j + 1);

  double wsum = w.sum();
  double ybar = (w.asDiagonal() * Y).sum() / wsum;
  double sst = 0;
  for (int i = 0; i < n; ++i) sst += w(i) * (Y(i) - ybar) * (Y(i) - ybar);
  fit.weighted_r2 = sst > 0 ? std::max(0.0, 1.0 - wrss / sst) : 0.0;
  double r = std::sqrt(fit.weighted_r2);
  if (p >= 1 && fit.coef[1] < 0) r = -r;
  fit.weighted_r = r;
  return fit;
}

double weighted_pearson(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size() || x.empty()) {
    throw ValidationError("weighted_pearson: length mismatch");
  }
  double wsum = 0, xbar = 0, ybar = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    wsum += w[i];
    xbar += w[i] * x[i];
    ybar += w[i] * y[i];
  }
  xbar /= wsum;
  ybar /= wsum;
  double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - xbar, dy = y[i] - ybar;
    sxx += w[i] * dx * dx;
    syy += w[i] * dy * dy;
    sxy += w[i] * dx * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

std::string to_string(ModelSpec spec) {
  return spec == ModelSpec::pop ? "pop" : "pop+income+poverty";
}

ExcessResult excess_crime(std::span<const GeoUnit> units,
                          const std::map<std::string, UnitCrimeCounts>& counts, ModelSpec spec,
                          const metrics::PovertyWeights& weights, const HuberOptions& opts) {
  ExcessResult result;
  result.model = spec;

  std::vector<const GeoUnit*> usable;
  for (const GeoUnit& u : units) {
    if (!u.passes_population_filter) {
      result.excluded_units.push_back(u.id);
      continue;
    }
    if (spec == ModelSpec::pop_income_poverty &&
        (!u.per_capita_income || !u.poverty_brackets)) {
      result.excluded_units.push_back(u.id);
      log::debug("excess_crime: unit ", u.id, " missing economic predictors, excluded");
      continue;
    }
    usable.push_back(&u);
  }

  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  std::vector<double> yv, ynv;
  names.push_back("population");
  cols.emplace_back();
  if (spec == ModelSpec::pop_income_poverty) {
    names.push_back("per_capita_income");
    names.push_back("poverty");
    cols.emplace_back();
    cols.emplace_back();
  }
  for (const GeoUnit* u : usable) {
    cols[0].push_back(static_cast<double>(u->population.value_or(0)));
    if (spec == ModelSpec::pop_income_poverty) {
      cols[1].push_back(*u->per_capita_income);
      cols[2].push_back(poverty_index(*u->poverty_brackets, weights));
    }
    auto it = counts.find(u->id);
    yv.push_back(it != counts.end() ? it->second.violent : 0.0);
    ynv.push_back(it != counts.end() ? it->second.non_violent : 0.0);
  }

  result.violent_fit = huber_fit(cols, yv, names, opts);
  result.non_violent_fit = huber_fit(cols, ynv, names, opts);
  result.rows.reserve(usable.size());
  for (size_t i = 0; i < usable.size(); ++i) {
    result.rows.push_back(
        {usable[i]->id, result.violent_fit.residuals[i], result.non_violent_fit.residuals[i]});
  }
  return result;
}

namespace {

struct Cell {
  std::string predictor;
  std::string outcome;
  std::vector<double> x, y;
};

AssociationRow fit_cell(Cell& cell, const HuberOptions& opts, int min_n) {
  AssociationRow row;
  row.predictor = cell.predictor;
  row.outcome = cell.outcome;
  row.n = static_cast<int>(cell.x.size());
  row.low_n = row.n < min_n;
  if (row.n < 3) return row;  // not enough data for a slope at all
  RegressionFit fit = huber_fit({cell.x}, cell.y, {cell.predictor}, opts);
  row.r = weighted_pearson(cell.x, cell.y, fit.weights);
  row.t = fit.coef_t[1];
  return row;
}

}  // namespace

std::vector<AssociationRow> association_report(std::span<const GeoUnit> units,
                                               const std::map<std::string, UnitCrimeCounts>& counts,
                                               std::span<const metrics::UnitMetricsRow> metrics_rows,
                                               const metrics::PovertyWeights& weights,
                                               const HuberOptions& opts, int min_n) {
  std::map<std::string, const metrics::UnitMetricsRow*> metrics_by_id;
  for (const auto& m : metrics_rows) metrics_by_id[m.unit_id] = &m;

  ExcessResult excess_pop = excess_crime(units, counts, ModelSpec::pop, weights, opts);
  ExcessResult excess_full =
      excess_crime(units, counts, ModelSpec::pop_income_poverty, weights, opts);
  std::map<std::string, const ExcessCrimeRow*> pop_by_id, full_by_id;
  for (const auto& r : excess_pop.rows) pop_by_id[r.unit_id] = &r;
  for (const auto& r : excess_full.rows) full_by_id[r.unit_id] = &r;

  std::vector<Cell> cells;
  auto add_cells = [&](const std::string& predictor, auto predictor_value,
                       const std::string& outcome_base, auto outcome_value) {
    for (const char* side : {"violent", "non_violent"}) {
      Cell cell;
      cell.predictor = predictor;
      cell.outcome = outcome_base.empty() ? side : outcome_base + "_" + side;
      for (const GeoUnit& u : units) {
        if (!u.passes_population_filter) continue;
        auto x = predictor_value(u);
        auto y = outcome_value(u, std::string(side) == "violent");
        if (!x || !y) continue;
        cell.x.push_back(*x);
        cell.y.push_back(*y);
      }
      cells.push_back(std::move(cell));
    }
  };

  auto raw_count = [&](const GeoUnit& u, bool violent) -> std::optional<double> {
    auto it = counts.find(u.id);
    double v = it != counts.end() ? (violent ? it->second.violent : it->second.non_violent) : 0.0;
    return v;
  };
  auto excess_of = [](auto& by_id) {
    return [&by_id](const GeoUnit& u, bool violent) -> std::optional<double> {
      auto it = by_id.find(u.id);
      if (it == by_id.end()) return std::nullopt;
      return violent ? it->second->excess_violent : it->second->excess_non_violent;
    };
  };
  auto metric_of = [&](auto field) {
    return [&, field](const GeoUnit& u) -> std::optional<double> {
      auto it = metrics_by_id.find(u.id);
      if (it == metrics_by_id.end()) return std::nullopt;
      return field(*it->second);
    };
  };

  add_cells(
      "pop_count",
      [](const GeoUnit& u) -> std::optional<double> {
        if (!u.population) return std::nullopt;
        return static_cast<double>(*u.population);
      },
      "", raw_count);
  add_cells(
      "pop_density",
      metric_of([](const metrics::UnitMetricsRow& m) { return m.population_density; }), "",
      raw_count);
  add_cells(
      "per_capita_income",
      [](const GeoUnit& u) -> std::optional<double> { return u.per_capita_income; }, "excess",
      excess_of(pop_by_id));
  add_cells(
      "poverty", metric_of([](const metrics::UnitMetricsRow& m) { return m.poverty; }), "excess",
      excess_of(pop_by_id));
  add_cells(
      "vacant_prop", metric_of([](const metrics::UnitMetricsRow& m) { return m.vacant_prop; }),
      "excess_adj", excess_of(full_by_id));
  add_cells(
      "mixeduse_prop", metric_of([](const metrics::UnitMetricsRow& m) { return m.mixeduse_prop; }),
      "excess_adj", excess_of(full_by_id));
  add_cells(
      "comres_prop", metric_of([](const metrics::UnitMetricsRow& m) { return m.comres_prop; }),
      "excess_adj", excess_of(full_by_id));

  std::vector<AssociationRow> rows;
  rows.reserve(cells.size());
  for (Cell& cell : cells) {
    rows.push_back(fit_cell(cell, opts, min_n));
  }
  return rows;
}

}  // namespace urb::reg
