#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plmodel {

// All metrics throw ValidationError on empty or mismatched inputs.
double rmse(std::span<const double> y, std::span<const double> yhat);
// Percent. DomainError when any y_i is zero.
double mape(std::span<const double> y, std::span<const double> yhat);
// Natural logarithm. DomainError when any value is <= -1.
double msle(std::span<const double> y, std::span<const double> yhat);
// Clamped to [-1, 1]. DomainError when either sequence is constant.
double pearson(std::span<const double> y, std::span<const double> yhat);

struct MetricRow {
  std::size_t count = 0;
  double rmse_db = 0.0;
  double mape_pct = 0.0;
  double msle = 0.0;
  std::optional<double> rho;  // absent for constant or single-sample strata
};

MetricRow metric_row(std::span<const double> y, std::span<const double> yhat);

/// LoS, NLoS and pooled Total rows. An empty stratum is absent.
struct EvaluationReport {
  std::optional<MetricRow> los;
  std::optional<MetricRow> nlos;
  std::optional<MetricRow> total;
};

EvaluationReport evaluate_stratified(std::span<const double> y, std::span<const double> yhat,
                                     const std::vector<bool>& los_flags);

std::string report_table(const EvaluationReport& report, const std::string& title = {});
std::string report_csv(const EvaluationReport& report);

}  // namespace plmodel
