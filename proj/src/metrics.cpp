#include "plmodel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"

namespace plmodel {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat, const char* name) {
  if (y.size() != yhat.size()) {
    throw ValidationError(std::string(name) + ": length mismatch (" + std::to_string(y.size()) +
                          " vs " + std::to_string(yhat.size()) + ")");
  }
  if (y.empty()) throw ValidationError(std::string(name) + ": empty input");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

double mape(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "mape");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw DomainError("mape: ground truth value " + std::to_string(i) + " is zero");
    s += std::abs(y[i] - yhat[i]) / std::abs(y[i]);
  }
  return 100.0 * s / static_cast<double>(y.size());
}

double msle(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "msle");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] <= -1.0 || yhat[i] <= -1.0) {
      throw DomainError("msle: value at index " + std::to_string(i) + " is <= -1");
    }
    const double d = std::log1p(y[i]) - std::log1p(yhat[i]);
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "pearson");
  if (y.size() < 2) throw DomainError("pearson: needs at least two samples");
  const double my = mean(y);
  const double mh = mean(yhat);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my;
    const double b = yhat[i] - mh;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MetricRow metric_row(std::span<const double> y, std::span<const double> yhat) {
  MetricRow row;
  row.count = y.size();
  row.rmse_db = rmse(y, yhat);
  row.mape_pct = mape(y, yhat);
  row.msle = msle(y, yhat);
  try {
    row.rho = pearson(y, yhat);
  } catch (const DomainError&) {
    row.rho.reset();
  }
  return row;
}

EvaluationReport evaluate_stratified(std::span<const double> y, std::span<const double> yhat,
                                     const std::vector<bool>& los_flags) {
  if (y.size() != yhat.size() || y.size() != los_flags.size()) {
    throw ValidationError("evaluate: length mismatch between targets, predictions and flags");
  }
  EvaluationReport report;
  if (y.empty()) return report;
  std::vector<double> ly, lh, ny, nh;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (los_flags[i]) {
      ly.push_back(y[i]);
      lh.push_back(yhat[i]);
    } else {
      ny.push_back(y[i]);
      nh.push_back(yhat[i]);
    }
  }
  if (!ly.empty()) report.los = metric_row(ly, lh);
  if (!ny.empty()) report.nlos = metric_row(ny, nh);
  report.total = metric_row(y, yhat);
  return report;
}

namespace {

struct NamedRow {
  const char* name;
  const std::optional<MetricRow>* row;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string report_table(const EvaluationReport& report, const std::string& title) {
  const NamedRow rows[] = {{"LoS", &report.los}, {"NLoS", &report.nlos}, {"Total", &report.total}};
  std::string out;
  if (!title.empty()) out += title + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %8s %10s %10s %12s %8s\n", "", "count", "RMSE(dB)",
                "MAPE(%)", "MSLE(ln)", "rho");
  out += line;
  for (const NamedRow& r : rows) {
    if (!*r.row) {
      std::snprintf(line, sizeof line, "%-6s %8s\n", r.name, "-");
    } else {
      const MetricRow& m = **r.row;
      std::snprintf(line, sizeof line, "%-6s %8zu %10.3f %10.3f %12.4e %8s\n", r.name, m.count,
                    m.rmse_db, m.mape_pct, m.msle, m.rho ? fixed(*m.rho, 4).c_str() : "-");
    }
    out += line;
  }
  return out;
}

std::string report_csv(const EvaluationReport& report) {
  const NamedRow rows[] = {{"LoS", &report.los}, {"NLoS", &report.nlos}, {"Total", &report.total}};
  std::string out = "stratum,count,rmse_db,mape_pct,msle,rho\n";
  for (const NamedRow& r : rows) {
    if (!*r.row) continue;
    const MetricRow& m = **r.row;
    out += std::string(r.name) + ',' + std::to_string(m.count) + ',' + format_double(m.rmse_db) + ',' +
           format_double(m.mape_pct) + ',' + format_double(m.msle) + ',' + format_optional(m.rho) + '\n';
  }
  return out;
}

}  // namespace plmodel
