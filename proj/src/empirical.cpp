#include "plmodel/empirical.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "plmodel/error.hpp"

namespace plmodel {

namespace {
constexpr double kC = 299792458.0;
}

double fspl(double f_ghz, double d_m) {
  if (!(f_ghz > 0.0) || !(d_m > 0.0)) throw DomainError("fspl: frequency and distance must be > 0");
  return 20.0 * std::log10(4.0 * std::numbers::pi * f_ghz * d_m * 1e9 / kC);
}

double ci_pathloss(const CiParams& params, double f_ghz, double d_m, double chi_db) {
  if (!(params.d0 > 0.0)) throw DomainError("ci_pathloss: d0 must be > 0");
  if (!(d_m >= params.d0)) throw DomainError("ci_pathloss: distance below the reference distance");
  return fspl(f_ghz, params.d0) + 10.0 * params.n * std::log10(d_m / params.d0) + chi_db;
}

CiParams ci_fit(std::span<const CiSample> samples, double d0) {
  if (!(d0 > 0.0)) throw DomainError("ci_fit: d0 must be > 0");
  if (samples.size() < 2) throw DomainError("ci_fit: need at least two samples");
  bool distinct = false;
  for (const CiSample& s : samples) {
    if (!(s.d_m >= d0)) throw DomainError("ci_fit: sample distance below d0");
    if (s.d_m != samples.front().d_m) distinct = true;
  }
  if (!distinct) throw DomainError("ci_fit: all sample distances are equal");

  double num = 0.0;
  double den = 0.0;
  for (const CiSample& s : samples) {
    const double big_d = 10.0 * std::log10(s.d_m / d0);
    num += (s.pl_db - fspl(s.f_ghz, d0)) * big_d;
    den += big_d * big_d;
  }
  if (den == 0.0) throw DomainError("ci_fit: every sample sits at the reference distance");
  CiParams out{d0, num / den, 0.0};

  double ss = 0.0;
  for (const CiSample& s : samples) {
    const double r = s.pl_db - ci_pathloss(out, s.f_ghz, s.d_m);
    ss += r * r;
  }
  out.sigma_db = std::sqrt(ss / static_cast<double>(samples.size()));
  return out;
}

CiParams ci_fit(std::span<const std::pair<double, double>> distance_pl, double f_ghz, double d0) {
  std::vector<CiSample> samples;
  samples.reserve(distance_pl.size());
  for (const auto& [d, pl] : distance_pl) samples.push_back({d, f_ghz, pl});
  return ci_fit(samples, d0);
}

std::vector<double> shadow_sample(double sigma_db, std::uint64_t seed, std::size_t count) {
  if (!(sigma_db >= 0.0)) throw DomainError("shadow_sample: sigma must be >= 0");
  std::vector<double> out(count, 0.0);
  if (sigma_db == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma_db);
  for (double& v : out) v = dist(rng);
  return out;
}

std::string to_string(Cost231Warning w) {
  switch (w) {
    case Cost231Warning::frequency_range:
      return "frequency outside 1500-2000 MHz";
    case Cost231Warning::distance_range:
      return "distance outside 1-20 km";
    case Cost231Warning::tx_height_range:
      return "transmitter height outside 30-200 m";
    case Cost231Warning::rx_height_range:
      return "receiver height outside 1-10 m";
  }
  return "unknown";
}

Cost231Result cost231_hata_suburban(const Cost231Inputs& in) {
  if (!(in.f_mhz > 0.0 && in.h_t > 0.0 && in.h_r > 0.0 && in.d_km > 0.0)) {
    throw DomainError("cost231: frequency, heights, and distance must be > 0");
  }
  Cost231Result out;
  if (in.f_mhz < 1500.0 || in.f_mhz > 2000.0) out.warnings.push_back(Cost231Warning::frequency_range);
  if (in.d_km < 1.0 || in.d_km > 20.0) out.warnings.push_back(Cost231Warning::distance_range);
  if (in.h_t < 30.0 || in.h_t > 200.0) out.warnings.push_back(Cost231Warning::tx_height_range);
  if (in.h_r < 1.0 || in.h_r > 10.0) out.warnings.push_back(Cost231Warning::rx_height_range);

  const double log_f = std::log10(in.f_mhz);
  const double log_ht = std::log10(in.h_t);
  const double a_hr = (1.1 * log_f - 0.7) * in.h_r - (1.56 * log_f - 0.8);
  out.pl_db = 46.3 + 33.9 * log_f - 13.82 * log_ht - a_hr +
              (44.9 - 6.55 * log_ht) * std::log10(in.d_km) + in.c_db;
  return out;
}

}  // namespace plmodel
