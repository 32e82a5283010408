#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace plmodel {

// Free-space path loss 20 log10(4 pi f d / c), f in GHz, d in metres.
double fspl(double f_ghz, double d_m);

/// Close-in reference-distance model parameters.
struct CiParams {
  double d0 = 1.0;
  double n = 2.0;
  double sigma_db = 0.0;
};

// FSPL(f, d0) + 10 n log10(d / d0) + chi_db. DomainError when d < d0.
double ci_pathloss(const CiParams& params, double f_ghz, double d_m, double chi_db = 0.0);

struct CiSample {
  double d_m;
  double f_ghz;
  double pl_db;
};

/// Closed-form minimum-sigma estimate anchored at FSPL(f, d0):
///   n = sum (PL_i - FSPL(f_i, d0)) D_i / sum D_i^2,  D_i = 10 log10(d_i / d0),
/// and sigma = sqrt(mean residual^2), the shadow-fading spread that n minimizes.
/// Each sample carries its own frequency, so multi-frequency data fits one
/// exponent. Throws DomainError on fewer than two samples, all distances
/// equal, or any d < d0.
CiParams ci_fit(std::span<const CiSample> samples, double d0 = 1.0);
CiParams ci_fit(std::span<const std::pair<double, double>> distance_pl, double f_ghz,
                double d0 = 1.0);

// Zero-mean Gaussian shadowing draws, deterministic in seed.
std::vector<double> shadow_sample(double sigma_db, std::uint64_t seed, std::size_t count);

struct Cost231Inputs {
  double f_mhz = 1500.0;
  double h_t = 30.0;
  double h_r = 1.5;
  double d_km = 1.0;
  double c_db = 0.0;  // suburban
};

enum class Cost231Warning { frequency_range, distance_range, tx_height_range, rx_height_range };

std::string to_string(Cost231Warning w);

struct Cost231Result {
  double pl_db = 0.0;
  std::vector<Cost231Warning> warnings;
};

/// COST-231 Hata, suburban (C = 0). Leaving the validity ranges
/// f 1500-2000 MHz, d 1-20 km, h_T 30-200 m, h_R 1-10 m produces warnings;
/// only non-positive inputs throw.
Cost231Result cost231_hata_suburban(const Cost231Inputs& in);

}  // namespace plmodel
