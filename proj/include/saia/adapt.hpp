#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saia/integrator.hpp"
#include "saia/model.hpp"

namespace saia {

/// Pre-tabulated map from dimensionless step size hbar to the minimax-optimal
/// integration coefficient b for the k-stage family.
struct BOptTable {
  int stages = 2;
  std::vector<double> hbar;    // increasing, spanning (0, 2k]
  std::vector<double> b_opt;

  double max_hbar() const { return hbar.empty() ? 0.0 : hbar.back(); }
};

/// b minimizing max_{0<h<hbar} rho_k(h, b) for each grid point; a paired via the
/// hyperbola for k=3. The grid is geometrically refined near 2k.
BOptTable tabulate_bopt(int k, int n_grid = 2000);

struct BOptLookup {
  double b = 0.0;
  double a = 0.0;  // 0 for k=2
  bool clamped = false;
};

/// Linear interpolation between bracketing grid points; hbar beyond the table is
/// clamped to the Verlet-family coefficient with `clamped` set.
BOptLookup lookup_bopt(const BOptTable& table, double hbar);

/// CSV persistence, header "h,b,a", 9-decimal fixed output.
void save_bopt_table(const BOptTable& table, const std::string& path);
BOptTable load_bopt_table(const std::string& path);
/// Loads `dir/bopt<k>_<n_grid>.csv` when present, otherwise tabulates and saves.
BOptTable load_or_tabulate(int k, int n_grid, const std::string& dir);

/// Verlet-family coefficient b for the k-stage family (1/4 or 1/6).
double b_verlet(int k);
/// Small-h optimizer: root of the leading numerator coefficient of rho_k.
double b_min_error(int k);

/// E^D[Delta H] ~= 4 pi (1 - AR)^2.
double expected_energy_error_from_ar(double ar);

enum class NondimMode { s_plain, s_omega_plain, s_omega_sigma };

struct FittingResult {
  double s = 1.0;
  double s_omega = 1.0;
  NondimMode mode = NondimMode::s_plain;
  double stability_limit = 0.0;  // dimensional Delta t_SL for the configured k
  double ar_burnin = 0.0;
  double e_dh = 0.0;             // estimated E^D_VV[Delta H]
  double dt_vv = 0.0;
  int dimension = 0;
  bool sigma_fallback = false;   // Eq. with (omega_max - sigma) undefined, plain form used
};

/// S = max(1, (2/(omega_max dt_vv)) (2 pi (1-AR)^2 / D)^(1/6)) and the
/// frequency-weighted variant with sum_j omega_j^6. Mode and SL are left unset.
FittingResult fitting_factors(double ar, double dt_vv, int dimension,
                              const FrequencySummary& freq, bool want_omega_mode);

NondimMode select_mode(bool i_omega, double s, double sigma, double sigma_threshold = 1.0);

/// Dimensionless counterpart hbar of the dimensional step size dt under the
/// selected mode.
double nondimensionalize(double dt, const FittingResult& fit, const FrequencySummary& freq);

/// SL = 2k / (S_f omega_max), or 2k / (S_omega (omega_max - sigma)) in the
/// sigma-corrected mode (falling back to the plain form when omega_max <= sigma).
double estimate_stability_limit(int k, FittingResult& fit, const FrequencySummary& freq);

}  // namespace saia
