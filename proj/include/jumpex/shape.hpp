#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jumpex/clocks.hpp"
#include "jumpex/configuration.hpp"
#include "jumpex/hopflax.hpp"
#include "jumpex/rates.hpp"

namespace jumpex {

/// Lattice index [n x]. The 1e-9 nudge keeps grid points that sit on the
/// 1/n lattice (x = -1.4, n = 1000) from rounding down a whole site.
Index grid_index(std::int64_t n, double x);

/// One step-initial run, read at several macroscopic times.
struct StepSample {
  std::vector<double> t_macro;
  /// scaled[q][k] = xi([n x_k], n t_macro[q]) / n
  std::vector<std::vector<double>> scaled;
  Index window_lo = 0;
  /// The leftmost tracked particle never moved.
  bool left_quiet = true;
  std::size_t epochs = 0;
};

/// Runs the step configuration (particles i <= 0 at i) on the window
/// [-M, 0], M = ceil(n |x_min|) + ceil(B0 n t_max), which is exact on the
/// left because no particle ever reads the one behind it. t_macro must be
/// sorted. Throws Error(WindowTooSmall) ("enlarge window") when the left
/// edge moved.
StepSample simulate_xi_step(const RateTable& rates, std::int64_t n, const std::vector<double>& t_macro,
                            const std::vector<double>& x_grid, StreamSeed seed);

struct ShapeEstimate {
  std::vector<double> x_grid;
  std::vector<double> g_raw;     // replica mean of n^{-1} xi([n x], n t)
  std::vector<double> g_hat;     // after convexify
  std::vector<double> stderr_;   // standard error of the mean
  std::vector<double> median;
  std::int64_t n = 0;
  double t_macro = 1.0;
  double t_phys = 0.0;
  std::size_t replicas = 0;
  RateTable rates;
  double projection_displacement = 0.0;
  Index window_lo = 0;
  bool left_quiet = true;
  std::size_t epochs = 0;
};

/// Replica means of n^{-1} xi([n x], n t) for every t in t_macro, all read
/// from the same runs. Replica r uses StreamSeed{master, r}. Needs
/// replicas >= 2.
std::vector<ShapeEstimate> estimate_gamma(const RateTable& rates, std::int64_t n, const std::vector<double>& x_grid,
                                          const std::vector<double>& t_macro, std::size_t replicas,
                                          std::uint64_t master);

/// estimate_gamma at t = 1, where gamma(x, 1) = g(x).
ShapeEstimate estimate_g(const RateTable& rates, std::int64_t n, const std::vector<double>& x_grid,
                         std::size_t replicas, std::uint64_t master);

/// Greatest convex minorant on the grid, then slope floor 1 applied from the
/// right. Returns the projected values; `displacement` gets max |change|.
std::vector<double> convexify_values(const std::vector<double>& x, const std::vector<double>& y,
                                     double* displacement = nullptr);

/// Projects g_raw into g_hat and records the displacement.
ShapeEstimate convexify(ShapeEstimate raw);

/// The convexified estimate as a tabulated g (its grid must end at 0).
ConvexFnTable to_convex_table(const ShapeEstimate& est);

struct PropertyCheck {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;
  /// Largest amount by which the inequality was missed (negative: slack).
  double worst = 0.0;
};

struct ShapeReport {
  std::vector<PropertyCheck> checks;

  bool all_passed() const;
  const PropertyCheck* find(const std::string& name) const;
};

/// Checks g_hat of `est` (gamma at est.t_macro) for the envelope
/// x <= g <= x + B1 t, monotonicity, convexity, slopes >= 1 - tol and, when
/// given, gamma(x, t + eps) <= gamma(x, t) + B1 eps + tol (`later`) and
/// gamma(x + y, 2t) <= gamma(x, t) + gamma(y, t) + tol (`doubled`). Without
/// `doubled`, subadditivity is checked through homogeneity at grid midpoints:
/// 2 gamma((x + y) / 2, t) <= gamma(x, t) + gamma(y, t) + tol.
ShapeReport check_shape_properties(const ShapeEstimate& est, double tol, const ShapeEstimate* later = nullptr,
                                   const ShapeEstimate* doubled = nullptr);

struct MicroInitial {
  Configuration config;
  std::size_t repairs = 0;
};

/// sigma(i, 0) = floor(n u0(i / n)) on [lo, hi] (+inf where u0 is), then
/// repaired left to right: a particle not strictly right of its left
/// neighbor moves to neighbor + 1.
MicroInitial initialize_from_profile(const MacroProfile& u0, std::int64_t n, Index lo, Index hi);

struct ProfileEstimate {
  std::vector<double> x_grid;
  std::vector<ExtendedReal> mean;  // n^{-1} sigma([n x], n t), replica mean
  std::vector<double> stderr_;
  std::int64_t n = 0;
  double t_macro = 0.0;
  std::size_t replicas = 0;
  std::size_t repairs = 0;
  Index window_lo = 0;
  Index window_hi = 0;
  /// Open right boundary is exact (u0 = +inf beyond the window).
  bool exact_boundary = false;
  /// Smallest right end of the sandwich agreement window over replicas.
  Index min_agreement_hi = 0;
  std::size_t epochs = 0;
};

/// Replica means of n^{-1} sigma_n([n x], n t_macro) from the initializer
/// above. When u0 is finite to the right the window is bracketed by the
/// sandwich and every grid index must lie in the agreement window, else
/// Error(WindowTooSmall) ("enlarge window").
ProfileEstimate empirical_profile(const MacroProfile& u0, const RateTable& rates, std::int64_t n,
                                  const std::vector<double>& x_grid, double t_macro, std::size_t replicas,
                                  std::uint64_t master);

/// Mean, sample standard error and median of values; the sum runs over the
/// sorted values so the result does not depend on their order.
struct Summary {
  double mean = 0.0;
  double stderr_ = 0.0;
  double median = 0.0;
};
Summary summarize(std::vector<double> values);

}  // namespace jumpex
