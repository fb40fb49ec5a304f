#pragma once

// Policy optimizers for the weighted objective lambda * AoI + (1 - lambda) / throughput.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"

namespace aoisched {

enum class Method { kIterMin, kPgd, kAloha };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct OptResult {
  Policy policy;
  std::vector<double> objective_trace;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double lambda = 1.0;
  double xi = 1.0;
  Method method = Method::kIterMin;
  /// (p, objective) samples of the shared-probability objective; aloha only.
  std::vector<std::pair<double, double>> scan;
};

/// Golden-section minimisation of a unimodal f on [lo, hi]; returns the
/// abscissa once the bracket is narrower than `tol`.
template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

struct BlockCoordinateOptions {
  int n_iters = 20;
  double tol = 1e-8;
};

/// Cyclic one-link-at-a-time minimisation of the closed-form xi = 1 objective.
/// Starts from `init` (all ones by default). Throws ConfigError for xi != 1.
OptResult block_coordinate_min(const ChannelParams& channel, double lambda, double xi,
                               const BlockCoordinateOptions& opts = {},
                               const std::optional<Policy>& init = std::nullopt);

struct PgdOptions {
  int steps = 500;
  double lr0 = 0.1;
  int max_halvings = 30;
  FixedPointOptions fixed_point{};
};

/// p <- clip(p - eta * grad, floor, 1) with step halving on objective
/// increase. Returns the best iterate. Starts from all ones unless `init`.
OptResult projected_gradient(const ChannelParams& channel, double lambda, double xi,
                             const PgdOptions& opts = {},
                             const std::optional<Policy>& init = std::nullopt);

struct AlohaOptions {
  int starts = 10;
  double tol = 1e-8;
  int scan_points = 101;
};

/// Best single activation probability shared by every link: golden-section
/// on each of `starts` equal sub-intervals of [floor, 1].
OptResult optimal_aloha(const ChannelParams& channel, double lambda, double xi,
                        const AlohaOptions& opts = {});

enum class LambdaGrid { kUniform, kLog5 };

LambdaGrid lambda_grid_from_string(const std::string& name);

/// Points u_k = k / (points - 1); lambda = u (uniform) or 10^(-5 (1 - u)) (log5).
/// Ascending.
std::vector<double> lambda_grid(LambdaGrid kind, int points);

struct ParetoPoint {
  double lambda = 0.0;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double objective = 0.0;
  int iterations = 0;
  Method method = Method::kIterMin;
  Policy policy;
};

struct SweepOptions {
  bool warm_start = true;
  int threads = 1;  // used only without warm start
  BlockCoordinateOptions itermin{};
  PgdOptions pgd{};
  AlohaOptions aloha{};
};

/// Runs `method` for every lambda. With warm starts the grid is walked from
/// the largest lambda down, each run starting at the previous policy.
/// Output is sorted by ascending lambda.
std::vector<ParetoPoint> pareto_sweep(const ChannelParams& channel, double xi,
                                      const std::vector<double>& lambdas, Method method,
                                      const SweepOptions& opts = {});

/// Drops every point dominated by another (lower-or-equal AoI and
/// higher-or-equal throughput, strictly better in one). Keeps lambda order.
std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points);

bool dominates(const ParetoPoint& a, const ParetoPoint& b);

}  // namespace aoisched
