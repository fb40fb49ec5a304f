#include "aoisched/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aoisched/error.hpp"
#include "aoisched/gradient.hpp"
#include "aoisched/parallel.hpp"

namespace aoisched {

namespace {

void finish(OptResult& r, const ChannelParams& channel, const FixedPointOptions& fp = {}) {
  const MeanFieldState s = evaluate(channel, r.policy, r.xi, r.lambda, fp);
  r.delta_avg = s.delta_avg;
  r.thr_avg = s.thr_avg;
  r.objective = s.objective;
}

double safe_objective(const ChannelParams& channel, const Eigen::VectorXd& p, double xi, double lambda,
                      const FixedPointOptions& fp) {
  try {
    return evaluate_objective_raw(channel, p, xi, lambda, fp);
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kIterMin:
      return "itermin";
    case Method::kPgd:
      return "pgd";
    case Method::kAloha:
      return "aloha";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "itermin") return Method::kIterMin;
  if (name == "pgd") return Method::kPgd;
  if (name == "aloha") return Method::kAloha;
  throw ConfigError("unknown method '" + name + "' (expected itermin, pgd or aloha)");
}

OptResult block_coordinate_min(const ChannelParams& channel, double lambda, double xi,
                               const BlockCoordinateOptions& opts, const std::optional<Policy>& init) {
  if (xi != 1.0) throw ConfigError("block_coordinate_min: only xi = 1 is supported");
  check_probability(lambda, "lambda", true);
  if (opts.n_iters < 1) throw ConfigError("block_coordinate_min: n_iters must be >= 1");
  const Eigen::Index n = channel.n();
  const double nn = static_cast<double>(n);
  const Eigen::MatrixXd& B = channel.B;

  Eigen::VectorXd p = init ? init->p() : Eigen::VectorXd::Ones(n);
  if (p.size() != n) throw ConfigError("block_coordinate_min: init has wrong length");

  OptResult r;
  r.lambda = lambda;
  r.xi = xi;
  r.method = Method::kIterMin;
  double current = explicit_objective_xi1(channel, p, lambda);
  r.objective_trace.push_back(current);

  Eigen::VectorXd base(n);
  for (int it = 0; it < opts.n_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      // Rates of the other links with link i's factor removed; link i's own
      // success probability does not depend on p_i.
      double own = channel.rho(i);
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k != i) own *= 1.0 - p(k) * B(k, i);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        double v = p(j) * channel.rho(j);
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k != j && k != i) v *= 1.0 - p(k) * B(k, j);
        }
        base(j) = v;
      }
      auto univariate = [&](double x) {
        double inv_sum = 1.0 / (x * own);
        double rate_sum = x * own;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const double rate = base(j) * (1.0 - x * B(i, j));
          inv_sum += 1.0 / rate;
          rate_sum += rate;
        }
        double f = lambda / nn * inv_sum;
        if (lambda < 1.0) f += (1.0 - lambda) * nn / rate_sum;
        return f;
      };

      const double old = p(i);
      double best_x = old;
      double best_f = univariate(old);
      for (double x : {golden_section(univariate, kPolicyFloor, 1.0, opts.tol), 1.0}) {
        const double fx = univariate(x);
        if (fx < best_f) {
          best_f = fx;
          best_x = x;
        }
      }
      if (best_x == old) continue;
      p(i) = best_x;
      const double updated = explicit_objective_xi1(channel, p, lambda);
      if (updated <= current) {
        current = updated;
        changed = true;
      } else {
        p(i) = old;  // rounding made the full objective tick up
      }
    }
    r.objective_trace.push_back(current);
    r.iterations = it + 1;
    if (!changed) break;
  }
  r.policy = Policy(p);
  finish(r, channel);
  return r;
}

OptResult projected_gradient(const ChannelParams& channel, double lambda, double xi, const PgdOptions& opts,
                             const std::optional<Policy>& init) {
  check_probability(lambda, "lambda", true);
  check_probability(xi, "xi");
  const Eigen::Index n = channel.n();
  Eigen::VectorXd p = init ? init->p() : Eigen::VectorXd::Ones(n);
  if (p.size() != n) throw ConfigError("projected_gradient: init has wrong length");

  OptResult r;
  r.lambda = lambda;
  r.xi = xi;
  r.method = Method::kPgd;

  double f = evaluate_objective_raw(channel, p, xi, lambda, opts.fixed_point);
  r.objective_trace.push_back(f);
  Eigen::VectorXd best = p;
  double best_f = f;
  double eta = opts.lr0;

  for (int step = 0; step < opts.steps; ++step) {
    const GradientWorkspace ws = grad_objective_at(channel, p, xi, lambda, opts.fixed_point);
    bool accepted = false;
    Eigen::VectorXd cand;
    double fc = f;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      cand = (p - eta * ws.grad_obj).cwiseMax(kPolicyFloor).cwiseMin(1.0);
      fc = safe_objective(channel, cand, xi, lambda, opts.fixed_point);
      if (fc <= f) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    r.iterations = step + 1;
    if (!accepted) break;
    const double moved = (cand - p).cwiseAbs().maxCoeff();
    p = cand;
    f = fc;
    r.objective_trace.push_back(f);
    if (f < best_f) {
      best_f = f;
      best = p;
    }
    if (moved < 1e-12) break;
    eta = std::min(2.0 * eta, opts.lr0);
  }
  r.policy = Policy(best);
  finish(r, channel, opts.fixed_point);
  return r;
}

OptResult optimal_aloha(const ChannelParams& channel, double lambda, double xi, const AlohaOptions& opts) {
  check_probability(lambda, "lambda", true);
  check_probability(xi, "xi");
  if (opts.starts < 1) throw ConfigError("optimal_aloha: starts must be >= 1");
  const Eigen::Index n = channel.n();
  const FixedPointOptions fp{};
  auto scalar = [&](double v) { return safe_objective(channel, Eigen::VectorXd::Constant(n, v), xi, lambda, fp); };

  OptResult r;
  r.lambda = lambda;
  r.xi = xi;
  r.method = Method::kAloha;

  double best_v = 1.0;
  double best_f = scalar(1.0);
  const double width = (1.0 - kPolicyFloor) / opts.starts;
  for (int s = 0; s < opts.starts; ++s) {
    const double lo = kPolicyFloor + s * width;
    const double hi = s + 1 == opts.starts ? 1.0 : lo + width;
    for (double v : {golden_section(scalar, lo, hi, opts.tol), lo}) {
      const double fv = scalar(v);
      if (fv < best_f) {
        best_f = fv;
        best_v = v;
      }
    }
    r.objective_trace.push_back(best_f);
  }
  for (int k = 0; k < opts.scan_points; ++k) {
    const double v = opts.scan_points == 1
                         ? 1.0
                         : kPolicyFloor + (1.0 - kPolicyFloor) * k / (opts.scan_points - 1);
    r.scan.emplace_back(v, scalar(v));
  }
  r.iterations = opts.starts;
  r.policy = Policy::uniform(n, best_v);
  finish(r, channel);
  return r;
}

LambdaGrid lambda_grid_from_string(const std::string& name) {
  if (name == "uniform") return LambdaGrid::kUniform;
  if (name == "log5") return LambdaGrid::kLog5;
  throw ConfigError("unknown lambda grid '" + name + "' (expected uniform or log5)");
}

std::vector<double> lambda_grid(LambdaGrid kind, int points) {
  if (points < 2) throw ConfigError("lambda grid needs at least 2 points");
  std::vector<double> out;
  for (int k = 0; k < points; ++k) {
    const double u = static_cast<double>(k) / (points - 1);
    out.push_back(kind == LambdaGrid::kUniform ? u : log5_weight(u));
  }
  return out;
}

std::vector<ParetoPoint> pareto_sweep(const ChannelParams& channel, double xi, const std::vector<double>& lambdas,
                                      Method method, const SweepOptions& opts) {
  std::vector<double> order = lambdas;
  std::sort(order.begin(), order.end(), std::greater<>());

  auto run = [&](double lambda, const std::optional<Policy>& init) {
    switch (method) {
      case Method::kIterMin:
        return block_coordinate_min(channel, lambda, xi, opts.itermin, init);
      case Method::kPgd:
        return projected_gradient(channel, lambda, xi, opts.pgd, init);
      case Method::kAloha:
        return optimal_aloha(channel, lambda, xi, opts.aloha);
    }
    throw ConfigError("pareto_sweep: unknown method");
  };
  auto to_point = [method](const OptResult& r) {
    return ParetoPoint{r.lambda, r.delta_avg, r.thr_avg, r.objective, r.iterations, method, r.policy};
  };

  std::vector<ParetoPoint> points(order.size());
  if (opts.warm_start) {
    std::optional<Policy> warm;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const OptResult r = run(order[k], warm);
      warm = r.policy;
      points[k] = to_point(r);
    }
  } else {
    parallel_for(order.size(), opts.threads, [&](std::size_t k) { points[k] = to_point(run(order[k], std::nullopt)); });
  }
  std::reverse(points.begin(), points.end());
  return points;
}

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  const bool no_worse = a.delta_avg <= b.delta_avg && a.thr_avg >= b.thr_avg;
  const bool better = a.delta_avg < b.delta_avg || a.thr_avg > b.thr_avg;
  return no_worse && better;
}

std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points) {
  std::vector<ParetoPoint> kept;
  for (const ParetoPoint& cand : points) {
    const bool dominated =
        std::any_of(points.begin(), points.end(), [&](const ParetoPoint& o) { return dominates(o, cand); });
    if (!dominated) kept.push_back(cand);
  }
  return kept;
}

}  // namespace aoisched
