#include "ais/adapt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ais {

namespace {

struct KindName {
  GradientKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 10> kKindNames{{
    {GradientKind::Var, "var"},
    {GradientKind::L2, "l2"},
    {GradientKind::KL1, "kl1"},
    {GradientKind::KL2, "kl2"},
    {GradientKind::KLS, "kls"},
    {GradientKind::LocalL2, "local-l2"},
    {GradientKind::LocalKL1, "local-kl1"},
    {GradientKind::LocalKL2, "local-kl2"},
    {GradientKind::LocalKLS, "local-kls"},
    {GradientKind::SIS, "sis"},
}};

void require_positive_g_hat(double g_hat) {
  if (!(g_hat > 0.0)) throw DomainError("the estimate of G must be positive");
}

}  // namespace

std::string_view to_string(GradientKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "?";
}

GradientKind parse_gradient_kind(std::string_view text) {
  for (const auto& kn : kKindNames) {
    if (kn.name == text) return kn.kind;
  }
  throw DomainError("unknown method '" + std::string(text) + "'");
}

std::string_view to_string(ProjectionMode mode) {
  return mode == ProjectionMode::MeanCenter ? "mean" : "literal";
}

ProjectionMode parse_projection_mode(std::string_view text) {
  if (text == "mean") return ProjectionMode::MeanCenter;
  if (text == "literal") return ProjectionMode::AbsoluteMean;
  throw DomainError("unknown projection mode '" + std::string(text) + "'");
}

bool is_global(GradientKind kind) {
  return kind == GradientKind::Var || kind == GradientKind::L2 || kind == GradientKind::KL1 ||
         kind == GradientKind::KL2 || kind == GradientKind::KLS;
}

bool is_local(GradientKind kind) {
  return kind == GradientKind::LocalL2 || kind == GradientKind::LocalKL1 || kind == GradientKind::LocalKL2 ||
         kind == GradientKind::LocalKLS;
}

double default_beta(GradientKind kind) {
  switch (kind) {
    case GradientKind::Var: return 0.5;
    case GradientKind::L2: return 5.0;
    case GradientKind::KL1:
    case GradientKind::KL2:
    case GradientKind::KLS: return 0.5;
    default: return 1.0;
  }
}

double phi_var(double w) { return w * w; }

double phi_l2(double f_z, double w, double g_hat) {
  require_positive_g_hat(g_hat);
  return f_z * (w / g_hat - 1.0);
}

double phi_kl1(double w, double g_hat) {
  require_positive_g_hat(g_hat);
  return w / g_hat;
}

double phi_kl2(double w, double g_hat) {
  require_positive_g_hat(g_hat);
  if (!(w > 0.0)) throw DomainError("phi_kl2 is undefined for a zero weight");
  return std::log(w / g_hat) - 1.0;
}

double phi_kls(double w, double g_hat) { return 0.5 * (phi_kl1(w, g_hat) + phi_kl2(w, g_hat)); }

Gradient gradient_estimate_global(const EstimationProblem& problem, const SamplerParams& theta,
                                  std::span<const WeightedSample> samples, GradientKind kind, double g_hat,
                                  std::size_t* skipped) {
  if (!is_global(kind)) throw DomainError("gradient_estimate_global needs a global kind, got " + std::string(to_string(kind)));
  if (kind != GradientKind::Var) require_positive_g_hat(g_hat);
  const auto free = problem.free_vars();
  Gradient grad = zero_gradient(theta);
  if (samples.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  for (const auto& s : samples) {
    double phi = 0.0;
    switch (kind) {
      case GradientKind::Var: phi = phi_var(s.weight); break;
      case GradientKind::L2: phi = phi_l2(sampler_probability(problem, theta, s.values), s.weight, g_hat); break;
      case GradientKind::KL1: phi = phi_kl1(s.weight, g_hat); break;
      case GradientKind::KL2:
      case GradientKind::KLS:
        if (!(s.weight > 0.0)) {
          if (skipped) ++*skipped;
          continue;
        }
        phi = kind == GradientKind::KL2 ? phi_kl2(s.weight, g_hat) : phi_kls(s.weight, g_hat);
        break;
      default: break;
    }
    if (phi == 0.0) continue;
    for (std::size_t m = 0; m < free.size(); ++m) {
      const std::size_t j = sampler_row(problem, m, s.values);
      const auto k = static_cast<std::size_t>(s.values[free[m]]);
      grad.tables[m](j, k) -= inv_n * phi / theta.tables[m](j, k);
    }
  }
  return grad;
}

EmpiricalParams empirical_distribution(const EstimationProblem& problem, const SamplerParams& theta,
                                       std::span<const WeightedSample> samples, bool smoothed) {
  if (samples.empty()) throw DomainError("empirical_distribution needs at least one sample");
  const auto free = problem.free_vars();
  EmpiricalParams out;
  out.tables = zero_gradient(theta).tables;
  for (const auto& s : samples) {
    if (!(s.weight > 0.0)) continue;
    for (std::size_t m = 0; m < free.size(); ++m) {
      out.tables[m](sampler_row(problem, m, s.values), static_cast<std::size_t>(s.values[free[m]])) += s.weight;
    }
  }
  for (std::size_t m = 0; m < out.tables.size(); ++m) {
    Table& table = out.tables[m];
    out.fallback.emplace_back(table.rows(), false);
    for (std::size_t j = 0; j < table.rows(); ++j) {
      auto row = table.row(j);
      const auto current = theta.tables[m].row(j);
      double denom = 0.0;
      for (double v : row) denom += v;
      if (smoothed) {
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] + current[k]) / (denom + 1.0);
      } else if (denom != 0.0) {
        for (double& v : row) v /= denom;
      } else {
        std::copy(current.begin(), current.end(), row.begin());
        out.fallback[m][j] = true;
      }
    }
  }
  return out;
}

Gradient gradient_local(const SamplerParams& theta, const EmpiricalParams& theta_hat, GradientKind kind) {
  if (!is_local(kind)) throw DomainError("gradient_local needs a local kind, got " + std::string(to_string(kind)));
  Gradient grad = zero_gradient(theta);
  for (std::size_t m = 0; m < theta.tables.size(); ++m) {
    const auto cur = theta.tables[m].data();
    const auto emp = theta_hat.tables[m].data();
    auto out = grad.tables[m].data();
    for (std::size_t c = 0; c < cur.size(); ++c) {
      double phi = 0.0;
      switch (kind) {
        case GradientKind::LocalL2: phi = emp[c] - cur[c]; break;
        case GradientKind::LocalKL1: phi = emp[c] / cur[c]; break;
        case GradientKind::LocalKL2:
        case GradientKind::LocalKLS: {
          if (!(emp[c] > 0.0)) {
            throw DomainError("local KL2 rule is undefined for a zero empirical probability; enable smoothing");
          }
          const double kl2 = std::log(emp[c] / cur[c]) - 1.0;
          phi = kind == GradientKind::LocalKL2 ? kl2 : 0.5 * (emp[c] / cur[c] + kl2);
          break;
        }
        default: break;
      }
      out[c] = -phi;
    }
  }
  return grad;
}

Gradient project(const Gradient& gradient, ProjectionMode mode) {
  Gradient out = gradient;
  for (auto& table : out.tables) {
    for (std::size_t j = 0; j < table.rows(); ++j) {
      auto row = table.row(j);
      double shift = 0.0;
      for (double v : row) shift += mode == ProjectionMode::MeanCenter ? v : std::abs(v);
      shift /= static_cast<double>(row.size());
      for (double& v : row) v -= shift;
    }
  }
  return out;
}

UpdateResult apply_update(const SamplerParams& theta, const Gradient& gradient, double alpha, double gamma,
                          ProjectionMode mode) {
  if (gradient.tables.size() != theta.tables.size()) throw DomainError("gradient and parameters differ in shape");
  UpdateResult result{theta, 0};
  for (std::size_t m = 0; m < theta.tables.size(); ++m) {
    Table& table = result.theta.tables[m];
    const Table& grad = gradient.tables[m];
    if (grad.rows() != table.rows() || grad.cols() != table.cols()) {
      throw DomainError("gradient and parameters differ in shape");
    }
    const double eps = epsilon_bound(gamma, static_cast<int>(table.cols()));
    std::vector<double> step(table.cols());
    for (std::size_t j = 0; j < table.rows(); ++j) {
      auto row = table.row(j);
      double step_sum = 0.0;
      bool moves = false;
      for (std::size_t k = 0; k < row.size(); ++k) {
        step[k] = -alpha * grad(j, k);
        step_sum += step[k];
        moves = moves || step[k] != 0.0;
      }
      if (mode == ProjectionMode::MeanCenter && std::abs(step_sum) > 1e-9) {
        throw DomainError("apply_update: gradient row is not projected (step sums to " + std::to_string(step_sum) + ")");
      }
      if (!moves) continue;

      // Largest fraction of the full step keeping every entry >= eps.
      double feasible = 1.0;
      bool full_ok = true;
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] + step[k] < eps) {
          full_ok = false;
          feasible = std::min(feasible, std::max(0.0, (row[k] - eps) / -step[k]));
        }
      }
      const double scale = full_ok ? 1.0 : 0.5 * feasible;
      if (!full_ok) ++result.boundary_hits;
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += scale * step[k];

      if (mode == ProjectionMode::AbsoluteMean) {
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
        enforce_epsilon_row(row, eps);
      }
    }
  }
  return result;
}

SamplerParams sis_update(const EmpiricalParams& theta_hat, const SamplerParams& theta0, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("sis_update: alpha must lie in [0, 1]");
  if (theta_hat.tables.size() != theta0.tables.size()) throw DomainError("sis_update: shape mismatch");
  SamplerParams out = theta0;
  for (std::size_t m = 0; m < out.tables.size(); ++m) {
    if (theta_hat.tables[m].rows() != theta0.tables[m].rows() || theta_hat.tables[m].cols() != theta0.tables[m].cols()) {
      throw DomainError("sis_update: shape mismatch");
    }
    auto dst = out.tables[m].data();
    const auto emp = theta_hat.tables[m].data();
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (1.0 - alpha) * emp[c] + alpha * dst[c];
  }
  return out;
}

double step_size(std::size_t t, double beta) {
  if (t < 1) throw DomainError("step_size: t must be at least 1");
  if (!(beta > 0.0)) throw DomainError("step_size: beta must be positive");
  return beta / static_cast<double>(t);
}

bool AdaptConfig::effective_smoothing() const {
  return dirichlet_smoothing.value_or(kind == GradientKind::LocalKL2 || kind == GradientKind::LocalKLS);
}

void AdaptConfig::validate() const {
  if (!(effective_beta() > 0.0)) throw DomainError("beta must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  if (total_updates < 1) throw DomainError("the number of updates must be at least 1");
  if ((is_local(kind) || kind == GradientKind::SIS) && batch_size < min_local_batch) {
    throw DomainError("method " + std::string(to_string(kind)) + " needs a batch of at least " +
                      std::to_string(min_local_batch) + " samples, got " + std::to_string(batch_size));
  }
  if (kind == GradientKind::SIS && effective_beta() > 1.0) {
    throw DomainError("sis needs beta <= 1 so that alpha(t) stays in [0, 1]");
  }
}

AdaptResult adapt_loop(const EstimationProblem& problem, const AdaptConfig& config, Rng& rng) {
  return adapt_loop(problem, config, rng, init_params(problem, config.gamma));
}

AdaptResult adapt_loop(const EstimationProblem& problem, const AdaptConfig& config, Rng& rng, SamplerParams initial) {
  config.validate();
  check_shape(problem, initial);
  const double beta = config.effective_beta();
  const std::size_t n = config.batch_size;

  AdaptResult result;
  result.trace.initial = initial;
  SamplerParams theta = std::move(initial);
  double batch_sum = 0.0;

  for (std::size_t t = 1; t <= config.total_updates; ++t) {
    TraceStep step;
    step.t = t;
    step.alpha = step_size(t, beta);
    step.sample_count = n;

    Batch batch = batch_estimate(problem, theta, n, rng);
    step.batch_estimate = batch.estimate;
    batch_sum += batch.estimate;
    step.running_estimate = batch_sum / static_cast<double>(t);
    if (n > 1) {
      double ss = 0.0;
      for (const auto& s : batch.samples) ss += (s.weight - batch.estimate) * (s.weight - batch.estimate);
      step.sample_variance = ss / static_cast<double>(n - 1);
    }
    result.estimate.batch_values.push_back(batch.estimate);
    result.estimate.sample_counts.push_back(n);

    if (config.kind == GradientKind::SIS) {
      const auto theta_hat = empirical_distribution(problem, theta, batch.samples, config.effective_smoothing());
      theta = sis_update(theta_hat, result.trace.initial, step.alpha);
      for (auto& table : theta.tables) {
        const double eps = epsilon_bound(config.gamma, static_cast<int>(table.cols()));
        for (std::size_t j = 0; j < table.rows(); ++j) enforce_epsilon_row(table.row(j), eps);
      }
    } else {
      Gradient grad;
      if (is_local(config.kind)) {
        const auto theta_hat = empirical_distribution(problem, theta, batch.samples, config.effective_smoothing());
        grad = gradient_local(theta, theta_hat, config.kind);
      } else if (config.kind != GradientKind::Var && !(step.running_estimate > 0.0)) {
        step.update_skipped = true;
        step.warnings.emplace_back("running estimate is not positive; update skipped");
      } else {
        std::size_t skipped = 0;
        grad = gradient_estimate_global(problem, theta, batch.samples, config.kind, step.running_estimate, &skipped);
        if (skipped > 0) step.warnings.push_back(std::to_string(skipped) + " zero-weight samples skipped");
      }
      if (!step.update_skipped) {
        auto update = apply_update(theta, project(grad, config.projection), step.alpha, config.gamma, config.projection);
        theta = std::move(update.theta);
        step.boundary_hits = update.boundary_hits;
      }
    }
    if (config.record_theta) step.theta = theta;
    result.trace.steps.push_back(std::move(step));
  }

  const std::size_t T = config.total_updates;
  result.estimate.batch_weights.assign(T, 1.0 / static_cast<double>(T));
  result.estimate.value = combined_estimate(result.estimate.batch_values, result.estimate.batch_weights);
  result.final_theta = std::move(theta);
  return result;
}

}  // namespace ais
