#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ais/problem.hpp"
#include "ais/rng.hpp"
#include "ais/sampling.hpp"

namespace ais {

/// Update rules for the sampler parameters.
///
/// Global rules (Var, L2, KL1, KL2, KLS) estimate the gradient of an error
/// function from weighted samples; local rules (Local*) measure distance to
/// the weighted empirical conditionals; SIS blends the empirical
/// conditionals with the initial sampler.
enum class GradientKind { Var, L2, KL1, KL2, KLS, LocalL2, LocalKL1, LocalKL2, LocalKLS, SIS };

/// How the raw gradient is mapped onto the tangent space of each simplex row.
/// MeanCenter subtracts the signed row mean. AbsoluteMean subtracts the row
/// mean of absolute values, which does not give zero-sum rows; updates in
/// that mode renormalize each row afterwards.
enum class ProjectionMode { MeanCenter, AbsoluteMean };

std::string_view to_string(GradientKind kind);
/// Accepts the CLI spellings: var, l2, kl1, kl2, kls, local-l2, ..., sis.
GradientKind parse_gradient_kind(std::string_view text);
std::string_view to_string(ProjectionMode mode);
/// Accepts mean | literal.
ProjectionMode parse_projection_mode(std::string_view text);

bool is_global(GradientKind kind);
bool is_local(GradientKind kind);
/// Default beta of the step-size rule beta / t for each kind.
double default_beta(GradientKind kind);

// Per-sample factors of the global gradient estimator. `g_hat` is the
// current estimate of G standing in for the unknown normalizer of f*.
double phi_var(double w);
double phi_l2(double f_z, double w, double g_hat);
double phi_kl1(double w, double g_hat);
double phi_kl2(double w, double g_hat);
double phi_kls(double w, double g_hat);

/// Sample estimate of the gradient of a global error function:
///   grad_ijk = (1/N) sum_l -I(z_i = k, pa_i = j | z_l) / theta_ijk * phi(z_l).
/// For KL2/KLS, samples with zero weight are skipped (their count is added
/// to `*skipped` when given). Cells no sample touches stay 0.
Gradient gradient_estimate_global(const EstimationProblem& problem, const SamplerParams& theta,
                                  std::span<const WeightedSample> samples, GradientKind kind, double g_hat,
                                  std::size_t* skipped = nullptr);

/// Weighted empirical conditionals of the samples.
struct EmpiricalParams {
  std::vector<Table> tables;
  /// fallback[m][j]: no weight reached row j, so it copies theta.
  std::vector<std::vector<bool>> fallback;
};

/// theta_hat_ijk = sum_l I(z_i=k, pa=j) w_l / sum_l I(pa=j) w_l, or theta_ijk
/// when the denominator is 0. With `smoothed`, theta_ijk is added to the
/// numerator and 1 to the denominator.
EmpiricalParams empirical_distribution(const EstimationProblem& problem, const SamplerParams& theta,
                                       std::span<const WeightedSample> samples, bool smoothed);

/// grad_ijk = -phi'(theta_hat_ijk, theta_ijk) for the local rules.
Gradient gradient_local(const SamplerParams& theta, const EmpiricalParams& theta_hat, GradientKind kind);

Gradient project(const Gradient& gradient, ProjectionMode mode = ProjectionMode::MeanCenter);

/// Outcome of one bounded gradient step.
struct UpdateResult {
  SamplerParams theta;
  std::size_t boundary_hits = 0;  // rows that took the half-feasible step
};

/// theta - alpha * gradient, row by row. A row whose full step would leave
/// an entry below gamma / arity instead moves half of the largest feasible
/// step along the same direction. In MeanCenter mode the gradient rows must
/// sum to zero (|alpha * row sum| <= 1e-9).
UpdateResult apply_update(const SamplerParams& theta, const Gradient& gradient, double alpha, double gamma,
                          ProjectionMode mode = ProjectionMode::MeanCenter);

/// (1 - alpha) * theta_hat + alpha * theta0, entrywise. Requires 0 <= alpha <= 1.
SamplerParams sis_update(const EmpiricalParams& theta_hat, const SamplerParams& theta0, double alpha);

/// beta / t for t >= 1.
double step_size(std::size_t t, double beta);

struct AdaptConfig {
  GradientKind kind = GradientKind::Var;
  std::optional<double> beta;  // defaults to default_beta(kind)
  double gamma = 0.1;
  std::size_t batch_size = 1;
  std::size_t total_updates = 1;
  std::optional<bool> dirichlet_smoothing;  // defaults to on for LocalKL2 / LocalKLS
  ProjectionMode projection = ProjectionMode::MeanCenter;
  std::size_t min_local_batch = 50;
  bool record_theta = true;

  double effective_beta() const { return beta.value_or(default_beta(kind)); }
  bool effective_smoothing() const;
  /// Throws DomainError on an invalid configuration.
  void validate() const;
};

struct TraceStep {
  std::size_t t = 0;
  double alpha = 0.0;
  std::size_t sample_count = 0;
  double batch_estimate = 0.0;
  double running_estimate = 0.0;
  double sample_variance = 0.0;  // unbiased variance of the batch weights (0 when N = 1)
  std::size_t boundary_hits = 0;
  bool update_skipped = false;
  std::vector<std::string> warnings;
  SamplerParams theta;  // parameters after this step's update (empty unless recorded)
};

/// Per-step record of an adaptation run. `initial` is the sampler that drew
/// batch 1; steps[t-1].theta is the sampler that draws batch t+1.
struct Trace {
  SamplerParams initial;
  std::vector<TraceStep> steps;
};

struct AdaptResult {
  Estimate estimate;
  Trace trace;
  SamplerParams final_theta;
};

/// Runs `total_updates` rounds of: draw a batch from the current sampler,
/// update the running estimate, estimate the gradient from the same
/// samples, project, and take a bounded step with alpha(t) = beta / t.
/// The combined estimate weights every batch by 1/T.
AdaptResult adapt_loop(const EstimationProblem& problem, const AdaptConfig& config, Rng& rng);
/// As above, starting from `initial` rather than init_params(problem, gamma).
AdaptResult adapt_loop(const EstimationProblem& problem, const AdaptConfig& config, Rng& rng,
                       SamplerParams initial);

}  // namespace ais
