#include "doctest.h"
#include "fixtures.hpp"

#include <algorithm>

#include "ais/adapt.hpp"
#include "ais/exact.hpp"

using namespace ais;

namespace {

WeightedSample chain_sample(const EstimationProblem& problem, const SamplerParams& theta, int x1) {
  return weight(problem, theta, {x1, 1});
}

Gradient single_row(std::vector<double> row) {
  Gradient g;
  g.tables.push_back(fixtures::cpt({std::move(row)}));
  return g;
}

SamplerParams single_row_theta(std::vector<double> row) {
  SamplerParams t;
  t.tables.push_back(fixtures::cpt({std::move(row)}));
  return t;
}

void check_on_boundary_simplex(const EstimationProblem& problem, const SamplerParams& theta, double gamma) {
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < theta.tables.size(); ++m) {
    const double eps = epsilon_bound(gamma, problem.arity(free[m]));
    for (std::size_t j = 0; j < theta.tables[m].rows(); ++j) {
      double sum = 0.0;
      for (double v : theta.tables[m].row(j)) {
        CHECK(v >= eps - 1e-12);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

}  // namespace

TEST_CASE("names round-trip") {
  for (auto kind : {GradientKind::Var, GradientKind::L2, GradientKind::KL1, GradientKind::KL2, GradientKind::KLS,
                    GradientKind::LocalL2, GradientKind::LocalKL1, GradientKind::LocalKL2, GradientKind::LocalKLS,
                    GradientKind::SIS})
    CHECK(parse_gradient_kind(to_string(kind)) == kind);
  CHECK(parse_projection_mode("mean") == ProjectionMode::MeanCenter);
  CHECK(parse_projection_mode("literal") == ProjectionMode::AbsoluteMean);
  CHECK_THROWS(parse_gradient_kind("newton"));
}

TEST_CASE("phi functions") {
  CHECK(phi_var(0.7) == doctest::Approx(0.49).epsilon(1e-14));
  CHECK(phi_var(0.0) == 0.0);
  CHECK(phi_var(1.0) == 1.0);

  CHECK(phi_l2(0.6, 0.7, 0.5) == doctest::Approx(0.24).epsilon(1e-14));
  CHECK(phi_l2(0.6, 0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(phi_l2(0.6, 0.5, 0.0), DomainError);

  CHECK(phi_kl1(0.7, 0.5) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(phi_kl1(0.5, 0.5) == 1.0);
  CHECK(phi_kl1(0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(phi_kl1(0.7, -1.0), DomainError);

  CHECK(phi_kl2(0.7, 0.5) == doctest::Approx(-0.66353).epsilon(1e-5));
  CHECK(phi_kl2(0.7, 0.5) == doctest::Approx(std::log(1.4) - 1.0).epsilon(1e-14));
  CHECK(phi_kl2(0.5, 0.5) == -1.0);
  CHECK_THROWS_AS(phi_kl2(0.0, 0.5), DomainError);

  CHECK(phi_kls(0.7, 0.5) == doctest::Approx(0.36824).epsilon(1e-5));
  CHECK(phi_kls(0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(phi_kls(0.0, 0.5), DomainError);
}

TEST_CASE("gradient_estimate_global single-sample example") {
  const auto problem = fixtures::chain2_problem();
  const auto prior = init_params(problem, 0.0);
  const std::vector<WeightedSample> samples{chain_sample(problem, prior, 1)};
  const auto grad = gradient_estimate_global(problem, prior, samples, GradientKind::Var, 0.5);
  CHECK(grad.tables[0](0, 0) == 0.0);
  CHECK(grad.tables[0](0, 1) == doctest::Approx(-0.49 / 0.6).epsilon(1e-14));
  CHECK(grad.tables[0](0, 1) == doctest::Approx(-0.81667).epsilon(1e-5));

  // Calibrated weights give phi = 0 for L2.
  const auto opt = exact::optimal_params(problem);
  const std::vector<WeightedSample> at_opt{chain_sample(problem, opt, 0), chain_sample(problem, opt, 1)};
  const auto zero = gradient_estimate_global(problem, opt, at_opt, GradientKind::L2, 0.5);
  for (double v : zero.tables[0].data()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("gradient_estimate_global skips zero weights for KL2 and KLS") {
  Network impossible = fixtures::chain2();
  impossible.cpts[1] = fixtures::cpt({{1.0, 0.0}, {0.3, 0.7}});
  const EstimationProblem problem(impossible, {{"X2", 1}});
  const auto theta = init_params(problem, 0.1);
  const std::vector<WeightedSample> samples{weight(problem, theta, {0, 1}), weight(problem, theta, {1, 1})};
  std::size_t skipped = 0;
  const auto grad = gradient_estimate_global(problem, theta, samples, GradientKind::KL2, 0.5, &skipped);
  CHECK(skipped == 1);
  CHECK(grad.tables[0](0, 0) == 0.0);
  CHECK(std::isfinite(grad.tables[0](0, 1)));
}

TEST_CASE("VAR estimator averaged over f equals the exact gradient") {
  Rng rng(17);
  const EstimationProblem net3(fixtures::random_network3(rng), {{"C", 1}});
  for (const auto& problem : {fixtures::chain2_problem(), fixtures::gamble1_problem(1), net3}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto theta = fixtures::random_theta(problem, rng);
      Gradient average = zero_gradient(theta);
      for (const auto& e : exact::enumerate(problem, theta).entries) {
        const std::vector<WeightedSample> one{weight(problem, theta, e.values)};
        const auto g = gradient_estimate_global(problem, theta, one, GradientKind::Var, 1.0);
        for (std::size_t m = 0; m < g.tables.size(); ++m)
          for (std::size_t c = 0; c < g.tables[m].data().size(); ++c)
            average.tables[m].data()[c] += e.f * g.tables[m].data()[c];
      }
      const auto exact_grad = exact::exact_gradient_var(problem, theta);
      for (std::size_t m = 0; m < exact_grad.tables.size(); ++m)
        for (std::size_t c = 0; c < exact_grad.tables[m].data().size(); ++c)
          CHECK(std::abs(average.tables[m].data()[c] - exact_grad.tables[m].data()[c]) <= 1e-12);
    }
  }
}

TEST_CASE("empirical_distribution") {
  const auto problem = fixtures::chain2_problem();
  const auto prior = init_params(problem, 0.0);
  const std::vector<WeightedSample> samples{chain_sample(problem, prior, 1), chain_sample(problem, prior, 0)};
  CHECK(samples[0].weight == doctest::Approx(0.7));
  CHECK(samples[1].weight == doctest::Approx(0.2));

  const auto plain = empirical_distribution(problem, prior, samples, false);
  CHECK(plain.tables[0](0, 1) == doctest::Approx(0.7 / 0.9).epsilon(1e-14));
  CHECK(plain.tables[0](0, 1) == doctest::Approx(0.77778).epsilon(1e-5));

  const auto smooth = empirical_distribution(problem, prior, samples, true);
  CHECK(smooth.tables[0](0, 1) == doctest::Approx(1.3 / 1.9).epsilon(1e-14));
  CHECK(smooth.tables[0](0, 1) == doctest::Approx(0.68421).epsilon(1e-5));
}

TEST_CASE("empirical_distribution falls back to theta for unvisited rows") {
  Rng rng(23);
  const EstimationProblem problem(fixtures::random_network3(rng), {});
  auto theta = fixtures::random_theta(problem, rng);
  // Only draw A = 0, so rows of B and C with A = 1 are never reached.
  theta.tables[0](0, 0) = 1.0;
  theta.tables[0](0, 1) = 0.0;
  std::vector<WeightedSample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back(weight(problem, theta, draw(theta, problem, rng)));
  const auto hat = empirical_distribution(problem, theta, samples, false);
  CHECK(hat.fallback[1][1]);
  for (std::size_t k = 0; k < 3; ++k) CHECK(hat.tables[1](1, k) == theta.tables[1](1, k));
  CHECK_FALSE(hat.fallback[1][0]);
}

TEST_CASE("gradient_local") {
  const auto theta = single_row_theta({0.4, 0.6});
  EmpiricalParams hat;
  hat.tables.push_back(fixtures::cpt({{1.0 - 0.7 / 0.9, 0.7 / 0.9}}));
  hat.fallback = {{false}};

  const auto l2 = gradient_local(theta, hat, GradientKind::LocalL2);
  CHECK(l2.tables[0](0, 1) == doctest::Approx(-0.17778).epsilon(1e-4));
  const auto kl1 = gradient_local(theta, hat, GradientKind::LocalKL1);
  CHECK(kl1.tables[0](0, 1) == doctest::Approx(-1.29630).epsilon(1e-5));
  const auto kl2 = gradient_local(theta, hat, GradientKind::LocalKL2);
  CHECK(kl2.tables[0](0, 1) == doctest::Approx(-(std::log(0.7 / 0.9 / 0.6) - 1.0)).epsilon(1e-14));
  const auto kls = gradient_local(theta, hat, GradientKind::LocalKLS);
  CHECK(kls.tables[0](0, 1) == doctest::Approx(0.5 * (kl1.tables[0](0, 1) + kl2.tables[0](0, 1))).epsilon(1e-14));

  EmpiricalParams same;
  same.tables = theta.tables;
  same.fallback = {{false}};
  const auto fixed = gradient_local(theta, same, GradientKind::LocalL2);
  for (double v : fixed.tables[0].data()) CHECK(v == 0.0);

  EmpiricalParams zero;
  zero.tables.push_back(fixtures::cpt({{0.0, 1.0}}));
  zero.fallback = {{false}};
  CHECK_THROWS_AS(gradient_local(theta, zero, GradientKind::LocalKL2), DomainError);
}

TEST_CASE("project") {
  const auto mean = project(single_row({0.3, -0.1}), ProjectionMode::MeanCenter);
  CHECK(mean.tables[0](0, 0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(mean.tables[0](0, 1) == doctest::Approx(-0.2).epsilon(1e-14));

  const auto literal = project(single_row({0.3, -0.1}), ProjectionMode::AbsoluteMean);
  CHECK(literal.tables[0](0, 0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(literal.tables[0](0, 1) == doctest::Approx(-0.3).epsilon(1e-14));

  const auto flat = project(single_row({0.7, 0.7, 0.7}));
  for (double v : flat.tables[0].data()) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("MeanCenter projection gives zero-sum rows for arbitrary input") {
  Rng rng(31);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rep % 6);
    std::vector<double> row(n);
    for (double& v : row) v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rep % 4) - 1.0);
    const auto p = project(single_row(row));
    double sum = 0.0;
    for (double v : p.tables[0].data()) sum += v;
    CHECK(std::abs(sum) <= 1e-12);
  }
}

TEST_CASE("apply_update") {
  const auto full = apply_update(single_row_theta({0.4, 0.6}), single_row({0.225, -0.225}), 0.4, 0.1);
  CHECK(full.theta.tables[0](0, 0) == doctest::Approx(0.31).epsilon(1e-14));
  CHECK(full.theta.tables[0](0, 1) == doctest::Approx(0.69).epsilon(1e-14));
  CHECK(full.boundary_hits == 0);

  const auto bounded = apply_update(single_row_theta({0.12, 0.88}), single_row({0.15, -0.15}), 1.0, 0.1);
  CHECK(bounded.theta.tables[0](0, 0) == doctest::Approx(0.085).epsilon(1e-12));
  CHECK(bounded.theta.tables[0](0, 1) == doctest::Approx(0.915).epsilon(1e-12));
  CHECK(bounded.boundary_hits == 1);

  const auto still = apply_update(single_row_theta({0.4, 0.6}), single_row({0.0, 0.0}), 0.4, 0.1);
  CHECK(still.theta == single_row_theta({0.4, 0.6}));

  CHECK_THROWS_AS(apply_update(single_row_theta({0.4, 0.6}), single_row({0.3, -0.1}), 0.4, 0.1), DomainError);
}

TEST_CASE("sis_update and step_size") {
  EmpiricalParams hat;
  hat.tables.push_back(fixtures::cpt({{0.2, 0.8}}));
  hat.fallback = {{false}};
  const auto theta0 = single_row_theta({0.4, 0.6});
  CHECK(sis_update(hat, theta0, 0.5).tables[0](0, 1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(sis_update(hat, theta0, 1.0) == theta0);
  CHECK(sis_update(hat, theta0, 0.0).tables[0] == hat.tables[0]);
  CHECK_THROWS_AS(sis_update(hat, theta0, 1.5), DomainError);

  CHECK(step_size(3, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(step_size(1, 0.5) == 0.5);
  CHECK_THROWS_AS(step_size(0, 1.0), DomainError);
}

TEST_CASE("fixed point: projected exact VAR gradient vanishes at f*") {
  const auto problem = fixtures::chain2_problem();
  const auto projected = project(exact::exact_gradient_var(problem, exact::optimal_params(problem)));
  for (double v : projected.tables[0].data()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("descent sanity: an exact VAR step moves toward f*") {
  const auto problem = fixtures::chain2_problem();
  const auto prior = init_params(problem, 0.1);
  const auto step = apply_update(prior, project(exact::exact_gradient_var(problem, prior)), 0.1, 0.1);
  CHECK(step.theta.tables[0](0, 1) > 0.6);
  CHECK(step.theta.tables[0](0, 1) < 0.84);
  CHECK(exact::weight_variance(problem, step.theta) < exact::weight_variance(problem, prior));
}

TEST_CASE("local L2 step is a convex weighting of theta and theta_hat") {
  Rng rng(41);
  const EstimationProblem problem(fixtures::random_network3(rng), {{"C", 0}});
  for (int rep = 0; rep < 20; ++rep) {
    const auto theta = fixtures::random_theta(problem, rng, 0.2);
    std::vector<WeightedSample> samples;
    for (int i = 0; i < 60; ++i) samples.push_back(weight(problem, theta, draw(theta, problem, rng)));
    const auto hat = empirical_distribution(problem, theta, samples, false);
    const double alpha = 0.05;
    const auto result = apply_update(theta, project(gradient_local(theta, hat, GradientKind::LocalL2)), alpha, 0.1);
    if (result.boundary_hits != 0) continue;
    for (std::size_t m = 0; m < theta.tables.size(); ++m)
      for (std::size_t c = 0; c < theta.tables[m].data().size(); ++c)
        CHECK(result.theta.tables[m].data()[c] ==
              doctest::Approx((1 - alpha) * theta.tables[m].data()[c] + alpha * hat.tables[m].data()[c]).epsilon(1e-12));
  }
}

TEST_CASE("AdaptConfig validation") {
  AdaptConfig local;
  local.kind = GradientKind::LocalL2;
  local.batch_size = 10;
  CHECK_THROWS_AS(local.validate(), DomainError);
  local.min_local_batch = 10;
  CHECK_NOTHROW(local.validate());

  AdaptConfig sis;
  sis.kind = GradientKind::SIS;
  sis.batch_size = 50;
  sis.beta = 2.0;
  CHECK_THROWS_AS(sis.validate(), DomainError);

  AdaptConfig kl2;
  kl2.kind = GradientKind::LocalKL2;
  CHECK(kl2.effective_smoothing());
  CHECK(kl2.effective_beta() == 1.0);
}

TEST_CASE("adapt_loop: L2 with one sample leaves theta unchanged at t = 1") {
  const auto problem = fixtures::chain2_problem();
  AdaptConfig config;
  config.kind = GradientKind::L2;
  config.total_updates = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto result = adapt_loop(problem, config, rng);
    CHECK(result.final_theta == result.trace.initial);
  }
}

TEST_CASE("adapt_loop: SIS with beta = 1 returns to theta0 after t = 1") {
  const auto problem = fixtures::chain2_problem();
  AdaptConfig config;
  config.kind = GradientKind::SIS;
  config.beta = 1.0;
  config.batch_size = 50;
  config.total_updates = 1;
  Rng rng(9);
  const auto result = adapt_loop(problem, config, rng);
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(result.final_theta.tables[0].data()[c] == doctest::Approx(result.trace.initial.tables[0].data()[c]).epsilon(1e-15));
}

TEST_CASE("adapt_loop: VAR halves the weight variance on chain2") {
  const auto problem = fixtures::chain2_problem();
  AdaptConfig config;
  config.kind = GradientKind::Var;
  config.beta = 0.5;
  config.gamma = 0.1;
  config.batch_size = 1;
  config.total_updates = 200;
  std::vector<double> variances;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(replication_seed(Rng::kDefaultSeed, seed));
    variances.push_back(exact::weight_variance(problem, adapt_loop(problem, config, rng).final_theta));
  }
  std::nth_element(variances.begin(), variances.begin() + 10, variances.end());
  const double upper = variances[10];
  std::nth_element(variances.begin(), variances.begin() + 9, variances.end());
  const double median = 0.5 * (variances[9] + upper);
  MESSAGE("median final variance: " << median);
  CHECK(median < 0.03);
}

TEST_CASE("adapt_loop: combined estimator is unbiased") {
  const auto problem = fixtures::chain2_problem();
  for (auto kind : {GradientKind::Var, GradientKind::L2, GradientKind::KLS, GradientKind::LocalL2, GradientKind::SIS}) {
    AdaptConfig config;
    config.kind = kind;
    config.batch_size = 20;
    config.total_updates = 10;
    config.min_local_batch = 20;
    std::vector<double> estimates;
    for (std::uint64_t r = 0; r < 200; ++r) {
      Rng rng(replication_seed(1234, r));
      estimates.push_back(adapt_loop(problem, config, rng).estimate.value);
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= static_cast<double>(estimates.size());
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= static_cast<double>(estimates.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(estimates.size()));
    INFO("kind " << to_string(kind) << " mean " << mean << " se " << se);
    CHECK(std::abs(mean - 0.5) <= 4.0 * se);
  }
}

TEST_CASE("adapt_loop traces satisfy the simplex and boundary constraints") {
  Rng model_rng(55);
  const EstimationProblem net3(fixtures::random_network3(model_rng), {{"C", 1}});
  const std::vector<EstimationProblem> problems{fixtures::chain2_problem(), fixtures::gamble1_problem(0),
                                                fixtures::gamble1_problem(1), net3};
  for (const auto& problem : problems) {
    for (auto kind : {GradientKind::Var, GradientKind::L2, GradientKind::KL1, GradientKind::KL2, GradientKind::KLS,
                      GradientKind::LocalL2, GradientKind::LocalKL1, GradientKind::LocalKL2, GradientKind::LocalKLS,
                      GradientKind::SIS}) {
      AdaptConfig config;
      config.kind = kind;
      config.gamma = 0.1;
      config.batch_size = is_global(kind) ? 5 : 50;
      config.total_updates = 30;
      Rng rng(7);
      const auto result = adapt_loop(problem, config, rng);
      INFO("kind " << to_string(kind));
      REQUIRE(result.trace.steps.size() == 30);
      check_on_boundary_simplex(problem, result.trace.initial, config.gamma);
      std::vector<double> batches;
      for (const auto& step : result.trace.steps) {
        check_on_boundary_simplex(problem, step.theta, config.gamma);
        batches.push_back(step.batch_estimate);
        CHECK(step.sample_count == config.batch_size);
      }
      CHECK(result.final_theta == result.trace.steps.back().theta);
      const std::vector<double> w(batches.size(), 1.0 / static_cast<double>(batches.size()));
      CHECK(result.estimate.value == doctest::Approx(combined_estimate(batches, w)).epsilon(1e-14));
      CHECK(result.trace.steps.back().running_estimate == doctest::Approx(result.estimate.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("adapt_loop is deterministic for a fixed seed") {
  const auto problem = fixtures::gamble1_problem(1);
  AdaptConfig config;
  config.kind = GradientKind::KLS;
  config.batch_size = 10;
  config.total_updates = 20;
  Rng a(3), b(3);
  const auto ra = adapt_loop(problem, config, a);
  const auto rb = adapt_loop(problem, config, b);
  CHECK(ra.estimate.value == rb.estimate.value);
  CHECK(ra.final_theta == rb.final_theta);
}

TEST_CASE("AbsoluteMean mode keeps rows on the simplex through renormalization") {
  const auto problem = fixtures::gamble1_problem(1);
  AdaptConfig config;
  config.kind = GradientKind::Var;
  config.projection = ProjectionMode::AbsoluteMean;
  config.batch_size = 5;
  config.total_updates = 50;
  Rng rng(12);
  const auto result = adapt_loop(problem, config, rng);
  for (const auto& step : result.trace.steps) check_on_boundary_simplex(problem, step.theta, config.gamma);
}
