#include "doctest.h"
#include "fixtures.hpp"

#include <sstream>

#include "ais/exact.hpp"
#include "ais/experiment.hpp"

using namespace ais;

namespace {

std::shared_ptr<const EstimationProblem> shared(EstimationProblem p) {
  return std::make_shared<const EstimationProblem>(std::move(p));
}

AdaptConfig var_config() {
  AdaptConfig c;
  c.kind = GradientKind::Var;
  c.beta = 0.5;
  c.batch_size = 1;
  return c;
}

}  // namespace

TEST_CASE("R = 1: MSE is the single squared error") {
  ExperimentConfig config;
  config.problem = shared(fixtures::chain2_problem());
  config.methods = {MethodSpec::likelihood_weighting(), MethodSpec::adaptive("var", var_config())};
  config.replications = 1;
  config.checkpoints = {10, 30};
  config.threads = 1;
  const auto result = run_experiment(config);
  REQUIRE(result.mse.size() == 4);
  CHECK(result.true_value == doctest::Approx(0.5).epsilon(1e-14));
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t c = 0; c < 2; ++c) {
      const double e = result.errors[m][c][0];
      CHECK(result.mse[m * 2 + c].mse == e * e);
      CHECK(result.mse[m * 2 + c].replications == 1);
    }

  // The LW error matches a direct prefix mean of the same stream.
  Rng rng(replication_seed(config.master_seed, 0));
  const auto batch = batch_estimate(*config.problem, init_params(*config.problem, 0.0), 60, rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < 20; ++i) sum += batch.samples[i].weight;
  CHECK(result.errors[0][0][0] + 0.5 == doctest::Approx(sum / 20.0).epsilon(1e-14));
}

TEST_CASE("f* control has zero MSE at every checkpoint") {
  const auto problem = fixtures::chain2_problem();
  ExperimentConfig config;
  config.problem = shared(problem);
  config.methods = {MethodSpec::fixed("optimal", exact::optimal_params(problem))};
  config.replications = 10;
  config.checkpoints = {1, 7, 50};
  const auto result = run_experiment(config);
  for (const auto& row : result.mse) {
    CHECK(row.mse >= 0.0);
    // Every weight equals G up to rounding of 0.42 / 0.84 and 0.08 / 0.16.
    CHECK(row.mse < 1e-24);
  }
}

TEST_CASE("MSE values are nonnegative and sign test is reported against LW") {
  ExperimentConfig config;
  config.problem = shared(fixtures::gamble1_problem(0));
  config.methods = {MethodSpec::likelihood_weighting(), MethodSpec::adaptive("var", var_config())};
  config.replications = 8;
  config.checkpoints = {20, 40};
  const auto result = run_experiment(config);
  for (const auto& row : result.mse) {
    CHECK(row.mse >= 0.0);
    if (row.method == "lw") {
      CHECK_FALSE(row.sign_test_p.has_value());
    } else {
      REQUIRE(row.sign_test_p.has_value());
      CHECK(*row.sign_test_p >= 0.0);
      CHECK(*row.sign_test_p <= 1.0);
    }
  }
}

TEST_CASE("run_experiment is reproducible and independent of the thread count") {
  ExperimentConfig config;
  config.problem = shared(fixtures::gamble1_problem(1));
  AdaptConfig kls;
  kls.kind = GradientKind::KLS;
  kls.batch_size = 5;
  config.methods = {MethodSpec::likelihood_weighting(), MethodSpec::adaptive("var", var_config()),
                    MethodSpec::adaptive("kls", kls)};
  config.replications = 12;
  config.checkpoints = {10, 25, 60};
  config.variance_stride = 5;

  auto csv = [](const ExperimentResult& r) {
    std::ostringstream out;
    write_mse_csv(out, r.mse);
    write_variance_csv(out, r.variance);
    return out.str();
  };
  config.threads = 1;
  const std::string one = csv(run_experiment(config));
  config.threads = 4;
  const std::string four = csv(run_experiment(config));
  CHECK(one == four);
  CHECK(csv(run_experiment(config)) == four);

  config.master_seed += 1;
  CHECK(csv(run_experiment(config)) != four);
}

TEST_CASE("ExperimentConfig validation") {
  ExperimentConfig config;
  config.problem = shared(fixtures::chain2_problem());
  config.methods = {MethodSpec::likelihood_weighting()};
  config.checkpoints = {10, 10};
  CHECK_THROWS_AS(config.validate(), DomainError);
  config.checkpoints = {10};
  config.replications = 0;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config.replications = 1;
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("variance_curve") {
  const auto problem = fixtures::chain2_problem();
  AdaptConfig config = var_config();
  config.gamma = 0.1;
  config.total_updates = 20;
  Rng rng(5);
  const auto result = adapt_loop(problem, config, rng);

  const auto curve = variance_curve(problem, result.trace, 5);
  REQUIRE(curve.size() == 5);
  CHECK(curve[0].t == 0);
  CHECK(curve[0].true_variance == exact::weight_variance(problem, result.trace.initial));
  CHECK(std::abs(curve[0].true_variance - 0.06) <= 1e-12);
  CHECK(curve[2].t == 10);
  CHECK(curve[2].total_samples == 10);
  CHECK(curve[2].true_variance == exact::weight_variance(problem, result.trace.steps[9].theta));

  CHECK(variance_curve(problem, result.trace, 100).size() == 1);

  // L2 sample gradients vanish when every weight equals the running estimate.
  AdaptConfig l2 = config;
  l2.kind = GradientKind::L2;
  l2.beta.reset();
  Rng rng2(5);
  const auto at_opt = adapt_loop(problem, l2, rng2, exact::optimal_params(problem));
  for (const auto& p : variance_curve(problem, at_opt.trace, 1)) CHECK(std::abs(p.true_variance) <= 1e-12);
}

TEST_CASE("experiment variance rows start at the prior variance") {
  ExperimentConfig config;
  config.problem = shared(fixtures::chain2_problem());
  config.methods = {MethodSpec::likelihood_weighting(), MethodSpec::adaptive("var", var_config())};
  config.replications = 4;
  config.checkpoints = {20};
  config.variance_stride = 10;
  const auto result = run_experiment(config);
  std::size_t lw_rows = 0;
  for (const auto& row : result.variance) {
    if (row.method == "lw") {
      ++lw_rows;
      CHECK(std::abs(row.point.true_variance - 0.06) <= 1e-12);
    } else if (row.point.t == 0) {
      CHECK(std::abs(row.point.true_variance - 0.06) <= 1e-12);
    }
  }
  CHECK(lw_rows == 3);
}

TEST_CASE("select_action") {
  const auto exact_choice = select_action(fixtures::gamble1(), {}, exact_evaluator());
  CHECK(exact_choice.action == 1);
  REQUIRE(exact_choice.values.size() == 2);
  CHECK(std::abs(exact_choice.values[0] - 2.0) <= 1e-12);
  CHECK(std::abs(exact_choice.values[1] - 2.48) <= 1e-12);

  InfluenceDiagram flat = fixtures::gamble1();
  flat.utility.table = {4.0, 4.0};
  const auto tie = select_action(flat, {}, exact_evaluator());
  CHECK(tie.action == 0);
  CHECK(std::abs(tie.values[0] - 4.0) <= 1e-12);
  CHECK(std::abs(tie.values[1] - 4.0) <= 1e-12);

  InfluenceDiagram single = fixtures::gamble1();
  single.decision.arity = 1;
  single.network.cpts[1] = fixtures::cpt({{0.8, 0.2}, {0.3, 0.7}});
  CHECK(select_action(single, {}, exact_evaluator()).action == 0);

  for (double c : {0.5, 7.0}) {
    InfluenceDiagram scaled = fixtures::gamble1();
    for (double& u : scaled.utility.table) u *= c;
    const auto choice = select_action(scaled, {}, exact_evaluator());
    CHECK(choice.action == 1);
    CHECK(std::abs(choice.values[1] - c * 2.48) <= 1e-12);
  }

  CHECK(select_action(fixtures::gamble1(), {}, lw_evaluator(20000)).action == 1);
  AdaptConfig adapt = var_config();
  adapt.batch_size = 20;
  adapt.total_updates = 200;
  CHECK(select_action(fixtures::gamble1(), {}, adaptive_evaluator(adapt)).action == 1);
}

TEST_CASE("format_double and CSV layout") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

  std::ostringstream mse;
  write_mse_csv(mse, {MseRow{"lw", 50, 0.25, 40, {}}, MseRow{"var", 50, 0.125, 40, 0.5}});
  CHECK(mse.str() == "method,checkpoint_samples,mse,replications,sign_test_p\nlw,50,0.25,40,\nvar,50,0.125,40,0.5\n");

  std::ostringstream var;
  write_variance_csv(var, {VarianceRow{"var", {2, 4, 0.06}}});
  CHECK(var.str() == "method,t,total_samples,true_variance\nvar,2,4,0.06\n");

  Trace trace;
  TraceStep step;
  step.t = 1;
  step.alpha = 0.5;
  step.batch_estimate = 0.7;
  step.running_estimate = 0.7;
  step.warnings = {"a", "b"};
  trace.steps.push_back(step);
  std::ostringstream tr;
  write_trace_csv(tr, trace);
  CHECK(tr.str().rfind("t,alpha,batch_estimate,running_estimate,boundary_hits,warnings\n1,0.5,0.7,0.7,0,", 0) == 0);
}
