#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "relrep/ecm.hpp"
#include "relrep/error.hpp"
#include "relrep/rng.hpp"

using namespace relrep;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Dataset points(std::vector<double> xs) {
  Dataset d;
  d.points = std::move(xs);
  return d;
}

Responsibilities one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  Responsibilities g(labels.size(), k);
  for (std::size_t n = 0; n < labels.size(); ++n) g(n, labels[n]) = 1.0;
  return g;
}

std::vector<std::vector<double>> as_rows(const Responsibilities& g) {
  std::vector<std::vector<double>> rows(g.rows(), std::vector<double>(g.cols()));
  for (std::size_t n = 0; n < g.rows(); ++n)
    for (std::size_t k = 0; k < g.cols(); ++k) rows[n][k] = g(n, k);
  return rows;
}

std::vector<double> means_from(double mu1, const std::vector<double>& gaps) {
  std::vector<double> m{mu1};
  for (double g : gaps) m.push_back(m.back() + g);
  return m;
}

}  // namespace

TEST_CASE("e-step examples") {
  const auto merged = e_step(MixtureParams::two(0.5, 1.0, 1.0), points({-3.0, 0.0, 2.0, 7.5}));
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(merged(n, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(merged(n, 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  const auto p = MixtureParams::two(0.5, 0.0, 4.0);
  const auto g = e_step(p, points({2.0, 0.0}));
  CHECK(g(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g(1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-8.0))).epsilon(1e-15));
  CHECK(std::abs(g(1, 0) - 0.999665) < 1e-6);
  CHECK(g(1, 0) + g(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("m-step examples") {
  const auto data = points({-1.0, 1.0, 3.0, 5.0});
  const auto m = m_step_standard(one_hot({0, 0, 1, 1}, 2), data);
  CHECK(m.means == std::vector<double>{0.0, 4.0});
  CHECK(m.weights == std::vector<double>{0.5, 0.5});
  CHECK(m.sigmas == std::vector<double>{1.0, 1.0});

  Responsibilities half(4, 2);
  for (std::size_t n = 0; n < 4; ++n) half(n, 0) = half(n, 1) = 0.5;
  const auto u = m_step_standard(half, data);
  CHECK(u.means[0] == 2.0);
  CHECK(u.means[1] == 2.0);

  const auto frozen =
      m_step_standard(one_hot({0, 0, 1, 1}, 2), data, MixtureParams::two(0.3, 1, 2, 1.5, 2.5), {true, true});
  CHECK(frozen.weights == std::vector<double>{0.3, 0.7});
  CHECK(frozen.sigmas == std::vector<double>{1.5, 2.5});
  CHECK(frozen.means == std::vector<double>{0.0, 4.0});
}

TEST_CASE("single component EM is the closed-form MLE") {
  const auto data = sample(MixtureParams::make({1.0}, {3.0}, {2.0}), 500, 4);
  ECMConfig cfg;
  cfg.fixed = {false, false};
  const auto fit = fit_em_standard(data, MixtureParams::make({1.0}, {0.0}, {1.0}), cfg);
  double mean = 0.0;
  for (double x : data.points) mean += x;
  mean /= 500.0;
  double var = 0.0;
  for (double x : data.points) var += (x - mean) * (x - mean);
  var /= 500.0;
  const auto& first = fit.trajectory.at(1).params;
  CHECK(first.means[0] == doctest::Approx(mean).epsilon(1e-13));
  CHECK(first.sigmas[0] * first.sigmas[0] == doctest::Approx(var).epsilon(1e-12));
  CHECK(fit.iterations <= 2);
}

TEST_CASE("q-function") {
  const auto data = points({-1.0, 0.5, 3.0});
  const auto p = MixtureParams::make({0.4, 0.6}, {0.0, 2.0}, {1.0, 1.5});
  const auto g = e_step(p, data);
  CHECK(q_function(p, g, data) ==
        doctest::Approx(oracle::q_value(as_rows(g), data.points, p.weights, p.means, p.sigmas)).epsilon(1e-14));

  const auto hard = one_hot({0, 0, 1}, 2);
  double complete = 0.0;
  const std::vector<std::size_t> lab{0, 0, 1};
  for (std::size_t n = 0; n < 3; ++n)
    complete += std::log(p.weights[lab[n]]) + log_normal_pdf(data.points[n], p.means[lab[n]], p.sigmas[lab[n]]);
  CHECK(q_function(p, hard, data) == doctest::Approx(complete).epsilon(1e-14));
}

TEST_CASE("cm-step hand-solved examples") {
  const auto data = points({0.0, 0.0, 4.0, 4.0});
  const auto g = one_hot({0, 0, 1, 1}, 2);
  CHECK(cm_step_reference_mean(g, data, 4.0) == 0.0);
  const auto step = cm_step_delta(g, data, 0.0);
  CHECK(step.delta == 4.0);
  CHECK(step.multiplier == 0.0);
  CHECK_FALSE(step.active());

  // Zero gap merges the components into one weighted mean.
  Rng rng(3);
  Responsibilities r(4, 2);
  for (std::size_t n = 0; n < 4; ++n) {
    r(n, 0) = rng.uniform();
    r(n, 1) = 1.0 - r(n, 0);
  }
  CHECK(cm_step_reference_mean(r, data, 0.0) == doctest::Approx(2.0).epsilon(1e-15));

  // Reference mean above everything assigned upward: active constraint.
  const auto active = cm_step_delta(g, data, 10.0);
  CHECK(active.unconstrained < 0.0);
  CHECK(active.delta == 0.0);
  CHECK(active.multiplier > 0.0);
  CHECK(active.active());
}

TEST_CASE("cm steps match the numerical argmax of Q") {
  Rng rng(99);
  for (int instance = 0; instance < 50; ++instance) {
    const std::size_t k = 2 + instance % 2;
    const std::size_t n = 20 + rng.next_u32() % 40;
    std::vector<double> xs(n);
    for (auto& x : xs) x = 3.0 * rng.normal();
    Responsibilities g(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += (g(i, j) = rng.uniform() + 1e-3);
      for (std::size_t j = 0; j < k; ++j) g(i, j) /= total;
    }
    std::vector<double> sigmas(k), weights(k, 1.0 / static_cast<double>(k));
    for (auto& s : sigmas) s = 0.5 + rng.uniform();
    std::vector<double> gaps(k - 1);
    for (auto& d : gaps) d = 3.0 * rng.uniform();
    const double clearance = instance % 3 == 0 ? 0.2 : 0.0;
    for (auto& d : gaps) d += clearance;
    const auto data = points(xs);
    const auto rows = as_rows(g);

    const double mu1 = cm_step_reference_mean(g, data, gaps, sigmas);
    const double mu1_oracle = oracle::concave_argmax(
        [&](double m) { return oracle::q_value(rows, xs, weights, means_from(m, gaps), sigmas); }, -kInf, 0.0);
    CHECK(std::abs(mu1 - mu1_oracle) <= 1e-8);

    // Stationarity of Q in mu1 at the CM output.
    auto q_mu = [&](double m) { return oracle::q_value(rows, xs, weights, means_from(m, gaps), sigmas); };
    CHECK(std::abs(oracle::central_difference(q_mu, mu1, 1e-4)) < 1e-6);

    // Shift the reference mean sometimes so the gap constraint binds.
    const double at = instance % 4 == 1 ? mu1 + 6.0 : mu1;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const DeltaStep step = cm_step_delta(g, data, at, gaps, i, clearance, sigmas);
      const double oracle_delta = oracle::concave_argmax(
          [&](double d) {
            auto gg = gaps;
            gg[i] = d + clearance;
            return oracle::q_value(rows, xs, weights, means_from(at, gg), sigmas);
          },
          0.0, 1.0);
      CHECK(std::abs(step.delta - oracle_delta) <= 1e-8);
      CHECK(step.delta >= 0.0);
      CHECK(step.multiplier >= 0.0);
      CHECK(step.multiplier * step.delta == 0.0);
      if (step.active()) {
        // The multiplier balances the slope of Q at the boundary.
        auto q_d = [&](double d) {
          auto gg = gaps;
          gg[i] = d + clearance;
          return oracle::q_value(rows, xs, weights, means_from(at, gg), sigmas);
        };
        const double slope = oracle::central_difference(q_d, 0.0, 1e-4);
        CHECK(std::abs(step.multiplier + slope) < 1e-6 * (1.0 + std::abs(slope)));
      }
    }
  }
}

TEST_CASE("cm steps never decrease Q") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto truth = MixtureParams::two(0.5, -1.0 - rng.uniform(), 1.0 + rng.uniform());
    const auto data = sample(truth, 20, 1000 + t);
    const auto start = MixtureParams::two(0.5, rng.normal(), rng.normal());
    const auto sorted = canonical_order(start);
    const auto g = e_step(sorted, data);
    double gap = sorted.means[1] - sorted.means[0];
    const double q0 = q_function(sorted, g, data);
    const double mu1 = cm_step_reference_mean(g, data, gap);
    auto p1 = sorted;
    p1.means = {mu1, mu1 + gap};
    const double q1 = q_function(p1, g, data);
    gap = cm_step_delta(g, data, mu1).delta;
    auto p2 = p1;
    p2.means = {mu1, mu1 + gap};
    const double q2 = q_function(p2, g, data);
    CHECK(q1 >= q0 - 1e-9);
    CHECK(q2 >= q1 - 1e-9);
    // One standard M-step on 20 points never lowers the likelihood.
    const auto m = m_step_standard(g, data, sorted, {true, true});
    CHECK(log_likelihood(m, data) >= log_likelihood(sorted, data) - 1e-9);
  }
}

TEST_CASE("one-time reparameterization equals going back and forth") {
  // The general algorithm reparameterizes, runs the CM steps and maps back
  // every iteration; the fit keeps the relative form throughout.
  const auto truth = MixtureParams::make({0.3, 0.3, 0.4}, {-3.0, 0.0, 2.5}, {1.0, 1.0, 1.0});
  const auto data = sample(truth, 300, 42);
  const ReparamSpec spec{OrderBy::mean, 0.0, DeltaEncoding::squared};
  const auto init = MixtureParams::make({0.3, 0.3, 0.4}, {-1.0, 0.5, 1.0}, {1.0, 1.0, 1.0});
  ECMConfig cfg;
  cfg.max_iters = 40;
  cfg.epsilon = 1e-300;
  const auto fit = fit_ecm_relative(data, to_relative(init, spec), spec, cfg);

  MixtureParams theta = canonical_order(init);
  for (std::size_t it = 1; it <= 40; ++it) {
    const auto gamma = e_step(theta, data);
    const RelativeParams lambda = to_relative(theta, spec);
    std::vector<double> gaps;
    for (std::size_t i = 0; i < 2; ++i) gaps.push_back(decoded_gap(lambda, spec, i));
    const double mu1 = cm_step_reference_mean(gamma, data, gaps, theta.sigmas);
    for (std::size_t i = 0; i < 2; ++i) gaps[i] = cm_step_delta(gamma, data, mu1, gaps, i, 0.0, theta.sigmas).delta;
    RelativeParams next = lambda;
    next.reference_value = mu1;
    for (std::size_t i = 0; i < 2; ++i) next.deltas[i] = encode_delta(gaps[i], spec);
    theta = to_absolute(next, spec);
    const auto& rec = fit.trajectory.at(it).params;
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(theta.means[k] - rec.means[k]) < 1e-10);
  }
}

TEST_CASE("monotone log-likelihood over seeded runs") {
  Rng rng(2718);
  for (int run = 0; run < 100; ++run) {
    const double pi = 0.3 + 0.4 * rng.uniform();
    const double a = 4.0 * rng.normal(), b = a + 0.5 + 3.0 * rng.uniform();
    const auto truth = MixtureParams::two(pi, a, b);
    const auto data = sample(truth, 100 + 10 * (run % 10), 5000 + run);
    // Free-sigma runs start near the truth so no component collapses onto a point.
    const bool free = run % 3 == 2;
    const double spread = free ? 0.5 : 3.0;
    const auto init = MixtureParams::two(pi, (free ? a : 0.0) + spread * rng.normal(),
                                         (free ? b : 0.0) + spread * rng.normal());
    ECMConfig cfg;
    cfg.max_iters = 500;
    if (free) cfg.fixed = {false, false};
    const auto em = fit_em_standard(data, init, cfg, truth);
    const ReparamSpec spec{OrderBy::mean, 0.0, run % 2 ? DeltaEncoding::squared : DeltaEncoding::raw_constrained};
    const auto rel = fit_ecm_relative(data, to_relative(init, spec), spec, cfg, truth);
    for (const auto* fit : {&em, &rel}) {
      for (std::size_t t = 1; t < fit->trajectory.size(); ++t) {
        REQUIRE(fit->trajectory[t].loglik >= fit->trajectory[t - 1].loglik - 1e-9);
      }
    }
  }
}

TEST_CASE("fit behaviour") {
  const auto truth = MixtureParams::two(0.5, -3.0, 3.0);
  const auto data = sample(truth, 400, 12);
  const ReparamSpec spec{OrderBy::mean, 0.0, DeltaEncoding::raw_constrained};

  SUBCASE("recovers well-separated means") {
    const auto fit = fit_ecm_relative(data, to_relative(MixtureParams::two(0.5, -1, 1), spec), spec, {}, truth);
    CHECK(fit.converged);
    const double se = 1.0 / std::sqrt(200.0);
    CHECK(std::abs(fit.final_params.means[0] - -3.0) < 3.0 * se);
    CHECK(std::abs(fit.final_params.means[1] - 3.0) < 3.0 * se);
    REQUIRE(fit.trajectory.back().dist_to_true.has_value());
  }

  SUBCASE("a fixpoint start stops after one iteration") {
    const auto fit = fit_em_standard(data, MixtureParams::two(0.5, -1, 1), {});
    const auto again = fit_em_standard(data, fit.final_params, {});
    CHECK(again.iterations == 1);
    CHECK(again.converged);
  }

  SUBCASE("a huge epsilon stops after one iteration") {
    ECMConfig cfg;
    cfg.epsilon = 1e300;
    CHECK(fit_em_standard(data, MixtureParams::two(0.5, -1, 1), cfg).iterations == 1);
    CHECK(fit_ecm_relative(data, to_relative(MixtureParams::two(0.5, -1, 1), spec), spec, cfg).iterations == 1);
  }

  SUBCASE("max_iters is reported as not converged") {
    ECMConfig cfg;
    cfg.max_iters = 2;
    cfg.epsilon = 1e-300;
    const auto fit = fit_em_standard(data, MixtureParams::two(0.5, -1, 1), cfg);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 2);
    CHECK(fit.trajectory.size() == 3);
  }

  SUBCASE("labels of the relative fit are canonical") {
    const auto fit = fit_ecm_relative(data, to_relative(MixtureParams::two(0.5, 1, -1), spec), spec, {});
    CHECK(fit.final_params.means[0] <= fit.final_params.means[1]);
  }
}

TEST_CASE("degenerate and invalid inputs") {
  const auto data = points({0.0, 1.0});
  Responsibilities empty_upper(2, 2);
  empty_upper(0, 0) = empty_upper(1, 0) = 1.0;
  try {
    cm_step_delta(empty_upper, data, 0.0);
    FAIL("expected degenerate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
  }
  try {
    m_step_standard(empty_upper, data);
    FAIL("expected degenerate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
  }
  ECMConfig bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  const ReparamSpec by_sigma{OrderBy::sigma, 0.0, DeltaEncoding::raw_constrained};
  CHECK_THROWS_AS(fit_ecm_relative(data, to_relative(MixtureParams::two(0.5, 0, 1, 1, 2), by_sigma), by_sigma, {}),
                  Error);
}

TEST_CASE("mean distance") {
  CHECK(mean_distance(MixtureParams::two(0.5, 0, 0), MixtureParams::two(0.5, 3, 4)) == 5.0);
  CHECK_THROWS_AS(mean_distance(MixtureParams::two(0.5, 0, 0), MixtureParams::make({1.0}, {0}, {1})), Error);
}
