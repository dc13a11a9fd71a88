#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "relrep/relrep.h"

namespace {

rr_mixture* make_two(double pi1, double mu1, double mu2) {
  const double w[2] = {pi1, 1.0 - pi1};
  const double m[2] = {mu1, mu2};
  const double s[2] = {1.0, 1.0};
  rr_mixture* out = nullptr;
  REQUIRE(rr_mixture_create(2, w, m, s, &out) == RR_OK);
  return out;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(rr_version()) == "0.1.0");
  CHECK(std::string(rr_status_name(RR_ERR_SINGULARITY_GUARD)) == "singularity_guard");
  CHECK(std::string(rr_status_name(RR_OK)) == "ok");
}

TEST_CASE("mixture handles") {
  rr_mixture* m = make_two(0.5, 0.0, 4.0);
  CHECK(rr_mixture_size(m) == 2);
  double d = 0.0;
  REQUIRE(rr_mixture_density(m, 2.0, &d) == RR_OK);
  CHECK(d == doctest::Approx(std::exp(-2.0) / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

  double score[5];
  CHECK(rr_mixture_score(m, 0.3, score, 5) == RR_OK);
  CHECK(rr_mixture_score(m, 0.3, score, 4) == RR_ERR_ARGUMENT);
  CHECK(std::strlen(rr_last_error()) > 0);

  double moments[4];
  CHECK(rr_mixture_moments(m, 3, moments) == RR_OK);
  CHECK(moments[1] == 2.0);
  CHECK(rr_mixture_moments(m, 4, moments) == RR_ERR_UNSUPPORTED_ORDER);

  std::vector<double> a(50), b(50);
  CHECK(rr_mixture_sample(m, 50, 9, a.data()) == RR_OK);
  CHECK(rr_mixture_sample(m, 50, 9, b.data()) == RR_OK);
  CHECK(a == b);
  double ll = 0.0;
  CHECK(rr_mixture_log_likelihood(m, a.data(), a.size(), &ll) == RR_OK);
  CHECK(std::isfinite(ll));
  rr_mixture_destroy(m);

  rr_mixture* bad = nullptr;
  const double w[2] = {0.5, 0.6}, mu[2] = {0, 1}, s[2] = {1, 1};
  CHECK(rr_mixture_create(2, w, mu, s, &bad) == RR_ERR_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(rr_mixture_create(2, nullptr, mu, s, &bad) == RR_ERR_ARGUMENT);

  rr_mixture* parsed = nullptr;
  REQUIRE(rr_mixture_parse("K = 2\npi = 0.25 0.75\nmu = -1 1\nsigma = 1 2\n", &parsed) == RR_OK);
  double got_w[2], got_s[2];
  CHECK(rr_mixture_get(parsed, got_w, nullptr, got_s) == RR_OK);
  CHECK(got_w[1] == 0.75);
  CHECK(got_s[1] == 2.0);
  rr_mixture_destroy(parsed);
  rr_mixture_destroy(nullptr);
}

TEST_CASE("classification and reparameterization") {
  rr_mixture* merged = make_two(0.5, 2.0, 2.0);
  int ok = 1;
  size_t elim = 9, over = 9;
  REQUIRE(rr_mixture_classify(merged, 1e-8, &ok, &elim, &over) == RR_OK);
  CHECK(ok == 0);
  CHECK(elim == 0);
  CHECK(over == 1);

  rr_reparam_spec spec = rr_reparam_spec_default();
  spec.encoding = RR_ENCODING_RAW;
  spec.clearance = 0.1;
  rr_relative* rel = nullptr;
  CHECK(rr_to_relative(merged, &spec, &rel) == RR_ERR_NOT_IDENTIFIABLE);
  rr_mixture_destroy(merged);

  rr_mixture* m = make_two(0.5, 3.0, 1.0);
  spec.clearance = 0.0;
  REQUIRE(rr_to_relative(m, &spec, &rel) == RR_OK);
  CHECK(rr_relative_size(rel) == 2);
  CHECK(rr_relative_reference(rel) == 1.0);
  double delta = 0.0;
  CHECK(rr_relative_deltas(rel, &delta, 1) == RR_OK);
  CHECK(delta == 2.0);
  size_t perm[2];
  CHECK(rr_relative_permutation(rel, perm, 2) == RR_OK);
  CHECK(perm[0] == 1);
  double jac[4];
  CHECK(rr_relative_jacobian(rel, &spec, jac, 4) == RR_OK);
  CHECK(jac[0] == 1.0);
  CHECK(jac[1] == 0.0);
  CHECK(jac[2] == 1.0);
  CHECK(jac[3] == 1.0);

  const double wider = 5.0;
  CHECK(rr_relative_set_deltas(rel, &wider, 1) == RR_OK);
  rr_mixture* back = nullptr;
  REQUIRE(rr_to_absolute(rel, &spec, 1, &back) == RR_OK);
  double means[2];
  rr_mixture_get(back, nullptr, means, nullptr);
  CHECK(means[0] == 6.0);
  CHECK(means[1] == 1.0);
  rr_mixture_destroy(back);
  rr_relative_destroy(rel);
  rr_mixture_destroy(m);
}

TEST_CASE("dynamics entry points") {
  rr_mixture* truth = make_two(0.5, 0.0, 0.0);
  double vel[3];
  REQUIRE(rr_expected_velocity(RR_PARAM_ORIGINAL, 0.3, 0.0, 0.0, truth, 1.0, vel) == RR_OK);
  CHECK(vel[0] == 0.0);
  CHECK(vel[1] == 0.0);
  CHECK(vel[2] == 0.0);
  double flow[2];
  CHECK(rr_flow_at(RR_PARAM_RELATIVE, -1.0, 1.0, 0.5, truth, 1.0, flow) == RR_OK);
  CHECK(std::isfinite(flow[0]));
  CHECK(rr_flow_at(RR_PARAM_RELATIVE, -1.0, 1.0, 1.5, truth, 1.0, flow) == RR_ERR_ARGUMENT);
  rr_mixture_destroy(truth);
}

TEST_CASE("fits") {
  rr_mixture* truth = make_two(0.5, -2.0, 2.0);
  std::vector<double> x(300);
  REQUIRE(rr_mixture_sample(truth, x.size(), 4, x.data()) == RR_OK);
  rr_mixture* init = make_two(0.5, -0.5, 0.5);
  rr_ecm_config cfg = rr_ecm_config_default();
  rr_reparam_spec spec = rr_reparam_spec_default();
  rr_fit_result* em = nullptr;
  rr_fit_result* ecm = nullptr;
  REQUIRE(rr_fit_em_standard(x.data(), x.size(), init, &cfg, truth, &em) == RR_OK);
  REQUIRE(rr_fit_ecm_relative(x.data(), x.size(), init, &spec, &cfg, truth, &ecm) == RR_OK);
  CHECK(rr_fit_result_converged(em) == 1);
  CHECK(rr_fit_result_length(ecm) == rr_fit_result_iterations(ecm) + 1);
  double ll0 = 0, ll1 = 0, dist = 0, means[2];
  CHECK(rr_fit_result_record(ecm, 0, &ll0, &dist, means, 2) == RR_OK);
  CHECK(rr_fit_result_record(ecm, rr_fit_result_iterations(ecm), &ll1, &dist, means, 2) == RR_OK);
  CHECK(ll1 >= ll0);
  CHECK(dist < 1.0);
  CHECK(rr_fit_result_record(ecm, 100000, &ll1, &dist, means, 2) == RR_ERR_ARGUMENT);
  rr_mixture* fin = nullptr;
  CHECK(rr_fit_result_final(em, &fin) == RR_OK);
  rr_mixture_destroy(fin);

  rr_fit_result* nodist = nullptr;
  REQUIRE(rr_fit_em_standard(x.data(), x.size(), init, &cfg, nullptr, &nodist) == RR_OK);
  CHECK(rr_fit_result_record(nodist, 0, &ll0, &dist, means, 2) == RR_OK);
  CHECK(std::isnan(dist));

  CHECK(rr_fit_em_standard(x.data(), 0, init, &cfg, nullptr, &nodist) == RR_ERR_ARGUMENT);
  rr_fit_result_destroy(nodist);
  rr_fit_result_destroy(em);
  rr_fit_result_destroy(ecm);
  rr_mixture_destroy(init);
  rr_mixture_destroy(truth);
}

TEST_CASE("Fisher information") {
  rr_mixture* m = make_two(0.5, -1.0, 1.0);
  size_t dim = 0;
  REQUIRE(rr_fim_dimension(m, RR_FIM_FULL, &dim) == RR_OK);
  CHECK(dim == 5);
  double entries[4], se[4];
  REQUIRE(rr_fim_estimate(m, RR_FIM_MEANS, RR_FIM_MONTE_CARLO, 1000, 3, nullptr, entries, se, 4) == RR_OK);
  CHECK(entries[1] == entries[2]);
  CHECK(se[0] > 0.0);
  CHECK(rr_fim_estimate(m, RR_FIM_MEANS, RR_FIM_QUADRATURE, 201, 0, nullptr, entries, nullptr, 3) == RR_ERR_ARGUMENT);
  rr_mixture_destroy(m);

  rr_mixture* merged = make_two(0.5, 1.0, 1.0);
  CHECK(rr_fim_estimate(merged, RR_FIM_RELATIVE_MEANS, RR_FIM_QUADRATURE, 201, 0, nullptr, entries, nullptr, 4) ==
        RR_ERR_SINGULARITY_GUARD);
  rr_mixture_destroy(merged);
}

TEST_CASE("experiments") {
  rr_experiment_kind kind;
  CHECK(rr_experiment_kind_parse("fim", &kind) == RR_OK);
  CHECK(kind == RR_EXP_FIM);
  CHECK(rr_experiment_kind_parse("plot", &kind) == RR_ERR_CONFIG);
  CHECK(std::string(rr_experiment_default_config(RR_EXP_NN)).rfind("experiment = nn", 0) == 0);

  const auto dir = std::filesystem::path(RELREP_TEST_TMP) / "capi";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "field.cfg";
  std::ofstream(cfg) << "experiment = field\nmu1_axis = -1 1 1\nmu2_axis = -1 1 1\n";
  rr_manifest* man = nullptr;
  REQUIRE(rr_experiment_run(RR_EXP_FIELD, cfg.c_str(), (dir / "out").c_str(), nullptr, &man) == RR_OK);
  CHECK(std::string(rr_manifest_json(man)).find("\"experiment\": \"field\"") != std::string::npos);
  CHECK(rr_manifest_summary_count(man) == 4);
  CHECK(std::string(rr_manifest_summary_line(man, 0)) == "grid=3x3");
  CHECK(rr_manifest_summary_line(man, 10) == nullptr);
  rr_manifest_destroy(man);

  CHECK(rr_experiment_run(RR_EXP_GD, cfg.c_str(), (dir / "out2").c_str(), nullptr, &man) == RR_ERR_CONFIG);
  CHECK(man == nullptr);

  const auto ecm_cfg = dir / "ecm.cfg";
  std::ofstream(ecm_cfg) << "experiment = ecm\nmax_iters = 2\n";
  const uint64_t seed = 7;
  REQUIRE(rr_experiment_run(RR_EXP_ECM, ecm_cfg.c_str(), (dir / "ecm").c_str(), &seed, &man) ==
          RR_ERR_NOT_CONVERGED);
  REQUIRE(man != nullptr);
  CHECK(std::filesystem::exists(dir / "ecm" / "ecm_trajectory.csv"));
  rr_manifest_destroy(man);
}
