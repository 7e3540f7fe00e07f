#include <doctest.h>

#include <cmath>

#include "bfn/discrete.hpp"
#include "bfn/harness.hpp"

using namespace bfn;
using namespace bfn::harness;

TEST_SUITE("harness") {
  TEST_CASE("gauss-hermite integrates normal moments") {
    const auto r = gauss_hermite(20);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const double z = r.nodes[i], w = r.weights[i];
      m0 += w;
      m2 += w * z * z;
      m4 += w * std::pow(z, 4);
      m6 += w * std::pow(z, 6);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
    CHECK_THROWS_AS(gauss_hermite(0), DomainError);
  }

  TEST_CASE("quadrature KLs vanish at the datum and grow with accuracy") {
    const auto rule = gauss_hermite(32);
    const Vec onehot{0.0, 1.0};
    CHECK(discrete_step_kl(onehot, 1, 2.0, rule) == doctest::Approx(0.0).scale(1.0));
    const Vec p{0.4, 0.6};
    CHECK(discrete_step_kl(p, 0, 1.0, rule) < discrete_step_kl(p, 0, 2.0, rule));
    const Vec q{0.2, 0.3, 0.5};
    CHECK(discrete_step_kl(q, 2, 0.5, rule) > 0.0);
    const Vec four{0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(discrete_step_kl(four, 0, 1.0, rule), ContractError);
    const Vec hist{0.1, 0.9};
    CHECK(discretised_step_kl(hist, 0.5, 3.0, rule) > 0.0);
  }

  TEST_CASE("finite-m simulator") {
    const FiniteMSimulator sim(3, 100, 0.1);
    CHECK(sim.alpha() == doctest::Approx(1.0));
    CHECK(sim.log_xi() == doctest::Approx(std::log(1.0 + 0.3 / 0.9)));
    const Vec a = sim.face_probs(1);
    CHECK(a[1] == doctest::Approx(0.9 / 3 + 0.1));
    Rng rng(1);
    const auto c = sim.sample_counts(rng, 1);
    CHECK(c[0] + c[1] + c[2] == 100);
    const Vec theta{0.2, 0.5, 0.3};
    const Vec post = sim.brute_force_posterior(theta, c);
    Categorical th(1, 3);
    th.probs = theta;
    const auto h = discrete::bayes_update(th, sim.logits(c));
    for (int k = 0; k < 3; ++k) CHECK(post[k] == doctest::Approx(h.probs[k]).epsilon(1e-12));
    CHECK_THROWS_AS(FiniteMSimulator::from_accuracy(2, 4.0, 4), DomainError);
    CHECK_THROWS_AS(FiniteMSimulator(2, 10, 0.0), DomainError);
  }

  TEST_CASE("reports are reproducible") {
    const auto a = check_additivity(Modality::discrete, 0.5, 1.0, 2000, 17);
    const auto b = check_additivity(Modality::discrete, 0.5, 1.0, 2000, 17);
    CHECK(a.line() == b.line());
    CHECK(a.seed == 17);
    CHECK(a.samples == 2000);
    const auto c = check_additivity(Modality::discrete, 0.5, 1.0, 2000, 18);
    CHECK(a.value != c.value);
  }

  TEST_CASE("report line field order") {
    PropertyReport r;
    r.id = "x";
    r.group = "g";
    r.modality = "-";
    r.value = 0.5;
    r.pass = true;
    r.samples = 3;
    r.seed = 4;
    CHECK(r.line() == "id=x\tgroup=g\tmodality=-\tparams=\tstatistic=\tvalue=0.5\ttolerance=0\tpass=true\t"
                      "samples=3\tseed=4\tdetail=");
  }

  TEST_CASE("suite selection") {
    SuiteOptions opt;
    opt.filter = {"no_such_group"};
    CHECK_THROWS_AS(run_all(opt), std::invalid_argument);
    opt.filter = {"schedule"};
    const auto reports = run_all(opt);
    CHECK(reports.size() == 6);
    CHECK(all_passed(reports));
    for (const auto& r : reports) CHECK(r.group == "schedule");
    opt.filter = {"bin_centre_golden", "schedule_presets"};
    CHECK(run_all(opt).size() == 2);
    CHECK(summary(reports).find("6/6 properties passed") != std::string::npos);
  }

  TEST_CASE("mutations") {
    for (Mutation m : all_mutations()) CHECK(mutation_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(mutation_from_string("nope"), std::invalid_argument);
    CHECK_FALSE(check_schedule_telescoping(Formulas::mutated(Mutation::alpha_weighting)).pass);
    CHECK_FALSE(check_bin_mass_rows(1, 200, Formulas::mutated(Mutation::unclipped_cdf)).pass);
    CHECK(check_bin_mass_rows(1, 200, Formulas::correct()).pass);
    const auto f = Formulas::mutated(Mutation::missing_n);
    CHECK(f.ln_scale(10) == 1.0);
  }

  TEST_CASE("fast identities pass") {
    CHECK(check_bin_centre_golden().pass);
    CHECK(check_quantise_round_trip().pass);
    CHECK(check_kl_zero(3).pass);
    CHECK(check_flow_prior(3).pass);
    CHECK(check_precision_additivity(3, 200).pass);
    CHECK(check_discrete_update_identity(3, 200).pass);
  }
}
