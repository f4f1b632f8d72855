#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dmpf/benchmark_models.hpp"
#include "dmpf/defensive_mixture.hpp"
#include "dmpf/dmpf.hpp"
#include "dmpf/enkf.hpp"
#include "dmpf/errors.hpp"
#include "dmpf/particle_filter.hpp"
#include "dmpf/particle_set.hpp"
#include "dmpf/predictive_density.hpp"
#include "dmpf/rng.hpp"
#include "dmpf/trajectory.hpp"
#include "models.hpp"
#include "oracles.hpp"

using namespace dmpf;
using testing_models::linear_model;
using testing_models::scalar_system;

namespace {

// log sum_k W_k N(u; f(a_k), Q) evaluated term by term in long double.
double brute_predictive(const StateSpaceModel& model, const ParticleSet& ancestors, std::size_t step,
                        const Vector& u) {
  const Matrix q = model.process_noise(step).cov();
  const Matrix q_inv = q.inverse();
  const auto n = static_cast<long double>(u.size());
  const long double log_norm =
      -0.5L * (n * std::log(2.0L * 3.14159265358979323846264338327950288L) + std::log((long double)q.determinant()));
  long double total_w = 0.0L;
  for (Index k = 0; k < ancestors.size(); ++k) {
    total_w += std::exp((long double)ancestors.log_weights[k]);
  }
  long double sum = 0.0L;
  for (Index k = 0; k < ancestors.size(); ++k) {
    const Vector d = u - model.transition_mean(step, ancestors.particles.row(k).transpose());
    const long double quad = d.dot(q_inv * d);
    sum += std::exp((long double)ancestors.log_weights[k]) / total_w * std::exp(log_norm - 0.5L * quad);
  }
  return static_cast<double>(std::log(sum));
}

ParticleSet random_ancestors(const StateSpaceModel& model, Index m, RngStream& rng, bool uneven) {
  ParticleSet ps;
  ps.particles = model.prior().sample(rng, m);
  ps.log_weights.resize(m);
  for (Index i = 0; i < m; ++i) {
    ps.log_weights[i] = uneven ? 2.0 * rng.normal() : 0.0;
  }
  normalize_in_place(ps);
  return ps;
}

ParticleSet uniform_set(PointSet points) {
  ParticleSet ps = ParticleSet::uniform(std::move(points));
  normalize_in_place(ps);
  return ps;
}

// Variance of M W_m, the weights rescaled to unit mean.
double relative_weight_variance(const Vector& log_w) {
  ParticleSet tmp;
  tmp.particles = PointSet::Zero(log_w.size(), 1);
  tmp.log_weights = log_w;
  normalize_in_place(tmp);
  const Vector w = tmp.weights() * static_cast<double>(log_w.size());
  return (w.array() - 1.0).square().mean();
}

// Posterior mean of u1 for u0 ~ N(0, 0.5^2), u1 = bernoulli(u0) + N(0, 0.1^2), y1 = u1 + N(0, 0.3^2).
double bernoulli_one_step_mean(double y1) {
  const int n = 800;
  const double lo = -2.0;
  const double h = 4.0 / n;
  std::vector<double> prior(n + 1), mapped(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double u0 = lo + i * h;
    prior[static_cast<std::size_t>(i)] = oracle::normal_pdf(u0, 0.0, 0.25);
    mapped[static_cast<std::size_t>(i)] = bernoulli_mean(u0, 0.3);
  }
  auto predictive = [&](double u1) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      s += w * prior[static_cast<std::size_t>(i)] * oracle::normal_pdf(u1, mapped[static_cast<std::size_t>(i)], 0.01);
    }
    return s * h;
  };
  return oracle::posterior_mean([&](double u1) { return predictive(u1) * oracle::normal_pdf(y1, u1, 0.09); }, -2.0,
                                2.5, 900);
}

// Fraction of per-step, per-coordinate means within 3 across-seed SDs of the Kalman mean.
double fraction_within(const std::vector<PointSet>& runs, const std::vector<oracle::KalmanStep>& kf) {
  int ok = 0;
  int checks = 0;
  const auto seeds = static_cast<double>(runs.size());
  for (Index t = 0; t < runs.front().rows(); ++t) {
    for (Index i = 0; i < runs.front().cols(); ++i) {
      double mu = 0.0;
      for (const auto& r : runs) {
        mu += r(t, i);
      }
      mu /= seeds;
      double var = 0.0;
      for (const auto& r : runs) {
        var += std::pow(r(t, i) - mu, 2);
      }
      const double sd = std::sqrt(var / (seeds - 1.0));
      for (const auto& r : runs) {
        ok += std::abs(r(t, i) - kf[static_cast<std::size_t>(t)].mean[i]) < 3.0 * sd ? 1 : 0;
        ++checks;
      }
    }
  }
  return static_cast<double>(ok) / checks;
}

}  // namespace

TEST_SUITE("predictive density") {
  TEST_CASE("single ancestor equals the transition density") {
    const auto sys = oracle::stable_system_2d(0.3, 0.9, 0.4, 0.5, 1.0);
    const auto model = linear_model(sys, 3);
    ParticleSet one = uniform_set(PointSet::Constant(1, 2, 0.7));
    const Vector u = (Vector(2) << 0.2, -1.1).finished();
    CHECK(predictive_logpdf(u, one, model, 1) ==
          doctest::Approx(model.transition_logpdf(1, one.particles.row(0).transpose(), u)).epsilon(1e-13));
  }

  TEST_CASE("two ancestors, point halfway between their means") {
    const auto sys = scalar_system(1.0, 1.0, 1.0, 0.0, 1.0);
    const auto model = linear_model(sys, 1);
    PointSet pts(2, 1);
    pts << -1.0, 1.0;
    const ParticleSet anc = uniform_set(pts);
    CHECK(predictive_logpdf(Vector::Constant(1, 0.0), anc, model, 1) ==
          doctest::Approx(std::log(oracle::normal_pdf(0.0, 1.0, 1.0))).epsilon(1e-13));
  }

  TEST_CASE("five weighted ancestors against direct summation") {
    const auto sys = oracle::stable_system_2d(0.5, 0.95, 0.3, 0.2, 2.0);
    const auto model = linear_model(sys, 2);
    RngStream rng(5);
    const ParticleSet anc = random_ancestors(model, 5, rng, true);
    for (int i = 0; i < 20; ++i) {
      const Vector u = 2.0 * rng.standard_normal(2);
      CHECK(predictive_logpdf(u, anc, model, 1) == doctest::Approx(brute_predictive(model, anc, 1, u)).epsilon(1e-10));
    }
  }

  TEST_CASE("batch evaluation agrees with direct summation for small sets") {
    const auto model = make_model("lorenz63");
    for (const Index m : {2, 7, 33, 64}) {
      RngStream rng(derive_seed(6, "small", static_cast<std::uint64_t>(m)));
      const ParticleSet anc = random_ancestors(*model, m, rng, m % 2 == 1);
      const PredictiveDensity pd = PredictiveDensity::from_ancestors(*model, anc, 1);
      const PointSet pts = pd.sample(50, rng);
      const Vector batch = pd.logpdf(pts);
      for (Index i = 0; i < pts.rows(); ++i) {
        const Vector u = pts.row(i).transpose();
        const double direct = brute_predictive(*model, anc, 1, u);
        CHECK(std::abs(batch[i] - direct) < 1e-12 * std::max(1.0, std::abs(direct)));
        CHECK(std::abs(batch[i] - pd.logpdf_at(u)) < 1e-13 * std::max(1.0, std::abs(direct)));
      }
    }
  }

  TEST_CASE("window pruning is lossless for a large ensemble") {
    // Robot-like spread: the state cloud is wide compared to the process noise, so most components are skipped.
    const auto sys = oracle::stable_system_2d(0.2, 0.98, 0.01, 0.5, 25.0);
    const auto model = linear_model(sys, 2);
    RngStream rng(8);
    const ParticleSet anc = random_ancestors(model, 3000, rng, true);
    const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
    PointSet pts = pd.sample(300, rng);
    pts.bottomRows(20) = 8.0 * Eigen::MatrixXd::Random(20, 2);
    const Vector batch = pd.logpdf(pts);
    double worst = 0.0;
    for (Index i = 0; i < pts.rows(); ++i) {
      worst = std::max(worst, std::abs(batch[i] - brute_predictive(model, anc, 1, pts.row(i).transpose())));
    }
    MESSAGE("largest log-density difference " << worst);
    CHECK(worst < 1e-10);
  }

  TEST_CASE("duplicates are merged and zero-weight ancestors ignored") {
    const auto sys = scalar_system(0.5, 0.2, 1.0, 0.0, 1.0);
    const auto model = linear_model(sys, 1);
    ParticleSet anc;
    anc.particles = (PointSet(4, 1) << 1.0, 1.0, -2.0, 5.0).finished();
    anc.log_weights = (Vector(4) << 0.0, 0.0, 0.0, -std::numeric_limits<double>::infinity()).finished();
    normalize_in_place(anc);
    const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
    CHECK(pd.components() == 2);
    const Vector u = Vector::Constant(1, 0.1);
    CHECK(pd.logpdf_at(u) == doctest::Approx(brute_predictive(model, anc, 1, u)).epsilon(1e-13));
  }

  TEST_CASE("prior form and dimension errors") {
    const GaussianDist g(Vector::Constant(2, 1.0), Matrix::Identity(2, 2));
    const PredictiveDensity pd = PredictiveDensity::from_prior(g);
    CHECK(pd.is_prior());
    const Vector u = Vector::Constant(2, 0.3);
    CHECK(pd.logpdf_at(u) == g.logpdf(u));
    const auto model = linear_model(scalar_system(1.0, 1.0, 1.0, 0.0, 1.0), 1);
    const ParticleSet anc = uniform_set(PointSet::Zero(3, 1));
    const PredictiveDensity p1 = PredictiveDensity::from_ancestors(model, anc, 1);
    CHECK_THROWS_AS(p1.logpdf(PointSet(PointSet::Zero(2, 2))), ShapeMismatch);
  }
}

TEST_SUITE("enkf proposal") {
  TEST_CASE("conjugate model: refit matches the Kalman posterior") {
    const auto sys = scalar_system(1.0, 1.0, 0.5, 0.3, 2.0);
    const auto model = linear_model(sys, 1);
    const Eigen::MatrixXd ys = Eigen::MatrixXd::Constant(1, 1, 1.4);
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, ys);
    RngStream rng(31);
    const Index m = 20000;
    const PointSet ens = enkf_init(model, ys.row(0).transpose(), m, rng);
    const PredictiveDensity prior = PredictiveDensity::from_prior(model.prior());
    const GaussianDist q = build_enkf_proposal(ens, ys.row(0).transpose(), prior, model, 0, rng);
    const double p = kf[0].cov(0, 0);
    CHECK(std::abs(q.mean()[0] - kf[0].mean[0]) < 3.3 * std::sqrt(p / static_cast<double>(m)));
    CHECK(q.cov()(0, 0) == doctest::Approx(p).epsilon(0.05));
  }

  TEST_CASE("an exact posterior ensemble refits to itself") {
    const auto sys = oracle::stable_system_2d(0.4, 0.9, 0.3, 0.5, 1.0);
    const auto model = linear_model(sys, 1);
    Eigen::MatrixXd ys(1, 2);
    ys << 0.8, -0.4;
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, ys);
    RngStream rng(32);
    const Index m = 20000;
    const PointSet ens = GaussianDist(kf[0].mean, kf[0].cov).sample(rng, m);
    const PredictiveDensity prior = PredictiveDensity::from_prior(model.prior());
    const GaussianDist q = build_enkf_proposal(ens, ys.row(0).transpose(), prior, model, 0, rng);
    for (Index i = 0; i < 2; ++i) {
      CHECK(std::abs(q.mean()[i] - kf[0].mean[i]) < 4.0 * std::sqrt(kf[0].cov(i, i) / static_cast<double>(m)));
    }
    CHECK((q.cov() - kf[0].cov).cwiseAbs().maxCoeff() < 0.05 * kf[0].cov.diagonal().maxCoeff());
  }

  TEST_CASE("collapsed ensemble throws NotPositiveDefinite") {
    const auto model = linear_model(scalar_system(1.0, 1.0, 1.0, 0.0, 1.0), 1);
    const PredictiveDensity prior = PredictiveDensity::from_prior(model.prior());
    RngStream rng(1);
    CHECK_THROWS_AS(build_enkf_proposal(PointSet::Constant(50, 1, 0.4), Vector::Constant(1, 0.0), prior, model, 0, rng),
                    NotPositiveDefinite);
  }
}

TEST_SUITE("mixture sampling") {
  const GaussianDist q_far(Vector::Constant(1, 100.0), Matrix::Identity(1, 1));
  const PredictiveDensity near = PredictiveDensity::from_prior(GaussianDist(Vector::Constant(1, 0.0), Matrix::Identity(1, 1)));

  auto count_far = [](const MixtureSample& s) {
    return static_cast<Index>((s.particles.col(0).array() > 50.0).count());
  };

  TEST_CASE("a = 0 draws only from the PF component") {
    MixtureProposal p{0.0, q_far, &near, 1};
    RngStream rng(1);
    const MixtureSample s = sample_mixture(p, 100, rng);
    CHECK(count_far(s) == 0);
    CHECK(std::count(s.labels.begin(), s.labels.end(), Component::pf) == 100);
  }

  TEST_CASE("a = 1 draws only from the EnKF component") {
    MixtureProposal p{1.0, q_far, &near, 1};
    RngStream rng(2);
    CHECK(count_far(sample_mixture(p, 100, rng)) == 100);
  }

  TEST_CASE("a = 0.5 splits evenly") {
    MixtureProposal p{0.5, q_far, &near, 1};
    RngStream rng(3);
    const MixtureSample s = sample_mixture(p, 100, rng);
    CHECK(count_far(s) == 50);
    CHECK(std::count(s.labels.begin(), s.labels.end(), Component::enkf) == 50);
  }

  TEST_CASE("share is round(a M)") {
    CHECK(enkf_share(0.335, 200) == 67);
    CHECK(enkf_share(0.004, 100) == 0);
    CHECK(enkf_share(0.006, 100) == 1);
    CHECK(enkf_share(1.0, 7) == 7);
  }

  TEST_CASE("a > 0 without an EnKF component is rejected") {
    MixtureProposal p;
    p.a = 0.3;
    p.predictive = &near;
    RngStream rng(4);
    CHECK_THROWS_AS(sample_mixture(p, 10, rng), ShapeMismatch);
  }
}

TEST_SUITE("balance weights") {
  const auto model = linear_model(scalar_system(0.8, 1.0, 1.0, 0.0, 1.0), 1);

  TEST_CASE("endpoint identities") {
    RngStream rng(11);
    const ParticleSet anc = random_ancestors(model, 40, rng, true);
    const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
    MixtureProposal p{0.5, GaussianDist(Vector::Constant(1, 0.4), Matrix::Constant(1, 1, 0.7)), &pd, 1};
    const MixtureSample s = sample_mixture(p, 60, rng);
    const Vector y = Vector::Constant(1, 0.9);
    const WeightBreakdown b = balance_weights(s.particles, p, y, model);
    CHECK(b.log_weights(0.0) == b.log_likelihood);
    CHECK(b.log_weights(0.0) == model.obs_loglik(1, y, s.particles));
    const Vector expected = b.log_likelihood + b.log_predictive - b.log_q_enkf;
    CHECK((b.log_weights(1.0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("EnKF component equal to the predictive gives likelihood weights for every a") {
    const GaussianDist g(Vector::Constant(1, 0.2), Matrix::Constant(1, 1, 1.3));
    const PredictiveDensity pd = PredictiveDensity::from_prior(g);
    MixtureProposal p{0.5, g, &pd, 0};
    RngStream rng(12);
    const MixtureSample s = sample_mixture(p, 50, rng);
    const WeightBreakdown b = balance_weights(s.particles, p, Vector::Constant(1, -0.3), model);
    for (const double a : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
      CHECK((b.log_weights(a) - b.log_likelihood).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(optimize_a(b).a == 0.0);
  }

  TEST_CASE("three-particle hand example") {
    // Ancestors 0, 1, -1 with weights 0.5, 0.3, 0.2; f(x) = 0.8 x, Q = R = 1, q_EnKF = N(0.5, 2), a = 0.3.
    ParticleSet anc;
    anc.particles = (PointSet(3, 1) << 0.0, 1.0, -1.0).finished();
    anc.log_weights = (Vector(3) << std::log(0.5), std::log(0.3), std::log(0.2)).finished();
    anc.normalized = true;
    const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
    MixtureProposal p{0.3, GaussianDist(Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 2.0)), &pd, 1};
    const PointSet u = (PointSet(3, 1) << -1.0, 0.0, 2.0).finished();
    const double y = 0.6;
    const Vector lw = balance_weights(u, p, Vector::Constant(1, y), model).log_weights(0.3);
    for (Index i = 0; i < 3; ++i) {
      const double x = u(i, 0);
      const double pred = 0.5 * oracle::normal_pdf(x, 0.0, 1.0) + 0.3 * oracle::normal_pdf(x, 0.8, 1.0) +
                          0.2 * oracle::normal_pdf(x, -0.8, 1.0);
      const double w = oracle::normal_pdf(y, x, 1.0) * pred / (0.3 * oracle::normal_pdf(x, 0.5, 2.0) + 0.7 * pred);
      CHECK(lw[i] == doctest::Approx(std::log(w)).epsilon(1e-12));
    }
  }

  TEST_CASE("zero likelihood or predictive gives zero weight") {
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_balance_weight(ninf, 0.0, 0.0, 0.5) == ninf);
    CHECK(log_balance_weight(0.0, ninf, 0.0, 0.5) == ninf);
    CHECK(log_balance_weight(-1.0, -2.0, ninf, 0.5) == doctest::Approx(-1.0 - std::log(0.5)));
  }
}

TEST_SUITE("weight optimization") {
  WeightBreakdown synthetic(RngStream& rng, Index m) {
    WeightBreakdown b;
    b.log_likelihood = rng.standard_normal(m);
    b.log_predictive = rng.standard_normal(m);
    b.log_q_enkf = rng.standard_normal(m);
    return b;
  }

  TEST_CASE("constant objective resolves to the smallest a") {
    RngStream rng(1);
    WeightBreakdown b = synthetic(rng, 100);
    b.log_q_enkf = b.log_predictive;
    const WeightOptimization o = optimize_a(b);
    CHECK(o.a == 0.0);
    CHECK(o.objective_a == o.objective_zero);
  }

  TEST_CASE("exact EnKF component selects a near 1") {
    // Conjugate first step: with q_EnKF the exact posterior, w(., 1) is constant.
    const auto model = linear_model(scalar_system(1.0, 1.0, 0.5, 0.0, 1.0), 1);
    const PredictiveDensity prior = PredictiveDensity::from_prior(model.prior());
    const double post_var = 1.0 / (1.0 + 1.0 / 0.5);
    const GaussianDist exact(Vector::Constant(1, post_var * 0.8 / 0.5), Matrix::Constant(1, 1, post_var));
    for (std::uint64_t s = 0; s < 10; ++s) {
      RngStream rng(derive_seed(2, "exact", s));
      MixtureProposal p{0.5, exact, &prior, 0};
      const WeightBreakdown b = balance_weights(sample_mixture(p, 1000, rng).particles, p, Vector::Constant(1, 0.8), model);
      const WeightOptimization o = optimize_a(b);
      CHECK(o.a >= 0.9);
      CHECK(o.objective_one < o.objective_zero);
    }
  }

  TEST_CASE("selected a never loses to the endpoints") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      RngStream rng(derive_seed(3, "dominance", s));
      const WeightBreakdown b = synthetic(rng, 200);
      const double a0 = rng.uniform();
      const WeightOptimization o = optimize_a(b, a0, 51);
      CHECK(o.objective_zero == weight_objective(b, 0.0, a0));
      CHECK(o.objective_one == weight_objective(b, 1.0, a0));
      CHECK(o.objective_a <= std::min(o.objective_zero, o.objective_one) + 1e-12);
    }
  }

  TEST_CASE("objective undefined everywhere falls back to a0") {
    WeightBreakdown b;
    b.log_likelihood = Vector::Constant(5, -std::numeric_limits<double>::infinity());
    b.log_predictive = Vector::Zero(5);
    b.log_q_enkf = Vector::Zero(5);
    CHECK(optimize_a(b, 0.25).a == 0.25);
    CHECK(std::isinf(weight_objective(b, 0.5, 0.5)));
  }

  TEST_CASE("grid needs two points") {
    RngStream rng(4);
    CHECK_THROWS_AS(optimize_a(synthetic(rng, 5), 0.5, 1), ShapeMismatch);
  }
}

TEST_SUITE("defensive mixture") {
  // Prior ancestors N(0, 0.5), A = 1, Q = 1, R = 0.09: an informative observation of a wide predictive.
  const auto sys = scalar_system(1.0, 1.0, 0.09, 0.0, 0.5);
  const auto model = linear_model(sys, 1);
  const double y = 0.7;
  const double post_var = 1.0 / (1.0 / 1.5 + 1.0 / 0.09);
  const double post_mean = post_var * y / 0.09;
  const GaussianDist shifted(Vector::Constant(1, post_mean + 10.0 * std::sqrt(post_var)),
                             Matrix::Constant(1, 1, post_var));

  TEST_CASE("a badly placed EnKF component cannot blow up the weights") {
    const Index m = 2000;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      RngStream rng(derive_seed(40, "defensive", s));
      const ParticleSet anc = uniform_set(model.prior().sample(rng, m));
      const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
      MixtureProposal pf{0.0, shifted, &pd, 1};
      MixtureProposal mix{0.5, shifted, &pd, 1};
      const Vector yv = Vector::Constant(1, y);
      const double v_pf = relative_weight_variance(balance_weights(sample_mixture(pf, m, rng).particles, pf, yv, model).log_weights(0.0));
      const double v_mix =
          relative_weight_variance(balance_weights(sample_mixture(mix, m, rng).particles, mix, yv, model).log_weights(0.5));
      worst = std::max(worst, v_mix / v_pf);
    }
    MESSAGE("largest weight-variance ratio, a = 0.5 against a = 0: " << worst);
    CHECK(worst <= 8.0);
  }

  TEST_CASE("a badly placed EnKF component drives a to the PF end") {
    const Index m = 2000;
    int small = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      RngStream rng(derive_seed(41, "shifted", s));
      const ParticleSet anc = uniform_set(model.prior().sample(rng, m));
      const PredictiveDensity pd = PredictiveDensity::from_ancestors(model, anc, 1);
      MixtureProposal mix{0.5, shifted, &pd, 1};
      const WeightBreakdown b = balance_weights(sample_mixture(mix, m, rng).particles, mix, Vector::Constant(1, y), model);
      small += optimize_a(b, 0.5).a <= 0.1 ? 1 : 0;
    }
    CHECK(small == 20);
  }
}

TEST_SUITE("dmpf filter") {
  TEST_CASE("init matches the one-step Kalman posterior") {
    const auto sys = scalar_system(1.0, 1.0, 0.4, -0.2, 1.5);
    const auto model = linear_model(sys, 1);
    const Eigen::MatrixXd ys = Eigen::MatrixXd::Constant(1, 1, 0.9);
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, ys);
    RngStream rng(51);
    const DmpfStepResult r = dmpf_init(model, ys.row(0).transpose(), 20000, rng);
    CHECK(r.a == 0.5);
    CHECK_FALSE(r.diagnostics.fallback);
    const double se = std::sqrt(weighted_variance(r.posterior)[0] / ess(r.posterior));
    CHECK(std::abs(weighted_mean(r.posterior)[0] - kf[0].mean[0]) < 3.0 * se);
    CHECK(weighted_variance(r.posterior)[0] == doctest::Approx(kf[0].cov(0, 0)).epsilon(0.05));
  }

  TEST_CASE("init with an uninformative observation returns the prior") {
    const auto sys = scalar_system(1.0, 1.0, 1e12, 2.0, 0.8);
    const auto model = linear_model(sys, 1);
    RngStream rng(52);
    const Index m = 10000;
    const DmpfStepResult r = dmpf_init(model, Vector::Constant(1, -3.0), m, rng);
    CHECK(ess(r.posterior) > 0.99 * m);
    CHECK(std::abs(weighted_mean(r.posterior)[0] - 2.0) < 4.0 * std::sqrt(0.8 / m));
    CHECK(weighted_variance(r.posterior)[0] == doctest::Approx(0.8).epsilon(0.05));
  }

  TEST_CASE("full linear-Gaussian run within 3 SE of the Kalman filter") {
    const auto sys = oracle::stable_system_2d(0.4, 0.9, 0.3, 0.5, 1.0);
    const auto model = linear_model(sys, 12);
    RngStream rng(14);
    const Trajectory traj = simulate(model, rng);
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, traj.observations);
    std::vector<PointSet> runs;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const FilterRunResult r = run_dmpf(model, traj, 1000, derive_seed(3, "dmpf", s));
      REQUIRE_FALSE(r.failed);
      runs.push_back(r.means());
    }
    const double frac = fraction_within(runs, kf);
    MESSAGE("within 3 SE: dmpf " << frac);
    CHECK(frac >= 0.95);
  }

  TEST_CASE("near-deterministic transition: DMPF and PF agree") {
    const auto sys = scalar_system(0.9, 1e-6, 0.5, 0.0, 1.0);
    const auto model = linear_model(sys, 1);
    const Eigen::MatrixXd ys = (Eigen::MatrixXd(2, 1) << 0.6, 0.3).finished();
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, ys);
    Trajectory traj;
    traj.states = PointSet::Zero(2, 1);
    traj.observations = ys;
    traj.times = {0.0, 1.0};
    std::vector<double> dm, pf;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const FilterRunResult d = run_dmpf(model, traj, 3000, derive_seed(60, "dmpf", s));
      REQUIRE_FALSE(d.failed);
      dm.push_back(d.means()(1, 0));
      pf.push_back(run_pf(model, traj, 3000, derive_seed(60, "pf", s)).means()(1, 0));
    }
    auto mean_sd = [](const std::vector<double>& v) {
      double mu = 0.0;
      for (const double x : v) {
        mu += x;
      }
      mu /= static_cast<double>(v.size());
      double var = 0.0;
      for (const double x : v) {
        var += (x - mu) * (x - mu);
      }
      return std::pair{mu, std::sqrt(var / static_cast<double>(v.size() - 1))};
    };
    const auto [mu_d, sd_d] = mean_sd(dm);
    const auto [mu_p, sd_p] = mean_sd(pf);
    const double se = std::sqrt((sd_d * sd_d + sd_p * sd_p) / 10.0);
    CHECK(std::abs(mu_d - mu_p) < 3.0 * se + 1e-9);
    CHECK(std::abs(mu_d - kf[1].mean[0]) < 3.0 * sd_d / std::sqrt(10.0) + 1e-9);
  }

  TEST_CASE("runs are reproducible for a seed") {
    const auto model = make_model("bernoulli", {{"steps", 10}});
    RngStream rng(2);
    const Trajectory traj = simulate(*model, rng);
    const FilterRunResult a = run_dmpf(*model, traj, 200, 9);
    const FilterRunResult b = run_dmpf(*model, traj, 200, 9);
    CHECK(a.means() == b.means());
    CHECK(a.weight_parameters() == b.weight_parameters());
    CHECK(run_dmpf(*model, traj, 200, 10).means() != a.means());
  }

  TEST_CASE("fixed a is used at every step") {
    const auto model = make_model("bernoulli", {{"steps", 5}});
    RngStream rng(3);
    const Trajectory traj = simulate(*model, rng);
    DmpfOptions opt;
    opt.fixed_a = 0.3;
    const FilterRunResult r = run_dmpf(*model, traj, 200, 1, opt);
    for (const double a : r.weight_parameters()) {
      CHECK(a == 0.3);
    }
    for (const auto& d : r.diagnostics) {
      CHECK_FALSE(d.optimized);
    }
  }

  TEST_CASE("EnKF forecast outside the transition domain falls back to a = 0") {
    // dt < 0: the Bernoulli map is undefined above |x| = 1.08, and about a fifth of the prior lies there.
    const auto model = make_model("bernoulli", {{"mu0", 1.0}, {"sigma0", 0.1}, {"dt", -0.5}, {"steps", 1}});
    Trajectory traj;
    traj.states = PointSet::Constant(2, 1, 1.0);
    traj.observations = PointSet::Constant(2, 1, 1.0);
    traj.times = {0.0, -0.5};
    const FilterRunResult r = run_dmpf(*model, traj, 500, 4);
    REQUIRE_FALSE(r.failed);
    REQUIRE(r.diagnostics.size() == 2);
    CHECK(r.diagnostics[1].fallback);
    CHECK(r.diagnostics[1].a == 0.0);
    CHECK(r.steps[1].mean.allFinite());
  }

  TEST_CASE("option validation") {
    const auto model = make_model("bernoulli");
    RngStream rng(1);
    DmpfOptions bad;
    bad.a0 = 1.5;
    CHECK_THROWS_AS(dmpf_init(*model, Vector::Zero(1), 100, rng, bad), ConfigError);
    CHECK_THROWS_AS(dmpf_init(*model, Vector::Zero(1), 1, rng), SingleParticle);
    CHECK(parse_ancestor_mode("weighted") == AncestorMode::weighted);
    CHECK_THROWS_AS(parse_ancestor_mode("other"), ConfigError);
  }

  TEST_CASE("weighted ancestor mode matches the Kalman filter as well") {
    const auto sys = scalar_system(0.8, 0.3, 0.5, 0.2, 1.0);
    const auto model = linear_model(sys, 1);
    const Eigen::MatrixXd ys = (Eigen::MatrixXd(2, 1) << 0.4, 1.1).finished();
    const auto kf = oracle::kalman_filter(sys.A, sys.Q, sys.H, sys.R, sys.m0, sys.P0, ys);
    DmpfOptions opt;
    opt.ancestor_mode = AncestorMode::weighted;
    std::vector<PointSet> runs;
    Trajectory traj;
    traj.states = PointSet::Zero(2, 1);
    traj.observations = ys;
    traj.times = {0.0, 1.0};
    for (std::uint64_t s = 0; s < 10; ++s) {
      runs.push_back(run_dmpf(model, traj, 2000, derive_seed(70, "weighted", s), opt).means());
    }
    CHECK(fraction_within(runs, kf) >= 0.95);
  }
}

TEST_SUITE("dmpf convergence") {
  TEST_CASE("mean error decays like M^-1/2 for fixed a") {
    const auto model =
        make_model("bernoulli", {{"mu0", 0.0}, {"sigma0", 0.5}, {"sigma_process", 0.1}, {"sigma_obs", 0.3}});
    const double y1 = 0.9;
    const double exact = bernoulli_one_step_mean(y1);
    const std::vector<double> sizes{100, 1000, 10000};
    for (const double a : {0.0, 0.3, 1.0}) {
      DmpfOptions opt;
      opt.fixed_a = a;
      std::vector<double> errors;
      for (const double m : sizes) {
        double sq = 0.0;
        const int seeds = 24;
        for (int s = 0; s < seeds; ++s) {
          RngStream rng(derive_seed(80, "rate", static_cast<std::uint64_t>(s) + 1000 * static_cast<std::uint64_t>(m)));
          const ParticleSet prev = uniform_set(model->prior().sample(rng, static_cast<Index>(m)));
          const DmpfStepResult r = dmpf_step(*model, prev, 1, Vector::Constant(1, y1), static_cast<Index>(m), rng, opt);
          sq += std::pow(weighted_mean(r.posterior)[0] - exact, 2);
        }
        errors.push_back(std::sqrt(sq / seeds));
      }
      const double slope = oracle::loglog_slope(sizes, errors);
      MESSAGE("a = " << a << ": slope " << slope);
      CHECK(slope > -0.7);
      CHECK(slope < -0.3);
    }
  }

  TEST_CASE("Bernoulli: the optimized a stays near the PF end") {
    const auto model = make_model("bernoulli");
    RngStream rng(derive_seed(1, "trajectory", 0));
    const Trajectory traj = simulate(*model, rng);
    const FilterRunResult r = run_dmpf(*model, traj, 1000, 17);
    REQUIRE_FALSE(r.failed);
    std::vector<double> a = r.weight_parameters();
    a.erase(a.begin());
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
    const double median = a[a.size() / 2];
    MESSAGE("median a over steps 1-40: " << median);
    CHECK(median <= 0.2);
  }
}
