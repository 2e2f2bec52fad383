#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "entropic/gauss.hpp"
#include "entropic/serialize.hpp"
#include "support/testkit.hpp"

using namespace entropic::gauss;
using testkit::Gen;

namespace {

// Reference formulas built from std::erf / std::erfc only.
double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double pdf(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}
double tn_pdf(double x, double mu, double s) {
  return pdf(x, mu, s) / (phi_cdf((1.0 - mu) / s) - phi_cdf((-1.0 - mu) / s));
}
double tn_cdf(double x, double mu, double s) {
  const double lo = phi_cdf((-1.0 - mu) / s);
  return (phi_cdf((x - mu) / s) - lo) / (phi_cdf((1.0 - mu) / s) - lo);
}
double tn_mean(double mu, double s) {
  const double a = (-1.0 - mu) / s, b = (1.0 - mu) / s;
  const double z = phi_cdf(b) - phi_cdf(a);
  return mu + s * (pdf(a, 0.0, 1.0) - pdf(b, 0.0, 1.0)) / z;
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

double box_integral(const TruncatedNormalMixture& q, int n) {
  if (q.dim == 1)
    return simpson([&](double x) { return std::exp(mixture_log_density(q, std::vector<double>{x})); }, -1.0,
                   std::nextafter(1.0, 0.0), n);
  return simpson(
      [&](double x) {
        return simpson(
            [&](double y) { return std::exp(mixture_log_density(q, std::vector<double>{x, y})); }, -1.0,
            std::nextafter(1.0, 0.0), n);
      },
      -1.0, std::nextafter(1.0, 0.0), n);
}

TruncatedNormalMixture random_mixture(Gen& g, std::size_t dim, std::size_t m, bool uniform) {
  TruncatedNormalMixture q;
  q.dim = dim;
  q.uniform_component = uniform;
  q.weights = testkit::random_simplex(g, m + (uniform ? 1 : 0));
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> mu(dim), s(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      mu[k] = g.uniform(-1.2, 1.2);
      s[k] = g.uniform(0.15, 1.5);
    }
    q.means.push_back(mu);
    q.scales.push_back(s);
  }
  q.check();
  return q;
}

TruncatedNormalMixture uniform_only(std::size_t dim) {
  TruncatedNormalMixture q;
  q.dim = dim;
  q.uniform_component = true;
  q.weights = {1.0};
  return q;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("log Phi against erfc and the tail series") {
  for (double x : {-30.0, -20.0, -5.0, -1.0, 0.0, 0.5, 3.0, 8.0})
    CHECK(log_normal_cdf(x) == doctest::Approx(std::log(phi_cdf(x))).epsilon(1e-12));
  // Deep tail: Phi(x) = phi(x) R(-x) with the Mills ratio from its continued
  // fraction R(t) = 1 / (t + 1 / (t + 2 / (t + 3 / ...))).
  for (double x : {-37.5, -40.0, -60.0, -200.0}) {
    const double t = -x;
    double tail = t;
    for (int k = 200; k >= 1; --k) tail = t + k / tail;
    const double ref = -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(tail);
    CHECK(log_normal_cdf(x) == doctest::Approx(ref).epsilon(1e-14));
  }
  // Continuity across the switch to the series.
  CHECK(log_normal_cdf(std::nextafter(-37.0, 0.0)) == doctest::Approx(log_normal_cdf(-37.0)).epsilon(1e-13));
  CHECK(log_normal_cdf_diff(-1.0, 1.0) == doctest::Approx(std::log(std::erf(1.0 / std::numbers::sqrt2))).epsilon(1e-13));
  CHECK(std::isfinite(log_normal_cdf_diff(40.0, 41.0)));
  CHECK(log_normal_cdf_diff(40.0, 41.0) == doctest::Approx(log_normal_cdf_diff(-41.0, -40.0)).epsilon(1e-12));
}

TEST_CASE("mixture density examples") {
  const TruncatedNormalMixture std1 = TruncatedNormalMixture::single({0.0}, {1.0});
  const double at0 = std::exp(mixture_log_density(std1, std::vector<double>{0.0}));
  CHECK(at0 == doctest::Approx(pdf(0.0, 0.0, 1.0) / (phi_cdf(1.0) - phi_cdf(-1.0))).epsilon(1e-13));
  CHECK(std::abs(at0 - 0.58437) <= 5e-6);

  const TruncatedNormalMixture flat = TruncatedNormalMixture::single({0.0, 0.0}, {1e4, 1e4});
  CHECK(mixture_log_density(flat, std::vector<double>{0.3, -0.7}) == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-8));

  for (double x : {-1.0001, 1.0, 2.0, -5.0, std::nan("")})
    CHECK(std::isinf(mixture_log_density(std1, std::vector<double>{x})));
  CHECK(mixture_log_density(std1, std::vector<double>{-1.0}) > -10.0);

  // Uniform-only mixture: exactly 2^-n.
  CHECK(mixture_log_density(uniform_only(2), std::vector<double>{0.1, 0.2}) == -2.0 * std::log(2.0));
}

TEST_CASE("mixtures integrate to 1 over the box") {
  Gen g(41);
  for (int trial = 0; trial < 6; ++trial) {
    const auto q1 = random_mixture(g, 1, g.index(1, 4), trial % 2 == 0);
    CHECK(std::abs(box_integral(q1, 4000) - 1.0) <= 1e-6);
  }
  for (int trial = 0; trial < 3; ++trial) {
    const auto q2 = random_mixture(g, 2, g.index(1, 3), trial % 2 == 1);
    CHECK(std::abs(box_integral(q2, 400) - 1.0) <= 1e-6);
  }
}

TEST_CASE("component densities match the erf reference") {
  Gen g(42);
  const auto q = random_mixture(g, 1, 3, true);
  for (double x : {-0.9, -0.2, 0.0, 0.55, 0.99}) {
    double expect = q.uniform_weight() * 0.5;
    for (std::size_t m = 0; m < 3; ++m) {
      const double c = tn_pdf(x, q.means[m][0], q.scales[m][0]);
      CHECK(mixture_component_log_density(q, m, std::vector<double>{x}) == doctest::Approx(std::log(c)).epsilon(1e-12));
      expect += q.weights[m] * c;
    }
    CHECK(mixture_log_density(q, std::vector<double>{x}) == doctest::Approx(std::log(expect)).epsilon(1e-12));
  }
}

TEST_CASE("sampling") {
  const TruncatedNormalMixture q = TruncatedNormalMixture::single({0.0, 0.0}, {0.7, 0.7});
  const SamplerConfig cfg{100000, 17};
  const auto xs = mixture_sample(q, cfg);
  REQUIRE(xs.size() == 100000);
  double m0 = 0.0, m1 = 0.0;
  bool inside = true;
  for (const auto& x : xs) {
    m0 += x[0];
    m1 += x[1];
    for (double v : x) inside = inside && v >= -1.0 && v < 1.0;
  }
  CHECK(inside);
  const double bound = 3.0 * 0.7 / std::sqrt(1e5);
  CHECK(std::abs(m0 / 1e5) <= bound);
  CHECK(std::abs(m1 / 1e5) <= bound);
  CHECK(mixture_sample(q, cfg) == xs);
  CHECK(mixture_sample(q, {100000, 18}) != xs);

  SUBCASE("far tails stay in the box and follow the truncated mean") {
    const TruncatedNormalMixture tail = TruncatedNormalMixture::single({-30.0}, {0.5});
    const auto ys = mixture_sample(tail, {20000, 3});
    double mean = 0.0;
    bool ok = true;
    for (const auto& y : ys) {
      ok = ok && y[0] >= -1.0 && y[0] < 1.0;
      mean += y[0] / 20000.0;
    }
    CHECK(ok);
    // Mass piles up at the lower edge: the draw is close to -1 + s^2 Exp(1) / 29.
    CHECK(mean == doctest::Approx(-1.0 + 0.25 / 29.0).epsilon(2e-3));
    const TruncatedNormalMixture high = TruncatedNormalMixture::single({40.0}, {0.5});
    double hmean = 0.0;
    for (const auto& y : mixture_sample(high, {20000, 4})) hmean += y[0] / 20000.0;
    CHECK(hmean == doctest::Approx(1.0 - 0.25 / 39.0).epsilon(2e-3));
  }
  SUBCASE("mixture weights are respected") {
    Gen g(43);
    TruncatedNormalMixture two;
    two.dim = 1;
    two.weights = {0.3, 0.7};
    two.means = {{-0.6}, {0.6}};
    two.scales = {{0.05}, {0.05}};
    const auto ys = mixture_sample(two, {50000, 9});
    double left = 0.0;
    for (const auto& y : ys) left += y[0] < 0.0 ? 1.0 : 0.0;
    CHECK(std::abs(left / 50000.0 - 0.3) <= 4.0 * std::sqrt(0.21 / 50000.0));
  }
}

TEST_CASE("power product") {
  SUBCASE("equal variances: N(0,1) x N(1,1) at b=1/2 is N(0.5, 1)") {
    const auto p = mixture_power_product(TruncatedNormalMixture::single({0.0}, {1.0}),
                                         TruncatedNormalMixture::single({1.0}, {1.0}), 0.5);
    REQUIRE(p.num_gaussians() == 1);
    CHECK(p.means[0][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.scales[0][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.weights[0] == 1.0);
  }
  SUBCASE("endpoints return the inputs verbatim") {
    Gen g(44);
    const auto qi = random_mixture(g, 2, 2, false);
    const auto qj = random_mixture(g, 2, 3, false);
    const auto at1 = mixture_power_product(qi, qj, 1.0);
    REQUIRE(at1.num_gaussians() == 6);
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t l = 0; l < 3; ++l) {
        CHECK(at1.means[m * 3 + l] == qi.means[m]);
        CHECK(at1.scales[m * 3 + l] == qi.scales[m]);
      }
    // Summing the copies of component m recovers its weight.
    for (std::size_t m = 0; m < 2; ++m) {
      double w = 0.0;
      for (std::size_t l = 0; l < 3; ++l) w += at1.weights[m * 3 + l];
      CHECK(w == doctest::Approx(qi.weights[m]).epsilon(1e-14));
    }
    const auto at0 = mixture_power_product(qi, qj, 0.0);
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t l = 0; l < 3; ++l) CHECK(at0.means[m * 3 + l] == qj.means[l]);
  }
  SUBCASE("moments: precision-weighted combination") {
    Gen g(45);
    for (int trial = 0; trial < 50; ++trial) {
      const double mi = g.uniform(-1, 1), mj = g.uniform(-1, 1), si = g.uniform(0.1, 2), sj = g.uniform(0.1, 2);
      const double b = g.uniform(0.01, 0.99);
      const auto p = mixture_power_product(TruncatedNormalMixture::single({mi}, {si}),
                                           TruncatedNormalMixture::single({mj}, {sj}), b);
      const double prec = b / (si * si) + (1 - b) / (sj * sj);
      CHECK(p.scales[0][0] == doctest::Approx(1.0 / std::sqrt(prec)).epsilon(1e-12));
      CHECK(p.means[0][0] == doctest::Approx((b * mi / (si * si) + (1 - b) * mj / (sj * sj)) / prec).epsilon(1e-12));
    }
  }
  SUBCASE("single-component log-density identity on a 2-D grid") {
    Gen g(46);
    for (int trial = 0; trial < 10; ++trial) {
      const auto qi = random_mixture(g, 2, 1, false);
      const auto qj = random_mixture(g, 2, 1, false);
      const double b = g.uniform(0.0, 1.0);
      const auto p = mixture_power_product(qi, qj, b);
      auto un = [](const TruncatedNormalMixture& q, double x, double y) {
        return std::log(pdf(x, q.means[0][0], q.scales[0][0])) + std::log(pdf(y, q.means[0][1], q.scales[0][1]));
      };
      const double c = mixture_log_density_untruncated(p, std::vector<double>{0.0, 0.0}) -
                       (b * un(qi, 0, 0) + (1 - b) * un(qj, 0, 0));
      double dev = 0.0;
      for (double x = -1.0; x <= 1.0; x += 0.1)
        for (double y = -1.0; y <= 1.0; y += 0.1) {
          const double lhs = mixture_log_density_untruncated(p, std::vector<double>{x, y});
          dev = std::max(dev, std::abs(lhs - (b * un(qi, x, y) + (1 - b) * un(qj, x, y)) - c));
        }
      CHECK(dev <= 1e-9);
    }
  }
  SUBCASE("identical single components at b=1/2 reproduce the density") {
    Gen g(47);
    const auto q = random_mixture(g, 2, 1, false);
    const auto p = mixture_power_product(q, q, 0.5);
    for (double x = -0.95; x < 1.0; x += 0.15)
      for (double y = -0.95; y < 1.0; y += 0.15) {
        const std::vector<double> a{x, y};
        CHECK(std::abs(mixture_log_density(p, a) - mixture_log_density(q, a)) <= 1e-9);
      }
  }
  SUBCASE("mixture weights use w_i^b w_j^(1-b) times the pairing constant") {
    TruncatedNormalMixture qi, qj;
    qi.dim = qj.dim = 1;
    qi.weights = {0.4, 0.6};
    qi.means = {{-0.5}, {0.5}};
    qi.scales = {{0.3}, {0.6}};
    qj.weights = {1.0};
    qj.means = {{0.2}};
    qj.scales = {{0.4}};
    const double b = 0.3;
    const auto p = mixture_power_product(qi, qj, b);
    // Unnormalised weight: w_i^b w_j^(1-b) int N_i^b N_j^(1-b) dx, evaluated by quadrature.
    std::vector<double> raw;
    for (std::size_t m = 0; m < 2; ++m) {
      const double mass = simpson(
          [&](double x) {
            return std::pow(pdf(x, qi.means[m][0], qi.scales[m][0]), b) * std::pow(pdf(x, 0.2, 0.4), 1 - b);
          },
          -12.0, 12.0, 20000);
      raw.push_back(std::pow(qi.weights[m], b) * mass);
    }
    CHECK(p.weights[0] == doctest::Approx(raw[0] / (raw[0] + raw[1])).epsilon(1e-9));
  }
  CHECK_THROWS_AS(mixture_power_product(TruncatedNormalMixture::single({0.0}, {1.0}),
                                        TruncatedNormalMixture::single({0.0, 0.0}, {1.0, 1.0}), 0.5),
                  std::invalid_argument);
}

TEST_CASE("transfer proposal") {
  Gen g(48);
  for (std::size_t dim : {std::size_t{1}, std::size_t{2}}) {
    const auto qi = random_mixture(g, dim, 2, false);
    const auto qj = random_mixture(g, dim, 3, false);
    const double b = 0.4;
    const auto p = transfer_proposal(qi, qj, b);
    const auto prod = mixture_power_product(qi, qj, b);
    CHECK(p.num_components() == 2 + 3 + 6 + 1);
    CHECK(p.uniform_component);
    CHECK(p.uniform_weight() == 0.25);
    const double unif = std::pow(0.5, static_cast<double>(dim));
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a(dim);
      for (double& x : a) x = g.uniform(-1.0, 1.0);
      const double parts = 0.25 * (std::exp(mixture_log_density(qi, a)) + std::exp(mixture_log_density(qj, a)) +
                                   std::exp(mixture_log_density(prod, a)) + unif);
      const double got = std::exp(mixture_log_density(p, a));
      CHECK(got == doctest::Approx(parts).epsilon(1e-12));
      CHECK(got >= 0.25 * unif);
    }
  }
  SUBCASE("identical single components: 3/4 q + 1/4 uniform") {
    const auto q = TruncatedNormalMixture::single({0.2}, {0.3});
    const auto p = transfer_proposal(q, q, 0.5);
    for (double x = -0.99; x < 1.0; x += 0.1) {
      const std::vector<double> a{x};
      CHECK(std::exp(mixture_log_density(p, a)) ==
            doctest::Approx(0.75 * std::exp(mixture_log_density(q, a)) + 0.125).epsilon(1e-12));
    }
  }
}

TEST_CASE("SNIS weights") {
  const TruncatedNormalMixture unif = uniform_only(1);
  const std::vector<Point> pts{{-0.5}, {0.25}};
  SUBCASE("log-weights (0, ln 3) give (1/4, 3/4)") {
    // Uniform proposal cancels; Q/alpha supplies the log-weights.
    const QFunction q = [](std::span<const double> a) { return a[0] > 0.0 ? std::log(3.0) : 0.0; };
    const auto w = snis_weights(q, unif, pts, 1.0);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
  }
  SUBCASE("constant Q under a uniform proposal") {
    const auto xs = mixture_sample(unif, {37, 5});
    const auto w = snis_weights([](std::span<const double>) { return 4.2; }, unif, xs, 0.7);
    for (double x : w) CHECK(x == doctest::Approx(1.0 / 37.0).epsilon(1e-14));
  }
  SUBCASE("shift invariance, permutation equivariance, exact sum") {
    Gen g(49);
    const auto prop = random_mixture(g, 2, 3, true);
    const QuadraticQ target{{0.2, -0.1}, {0.4, 0.6}, 0.0};
    const QFunction q = [&](std::span<const double> a) { return target(a); };
    const QFunction shifted = [&](std::span<const double> a) { return target(a) + 123.456; };
    auto xs = mixture_sample(prop, {200, 8});
    const auto w = snis_weights(q, prop, xs, 0.5);
    const auto ws = snis_weights(shifted, prop, xs, 0.5);
    double sum = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(w[k] >= 0.0);
      CHECK(ws[k] == doctest::Approx(w[k]).epsilon(1e-10));
      sum += w[k];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-14);
    std::vector<std::size_t> perm(xs.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<Point> ys;
    for (std::size_t k : perm) ys.push_back(xs[k]);
    const auto wp = snis_weights(q, prop, ys, 0.5);
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(wp[k] == doctest::Approx(w[perm[k]]).epsilon(1e-12));
  }
  SUBCASE("points outside the proposal support") {
    const auto narrow = TruncatedNormalMixture::single({0.0}, {0.1});
    const std::vector<Point> out{{1.5}, {0.0}};
    const auto w = snis_weights([](std::span<const double>) { return 0.0; }, narrow, out, 1.0);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
    CHECK_THROWS_AS(snis_weights([](std::span<const double>) { return 0.0; }, narrow, {{2.0}}, 1.0),
                    std::domain_error);
  }
}

TEST_CASE("SNIS log-partition") {
  SUBCASE("Q = 0 recovers the box log-volume") {
    const QFunction zero = [](std::span<const double>) { return 0.0; };
    const auto prop = TruncatedNormalMixture::single({0.1, -0.2}, {0.8, 0.6});
    CHECK(std::abs(snis_log_partition(zero, prop, 1.0, {100000, 3}) - 2.0 * std::log(2.0)) <= 0.01);
  }
  SUBCASE("erf oracle") {
    const double log_z = std::log(std::sqrt(std::numbers::pi) * std::erf(1.0));
    CHECK(std::abs(log_z - 0.40122) <= 5e-6);
    const QuadraticQ target{{0.0}, {1.0 / std::numbers::sqrt2}, 0.0};
    CHECK(target.log_partition(1.0) == doctest::Approx(log_z).epsilon(1e-13));
    const QFunction q = [&](std::span<const double> a) { return target(a); };
    const auto wide = TruncatedNormalMixture::single({0.0}, {1.0});
    CHECK(std::abs(snis_log_partition(q, wide, 1.0, {100000, 5}) - log_z) <= 0.01);
  }
  SUBCASE("zero-variance proposal is exact for any N") {
    const QuadraticQ target{{0.3, -0.4}, {0.5, 0.8}, 1.7};
    const QFunction q = [&](std::span<const double> a) { return target(a); };
    for (double alpha : {0.3, 1.0}) {
      const auto prop = target.boltzmann(alpha);
      for (std::size_t n : {1, 2, 50})
        CHECK(snis_log_partition(q, prop, alpha, {n, 11}) ==
              doctest::Approx(alpha * target.log_partition(alpha)).epsilon(1e-12));
    }
  }
  SUBCASE("error shrinks with N (median over 20 seeds)") {
    const QuadraticQ target{{0.4}, {0.25}, 0.0};
    const QFunction q = [&](std::span<const double> a) { return target(a); };
    const auto prop = TruncatedNormalMixture::single({0.0}, {1.0});
    const double truth = target.log_partition(1.0);
    std::vector<double> small, large;
    for (std::uint64_t s = 0; s < 20; ++s) {
      small.push_back(std::abs(snis_log_partition(q, prop, 1.0, {100, s}) - truth));
      large.push_back(std::abs(snis_log_partition(q, prop, 1.0, {100000, s}) - truth));
    }
    CHECK(median(large) < median(small));
  }
  SUBCASE("deterministic in the seed") {
    const QFunction q = [](std::span<const double> a) { return -a[0] * a[0]; };
    const auto prop = TruncatedNormalMixture::single({0.0}, {1.0});
    CHECK(snis_log_partition(q, prop, 1.0, {1000, 7}) == snis_log_partition(q, prop, 1.0, {1000, 7}));
  }
}

TEST_CASE("Boltzmann moments of the quadratic oracle") {
  const QuadraticQ target{{0.3, -0.8}, {0.2, 0.5}, 0.0};
  const auto mean = target.boltzmann_mean(0.5);
  CHECK(mean[0] == doctest::Approx(tn_mean(0.3, 0.2 * std::sqrt(0.5))).epsilon(1e-12));
  CHECK(mean[1] == doctest::Approx(tn_mean(-0.8, 0.5 * std::sqrt(0.5))).epsilon(1e-12));
  // log Z against quadrature of exp(Q / alpha).
  const QuadraticQ one{{0.3}, {0.2}, 0.4};
  const double z = simpson([&](double x) { return std::exp(one(std::vector<double>{x}) / 0.5); }, -1.0, 1.0, 4000);
  CHECK(one.log_partition(0.5) == doctest::Approx(std::log(z)).epsilon(1e-10));
}

TEST_CASE("EM proposal fit") {
  const QuadraticQ target{{0.3}, {0.2}, 0.0};
  const QFunction q = [&](std::span<const double> a) { return target(a); };
  TruncatedNormalMixture init;
  init.dim = 1;
  init.weights = {0.25, 0.25, 0.25, 0.25};
  init.means = {{-0.75}, {-0.25}, {0.25}, {0.75}};
  init.scales = {{0.3}, {0.3}, {0.3}, {0.3}};

  SUBCASE("mean converges to the target") {
    const auto fit = fit_proposal(q, init, 1.0, {100000, 1}, 20);
    double m = 0.0;
    for (std::size_t c = 0; c < fit.num_gaussians(); ++c)
      m += fit.weights[c] * tn_mean(fit.means[c][0], fit.scales[c][0]);
    CHECK(std::abs(m - tn_mean(0.3, 0.2)) <= 0.02);
    for (const auto& s : fit.scales) CHECK(s[0] >= kScaleFloor);
    for (double w : fit.weights) CHECK(w >= kWeightFloor * 0.5);
  }
  SUBCASE("forward KL is non-increasing up to estimator noise") {
    const double log_z = target.log_partition(1.0);
    const auto reference = TruncatedNormalMixture::single({0.0}, {1.0});
    std::vector<double> kl;
    for (std::size_t it = 0; it <= 10; ++it) {
      const auto fit = fit_proposal(q, init, 1.0, {20000, 2}, it);
      kl.push_back(snis_forward_kl(q, log_z, fit, reference, 1.0, {100000, 99}));
    }
    for (std::size_t k = 0; k + 1 < kl.size(); ++k) CHECK(kl[k + 1] <= kl[k] + 0.01);
    CHECK(kl.back() < kl.front());
    CHECK(kl.back() >= -0.01);
  }
  SUBCASE("starting at the target barely moves") {
    const auto start = target.boltzmann(1.0);
    const auto fit = fit_proposal(q, start, 1.0, {100000, 3}, 1);
    CHECK(std::abs(fit.means[0][0] - 0.3) < 0.01);
    CHECK(std::abs(fit.scales[0][0] - 0.2) < 0.01);
  }
  SUBCASE("zero iterations returns the initial mixture") {
    CHECK(fit_proposal(q, init, 1.0, {100, 1}, 0) == init);
  }
  SUBCASE("starved components are floored, not dropped") {
    TruncatedNormalMixture far = init;
    far.means[3] = {0.999};
    far.scales[3] = {1e-3};
    const auto fit = fit_proposal(q, far, 1.0, {5000, 4}, 3);
    CHECK(fit.num_gaussians() == 4);
    CHECK_NOTHROW(fit.check());
  }
}

TEST_CASE("SIR sampling") {
  // Chi-square statistic of 10^4 draws binned into 20 cells of equal mass
  // under `cdf`; 43.82 is the p = 0.001 critical value at 19 degrees of freedom.
  auto chi_square = [](const std::function<double(double)>& cdf, const std::function<Point(std::uint64_t)>& draw) {
    std::vector<double> edges{-1.0};
    for (int k = 1; k < 20; ++k) {
      double lo = -1.0, hi = 1.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < k / 20.0 ? lo : hi) = mid;
      }
      edges.push_back(0.5 * (lo + hi));
    }
    edges.push_back(1.0);
    std::vector<double> counts(20, 0.0);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
      const Point a = draw(static_cast<std::uint64_t>(d));
      const auto it = std::upper_bound(edges.begin(), edges.end(), a[0]);
      counts[static_cast<std::size_t>(std::clamp<long>(it - edges.begin() - 1, 0, 19))] += 1.0;
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - draws / 20.0) * (c - draws / 20.0) / (draws / 20.0);
    return chi2;
  };
  const QFunction flat = [](std::span<const double>) { return 0.0; };
  auto uniform_cdf = [](double x) { return 0.5 * (x + 1.0); };

  SUBCASE("constant Q under a uniform proposal reproduces the proposal") {
    const auto unif = uniform_only(1);
    CHECK(chi_square(uniform_cdf, [&](std::uint64_t seed) { return sir_policy_sample(flat, unif, 1.0, {8, seed}); }) <
          43.82);
  }
  SUBCASE("constant Q under a peaked proposal resamples toward the uniform target") {
    const auto prop = TruncatedNormalMixture::single({0.2}, {0.5});
    auto draw = [&](std::uint64_t seed) { return sir_policy_sample(flat, prop, 1.0, {1000, seed}); };
    CHECK(chi_square(uniform_cdf, draw) < 43.82);
    // The proposal itself is clearly rejected.
    CHECK(chi_square([](double x) { return tn_cdf(x, 0.2, 0.5); }, draw) > 43.82);
  }
  SUBCASE("quadratic target: SIR mean matches the Boltzmann mean") {
    const QuadraticQ target{{0.3}, {0.3}, 0.0};
    const QFunction q = [&](std::span<const double> a) { return target(a); };
    const auto wide = TruncatedNormalMixture::single({0.0}, {2.0});
    double mean = 0.0;
    bool inside = true;
    for (int d = 0; d < 10000; ++d) {
      const Point a = sir_policy_sample(q, wide, 1.0, {1000, static_cast<std::uint64_t>(d)});
      inside = inside && a[0] >= -1.0 && a[0] < 1.0;
      mean += a[0] / 10000.0;
    }
    CHECK(inside);
    CHECK(std::abs(mean - tn_mean(0.3, 0.3)) <= 0.02);
  }
  SUBCASE("N = 1 returns the single proposal draw") {
    const auto prop = TruncatedNormalMixture::single({0.0}, {0.5});
    const QFunction steep = [](std::span<const double> a) { return 100.0 * a[0]; };
    for (std::uint64_t seed = 0; seed < 20; ++seed)
      CHECK(sir_policy_sample(steep, prop, 1.0, {1, seed}) == mixture_sample(prop, {1, seed})[0]);
  }
}

TEST_CASE("Gaussian Renyi identities") {
  CHECK(gaussian_renyi(0.3, 0.3, 0.7, 0.4) == 0.0);
  CHECK(gaussian_renyi(0.0, 1.0, 1.0, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  for (double b : {0.0, 1.0}) CHECK(gaussian_gb(0.0, 1.0, 1.0, b) == 0.0);

  SUBCASE("matches quadrature") {
    for (double b : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double integral =
          simpson([&](double x) { return std::pow(pdf(x, 0.0, 1.0), b) * std::pow(pdf(x, 1.0, 1.0), 1 - b); }, -20.0,
                  20.0, 40000);
      const double r = std::log(integral) / (b - 1.0);
      CHECK(std::abs(gaussian_renyi(0.0, 1.0, 1.0, b) - r) <= 1e-6);
      CHECK(std::abs(gaussian_gb(0.0, 1.0, 1.0, b) + std::log(integral)) <= 1e-6);
    }
  }
  SUBCASE("G_b = 4 b (1 - b) G_1/2 for equal variances") {
    Gen g(50);
    for (int trial = 0; trial < 20; ++trial) {
      const double m1 = g.uniform(-2, 2), m2 = g.uniform(-2, 2), s = g.uniform(0.1, 3);
      const double half = gaussian_gb(m1, m2, s, 0.5);
      for (int k = 1; k <= 9; ++k) {
        const double b = k / 10.0;
        CHECK(gaussian_gb(m1, m2, s, b) == doctest::Approx(4 * b * (1 - b) * half).epsilon(1e-12));
      }
    }
  }
  SUBCASE("unequal variances break the identity") {
    auto gb = [](double b) {
      return -std::log(simpson(
          [&](double x) { return std::pow(pdf(x, 0.0, 0.5), b) * std::pow(pdf(x, 1.0, 2.0), 1 - b); }, -30.0, 30.0,
          60000));
    };
    const double half = gb(0.5);
    double worst = 0.0;
    for (int k = 1; k <= 9; ++k) {
      const double b = k / 10.0;
      worst = std::max(worst, std::abs(gb(b) - 4 * b * (1 - b) * half));
    }
    CHECK(worst > 1e-3);
  }
  CHECK_THROWS_AS(gaussian_renyi(0, 1, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("library quadrature agrees with the test-side rule") {
  auto f = [](double x) { return std::exp(-x * x) * std::cos(3 * x); };
  CHECK(integrate_simpson(f, -1.0, 1.0, 1001) == doctest::Approx(simpson(f, -1.0, 1.0, 1002)).epsilon(1e-15));
  const double area = integrate_box([](std::span<const double> a) { return a[0] * a[0] + a[1]; }, 2, 20);
  CHECK(area == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  CHECK_THROWS_AS(integrate_box([](std::span<const double>) { return 1.0; }, 3, 10), std::invalid_argument);
  CHECK(normal_pdf(0.4, 0.1, 0.7) == doctest::Approx(pdf(0.4, 0.1, 0.7)).epsilon(1e-15));
}

TEST_CASE("mixture JSON round-trip and validation") {
  Gen g(51);
  const auto q = random_mixture(g, 2, 3, true);
  const auto back = entropic::mixture_from_json(entropic::mixture_to_json(q));
  CHECK(back == q);
  const auto text = entropic::dump_json(entropic::mixture_to_json(q));
  CHECK(entropic::mixture_from_json(entropic::Json::parse(text)) == q);

  TruncatedNormalMixture bad = q;
  bad.weights[0] += 0.1;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = q;
  bad.scales[1][0] = 0.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = q;
  bad.means[0].pop_back();
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("RNG streams") {
  Rng a(5, 0), b(5, 0), c(5, 1);
  bool same = true, differ = false;
  for (int k = 0; k < 100; ++k) {
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    same = same && x == y;
    differ = differ || x != z;
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(same);
  CHECK(differ);
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
