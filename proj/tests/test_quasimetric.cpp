#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mad/errors.hpp"
#include "mad/quasimetric.hpp"
#include "testing_util.hpp"

using namespace mad;

namespace {

std::vector<double> random_vector(int dim, std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> value(-scale, scale);
  std::vector<double> v(static_cast<size_t>(dim));
  for (double& x : v) x = value(rng);
  return v;
}

std::vector<QuasimetricSpec> all_kinds() {
  return {QuasimetricSpec::simple(0.0),
          QuasimetricSpec::simple(0.5),
          QuasimetricSpec::simple(1.0),
          QuasimetricSpec::max(),
          QuasimetricSpec::sum(),
          QuasimetricSpec::mean(),
          QuasimetricSpec::convex({0.3, 0.7}, {QuasimetricSpec::max(), QuasimetricSpec::simple(0.25)})};
}

}  // namespace

TEST_CASE("relu reduction componentwise definition") {
  std::vector<double> x{2, 0}, y{0, 1};
  const auto r = relu_reduction(x, y);
  CHECK(r[0] == 2.0);
  CHECK(r[1] == 0.0);

  const auto zero = relu_reduction(x, x);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);

  CHECK_THROWS_AS(relu_reduction(std::vector<double>{1.0}, y), ShapeError);
}

TEST_CASE("relu reduction absolute-difference identity, brute force") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto x = random_vector(5, rng);
    const auto y = random_vector(5, rng);
    const auto fwd = relu_reduction(x, y);
    const auto rev = relu_reduction(y, x);
    for (size_t i = 0; i < x.size(); ++i) {
      CHECK(fwd[i] + rev[i] == doctest::Approx(std::abs(x[i] - y[i])).epsilon(1e-12));
    }
  }
}

TEST_CASE("d_simple hand values and identity") {
  std::vector<double> x{2, 0}, y{0, 1};
  CHECK(d_simple(x, y, 0.5) == doctest::Approx(1.5));  // 0.5*2 + 0.5*(2/2)
  CHECK(d_simple(x, x, 0.0) == 0.0);
  CHECK(d_simple(x, x, 0.7) == 0.0);
  CHECK(d_simple(y, y, 1.0) == 0.0);
}

TEST_CASE("d_simple positive homogeneity on random inputs") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_vector(6, rng);
    const auto y = random_vector(6, rng);
    const double base = d_simple(x, y, 0.3);
    for (double lambda : {0.5, 2.0, 10.0}) {
      std::vector<double> lx(x), ly(y);
      for (double& v : lx) v *= lambda;
      for (double& v : ly) v *= lambda;
      CHECK(d_simple(lx, ly, 0.3) == doctest::Approx(lambda * base).epsilon(1e-9));
    }
  }
}

TEST_CASE("aggregations: hand values and the simple decomposition") {
  std::vector<double> x{3, 1}, y{1, 1};
  CHECK(d_aggregate(x, y, QuasimetricSpec::Kind::Max) == doctest::Approx(2.0));
  CHECK(d_aggregate(x, y, QuasimetricSpec::Kind::Sum) == doctest::Approx(2.0));
  CHECK(d_aggregate(x, y, QuasimetricSpec::Kind::Mean) == doctest::Approx(1.0));
  CHECK(d_aggregate(x, x, QuasimetricSpec::Kind::Max) == 0.0);
  CHECK(d_aggregate(x, x, QuasimetricSpec::Kind::Sum) == 0.0);
  CHECK(d_aggregate(x, x, QuasimetricSpec::Kind::Mean) == 0.0);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_vector(4, rng);
    const auto b = random_vector(4, rng);
    for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
      const double expected = alpha * d_aggregate(a, b, QuasimetricSpec::Kind::Max) +
                              (1 - alpha) * d_aggregate(a, b, QuasimetricSpec::Kind::Mean);
      CHECK(d_simple(a, b, alpha) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("convex combinations") {
  std::mt19937_64 rng(43);
  const auto x = random_vector(5, rng);
  const auto y = random_vector(5, rng);

  // Single member with weight 1 equals that member.
  const auto single = QuasimetricSpec::convex({1.0}, {QuasimetricSpec::sum()});
  CHECK(d_convex(x, y, single) == doctest::Approx(d_aggregate(x, y, QuasimetricSpec::Kind::Sum)));

  // Equal weights over {max, mean} equals d_simple with alpha = 0.5.
  const auto half =
      QuasimetricSpec::convex({0.5, 0.5}, {QuasimetricSpec::max(), QuasimetricSpec::mean()});
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_vector(4, rng);
    const auto b = random_vector(4, rng);
    CHECK(d_convex(a, b, half) == doctest::Approx(d_simple(a, b, 0.5)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(QuasimetricSpec::convex({0.5, 0.6}, {QuasimetricSpec::max(), QuasimetricSpec::mean()}),
                  InputError);
}

TEST_CASE("quasimetric axioms on random triples, every kind") {
  std::mt19937_64 rng(47);
  for (const auto& spec : all_kinds()) {
    for (int dim : {2, 8}) {
      for (int trial = 0; trial < 3000; ++trial) {
        const auto x = random_vector(dim, rng);
        const auto y = random_vector(dim, rng);
        const auto z = random_vector(dim, rng);
        CHECK(quasimetric_value(x, x, spec) == 0.0);                    // Q1 exactly
        const double dxy = quasimetric_value(x, y, spec);
        CHECK(dxy >= 0.0);                                              // Q2 exactly
        const double dxz = quasimetric_value(x, z, spec);
        const double dzy = quasimetric_value(z, y, spec);
        CHECK(dxy <= dxz + dzy + 1e-9);                                 // Q3
      }
    }
  }
}

TEST_CASE("asymmetry witness exists for every kind") {
  std::vector<double> x{1, 0}, y{0, 0};
  for (const auto& spec : all_kinds()) {
    CHECK(quasimetric_value(x, y, spec) != quasimetric_value(y, x, spec));
  }
}

TEST_CASE("closed-form gradients: hand case and kink conventions") {
  std::vector<double> x{2, 0}, y{0, 1};
  const auto g = d_gradients(x, y, QuasimetricSpec::sum());
  CHECK(g.dx[0] == 1.0);
  CHECK(g.dx[1] == 0.0);
  CHECK(g.dy[0] == -1.0);
  CHECK(g.dy[1] == 0.0);

  // x == y: all derivatives are zero under the kink convention.
  for (const auto& spec : all_kinds()) {
    const auto zero = d_gradients(x, x, spec);
    for (double v : zero.dx) CHECK(v == 0.0);
    for (double v : zero.dy) CHECK(v == 0.0);
  }

  // Tied max entries route to the lowest index.
  std::vector<double> a{3, 3, 1}, b{0, 0, 0};
  const auto tied = d_gradients(a, b, QuasimetricSpec::max());
  CHECK(tied.dx[0] == 1.0);
  CHECK(tied.dx[1] == 0.0);
}

TEST_CASE("closed-form gradients match finite differences away from kinks") {
  std::mt19937_64 rng(53);
  const double h = 1e-6;
  for (const auto& spec : all_kinds()) {
    int done = 0;
    while (done < 60) {
      auto x = random_vector(5, rng);
      auto y = random_vector(5, rng);
      bool near_kink = false;
      for (size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - y[i]) <= 1e-3) near_kink = true;
      }
      // The max reduction also kinks where two reduced coordinates tie.
      const auto r = relu_reduction(x, y);
      for (size_t i = 0; i < r.size(); ++i) {
        for (size_t j = i + 1; j < r.size(); ++j) {
          if (std::abs(r[i] - r[j]) <= 1e-3) near_kink = true;
        }
      }
      if (near_kink) continue;
      ++done;

      const auto grad = d_gradients(x, y, spec);
      for (size_t i = 0; i < x.size(); ++i) {
        auto probe = x;
        probe[i] = x[i] + h;
        const double up = quasimetric_value(probe, y, spec);
        probe[i] = x[i] - h;
        const double down = quasimetric_value(probe, y, spec);
        CHECK(testing::relative_error(grad.dx[i], (up - down) / (2 * h), 1e-5) < 1e-5);
      }
      for (size_t i = 0; i < y.size(); ++i) {
        auto probe = y;
        probe[i] = y[i] + h;
        const double up = quasimetric_value(x, probe, spec);
        probe[i] = y[i] - h;
        const double down = quasimetric_value(x, probe, spec);
        CHECK(testing::relative_error(grad.dy[i], (up - down) / (2 * h), 1e-5) < 1e-5);
      }
    }
  }
}

TEST_CASE("graph-fused quasimetric agrees with scalar values and gradients") {
  std::mt19937_64 rng(59);
  for (const auto& spec : all_kinds()) {
    for (int trial = 0; trial < 50; ++trial) {
      const int dim = 4;
      Tensor xs(3, dim), ys(3, dim);
      std::uniform_real_distribution<double> value(-2.0, 2.0);
      for (double& v : xs.values) v = value(rng);
      for (double& v : ys.values) v = value(rng);

      Graph g;
      VarId xv = g.leaf(xs, true);
      VarId yv = g.leaf(ys, true);
      VarId d = quasimetric_distance(g, xv, yv, spec);
      for (int row = 0; row < 3; ++row) {
        const std::span<const double> xr(xs.row_ptr(row), dim);
        const std::span<const double> yr(ys.row_ptr(row), dim);
        CHECK(g.value(d)(row, 0) == doctest::Approx(quasimetric_value(xr, yr, spec)).epsilon(1e-12));
      }

      // Sum of all three distances: per-row gradients must equal the
      // closed-form subgradients under identical conventions.
      g.backward(g.affine(g.mean_all(d), 3.0, 0.0));
      for (int row = 0; row < 3; ++row) {
        const std::span<const double> xr(xs.row_ptr(row), dim);
        const std::span<const double> yr(ys.row_ptr(row), dim);
        const auto closed = d_gradients(xr, yr, spec);
        for (int c = 0; c < dim; ++c) {
          CHECK(g.grad(xv)(row, c) == doctest::Approx(closed.dx[static_cast<size_t>(c)]).epsilon(1e-10));
          CHECK(g.grad(yv)(row, c) == doctest::Approx(closed.dy[static_cast<size_t>(c)]).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("spec parsing round trips") {
  for (const char* text : {"simple(0.5)", "simple(0)", "simple(1)", "max", "sum", "mean",
                           "convex(0.3*max+0.7*mean)", "convex(0.5*simple(0.25)+0.5*sum)"}) {
    const QuasimetricSpec spec = QuasimetricSpec::parse(text);
    const QuasimetricSpec again = QuasimetricSpec::parse(spec.to_string());
    CHECK(again.to_string() == spec.to_string());
  }
  CHECK_THROWS_AS(QuasimetricSpec::parse("simple(1.5)"), InputError);
  CHECK_THROWS_AS(QuasimetricSpec::parse("convex(0.9*max)"), InputError);
  CHECK_THROWS_AS(QuasimetricSpec::parse("euclid"), ConfigError);
}
