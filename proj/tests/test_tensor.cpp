#include <doctest.h>

#include <limits>

#include "mad/errors.hpp"
#include "mad/tensor.hpp"

using namespace mad;

TEST_CASE("matmul matches hand-computed values") {
  Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c(0, 0) == doctest::Approx(58));
  CHECK(c(0, 1) == doctest::Approx(64));
  CHECK(c(1, 0) == doctest::Approx(139));
  CHECK(c(1, 1) == doctest::Approx(154));
}

TEST_CASE("matmul transpose flags agree with explicit transposition") {
  Tensor a(3, 2, {1, 4, 2, 5, 3, 6});  // transpose of the 2x3 above
  Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b, /*trans_a=*/true, /*trans_b=*/false);
  CHECK(c(0, 0) == doctest::Approx(58));
  CHECK(c(1, 1) == doctest::Approx(154));

  Tensor bt(2, 3, {7, 9, 11, 8, 10, 12});
  Tensor d = matmul(a, bt, /*trans_a=*/true, /*trans_b=*/true);
  CHECK(d(0, 0) == doctest::Approx(58));
  CHECK(d(0, 1) == doctest::Approx(64));
  CHECK(d(1, 0) == doctest::Approx(139));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a(2, 3);
  Tensor b(2, 2);
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("tensor shape invariant holds for literals") {
  CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  Tensor t(2, 2, {1, 2, 3, 4});
  CHECK(t.size() == 4);
  CHECK(t.all_finite());
  t(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}
