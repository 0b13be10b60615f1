#include <cmath>
#include <limits>

#include "doctest.h"
#include "seqrep/core.hpp"
#include "seqrep/random.hpp"

using namespace seqrep;

TEST_CASE("ParamVector construction") {
  CHECK_THROWS_AS(ParamVector(std::vector<double>{}), UsageError);
  CHECK_THROWS_AS(ParamVector::zeros(0), UsageError);
  const ParamVector v{1.0, 2.0, 3.0};
  CHECK(v.dim() == 3);
  CHECK(v[1] == 2.0);
  CHECK(ParamVector::zeros(2) == ParamVector{0.0, 0.0});
}

TEST_CASE("ParamVector arithmetic") {
  ParamVector a{1.0, 2.0};
  const ParamVector b{0.5, -1.0};
  CHECK(a + b == ParamVector{1.5, 1.0});
  CHECK(a - b == ParamVector{0.5, 3.0});
  CHECK(2.0 * a == ParamVector{2.0, 4.0});
  CHECK(a * 0.5 == ParamVector{0.5, 1.0});
  a.axpy(2.0, b);
  CHECK(a == ParamVector{2.0, 0.0});
  CHECK_THROWS_AS(a += ParamVector{1.0}, UsageError);
  CHECK_FALSE(ParamVector{1.0, std::numeric_limits<double>::infinity()}.all_finite());
  CHECK_FALSE(ParamVector{std::nan("")}.all_finite());
}

TEST_CASE("add then subtract recovers the input within one ulp") {
  RandomSource rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = (rng.uniform() - 0.5) * 2e8;
    const double y = (rng.uniform() - 0.5) * 2e8;
    const ParamVector a{x}, b{y};
    const double back = ((a + b) - b)[0];
    CHECK(std::abs(back - x) <= std::abs(std::nextafter(x, INFINITY) - x) + std::abs(std::nextafter(x + y, INFINITY) - (x + y)));
  }
}

TEST_CASE("dot") {
  CHECK(dot(ParamVector{1.0, 0.0}, ParamVector{0.0, 1.0}) == 0.0);
  CHECK(dot(ParamVector{1.0, 2.0}, ParamVector{1.0, 2.0}) == 5.0);
  CHECK(dot(ParamVector{3.0, 4.0}, ParamVector{-3.0, -4.0}) == -25.0);
  CHECK_THROWS_AS(dot(ParamVector{1.0}, ParamVector{1.0, 2.0}), UsageError);
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(ParamVector{1.0, 0.0}, ParamVector{0.0, 1.0}) == 0.0);
  CHECK(cosine_similarity(ParamVector{2.0, 2.0}, ParamVector{5.0, 5.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(ParamVector{1.0, 0.0}, ParamVector{-1.0, 1.0}) ==
        doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(cosine_similarity(ParamVector{1.0, 2.0}, ParamVector{2.0, 1.0}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_similarity(ParamVector{0.0, 0.0}, ParamVector{1.0, 1.0}), ZeroGradientError);
  CHECK_THROWS_AS(cosine_similarity(ParamVector{1.0, 1.0}, ParamVector{0.0, 0.0}), ZeroGradientError);
  CHECK_THROWS_AS(cosine_similarity(ParamVector{1.0}, ParamVector{1.0, 1.0}), UsageError);
}

TEST_CASE("cosine similarity properties on random vectors") {
  RandomSource rng(11);
  for (int i = 0; i < 1000; ++i) {
    const ParamVector a{rng.normal(), rng.normal(), rng.normal()};
    const ParamVector b{rng.normal(), rng.normal(), rng.normal()};
    const double c = cosine_similarity(a, b);
    CHECK(std::abs(c) <= 1.0 + 1e-12);
    CHECK(c == cosine_similarity(b, a));
    const double scale = 0.01 + 100.0 * rng.uniform();
    CHECK(std::abs(cosine_similarity(scale * a, b) - c) <= 1e-12);
  }
}

TEST_CASE("l2 distance") {
  CHECK(l2_distance(ParamVector{0.0, 0.0}, ParamVector{3.0, 4.0}) == 5.0);
  const ParamVector a{1.5, -2.5};
  CHECK(l2_distance(a, a) == 0.0);
  CHECK(l2_distance(ParamVector{20.0, 5.0}, ParamVector{0.0, 0.0}) == doctest::Approx(std::sqrt(425.0)));
  CHECK(l2_distance(ParamVector{20.0, 5.0}, ParamVector{0.0, 0.0}) == doctest::Approx(20.6155).epsilon(1e-5));
  CHECK_THROWS_AS(l2_distance(ParamVector{1.0}, ParamVector{1.0, 2.0}), UsageError);
  CHECK(norm(ParamVector{3.0, 4.0}) == 5.0);
}
