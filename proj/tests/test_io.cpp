#include <doctest.h>

#include <cmath>
#include <sstream>

#include "robustfill/design_io.hpp"
#include "robustfill/generators.hpp"
#include "robustfill/sobol.hpp"

using namespace robustfill;

TEST_CASE("design CSV round-trip") {
  Design dx = maximin_lhd(4, 2, 91, 2000);
  Design dz = maximin_lhd(5, 2, 92, 2000);
  for (int j = 0; j < 2; ++j) dz.factor(j).role = FactorRole::NoiseExternal;
  const JitteredCrossArray jca = jittered_cross_array(dx, dz, 3, 4);
  const Design t = double_transformed_noise(
      jca.design, {NoiseModel::normal(0.5, 1.0 / 6.0)}, BetaWarp{2.0 / 3.0});

  std::stringstream buf;
  write_design(t, buf);
  const Design back = read_design(buf);

  REQUIRE(back.n_runs() == t.n_runs());
  REQUIRE(back.n_factors() == t.n_factors());
  CHECK((back.runs() - t.runs()).cwiseAbs().maxCoeff() == 0.0);  // 17 digits
  for (int j = 0; j < t.n_factors(); ++j) {
    CHECK(back.factor(j).name == t.factor(j).name);
    CHECK(back.factor(j).role == t.factor(j).role);
    CHECK(back.factor(j).transform == t.factor(j).transform);
    CHECK(back.factor(j).alpha == t.factor(j).alpha);
  }
}

TEST_CASE("design CSV rejects malformed input") {
  SUBCASE("missing role line") {
    std::stringstream in("name,x1,z1\n0.1,0.2\n");
    try {
      read_design(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown role") {
    std::stringstream in("name,x1\nrole,wizard\ntransform,none\n0.5\n");
    CHECK_THROWS_AS(read_design(in), ParseError);
  }
  SUBCASE("decimal comma splits the row") {
    std::stringstream in("name,x1\nrole,control\ntransform,none\n0,5\n");
    try {
      read_design(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("NaN entries rejected with the column name") {
    std::stringstream in("name,x1,z1\nrole,control,noise_ext\ntransform,none,none\n0.5,nan\n");
    try {
      read_design(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(e.column() == "z1");
    }
  }
  SUBCASE("field-count mismatch carries the line number") {
    std::stringstream in("name,x1,z1\nrole,control,noise_ext\ntransform,none,none\n0.5,0.5\n0.25\n");
    try {
      read_design(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("no data rows") {
    std::stringstream in("name,x1\nrole,control\ntransform,none\n");
    CHECK_THROWS_AS(read_design(in), ParseError);
  }
}

TEST_CASE("Sobol sequence matches the reference construction") {
  // first points of the unscrambled Joe-Kuo sequence (zero point skipped)
  SobolSequence s(6);
  const Eigen::MatrixXd pts = s.sample(4);
  const double expect[4][6] = {
      {0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
      {0.75, 0.25, 0.25, 0.25, 0.75, 0.75},
      {0.25, 0.75, 0.75, 0.75, 0.25, 0.25},
      {0.375, 0.375, 0.625, 0.875, 0.375, 0.125},
  };
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(pts(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-9));
}

TEST_CASE("scrambled Sobol is deterministic, uniform, and distinct by seed") {
  SobolSequence a(5, 42), b(5, 42), c(5, 43);
  const Eigen::MatrixXd pa = a.sample(4096);
  const Eigen::MatrixXd pb = b.sample(4096);
  const Eigen::MatrixXd pc = c.sample(4096);
  CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
  CHECK((pa - pc).cwiseAbs().maxCoeff() > 0.0);
  for (int j = 0; j < 5; ++j) {
    CHECK(pa.col(j).minCoeff() > 0.0);
    CHECK(pa.col(j).maxCoeff() < 1.0);
    CHECK(std::abs(pa.col(j).mean() - 0.5) < 0.01);
  }
  // scrambling preserves the one-dimensional stratification in halves, up
  // to the skipped zero element of the underlying sequence
  for (int j = 0; j < 5; ++j) {
    int low = 0;
    for (int i = 0; i < 4096; ++i)
      if (pa(i, j) < 0.5) ++low;
    CHECK(std::abs(low - 2048) <= 1);
  }
}
