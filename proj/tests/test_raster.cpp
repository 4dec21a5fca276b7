#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "smurf/raster.hpp"

using smurf::cif;
using smurf::Raster;
using smurf::validate_raster;

namespace {

Raster good_raster() {
  Raster r;
  r.n_bins = 3;
  r.n_trials = 2;
  r.delta_s = 0.001;
  r.cue_bin = 2;
  r.cond_start_trial = 2;
  r.u_x = {0, 1, 1};
  r.u_z = {0, 1};
  r.bins = {1, 0, 0, 0, 1, 1};
  return r;
}

bool has_violation_at(const std::vector<smurf::RasterViolation>& v, int k,
                      int r) {
  for (const auto& e : v)
    if (e.k == k && e.r == r) return true;
  return false;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("a well-formed raster validates cleanly") {
  CHECK(validate_raster(good_raster()).empty());
}

TEST_CASE("every structural invariant is enforced with 1-based locations") {
  SUBCASE("non-binary bin entry") {
    Raster r = good_raster();
    r.bins[r.bin_index(3, 2)] = 2;
    const auto v = validate_raster(r);
    REQUIRE(v.size() == 1);
    CHECK(has_violation_at(v, 3, 2));
  }
  SUBCASE("cue bin out of range") {
    Raster r = good_raster();
    r.cue_bin = 0;
    CHECK(validate_raster(r).size() == 1);
    r.cue_bin = 4;
    CHECK(validate_raster(r).size() == 1);
  }
  SUBCASE("conditioning trial out of range") {
    Raster r = good_raster();
    r.cond_start_trial = 3;
    CHECK(validate_raster(r).size() == 1);
  }
  SUBCASE("nonpositive bin width") {
    Raster r = good_raster();
    r.delta_s = 0.0;
    CHECK(validate_raster(r).size() == 1);
    r.delta_s = std::numeric_limits<double>::quiet_NaN();
    CHECK(validate_raster(r).size() == 1);
  }
  SUBCASE("input sequences must match dimensions and be binary") {
    Raster r = good_raster();
    r.u_x.pop_back();
    CHECK(validate_raster(r).size() == 1);
    r = good_raster();
    r.u_z[1] = 9;
    const auto v = validate_raster(r);
    REQUIRE(v.size() == 1);
    CHECK(has_violation_at(v, 0, 2));
  }
  SUBCASE("storage size mismatch") {
    Raster r = good_raster();
    r.bins.pop_back();
    CHECK(validate_raster(r).size() == 1);
  }
  SUBCASE("empty lattice reports both dimensions") {
    Raster r;
    const auto v = validate_raster(r);
    CHECK(v.size() >= 2);
  }
  SUBCASE("violations accumulate instead of stopping at the first") {
    Raster r = good_raster();
    r.bins[0] = 5;
    r.bins[5] = 7;
    r.cue_bin = 0;
    CHECK(validate_raster(r).size() == 3);
  }
}

TEST_CASE("flat storage is trial-contiguous with 1-based accessors") {
  const Raster r = good_raster();
  CHECK(r.bin_index(1, 1) == 0);
  CHECK(r.bin_index(3, 1) == 2);
  CHECK(r.bin_index(1, 2) == 3);
  CHECK(r.bin(1, 1) == 1);
  CHECK(r.bin(2, 2) == 1);
  const auto t2 = r.trial(2);
  REQUIRE(t2.size() == 3);
  CHECK(t2[0] == 0);
  CHECK(t2[2] == 1);
}

TEST_CASE("the conditional intensity is a clamped logistic in x + z") {
  CHECK(cif(0.0, 0.0) == 0.5);
  CHECK(cif(1.0, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0)))
                              .epsilon(1e-15));
  // Complementary symmetry of the logistic.
  CHECK(cif(1.3, 0.4) + cif(-1.3, -0.4) == doctest::Approx(1.0).epsilon(1e-15));
  // Monotone in each argument.
  CHECK(cif(0.5, 0.0) > cif(0.4, 0.0));
  CHECK(cif(0.0, 0.5) > cif(0.0, 0.4));
  // Deep saturation stays strictly inside (0,1) in both directions.
  CHECK(cif(500.0, 600.0) < 1.0);
  CHECK(cif(-500.0, -600.0) > 0.0);
  CHECK(cif(-500.0, -600.0) >= std::numeric_limits<double>::min());
  CHECK_THROWS_AS(cif(std::numeric_limits<double>::infinity(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(cif(0.0, std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
}

TEST_CASE("rate conversion divides by the bin width") {
  CHECK(smurf::rate_hz(0.5, 0.001) == 500.0);
  CHECK(smurf::rate_hz(0.0, 0.005) == 0.0);
  CHECK_THROWS_AS(smurf::rate_hz(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smurf::rate_hz(-0.1, 0.001), std::invalid_argument);
  CHECK_THROWS_AS(smurf::rate_hz(1.1, 0.001), std::invalid_argument);
}

}  // TEST_SUITE
