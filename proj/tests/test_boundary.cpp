#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stirflow/boundary.hpp"
#include "stirflow/fft.hpp"

using namespace stirflow;

namespace {

DomainSpec unit_disk() { return {true, {CurveSpec::circle(0.0, 1.0)}}; }

DomainSpec unit_square_vessel() {
  return {true, {CurveSpec::polygon({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}})}};
}

}  // namespace

TEST_CASE("unit circle vessel is counterclockwise from 1") {
  const auto b = discretize(unit_disk(), 8);
  const cplx expect_eta[] = {1.0, kI, -1.0, -kI};
  const cplx expect_deta[] = {kI, -1.0, -kI, 1.0};
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(b.eta()[2 * k] - expect_eta[k]) < 1e-15);
    CHECK(std::abs(b.deta()[2 * k] - expect_deta[k]) < 1e-15);
  }
  CHECK(b.warnings().empty());
}

TEST_CASE("n must be even and at least 8") {
  CHECK_THROWS_AS(discretize(unit_disk(), 4), GeometryError);
  CHECK_THROWS_AS(discretize(unit_disk(), 31), GeometryError);
}

TEST_CASE("ellipse hole follows the clockwise axis convention") {
  DomainSpec d{false, {CurveSpec::ellipse(0.0, 2.0, 1.0, 0.0)}};
  const auto b = discretize(d, 8);
  CHECK(std::abs(b.eta()[0] - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(b.eta()[2] - cplx(0.0, -0.5)) < 1e-15);
  // analytic form z + 0.5 e^{i rot} (a cos t - i b sin t)
  for (int i = 0; i < 8; ++i) {
    const double t = b.t(i);
    CHECK(std::abs(b.eta()[i] - 0.5 * cplx(2.0 * std::cos(t), -std::sin(t))) < 1e-15);
  }
}

TEST_CASE("degenerate curves are rejected") {
  CHECK_THROWS_AS(discretize({false, {CurveSpec::ellipse(0.0, 0.0, 1.0, 0.0)}}, 16), GeometryError);
  CHECK_THROWS_AS(discretize({false, {CurveSpec::circle(0.0, 0.0)}}, 16), GeometryError);
  CHECK_THROWS_AS(discretize({false, {CurveSpec::polygon({0.0, 1.0, 1.0, kI})}}, 16), GeometryError);
  // bow tie
  CHECK_THROWS_AS(discretize({false, {CurveSpec::polygon({0.0, 1.0, cplx(0, 1), cplx(1, 1)})}}, 16),
                  GeometryError);
  // inner curve crossing the vessel
  CHECK_THROWS_AS(discretize({true, {CurveSpec::circle(0.0, 1.0), CurveSpec::circle(0.95, 0.1)}}, 64),
                  GeometryError);
  // overlapping obstacles
  CHECK_THROWS_AS(discretize({false, {CurveSpec::circle(0.0, 1.0), CurveSpec::circle(1.5, 1.0)}}, 64),
                  GeometryError);
  // polygon grading exponent
  CHECK_THROWS_AS(discretize(unit_square_vessel(), 64, 1.5), GeometryError);
}

TEST_CASE("kress grading derivatives match finite differences") {
  for (double p : {2.0, 3.0, 5.0}) {
    for (double s : {0.3, 1.0, 2.5, 3.9, 5.8}) {
      const double h = 1e-5;
      const Grading g = kress_grading(s, p), gp = kress_grading(s + h, p), gm = kress_grading(s - h, p);
      CHECK(std::abs((gp.w - gm.w) / (2 * h) - g.dw) < 1e-8);
      CHECK(std::abs((gp.dw - gm.dw) / (2 * h) - g.d2w) < 1e-6);
    }
    CHECK(std::abs(kress_grading(0.0, p).w) < 1e-15);
    CHECK(std::abs(kress_grading(kTwoPi, p).w - kTwoPi) < 1e-12);
    CHECK(std::abs(kress_grading(kPi, p).w - kPi) < 1e-12);
  }
}

TEST_CASE("graded square concentrates nodes at the corners") {
  const auto b = discretize(unit_square_vessel(), 64, 3.0);
  const double uniform = 4.0 / 64;
  const cplx corners[] = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  for (cplx c : corners) {
    // spacing between the two nodes straddling the corner
    int nearest = 0;
    for (int i = 1; i < 64; ++i)
      if (std::abs(b.eta()[i] - c) < std::abs(b.eta()[nearest] - c)) nearest = i;
    const double left = std::abs(b.eta()[nearest] - b.eta()[(nearest + 63) % 64]);
    const double right = std::abs(b.eta()[(nearest + 1) % 64] - b.eta()[nearest]);
    CHECK(std::min(left, right) < uniform / 10);
  }
  // points stay on the square
  for (cplx z : b.eta()) CHECK(std::max(std::abs(z.real()), std::abs(z.imag())) == doctest::Approx(0.5));
  // derivative folded with the grading Jacobian: finite-difference check along t
  for (int i = 0; i < 64; ++i) {
    const double t = b.t(i), h = 1e-6;
    const cplx fd = (b.eval(0, t + h).z - b.eval(0, t - h).z) / (2 * h);
    CHECK(std::abs(fd - b.deta()[i]) < 1e-6 * (1 + std::abs(b.deta()[i])));
  }
}

TEST_CASE("closure of every curve kind") {
  DomainSpec d{true,
               {CurveSpec::polygon({{-2, -2}, {2, -2}, {2, 2}, {-2, 2}}), CurveSpec::circle({0.5, 0.5}, 0.3),
                CurveSpec::ellipse({-0.8, -0.5}, 0.8, 0.3, 0.4)}};
  const auto b = discretize(d, 64);
  for (int j = 0; j < b.curve_count(); ++j) {
    CHECK(std::abs(b.eval(j, kTwoPi - 1e-15).z - b.eval(j, 0.0).z) < 1e-12);
    fft::TrigInterpolant interp(b.curve_eta(j));
    CHECK(std::abs(interp(kTwoPi) - b.curve_eta(j)[0]) < 1e-12);
  }
}

TEST_CASE("spectral derivative of smooth curves matches analytic derivative") {
  DomainSpec d{false,
               {CurveSpec::circle({0.5, 0.2}, 0.3), CurveSpec::ellipse({3.0, 0.0}, 1.4, 0.5, 0.7),
                CurveSpec::mobius_ellipse({0.0, 2.0}, 1.0, 0.4, 0.2)}};
  const auto b = discretize(d, 256);
  for (int j = 0; j < b.curve_count(); ++j) {
    const CplxVec d1 = fft::derivative(b.curve_eta(j));
    double err = 0.0;
    for (int i = 0; i < 256; ++i) err = std::max(err, std::abs(d1[i] - b.curve_deta(j)[i]));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("orientation is repaired with a warning") {
  // vessel given clockwise, hole given counterclockwise
  DomainSpec d{true,
               {CurveSpec::polygon({{-1, -1}, {-1, 1}, {1, 1}, {1, -1}}),
                CurveSpec::polygon({{-0.2, -0.2}, {0.2, -0.2}, {0.2, 0.2}, {-0.2, 0.2}})}};
  // the hole contains 0; shift so the fluid check has something to say
  for (auto& v : d.curves[1].vertices) v += cplx(0.5, 0.5);
  const auto b = discretize(d, 64);
  CHECK(b.warnings().size() == 2);
  PointLocator loc(b);
  CHECK(loc.winding(0, 0.0) == 1);
  CHECK(loc.winding(1, {0.5, 0.5}) == -1);
}

TEST_CASE("sampled curves use the supplied derivatives") {
  const int n = 64;
  std::vector<cplx> pts, der;
  for (int i = 0; i < n; ++i) {
    const double t = kTwoPi * i / n;
    pts.push_back(2.0 * std::polar(1.0, t));
    der.push_back(2.0 * kI * std::polar(1.0, t));
  }
  // counterclockwise samples used as an obstacle: reversed
  const auto b = discretize({false, {CurveSpec::sampled(pts, der)}}, n);
  CHECK(b.warnings().size() == 1);
  for (int i = 0; i < n; ++i) {
    const double t = b.t(i);
    CHECK(std::abs(b.eta()[i] - 2.0 * std::polar(1.0, -t)) < 1e-14);
    CHECK(std::abs(b.deta()[i] + 2.0 * kI * std::polar(1.0, -t)) < 1e-14);
    CHECK(std::abs(b.d2eta()[i] + 2.0 * std::polar(1.0, -t)) < 1e-12);
  }
  CHECK_THROWS_AS(discretize({false, {CurveSpec::sampled(pts, der)}}, 2 * n), GeometryError);
}

TEST_CASE("point location examples") {
  {
    const auto b = discretize(unit_disk(), 64);
    CHECK(point_location(b, 0.0).where == Location::fluid);
    CHECK(point_location(b, 2.0).where == Location::outside_vessel);
    CHECK(point_location(b, 1.0).where == Location::near_boundary);
  }
  {
    const auto b = discretize({true, {CurveSpec::circle(0.0, 1.0), CurveSpec::circle(0.5, 0.1)}}, 64);
    const PointClass pc = point_location(b, 0.5);
    CHECK(pc.where == Location::inside_obstacle);
    CHECK(pc.curve == 1);
  }
}

TEST_CASE("winding numbers of fluid points sum to the domain index") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (bool bounded : {true, false}) {
    DomainSpec d{bounded, {}};
    if (bounded) d.curves.push_back(CurveSpec::ellipse(0.0, 2.6, 2.2, 0.1));
    d.curves.push_back(CurveSpec::circle({0.5, 0.3}, 0.2));
    d.curves.push_back(CurveSpec::ellipse({-0.4, -0.3}, 0.6, 0.2, 1.0));
    d.curves.push_back(CurveSpec::polygon({{-0.2, 0.5}, {0.2, 0.5}, {0.0, 0.8}}));
    const auto b = discretize(d, 128);
    PointLocator loc(b);
    int checked = 0;
    for (int k = 0; k < 400; ++k) {
      const cplx z(u(rng), u(rng));
      if (!loc(z).is_fluid()) continue;
      int sum = 0;
      for (int j = 0; j < b.curve_count(); ++j) sum += loc.winding(j, z);
      CHECK(sum == (bounded ? 1 : 0));
      ++checked;
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("moebius map identities") {
  CHECK(std::abs(mobius(0.0) - kI) < 1e-15);
  CHECK(std::abs(mobius(1.0) - 1.0) < 1e-15);
  CHECK(std::abs(mobius(kI - 1e-9 * kI)) > 1e8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int k = 0; k < 50; ++k) {
    const cplx z(u(rng), u(rng));
    CHECK(std::abs(mobius_inv(mobius(z)) - z) < 1e-13);
  }
}
