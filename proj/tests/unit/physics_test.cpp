#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "heatpinn/errors.hpp"
#include "heatpinn/physics.hpp"

using namespace heatpinn;

namespace {

constexpr double kPi = std::numbers::pi;

TEST(ThermalDiffusivity, UnitProps) {
  EXPECT_DOUBLE_EQ(thermal_diffusivity({1, 1, 1}), 1.0);
}

TEST(ThermalDiffusivity, NominalComposite) {
  const double alpha = thermal_diffusivity(MaterialProps{});
  EXPECT_NEAR(alpha, 0.47 / (1573.0 * 967.0), 1e-20);
  EXPECT_NEAR(alpha, 3.090e-7, 0.001e-7);
}

TEST(ThermalDiffusivity, ScalesWithKAndRho) {
  const MaterialProps base{0.47, 1573, 967};
  EXPECT_DOUBLE_EQ(thermal_diffusivity({0.94, 1573, 967}), 2 * thermal_diffusivity(base));
  EXPECT_DOUBLE_EQ(thermal_diffusivity({0.47, 3146, 967}), thermal_diffusivity(base) / 2);
}

TEST(MaterialProps, RejectsNonPositive) {
  EXPECT_THROW((MaterialProps{0, 1, 1}.validate()), ContractError);
  EXPECT_THROW((MaterialProps{1, -1, 1}.validate()), ContractError);
  EXPECT_THROW((MaterialProps{1, 1, 0}.validate()), ContractError);
}

TEST(AirProfile, RampHoldValues) {
  const auto p = AirProfile::ramp_hold();
  EXPECT_EQ(air_temperature(p, 0), 0.0);
  EXPECT_DOUBLE_EQ(air_temperature(p, 5), 25.0);
  EXPECT_DOUBLE_EQ(air_temperature(p, 10), 50.0);
  EXPECT_DOUBLE_EQ(air_temperature(p, 12), 50.0);
  EXPECT_DOUBLE_EQ(air_temperature(p, 15), 50.0);
}

TEST(AirProfile, OutOfRangeIsDomainError) {
  const auto p = AirProfile::ramp_hold();
  EXPECT_THROW(air_temperature(p, -0.1), DomainError);
  EXPECT_THROW(air_temperature(p, 15.01), DomainError);
}

TEST(AirProfile, ContinuousAtKinks) {
  const auto p = AirProfile(20, {RampSegment{5, 50}, HoldSegment{4}, RampSegment{2, 30}}, 40);
  for (double k : kink_times(p)) {
    const double left = air_temperature(p, std::max(0.0, std::nextafter(k, -1.0)));
    const double right = air_temperature(p, std::nextafter(k, 1e9));
    EXPECT_NEAR(left, right, 1e-9) << "kink at " << k;
  }
}

TEST(AirProfile, ExactAtBreakpoints) {
  const auto p = AirProfile(20, {RampSegment{5, 50}, HoldSegment{4}, RampSegment{2, 30}}, 40);
  for (const auto& bp : p.breakpoints()) EXPECT_EQ(air_temperature(p, bp.time), bp.temp);
  EXPECT_DOUBLE_EQ(air_temperature(p, 16), 38.0);  // cooling at 2 degC/min from t = 10
}

TEST(AirProfile, RejectsBadSegments) {
  EXPECT_THROW(AirProfile(0, {RampSegment{0, 50}}, 20), ContractError);
  EXPECT_THROW(AirProfile(0, {HoldSegment{-1}}, 20), ContractError);
  EXPECT_THROW(AirProfile(0, {RampSegment{5, 50}}, 5), ContractError);  // ends at 10 min
}

TEST(KinkTimes, RampHoldProfile) {
  EXPECT_EQ(kink_times(AirProfile::ramp_hold()), (std::vector<double>{0, 10}));
}

TEST(KinkTimes, Constant) {
  EXPECT_EQ(kink_times(AirProfile::constant(30, 10)), (std::vector<double>{0}));
}

TEST(KinkTimes, RampHoldRamp) {
  const AirProfile p(0, {RampSegment{5, 50}, HoldSegment{5}, RampSegment{5, 100}}, 40);
  EXPECT_EQ(kink_times(p), (std::vector<double>{0, 10, 15, 25}));
}

TEST(AnalyticSolution, ModeZeroIsPeak) {
  SeriesSolution sol{10, 60, {{0, 1}}};
  for (double x : {0.0, 0.003, 0.01}) {
    for (double t : {0.0, 100.0, 5000.0}) {
      EXPECT_DOUBLE_EQ(analytic_solution(sol, {}, 0.01, x, t), 60.0);
    }
  }
}

TEST(AnalyticSolution, ModeOneMidpointIsBase) {
  SeriesSolution sol{10, 60, {{1, 1}}};
  for (double t : {0.0, 100.0, 5000.0}) {
    EXPECT_NEAR(analytic_solution(sol, {}, 0.01, 0.005, t), 10.0, 1e-12);
  }
}

TEST(AnalyticSolution, ModeOneEFoldingTime) {
  const MaterialProps m{};
  const double L = 0.01;
  SeriesSolution sol{0, 1, {{1, 1}}};
  const double tau = m.rho * m.cp * L * L / (m.k * kPi * kPi);
  EXPECT_NEAR(analytic_solution(sol, m, L, 0, tau), std::exp(-1.0), 1e-14);
}

TEST(AnalyticSolution, SatisfiesHeatEquationAndInsulation) {
  const MaterialProps m{};
  const double L = 0.02;
  const double alpha = thermal_diffusivity(m);
  for (int n = 1; n <= 4; ++n) {
    SeriesSolution sol{5, 45, {{n, 0.7}}};
    for (double x : {0.0, 0.004, 0.011, L}) {
      for (double t : {0.0, 60.0, 600.0}) {
        const auto d = analytic_derivatives(sol, m, L, x, t);
        const double scale = std::abs(alpha * d.d2_dx2) + std::abs(d.d_dt) + 1e-300;
        EXPECT_LE(std::abs(alpha * d.d2_dx2 - d.d_dt), 1e-14 * std::max(scale, 1e-12));
      }
    }
    EXPECT_NEAR(analytic_derivatives(sol, m, L, 0, 30).d_dx, 0.0, 1e-12);
    EXPECT_NEAR(analytic_derivatives(sol, m, L, L, 30).d_dx, 0.0, 1e-9);
  }
}

TEST(AnalyticSolution, DerivativesMatchFiniteDifferences) {
  const MaterialProps m{};
  const double L = 0.01;
  SeriesSolution sol{0, 1, {{1, 0.5}, {3, -0.2}}};
  const double x = 0.0031, t = 40, hx = 1e-6, ht = 1e-3;
  const auto d = analytic_derivatives(sol, m, L, x, t);
  const auto f = [&](double xx, double tt) { return analytic_solution(sol, m, L, xx, tt); };
  EXPECT_NEAR(d.value, f(x, t), 1e-15);
  EXPECT_NEAR(d.d_dx, (f(x + hx, t) - f(x - hx, t)) / (2 * hx), 1e-6 * std::abs(d.d_dx));
  EXPECT_NEAR(d.d_dt, (f(x, t + ht) - f(x, t - ht)) / (2 * ht), 1e-6 * std::abs(d.d_dt));
}

TEST(FitCosineSeries, ReproducesSingleMode) {
  const double L = 0.01;
  const auto sol = fit_cosine_series([&](double x) { return 0.3 * std::cos(2 * kPi * x / L); },
                                     L, 0, 1, 8);
  for (const auto& mode : sol.modes) {
    EXPECT_NEAR(mode.weight, mode.n == 2 ? 0.3 : 0.0, 1e-8) << "mode " << mode.n;
  }
}

TEST(SeriesSolution, RejectsDuplicateOrNegativeModes) {
  EXPECT_THROW((SeriesSolution{0, 1, {{1, 1}, {1, 2}}}.validate()), ContractError);
  EXPECT_THROW((SeriesSolution{0, 1, {{-1, 1}}}.validate()), ContractError);
}

TEST(Scaling, Nondimensionalize) {
  Scaling s;
  s.length_ref = 0.01;
  s.length_ref_y = 0.02;
  s.time_ref = 1800;
  s.temp_ref = 50;
  const auto p = nondimensionalize(PhysicalPoint{0.01, 0.01, 900, 150, 50}, s);
  EXPECT_EQ(p.x, 1.0);
  EXPECT_EQ(p.y, 0.5);
  EXPECT_EQ(p.t, 0.5);
  EXPECT_EQ(p.h1, 1.5);
  EXPECT_EQ(p.h2, 0.5);
}

TEST(Scaling, RoundTrip) {
  Scaling s;
  s.length_ref = 0.03;
  s.length_ref_y = 0.007;
  s.time_ref = 937;
  s.temp_ref = 47.3;
  s.h_ref = 100;
  const PhysicalPoint p{0.0123, 0.0041, 431.7, 37.5, 181.2};
  const auto q = redimensionalize(nondimensionalize(p, s), s);
  EXPECT_NEAR(q.x, p.x, 1e-12 * p.x);
  EXPECT_NEAR(q.y, p.y, 1e-12 * p.y);
  EXPECT_NEAR(q.t, p.t, 1e-12 * p.t);
  EXPECT_NEAR(q.h1, p.h1, 1e-12 * p.h1);
  EXPECT_NEAR(q.h2, p.h2, 1e-12 * p.h2);
  EXPECT_NEAR(redimensionalize_temperature(nondimensionalize_temperature(33.3, s), s), 33.3, 1e-12);
}

TEST(Scaling, RejectsNonPositive) {
  Scaling s;
  s.time_ref = 0;
  EXPECT_THROW(s.validate(), ContractError);
}

TEST(PdeCoefficients, ChainRuleFactor) {
  const MaterialProps m{};
  Scaling s;
  s.length_ref = 0.01;
  s.length_ref_y = 0.02;
  s.time_ref = 900;
  const auto c1 = pde_coefficients(m, s, 1);
  EXPECT_DOUBLE_EQ(c1.diffusion_x, thermal_diffusivity(m) * 900 / 1e-4);
  EXPECT_EQ(c1.diffusion_y, 0.0);
  const auto c2 = pde_coefficients(m, s, 2);
  EXPECT_DOUBLE_EQ(c2.diffusion_y, thermal_diffusivity(m) * 900 / 4e-4);
}

}  // namespace
