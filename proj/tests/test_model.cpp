#include "catch_amalgamated.hpp"

#include <random>

#include "egfet/model.hpp"
#include "oracles.hpp"

using namespace egfet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const DeviceSpec kDevice = DeviceSpec::reference_egfet();

// mu_0 chosen so beta0 = 8.67e-5 A/V^2 on the reference device
ModelParams params(double theta, double r_sd, double v_t = 1.0) { return {v_t, 0.05, theta, r_sd}; }

oracle::Params as_oracle(const ModelParams& p) { return {p.v_t, p.mu_0, p.theta, p.r_sd}; }

}  // namespace

TEST_CASE("beta0 multiplies mobility, oxide capacitance and aspect ratio") {
  CHECK_THAT(beta0(kDevice, params(0.1, 0)).value(), WithinRel(8.67e-5, 1e-12));
  CHECK(beta0(DeviceSpec{1.0, 1.0, 1.0}, ModelParams{0.0, 1.0, 0.0, 0.0}).value() == 1.0);
  CHECK(kDevice.aspect_ratio() == 3.0);
  const double direct = 0.05 * kDevice.c_ox * (kDevice.width / kDevice.length);
  CHECK_THAT(beta0(kDevice, params(0, 0)).value(), WithinRel(direct, 2.3e-16));
  CHECK_THAT(mobility_from_beta0(8.67e-5, kDevice), WithinRel(0.05, 1e-14));
}

TEST_CASE("invalid device, parameters and bias are rejected") {
  CHECK_THROWS_AS(DeviceSpec({0.0, 1e-6, 1e-3}).validate(), Error);
  CHECK_THROWS_AS(DeviceSpec({1e-6, -1e-6, 1e-3}).validate(), Error);
  CHECK_THROWS_AS(DeviceSpec({1e-6, 1e-6, 0.0}).validate(), Error);
  CHECK_THROWS_AS(ModelParams({1.0, 0.0, 0.1, 0.0}).validate(), Error);
  CHECK_THROWS_AS(ModelParams({1.0, 0.05, -0.1, 0.0}).validate(), Error);
  CHECK_THROWS_AS(ModelParams({1.0, 0.05, 0.1, -1.0}).validate(), Error);
  try {
    BiasPoint{2.0, -0.1}.validate();
    FAIL("negative drain bias accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidArgument);
  }
}

TEST_CASE("series resistance splits symmetrically") {
  const ModelParams p = params(0.1, 50.0);
  CHECK(p.r_s() == 25.0);
  CHECK(p.r_s() + p.r_d() == p.r_sd);
  const ModelParams odd = params(0.1, 0.1 + 0.2);
  CHECK(odd.r_s() + odd.r_d() == odd.r_sd);
}

TEST_CASE("implicit current without series resistance is the closed form") {
  const auto p = params(0.1, 0.0);
  const double i = ids_implicit(kDevice, p, {2.0, 0.4});
  CHECK_THAT(i, WithinRel(8.67e-5 * 1.0 * 0.4 / 1.1, 1e-13));
  CHECK_THAT(i, WithinRel(3.153e-5, 1e-3));
  CHECK(ids_implicit(kDevice, p, {2.0, 0.0}) == 0.0);
}

TEST_CASE("implicit current matches a fixed-point iteration") {
  const auto p = params(0.1, 50.0);
  const double b0 = oracle::beta0({}, as_oracle(p));
  const double expect = oracle::fixed_point_current(b0, as_oracle(p), 2.0, 0.4);
  CHECK_THAT(ids_implicit(kDevice, p, {2.0, 0.4}), WithinRel(expect, 1e-10));
}

TEST_CASE("implicit current is a fixed point to 1e-12 across the parameter ranges") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> vov(0.01, 2.8), vds(0.0, 0.4);
  for (int k = 0; k < 500; ++k) {
    const auto o = oracle::random_params(rng);
    const ModelParams p{o.v_t, o.mu_0, o.theta, o.r_sd};
    const BiasPoint b{o.v_t + vov(rng), vds(rng)};
    const double i = ids_implicit(kDevice, p, b);
    const double f = implicit_current_map(kDevice, p, b, i);
    if (i == 0.0) {
      CHECK(f == 0.0);
    } else {
      CHECK(std::abs(f - i) / i < 1e-12);
    }
  }
}

TEST_CASE("the selected quadratic root vanishes at zero drain bias") {
  const auto p = params(0.2, 200.0);
  for (double v_ds : {1e-3, 1e-6, 1e-9}) {
    const BiasPoint b{2.5, v_ds};
    const auto q = drain_current_quadratic(kDevice, p, b);
    const double chosen = ids_implicit(kDevice, p, b);
    const double rejected = (q.b + std::sqrt(q.b * q.b - 4 * q.a * q.c)) / (2 * q.a);
    CHECK(chosen < 1e-3 * v_ds);
    // the other root drops more than the applied drain bias across R_sd
    CHECK(rejected * p.r_sd > 10.0);
  }
}

TEST_CASE("below threshold is an error, not zero") {
  const auto p = params(0.1, 50.0, 1.6);
  for (auto f : {ids_implicit, ids_simplified, gm_analytic, gds_analytic}) {
    try {
      (void)f(kDevice, p, {1.6, 0.4});
      FAIL("no error at threshold");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BelowThreshold);
    }
    CHECK_THROWS_AS(f(kDevice, p, {1.0, 0.4}), Error);
  }
}

TEST_CASE("simplified current") {
  CHECK_THAT(ids_simplified(DeviceSpec{1, 1, 1}, ModelParams{1.0, 1.0, 0.0, 0.0}, {2.0, 0.1}), WithinRel(0.1, 1e-15));
  const auto p = params(0.1, 50.0);
  const double i = ids_simplified(kDevice, p, {2.0, 0.4});
  CHECK_THAT(i, WithinRel(8.67e-5 * 0.4 / (1 + 0.1 + 8.67e-5 * 50), 1e-13));
  CHECK_THAT(i, WithinRel(3.140e-5, 1e-3));
  const double eps1 = ids_simplified(kDevice, p, {1.0 + 1e-6, 0.4});
  const double eps2 = ids_simplified(kDevice, p, {1.0 + 2e-6, 0.4});
  CHECK_THAT(eps2 / eps1, WithinRel(2.0, 1e-5));
}

TEST_CASE("first-order and exact currents differ by the expansion terms") {
  // The closed form that drops the R_s V_ds term agrees with the first-order
  // form to within twice the second-order term; the exact root differs by at
  // most that plus the dropped first-order term beta0 R_s V_ds / D^2.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> vov(0.05, 2.8);
  for (int k = 0; k < 500; ++k) {
    const auto o = oracle::random_params(rng);
    const ModelParams p{o.v_t, o.mu_0, o.theta, o.r_sd};
    const BiasPoint b{o.v_t + vov(rng), 0.4};
    const double b0 = beta0(kDevice, p).value();
    const double v = b.v_gs - p.v_t;
    const double d = 1 + (p.theta + b0 * p.r_sd) * v;
    const double second = p.r_s() * (p.theta + b0 * p.r_sd) * b0 * b.v_ds * v / (d * d);
    const double dropped = b0 * p.r_s() * b.v_ds / (d * d);
    const double simple = ids_simplified(kDevice, p, b);
    const double closed = ids_closed_form(kDevice, p, b);
    const double exact = ids_implicit(kDevice, p, b);
    CHECK(std::abs(closed - simple) / closed <= 2 * second + 1e-15);
    CHECK(std::abs(exact - simple) / exact <= 2 * second + 1.01 * dropped + 1e-15);
  }
}

TEST_CASE("transconductance") {
  const DeviceSpec d{1, 1, 1};
  const ModelParams ideal{1.0, 1.0, 0.0, 0.0};
  for (double v : {1.5, 2.0, 3.7}) CHECK(gm_analytic(d, ideal, {v, 0.4}) == 0.4);
  // (theta + beta0 R_sd) V_ov = 1
  const ModelParams unit{1.0, 1.0, 0.5, 0.5};
  CHECK(gm_analytic(d, unit, {2.0, 0.4}) == 0.1);
  // V_ov = 1, theta = 0.1: g_m (1.1)^2 = beta0 V_ds
  CHECK_THAT(gm_analytic(kDevice, params(0.1, 0), {2.0, 0.4}) * 1.1 * 1.1, WithinRel(8.67e-5 * 0.4, 1e-12));
}

TEST_CASE("analytic conductances match central differences at 1 mV") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> vov(0.1, 2.8), vds(0.05, 0.4);
  const double h = 1e-3;
  for (int k = 0; k < 300; ++k) {
    const auto o = oracle::random_params(rng);
    const ModelParams p{o.v_t, o.mu_0, o.theta, o.r_sd};
    const double vg = o.v_t + vov(rng), vd = vds(rng);
    const double b0 = oracle::beta0({}, o);
    const double gm = oracle::central_difference([&](double x) { return oracle::first_order_current(b0, o, x, vd); }, vg, h);
    const double gds =
        oracle::central_difference([&](double x) { return oracle::first_order_current(b0, o, vg, x); }, vd, h);
    CHECK(std::abs(gm_analytic(kDevice, p, {vg, vd}) - gm) / gm < 1e-4);
    CHECK(std::abs(gds_analytic(kDevice, p, {vg, vd}) - gds) / gds < 1e-4);
  }
}

TEST_CASE("drain conductance") {
  const DeviceSpec d{1, 1, 1};
  CHECK(gds_analytic(d, ModelParams{1.0, 1.0, 0.0, 0.0}, {3.0, 0.2}) == 2.0);
  const auto p = params(0.15, 80.0);
  const double b0 = beta0(kDevice, p).value();
  for (double vg : {1.5, 2.0, 3.0}) {
    const double g = gds_analytic(kDevice, p, {vg, 0.4});
    CHECK(g == gds_analytic(kDevice, p, {vg, 0.1}));
    CHECK_THAT(1.0 / g - (p.theta + b0 * p.r_sd) / b0, WithinRel(1.0 / (b0 * (vg - p.v_t)), 1e-12));
  }
}

TEST_CASE("simplified current increases with both biases") {
  const auto p = params(0.35, 200.0);
  double prev = 0.0;
  for (double vg = 1.01; vg < 5.0; vg += 0.01) {
    const double i = ids_simplified(kDevice, p, {vg, 0.4});
    CHECK(i > prev);
    prev = i;
  }
  prev = -1.0;
  for (double vd = 0.0; vd < 1.0; vd += 0.01) {
    const double i = ids_simplified(kDevice, p, {2.0, vd});
    CHECK(i > prev);
    prev = i;
  }
}

TEST_CASE("effective mobility") {
  const auto flat = params(0.0, 50.0);
  for (double vg : {1.5, 2.5, 4.0}) CHECK(mu_eff(flat, {vg, 0.4}, 1e-5) == flat.mu_0);

  const auto p = params(0.12, 50.0);
  double prev = p.mu_0;
  for (double vg = 1.05; vg <= 4.0; vg += 0.05) {
    const double i = ids_implicit(kDevice, p, {vg, 0.4});
    const double mu = mu_eff(p, {vg, 0.4}, i);
    CHECK(mu < p.mu_0);
    CHECK(mu < prev);
    CHECK_THAT(mu, WithinRel(p.mu_0 / (1 + p.theta * (vg - i * 25.0 - p.v_t)), 1e-15));
    prev = mu;
  }
}

TEST_CASE("gate sweep synthesis") {
  const ModelParams p{1.6, 0.05, 0.12, 50.0};
  const auto grid = linear_grid(0.0, 4.0, 0.1);
  REQUIRE(grid.size() == 41);
  CHECK(grid.back() == 4.0);

  const auto s = synth_gate_sweep(kDevice, p, 0.4, grid);
  REQUIRE(s.size() == 41);
  for (const auto& pt : s.points) {
    if (pt.v <= p.v_t)
      CHECK(pt.i == 0.0);
    else
      CHECK(pt.i == ids_implicit(kDevice, p, {pt.v, 0.4}));
  }
  const auto simple = synth_gate_sweep(kDevice, p, 0.4, grid, {}, CurrentModel::Simplified);
  CHECK(simple.points.back().i == ids_simplified(kDevice, p, {4.0, 0.4}));

  const std::vector<double> one{2.0};
  CHECK(synth_gate_sweep(kDevice, p, 0.4, one).size() == 1);

  try {
    (void)synth_gate_sweep(kDevice, p, 0.4, std::vector<double>{});
    FAIL("empty grid accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyGrid);
  }
  CHECK_THROWS_AS(synth_gate_sweep(kDevice, p, 0.4, std::vector<double>{1.0, 1.0}), Error);
  CHECK_THROWS_AS(synth_gate_sweep(kDevice, p, 0.4, grid, {-0.01, 1}), Error);
}

TEST_CASE("noisy synthesis is deterministic per seed and multiplicative") {
  const ModelParams p{1.6, 0.05, 0.12, 50.0};
  const auto grid = linear_grid(0.0, 4.0, 0.1);
  const auto a = synth_gate_sweep(kDevice, p, 0.4, grid, {0.01, 42});
  const auto b = synth_gate_sweep(kDevice, p, 0.4, grid, {0.01, 42});
  const auto c = synth_gate_sweep(kDevice, p, 0.4, grid, {0.01, 43});
  CHECK(a.points == b.points);
  CHECK(a.points != c.points);
  const auto clean = synth_gate_sweep(kDevice, p, 0.4, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (clean.points[k].i == 0.0) CHECK(a.points[k].i == 0.0);
    else CHECK(std::abs(a.points[k].i / clean.points[k].i - 1.0) < 0.06);
  }
}

TEST_CASE("small-drain assumption violations are flagged on synthesized sweeps") {
  const auto grid = linear_grid(0.0, 4.0, 0.1);
  const auto flagged = synth_gate_sweep(kDevice, ModelParams{1.6, 0.05, 0.12, 50.0}, 0.4, grid);
  CHECK(flagged.diagnostics.size() == 1);
  const auto clean = synth_gate_sweep(kDevice, ModelParams{1.6, 0.05, 0.12, 0.0}, 0.4, grid);
  CHECK(clean.diagnostics.empty());
}

TEST_CASE("drain family synthesis") {
  const ModelParams p{1.6, 0.05, 0.12, 50.0};
  const auto vgs = linear_grid(2.0, 4.5, 0.5);
  const auto vds = linear_grid(0.0, 0.4, 0.05);
  const auto fam = synth_drain_sweep_family(kDevice, p, vgs, vds);
  REQUIRE(fam.size() == 6);
  for (std::size_t g = 0; g < fam.size(); ++g) {
    CHECK(fam.sweeps[g].v_gs == vgs[g]);
    CHECK(fam.sweeps[g].points.front().i == 0.0);
    CHECK(fam.sweeps[g].points.back().i == ids_implicit(kDevice, p, {vgs[g], 0.4}));
  }
  CHECK(synth_drain_sweep_family(kDevice, p, std::vector<double>{3.0}, vds).size() == 1);
  const auto n1 = synth_drain_sweep_family(kDevice, p, vgs, vds, {0.01, 5});
  const auto n2 = synth_drain_sweep_family(kDevice, p, vgs, vds, {0.01, 5});
  for (std::size_t g = 0; g < fam.size(); ++g) CHECK(n1.sweeps[g].points == n2.sweeps[g].points);
}
