// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/io/config.hpp"
#include "oat/simulator.hpp"
#include "test_helpers.hpp"

using namespace oat;

TEST_CASE("rasterize: empty phantom gives a zero vector") {
  const auto grid = testutil::cube_grid(6, 0.5);
  const auto theta = rasterize(Phantom{}, grid);
  for (double v : theta.values) CHECK(v == 0.0);
}

TEST_CASE("rasterize: sphere voxel count approximates its volume") {
  // radius of five voxel spacings centered on a lattice point
  const auto grid = testutil::cube_grid(17, 1.0); // odd count: center on voxel
  Phantom ph;
  ph.spheres.push_back({{0, 0, 0}, 5.0, 2.0});
  const auto theta = rasterize(ph, grid);
  int count = 0;
  for (double v : theta.values)
    if (v != 0.0) {
      CHECK(v == 2.0);
      ++count;
    }
  const double expect = 4.0 / 3.0 * std::numbers::pi * 125.0;
  CHECK(std::abs(count - expect) / expect < 0.10);
}

TEST_CASE("rasterize: disjoint spheres add independently") {
  const auto grid = testutil::cube_grid(12, 0.5);
  Phantom a, b, both;
  a.spheres.push_back({{-1.2, 0, 0}, 0.8, 1.5});
  b.spheres.push_back({{1.2, 0.5, 0.5}, 0.6, 2.5});
  both.spheres = {a.spheres[0], b.spheres[0]};
  const auto ta = rasterize(a, grid);
  const auto tb = rasterize(b, grid);
  const auto tboth = rasterize(both, grid);
  for (std::size_t i = 0; i < tboth.size(); ++i)
    CHECK(tboth.values[i] == ta.values[i] + tb.values[i]);
}

TEST_CASE("rasterize: tubes occupy a cylinder") {
  const auto grid = testutil::cube_grid(9, 0.5);
  Phantom ph;
  ph.tubes.push_back({{0, 0, 0}, {0, 0, 1}, 0.6, 3.0});
  const auto theta = rasterize(ph, grid);
  // every z-slice holds the same disc
  const std::size_t per_slice = static_cast<std::size_t>(9) * 9;
  for (int iz = 1; iz < 9; ++iz)
    for (std::size_t i = 0; i < per_slice; ++i)
      CHECK(theta.values[iz * per_slice + i] == theta.values[i]);
  CHECK(theta.values[grid.index(4, 4, 0)] == 3.0); // axis voxel
}

TEST_CASE("simulate without noise equals the forward operator") {
  const auto op = testutil::small_operator(2, 3, 5, 32);
  Phantom ph;
  ph.spheres.push_back({{0, 0, 0}, 0.6, 1.0});
  const auto theta = rasterize(ph, op.grid());
  const auto sim = simulate(theta, op, {0.0, 123}, true);
  const auto direct = op.apply(theta);
  for (std::size_t i = 0; i < direct.values.size(); ++i)
    CHECK(sim.freq.values[i] == direct.values[i]);
  REQUIRE(sim.time.has_value());
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  const auto op = testutil::small_operator(2, 3, 4, 32);
  const auto theta = testutil::random_theta(op.grid(), 5);
  const auto s1 = simulate(theta, op, {0.25, 99}, true);
  const auto s2 = simulate(theta, op, {0.25, 99}, true);
  CHECK(s1.freq.values == s2.freq.values);
  CHECK(s1.time->values == s2.time->values);
  const auto s3 = simulate(theta, op, {0.25, 100}, false);
  CHECK(s1.freq.values != s3.freq.values);
}

TEST_CASE("frequency- and time-domain outputs carry the same noise") {
  const auto op = testutil::small_operator(2, 2, 4, 64);
  const auto theta = testutil::random_theta(op.grid(), 6);
  const auto sim = simulate(theta, op, {0.5, 7}, true);
  // the temporal samples are the real-signal projection of the spectra
  const auto projected = freq_to_time(sim.freq);
  CHECK(testutil::rel_vec_err(projected.values, sim.time->values) < 1e-12);
}

TEST_CASE("sigma chosen for a 40 dB target lands within 1 dB") {
  const auto op = testutil::small_operator(4, 4, 5, 128);
  Phantom ph;
  ph.spheres.push_back({{0, 0, 0}, 0.8, 1.0});
  const auto theta = rasterize(ph, op.grid());
  const auto clean = simulate(theta, op, {0.0, 0}, true);
  const double sigma = sigma_for_snr_db(*clean.time, 40.0);
  const auto noisy = simulate(theta, op, {sigma, 31}, true);
  CHECK(std::abs(empirical_snr_db(*clean.time, *noisy.time) - 40.0) < 1.0);
}

TEST_CASE("noise-free simulation is linear and scales with Grueneisen") {
  auto geom = testutil::small_geometry(2, 2);
  const auto grid = testutil::cube_grid(4, 0.5);
  const auto lat = FrequencyLattice::from_time(32, 0.05);
  const SystemOperator op1(geom, grid, {1.47, 2000.0, 0.25}, Eir::identity(),
                           lat);
  const SystemOperator op2(geom, grid, {1.47, 4000.0, 0.25}, Eir::identity(),
                           lat);
  const auto theta = testutil::random_theta(grid, 8);
  const auto y1 = op1.apply(theta);
  const auto y2 = op2.apply(theta);
  for (std::size_t i = 0; i < y1.values.size(); ++i)
    CHECK(std::abs(y2.values[i] - 2.0 * y1.values[i]) <=
          1e-12 * std::abs(y1.values[i]));

  auto scaled = theta;
  for (auto& v : scaled.values) v *= 3.0;
  const auto y3 = op1.apply(scaled);
  for (std::size_t i = 0; i < y1.values.size(); ++i)
    CHECK(std::abs(y3.values[i] - 3.0 * y1.values[i]) <=
          1e-12 * std::abs(3.0 * y1.values[i]) + 1e-30);
}

TEST_CASE("view subsets of a dense noisy scan match direct simulation") {
  auto dense_geom = testutil::small_geometry(8, 3);
  const auto grid = testutil::cube_grid(4, 0.5);
  const auto lat = FrequencyLattice::from_time(32, 0.05);
  const SystemOperator dense_op(dense_geom, grid, testutil::constants_for(grid),
                                Eir::identity(), lat);
  const auto theta = testutil::random_theta(grid, 9);
  const NoiseModel noise{0.3, 4242};
  const auto dense = simulate(theta, dense_op, noise, false);

  const auto subset = io::subsample_views(dense.freq, dense_geom, 2);
  const SystemOperator sparse_op(subset.geometry, grid,
                                 testutil::constants_for(grid),
                                 Eir::identity(), lat);
  const auto direct = simulate(theta, sparse_op, noise, false);
  REQUIRE(direct.freq.values.size() == subset.data.values.size());
  for (std::size_t i = 0; i < direct.freq.values.size(); ++i)
    CHECK(subset.data.values[i] == direct.freq.values[i]);
}

TEST_CASE("analytic sphere pressure traces the expected bipolar pulse") {
  const AcousticConstants consts{1.47, 2000.0, 0.05};
  const SpherePrimitive sphere{{0, 0, 0}, 0.5, 1.0};
  const Vec3 obs{30.0, 0.0, 0.0};
  const double d = 30.0, c0 = 1.47;

  CHECK(analytic_sphere_pressure(0.0, sphere, obs, consts) == 0.0);
  CHECK(analytic_sphere_pressure(d / c0, sphere, obs, consts) ==
        doctest::Approx(0.0));

  // peak-to-peak spacing = 2R/c0 = 0.6803 us via a sampled argmax/argmin
  const double dt = 1e-4;
  double tmax = 0, tmin = 0, vmax = -1e300, vmin = 1e300;
  for (double t = (d - 1.0) / c0; t <= (d + 1.0) / c0; t += dt) {
    const double p = analytic_sphere_pressure(t, sphere, obs, consts);
    if (p > vmax) { vmax = p; tmax = t; }
    if (p < vmin) { vmin = p; tmin = t; }
  }
  CHECK(std::abs((tmin - tmax) - 2 * 0.5 / c0) < 2 * dt);
  CHECK(std::abs(tmin - tmax - 0.6803) < 1e-3);
  // leading edge compression: amplitude Gamma*A*R/(2d)
  CHECK(vmax == doctest::Approx(2000.0 * 1.0 * 0.5 / (2 * d)).epsilon(1e-3));

  CHECK_THROWS_AS(
      analytic_sphere_pressure(1.0, sphere, Vec3{0.1, 0, 0}, consts),
      NumericalError);
}

TEST_CASE("six-tube arrangement has three value pairs") {
  const Phantom ph = make_six_tube_phantom(12.7);
  REQUIRE(ph.tubes.size() == 6);
  ph.validate();
  CHECK(ph.tubes[0].value == ph.tubes[1].value);
  CHECK(ph.tubes[2].value == ph.tubes[3].value);
  CHECK(ph.tubes[4].value == ph.tubes[5].value);
  CHECK(ph.tubes[0].value == doctest::Approx(5.681));
  CHECK(ph.tubes[5].value == doctest::Approx(6.555));
  // outer tubes vertical, inner tubes tilted
  CHECK(ph.tubes[0].direction.x == 0.0);
  CHECK(ph.tubes[1].direction.norm() > 1.0);
}
