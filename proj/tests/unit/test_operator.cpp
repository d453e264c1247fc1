// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/fft.hpp"
#include "oat/system_operator.hpp"
#include "test_helpers.hpp"

using namespace oat;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("zero-frequency column of the operator is identically zero") {
  const auto op = testutil::small_operator();
  for (int q = 0; q < op.num_poses(); ++q)
    for (std::size_t n = 0; n < op.num_voxels(); ++n)
      CHECK(op.element(q, 0, n) == Complex{0.0, 0.0});
}

TEST_CASE("element with identity EIR on the aperture axis") {
  // single pose on the equator looking at the origin; the grid center voxel
  // lies on the axis
  auto geom = testutil::small_geometry(1, 1, 65.0, 2.0, 2.0);
  const auto grid = testutil::cube_grid(1, 1.0);
  const auto consts = testutil::constants_for(grid);
  const auto lat = FrequencyLattice::from_time(64, 0.05);
  const SystemOperator op(geom, grid, consts, Eir::identity(), lat);

  for (int l = 1; l < lat.num_freqs; ++l) {
    const double f = lat.freq_mhz(l);
    const Complex p0 = p0_spectrum(f, consts);
    const double phase = -2.0 * kPi * f * 65.0 / 1.47;
    const Complex expect =
        p0 * Complex(std::cos(phase), std::sin(phase)) / (2.0 * kPi * 65.0);
    CHECK(std::abs(op.element(0, l, 0) - expect) < 1e-12 * std::abs(expect));
  }
}

TEST_CASE("matrix-free apply matches the dense assembly") {
  const auto op = testutil::small_operator(2, 4, 4, 32);
  const auto H = testutil::dense_matrix(op);

  SUBCASE("zero in, zero out") {
    const auto out = op.apply(CoefficientVector::zeros(op.grid()));
    for (const auto& v : out.values) CHECK(v == Complex{0.0, 0.0});
  }

  SUBCASE("unit vector picks one column") {
    auto theta = CoefficientVector::zeros(op.grid());
    const std::size_t n = 13;
    theta.values[n] = 1.0;
    const auto out = op.apply(theta);
    for (int q = 0; q < op.num_poses(); ++q)
      for (int l = 0; l < op.lattice().num_freqs; ++l) {
        const std::size_t r =
            static_cast<std::size_t>(q) * op.lattice().num_freqs + l;
        CHECK(std::abs(out.values[r] - H[r * op.num_voxels() + n]) < 1e-13);
      }
  }

  SUBCASE("random coefficients, relative error < 1e-12") {
    const auto theta = testutil::random_theta(op.grid(), 3);
    const auto got = op.apply(theta);
    const auto want = testutil::dense_apply(op, H, theta);
    CHECK(testutil::rel_vec_err(got.values, want.values) < 1e-12);
  }

  SUBCASE("adjoint matches the dense adjoint") {
    const auto data = testutil::random_freq_data(op, 11);
    const auto got = op.apply_adjoint(data);
    const auto want = testutil::dense_adjoint(op, H, data);
    CHECK(testutil::rel_vec_err(got.values, want.values) < 1e-12);
  }
}

TEST_CASE("adjoint identity on an 8^3 grid") {
  const auto op = testutil::small_operator(2, 4, 8, 32);
  const auto theta = testutil::random_theta(op.grid(), 21);
  const auto data = testutil::random_freq_data(op, 22);

  const FrequencyData h_theta = op.apply(theta);
  const CoefficientVector ht_data = op.apply_adjoint(data);

  const double lhs = weighted_inner(h_theta, data);
  double rhs = 0.0;
  for (std::size_t n = 0; n < theta.size(); ++n)
    rhs += theta.values[n] * ht_data.values[n];

  double norm_ht = weighted_norm(h_theta);
  double norm_u = weighted_norm(data);
  CHECK(std::abs(lhs - rhs) / (norm_ht * norm_u) < 1e-10);
}

TEST_CASE("adjoint of a single data sample is a weighted conjugate row") {
  const auto op = testutil::small_operator(1, 2, 4, 32);
  const int L = op.lattice().num_freqs;
  for (const int l : {0, 3, L - 1}) {
    FrequencyData e{op.num_poses(), op.lattice(),
                    std::vector<Complex>(op.data_size(), {0, 0})};
    const int q = op.num_poses() - 1;
    e.values[static_cast<std::size_t>(q) * L + l] = {1.0, 0.0};
    const auto theta = op.apply_adjoint(e);
    for (std::size_t n = 0; n < op.num_voxels(); ++n) {
      const double want =
          hermitian_weight(l, L) * std::conj(op.element(q, l, n)).real();
      CHECK(theta.values[n] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("adjoint of zero data is the zero image") {
  const auto op = testutil::small_operator();
  FrequencyData z{op.num_poses(), op.lattice(),
                  std::vector<Complex>(op.data_size(), {0, 0})};
  for (double v : op.apply_adjoint(z).values) CHECK(v == 0.0);
}

TEST_CASE("apply is linear") {
  const auto op = testutil::small_operator(2, 3, 5, 32);
  const auto t1 = testutil::random_theta(op.grid(), 31);
  const auto t2 = testutil::random_theta(op.grid(), 32);
  auto combo = CoefficientVector::zeros(op.grid());
  for (std::size_t i = 0; i < combo.size(); ++i)
    combo.values[i] = 2.5 * t1.values[i] - 0.75 * t2.values[i];

  const auto y1 = op.apply(t1);
  const auto y2 = op.apply(t2);
  auto want = y1;
  for (std::size_t i = 0; i < want.values.size(); ++i)
    want.values[i] = 2.5 * y1.values[i] - 0.75 * y2.values[i];
  const auto got = op.apply(combo);
  CHECK(testutil::rel_vec_err(got.values, want.values) < 1e-12);
}

TEST_CASE("joint rotation of poses and image leaves the data invariant") {
  // quarter turn: the 5^3 voxel lattice maps onto itself
  auto geom1 = testutil::small_geometry(1, 3, 25.0);
  auto geom2 = geom1;
  geom2.view_angles_rad = {kPi / 2};

  const auto grid = testutil::cube_grid(5, 0.4);
  const auto consts = testutil::constants_for(grid);
  const auto lat = FrequencyLattice::from_time(64, 0.05);
  const SystemOperator op1(geom1, grid, consts, Eir::identity(), lat);
  const SystemOperator op2(geom2, grid, consts, Eir::identity(), lat);

  const auto theta1 = testutil::random_theta(grid, 77);
  auto theta2 = CoefficientVector::zeros(grid);
  // view pi/2 rotates the poses by -pi/2; rotate the voxels along:
  // (x, y) -> (y, -x) means (ix, iy) -> (iy, 4-ix)
  for (int iz = 0; iz < 5; ++iz)
    for (int iy = 0; iy < 5; ++iy)
      for (int ix = 0; ix < 5; ++ix)
        theta2.values[grid.index(iy, 4 - ix, iz)] =
            theta1.values[grid.index(ix, iy, iz)];

  const auto d1 = op1.apply(theta1);
  const auto d2 = op2.apply(theta2);
  CHECK(testutil::rel_vec_err(d2.values, d1.values) < 1e-9);
}

TEST_CASE("single voxel reproduces the delayed band-limited pulse shape") {
  // point-like aperture, identity EIR, 20 MHz sampling
  const double eps_mm = 1.0, d_mm = 65.0, c0 = 1.47;
  auto geom = testutil::small_geometry(1, 1, d_mm, 0.01, 0.01);
  const auto grid = testutil::cube_grid(1, 2.0 * eps_mm);
  const auto consts = testutil::constants_for(grid);
  const auto lat = FrequencyLattice::from_time(1536, 0.05);
  const SystemOperator op(geom, grid, consts, Eir::identity(), lat);

  auto theta = CoefficientVector::zeros(grid);
  theta.values[0] = 1.0;
  const TimeData got = freq_to_time(op.apply(theta));

  // independent oracle: sample the analytic pulse at 256x the rate, band
  // limit to the lattice Nyquist with a separate DFT, then decimate
  const int os = 256;
  const int Kf = lat.num_time_samples * os;
  std::vector<double> fine(Kf);
  const double dt_f = lat.delta_t_us / os;
  const double a = eps_mm / c0;
  for (int k = 0; k < Kf; ++k) {
    const double tau = k * dt_f - d_mm / c0;
    fine[k] = std::abs(tau) <= a
                  ? -consts.grueneisen * c0 * tau / (2.0 * d_mm)
                  : 0.0;
  }
  RealDft big(Kf);
  std::vector<Complex> spec(Kf / 2 + 1);
  big.forward(fine.data(), spec.data());
  std::fill(spec.begin() + lat.num_freqs, spec.end(), Complex{0, 0});
  std::vector<double> filtered(Kf);
  big.inverse(spec.data(), filtered.data());

  double num = 0.0, den = 0.0;
  for (int k = 0; k < lat.num_time_samples; ++k) {
    const double want = filtered[static_cast<std::size_t>(k) * os] / Kf;
    const double diff = got.values[k] - want;
    num += diff * diff;
    den += want * want;
  }
  CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("shape mismatches are rejected") {
  const auto op = testutil::small_operator();
  const auto wrong_grid = testutil::cube_grid(3, 0.5);
  CHECK_THROWS_AS(op.apply(CoefficientVector::zeros(wrong_grid)), ShapeError);

  FrequencyData bad{1, op.lattice(), std::vector<Complex>(7)};
  CHECK_THROWS_AS(op.apply_adjoint(bad), ShapeError);
  CHECK_THROWS_AS(op.element(0, 0, op.num_voxels()), ShapeError);
}
