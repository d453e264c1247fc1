// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/recon_fbp.hpp"
#include "oat/simulator.hpp"
#include "test_helpers.hpp"

using namespace oat;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("Hann deconvolution window endpoints") {
  CHECK(hann_window(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(hann_window(5.0, 5.0) == doctest::Approx(0.0));
  CHECK(hann_window(6.0, 5.0) == 0.0);
  CHECK(hann_window(2.5, 5.0) == doctest::Approx(0.5));
}

TEST_CASE("deconvolve with identity EIR passes a low-band signal") {
  const auto lat = FrequencyLattice::from_time(512, 0.05);
  const double fc = lat.nyquist_mhz();
  TimeData u{1, lat, std::vector<double>(512)};
  // envelope-windowed tone well below the cutoff (the window itself
  // attenuates ~(pi f / 2 fc)^2 in-band)
  const double f0 = fc / 20.0, t0 = 12.0, sig = 2.5;
  for (int k = 0; k < 512; ++k) {
    const double t = k * lat.delta_t_us;
    u.values[k] = std::exp(-0.5 * (t - t0) * (t - t0) / (sig * sig)) *
                  std::cos(2.0 * kPi * f0 * (t - t0));
  }
  const TimeData p = deconvolve(u, Eir::identity(), fc);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 512; ++k) {
    num += (p.values[k] - u.values[k]) * (p.values[k] - u.values[k]);
    den += u.values[k] * u.values[k];
  }
  CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("deconvolve undoes an analytic EIR inside its passband") {
  const auto lat = FrequencyLattice::from_time(512, 0.05);
  const Eir eir = Eir::analytic(0.5, 0.8, 0.3); // delayed response
  TimeData p{1, lat, std::vector<double>(512)};
  const double f0 = 0.5, t0 = 12.0, sig = 2.0;
  for (int k = 0; k < 512; ++k) {
    const double t = k * lat.delta_t_us;
    p.values[k] = std::exp(-0.5 * (t - t0) * (t - t0) / (sig * sig)) *
                  std::cos(2.0 * kPi * f0 * (t - t0));
  }

  // voltage = EIR applied in the frequency domain
  FrequencyData spec = time_to_freq(p);
  for (int l = 0; l < lat.num_freqs; ++l)
    spec.values[l] *= eir_sample(eir, lat, l);
  const TimeData voltage = freq_to_time(spec);

  const TimeData rec = deconvolve(voltage, eir, lat.nyquist_mhz());
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 512; ++k) {
    num += (rec.values[k] - p.values[k]) * (rec.values[k] - p.values[k]);
    den += p.values[k] * p.values[k];
  }
  CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("deconvolve validates the cutoff") {
  const auto lat = FrequencyLattice::from_time(64, 0.05);
  TimeData u{1, lat, std::vector<double>(64, 0.0)};
  CHECK_THROWS_AS(deconvolve(u, Eir::identity(), 0.0), ConfigError);
  CHECK_THROWS_AS(deconvolve(u, Eir::identity(), 11.0), ConfigError);
}

namespace {

struct FbpBench {
  ScanGeometry geom;
  ImageGrid grid;
  AcousticConstants consts;
  FrequencyLattice lattice;

  FbpBench() {
    geom = testutil::small_geometry(36, 24, 25.0, 0.05, 0.05);
    grid = testutil::cube_grid(15, 0.5);
    consts = testutil::constants_for(grid);
    lattice = FrequencyLattice::from_time(512, 0.05);
  }

  FbpConfig config(double fc) const {
    FbpConfig cfg;
    cfg.cutoff_mhz = fc;
    cfg.grid = grid;
    return cfg;
  }
};

} // namespace

TEST_CASE("zero pressure reconstructs to a zero image") {
  FbpBench b;
  TimeData p{b.geom.num_poses(), b.lattice,
             std::vector<double>(
                 static_cast<std::size_t>(b.geom.num_poses()) * 512, 0.0)};
  const auto vol = fbp_reconstruct(p, b.geom, b.consts, b.config(8.0));
  for (double v : vol.values) CHECK(v == 0.0);
}

TEST_CASE("backprojection is linear in the pressure data") {
  FbpBench b;
  const std::size_t total = static_cast<std::size_t>(b.geom.num_poses()) * 512;
  TimeData p1{b.geom.num_poses(), b.lattice, std::vector<double>(total)};
  TimeData p2 = p1;
  for (std::size_t i = 0; i < total; ++i) {
    p1.values[i] = rng::normal_at(3, i);
    p2.values[i] = rng::normal_at(4, i);
  }
  TimeData combo = p1;
  for (std::size_t i = 0; i < total; ++i)
    combo.values[i] = 2.0 * p1.values[i] - 0.5 * p2.values[i];

  const auto v1 = fbp_reconstruct(p1, b.geom, b.consts, b.config(8.0));
  const auto v2 = fbp_reconstruct(p2, b.geom, b.consts, b.config(8.0));
  const auto vc = fbp_reconstruct(combo, b.geom, b.consts, b.config(8.0));
  for (std::size_t n = 0; n < vc.size(); ++n)
    CHECK(vc.values[n] ==
          doctest::Approx(2.0 * v1.values[n] - 0.5 * v2.values[n])
              .epsilon(1e-9));
}

TEST_CASE("dense-view scan of a centered sphere lands on the phantom") {
  FbpBench b;
  const SystemOperator op(b.geom, b.grid, b.consts, Eir::identity(),
                          b.lattice);
  Phantom ph;
  // about one voxel in radius: band-limited edge enhancement of larger
  // spheres would put the image maximum on the rim instead of the center
  ph.spheres.push_back({{0, 0, 0}, 0.6, 1.0});
  const auto truth = rasterize(ph, b.grid);
  const TimeData voltage = freq_to_time(op.apply(truth));
  const TimeData pressure = deconvolve(voltage, Eir::identity(), 8.0);
  const auto vol = fbp_reconstruct(pressure, b.geom, b.consts, b.config(8.0));

  // peak position within one voxel of the center
  std::size_t peak_n = 0;
  double peak = -1e300;
  for (std::size_t n = 0; n < vol.size(); ++n)
    if (vol.values[n] > peak) {
      peak = vol.values[n];
      peak_n = n;
    }
  const Vec3 peak_pos = b.grid.voxel_center(peak_n);
  CHECK(std::abs(peak_pos.x) <= b.grid.spacing_mm);
  CHECK(std::abs(peak_pos.y) <= b.grid.spacing_mm);
  CHECK(std::abs(peak_pos.z) <= b.grid.spacing_mm);

  // amplitude calibration: peak within 15% of the phantom value
  CHECK(std::abs(peak - 1.0) < 0.15);

  SUBCASE("reconstruction of the symmetric phantom is symmetric") {
    // quarter turn about z maps the grid onto itself
    double num = 0.0, den = 0.0;
    for (int iz = 0; iz < 15; ++iz)
      for (int iy = 0; iy < 15; ++iy)
        for (int ix = 0; ix < 15; ++ix) {
          const double a = vol.values[b.grid.index(ix, iy, iz)];
          const double r = vol.values[b.grid.index(iy, 14 - ix, iz)];
          num += (a - r) * (a - r);
          den += a * a;
        }
    CHECK(std::sqrt(num / den) < 0.02);
  }
}

TEST_CASE("lower cutoff never raises the noise level of the image") {
  FbpBench b;
  const std::size_t total = static_cast<std::size_t>(b.geom.num_poses()) * 512;
  TimeData noise{b.geom.num_poses(), b.lattice, std::vector<double>(total)};
  for (std::size_t i = 0; i < total; ++i)
    noise.values[i] = rng::normal_at(77, i);

  double prev = -1.0;
  for (double fc : {2.0, 3.0, 4.0, 6.0, 8.0}) {
    const TimeData p = deconvolve(noise, Eir::identity(), fc);
    const auto vol = fbp_reconstruct(p, b.geom, b.consts, b.config(fc));
    double mean = 0.0;
    for (double v : vol.values) mean += v;
    mean /= static_cast<double>(vol.size());
    double var = 0.0;
    for (double v : vol.values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(vol.size() - 1));
    CHECK(sd >= prev);
    prev = sd;
  }
}

TEST_CASE("fbp rejects mismatched inputs") {
  FbpBench b;
  TimeData p{3, b.lattice, std::vector<double>(3 * 512, 0.0)};
  CHECK_THROWS_AS(fbp_reconstruct(p, b.geom, b.consts, b.config(8.0)),
                  ShapeError);
}
