// SPDX-License-Identifier: Apache-2.0
#include "oat/system_operator.hpp"

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/fft.hpp"

namespace oat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Lane width of the frequency-sweep kernels. Element values along l are
// generated by complex-rotor recurrences (one rotation per frequency step)
// instead of per-sample trig, blocked voxel lanes keep the updates SIMD.
constexpr int kLanes = 8;

struct PoseTrig {
  Vec3 pos;
  double ct, st, cp, sp;
  explicit PoseTrig(const TransducerPose& p)
      : pos(p.position()),
        ct(std::cos(p.polar_rad)),
        st(std::sin(p.polar_rad)),
        cp(std::cos(p.azimuth_rad)),
        sp(std::sin(p.azimuth_rad)) {}
};

struct LaneSetup {
  double weight[kLanes];  // per-lane scale, already divided by 2*pi*d
  double dc[kLanes], ds[kLanes]; // delay rotor step (cos, sin)
  double xc[kLanes], xs[kLanes]; // x-sinc rotor step
  double yc[kLanes], ys[kLanes]; // y-sinc rotor step
  double igx[kLanes], igy[kLanes]; // 1/gamma for sinc recovery
};

// Fills rotor steps for voxels [n0, n0+count) against one pose.
// `delay_sign` is -1 for the forward operator (exp(-j w d/c)) and +1 for
// the adjoint. Unused lanes get zero weight.
void setup_lanes(const PoseTrig& P, const ImageGrid& grid,
                 const double* theta_or_null, std::size_t n0, int count,
                 double df, double c0, double ap_a, double ap_b,
                 double delay_sign, LaneSetup& s) {
  for (int m = 0; m < kLanes; ++m) {
    if (m >= count) {
      s.weight[m] = 0.0;
      s.dc[m] = 1.0; s.ds[m] = 0.0;
      s.xc[m] = 1.0; s.xs[m] = 0.0;
      s.yc[m] = 1.0; s.ys[m] = 0.0;
      s.igx[m] = s.igy[m] = 0.0;
      continue;
    }
    const std::size_t n = n0 + m;
    const Vec3 r = grid.voxel_center(n);
    const Vec3 diff = P.pos - r;
    const double d = diff.norm();
    const double inv2pid = 1.0 / (kTwoPi * d);
    const double xtr = -r.x * P.ct * P.cp - r.y * P.ct * P.sp + r.z * P.st;
    const double ytr = -r.x * P.sp + r.y * P.cp;

    const double alpha = kTwoPi * df * d / c0;
    double gx = kPi * df * ap_a * xtr / (c0 * d);
    double gy = kPi * df * ap_b * ytr / (c0 * d);
    // tiny-angle clamp keeps sin(g*l)/(g*l) == 1 without branching in l
    if (std::abs(gx) < 1e-14) gx = 1e-14;
    if (std::abs(gy) < 1e-14) gy = 1e-14;

    s.weight[m] = inv2pid * (theta_or_null ? theta_or_null[n] : 1.0);
    s.dc[m] = std::cos(alpha);
    s.ds[m] = delay_sign * std::sin(alpha);
    s.xc[m] = std::cos(gx);
    s.xs[m] = std::sin(gx);
    s.yc[m] = std::cos(gy);
    s.ys[m] = std::sin(gy);
    s.igx[m] = 1.0 / gx;
    s.igy[m] = 1.0 / gy;
  }
}

} // namespace

double weighted_inner(const FrequencyData& x, const FrequencyData& y) {
  if (x.size() != y.size() || x.lattice.num_freqs != y.lattice.num_freqs)
    throw ShapeError("weighted_inner: mismatched data shapes");
  const int L = x.lattice.num_freqs;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int l = static_cast<int>(i % L);
    const Complex p = x.values[i] * std::conj(y.values[i]);
    acc += hermitian_weight(l, L) * p.real();
  }
  return acc;
}

double weighted_norm(const FrequencyData& x) {
  return std::sqrt(weighted_inner(x, x));
}

FrequencyData time_to_freq(const TimeData& u) {
  const int K = u.lattice.num_time_samples;
  const int L = u.lattice.num_freqs;
  if (u.size() != static_cast<std::size_t>(u.num_poses) * K)
    throw ShapeError("time_to_freq: bad sample count");
  RealDft dft(K);
  FrequencyData out{u.num_poses, u.lattice,
                    std::vector<Complex>(static_cast<std::size_t>(u.num_poses) * L)};
  const double dt = u.lattice.delta_t_us;
#pragma omp parallel for schedule(static)
  for (int q = 0; q < u.num_poses; ++q) {
    dft.forward(&u.values[static_cast<std::size_t>(q) * K],
                &out.values[static_cast<std::size_t>(q) * L]);
    for (int l = 0; l < L; ++l)
      out.values[static_cast<std::size_t>(q) * L + l] *= dt;
  }
  return out;
}

TimeData freq_to_time(const FrequencyData& u) {
  const int K = u.lattice.num_time_samples;
  const int L = u.lattice.num_freqs;
  if (u.size() != static_cast<std::size_t>(u.num_poses) * L)
    throw ShapeError("freq_to_time: bad sample count");
  RealDft dft(K);
  TimeData out{u.num_poses, u.lattice,
               std::vector<double>(static_cast<std::size_t>(u.num_poses) * K)};
  const double df = u.lattice.delta_f_mhz;
#pragma omp parallel
  {
    std::vector<Complex> spec(L);
#pragma omp for schedule(static)
    for (int q = 0; q < u.num_poses; ++q) {
      const Complex* src = &u.values[static_cast<std::size_t>(q) * L];
      std::copy(src, src + L, spec.begin());
      // real signals: DC and Nyquist bins carry no imaginary part
      spec[0] = {spec[0].real(), 0.0};
      spec[L - 1] = {spec[L - 1].real(), 0.0};
      dft.inverse(spec.data(), &out.values[static_cast<std::size_t>(q) * K]);
      for (int k = 0; k < K; ++k)
        out.values[static_cast<std::size_t>(q) * K + k] *= df;
    }
  }
  return out;
}

SystemOperator::SystemOperator(ScanGeometry geom, ImageGrid grid,
                               AcousticConstants consts, Eir eir,
                               FrequencyLattice lattice)
    : geom_(std::move(geom)),
      grid_(grid),
      consts_(consts),
      eir_(std::move(eir)),
      lattice_(lattice) {
  geom_.validate();
  grid_.validate();
  consts_.validate();
  lattice_.validate();
  if (std::abs(consts_.voxel_radius_mm - grid_.voxel_radius_mm()) >
      1e-12 * grid_.voxel_radius_mm())
    throw ConfigError("voxel radius must equal half the grid spacing");
  poses_ = enumerate_poses(geom_);
  pulse_eir_.resize(lattice_.num_freqs);
  for (int l = 0; l < lattice_.num_freqs; ++l)
    pulse_eir_[l] =
        p0_spectrum(lattice_.freq_mhz(l), consts_) * eir_sample(eir_, lattice_, l);
}

Complex SystemOperator::element(int q, int l, std::size_t n) const {
  if (q < 0 || q >= num_poses() || l < 0 || l >= lattice_.num_freqs ||
      n >= num_voxels())
    throw ShapeError("element index out of range");
  const double ab = geom_.transducer_width_a_mm * geom_.transducer_height_b_mm;
  const Complex sir = sir_spectrum(
      lattice_.freq_mhz(l), poses_[q], grid_.voxel_center(n),
      geom_.transducer_width_a_mm, geom_.transducer_height_b_mm,
      consts_.speed_of_sound_mm_per_us);
  return pulse_eir_[l] * sir / ab;
}

FrequencyData SystemOperator::apply(const CoefficientVector& theta) const {
  if (theta.size() != num_voxels() || theta.grid.nx != grid_.nx ||
      theta.grid.ny != grid_.ny || theta.grid.nz != grid_.nz)
    throw ShapeError("apply: coefficient vector does not match the grid");
  const int Q = num_poses();
  const int L = lattice_.num_freqs;
  const std::size_t N = num_voxels();
  const double df = lattice_.delta_f_mhz;
  const double c0 = consts_.speed_of_sound_mm_per_us;

  FrequencyData out{Q, lattice_,
                    std::vector<Complex>(static_cast<std::size_t>(Q) * L,
                                         Complex{0.0, 0.0})};
  std::vector<double> inv_l(L, 0.0);
  for (int l = 1; l < L; ++l) inv_l[l] = 1.0 / l;

#pragma omp parallel for schedule(static)
  for (int q = 0; q < Q; ++q) {
    const PoseTrig P(poses_[q]);
    Complex* out_q = &out.values[static_cast<std::size_t>(q) * L];
    LaneSetup s;
    for (std::size_t n0 = 0; n0 < N; n0 += kLanes) {
      const int count = static_cast<int>(std::min<std::size_t>(kLanes, N - n0));
      // sparse coefficient vectors skip silent blocks
      bool all_zero = true;
      for (int m = 0; m < count; ++m)
        if (theta.values[n0 + m] != 0.0) { all_zero = false; break; }
      if (all_zero) continue;

      setup_lanes(P, grid_, theta.values.data(), n0, count, df, c0,
                  geom_.transducer_width_a_mm, geom_.transducer_height_b_mm,
                  -1.0, s);
      double cd[kLanes], sd[kLanes], cx[kLanes], sx[kLanes], cy[kLanes],
          sy[kLanes];
      for (int m = 0; m < kLanes; ++m) {
        cd[m] = 1.0; sd[m] = 0.0;
        cx[m] = 1.0; sx[m] = 0.0;
        cy[m] = 1.0; sy[m] = 0.0;
      }
      for (int l = 1; l < L; ++l) {
        double acc_re = 0.0, acc_im = 0.0;
        const double il = inv_l[l];
#pragma omp simd reduction(+ : acc_re, acc_im)
        for (int m = 0; m < kLanes; ++m) {
          const double ncd = cd[m] * s.dc[m] - sd[m] * s.ds[m];
          const double nsd = sd[m] * s.dc[m] + cd[m] * s.ds[m];
          cd[m] = ncd; sd[m] = nsd;
          const double ncx = cx[m] * s.xc[m] - sx[m] * s.xs[m];
          const double nsx = sx[m] * s.xc[m] + cx[m] * s.xs[m];
          cx[m] = ncx; sx[m] = nsx;
          const double ncy = cy[m] * s.yc[m] - sy[m] * s.ys[m];
          const double nsy = sy[m] * s.yc[m] + cy[m] * s.ys[m];
          cy[m] = ncy; sy[m] = nsy;
          const double sincx = nsx * s.igx[m] * il;
          const double sincy = nsy * s.igy[m] * il;
          const double w = s.weight[m] * sincx * sincy;
          acc_re += w * ncd;
          acc_im += w * nsd;
        }
        out_q[l] += pulse_eir_[l] * Complex(acc_re, acc_im);
      }
    }
  }
  return out;
}

CoefficientVector SystemOperator::apply_adjoint(const FrequencyData& data) const {
  if (data.size() != data_size() || data.lattice.num_freqs != lattice_.num_freqs)
    throw ShapeError("apply_adjoint: data does not match the operator");
  const int Q = num_poses();
  const int L = lattice_.num_freqs;
  const std::size_t N = num_voxels();
  const double df = lattice_.delta_f_mhz;
  const double c0 = consts_.speed_of_sound_mm_per_us;

  // fold Hermitian weights and the conjugated pulse/EIR factor into the data
  std::vector<double> zre(static_cast<std::size_t>(Q) * L);
  std::vector<double> zim(static_cast<std::size_t>(Q) * L);
#pragma omp parallel for schedule(static)
  for (int q = 0; q < Q; ++q) {
    for (int l = 0; l < L; ++l) {
      const std::size_t i = static_cast<std::size_t>(q) * L + l;
      const Complex z =
          hermitian_weight(l, L) * std::conj(pulse_eir_[l]) * data.values[i];
      zre[i] = z.real();
      zim[i] = z.imag();
    }
  }

  std::vector<PoseTrig> ptrig;
  ptrig.reserve(Q);
  for (const auto& p : poses_) ptrig.emplace_back(p);

  CoefficientVector out = CoefficientVector::zeros(grid_);
  std::vector<double> inv_l(L, 0.0);
  for (int l = 1; l < L; ++l) inv_l[l] = 1.0 / l;
  const std::size_t num_blocks = (N + kLanes - 1) / kLanes;

#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < num_blocks; ++blk) {
    const std::size_t n0 = blk * kLanes;
    const int count = static_cast<int>(std::min<std::size_t>(kLanes, N - n0));
    double acc[kLanes] = {};
    LaneSetup s;
    for (int q = 0; q < Q; ++q) {
      setup_lanes(ptrig[q], grid_, nullptr, n0, count, df, c0,
                  geom_.transducer_width_a_mm, geom_.transducer_height_b_mm,
                  +1.0, s);
      const double* zr = &zre[static_cast<std::size_t>(q) * L];
      const double* zi = &zim[static_cast<std::size_t>(q) * L];
      double cd[kLanes], sd[kLanes], cx[kLanes], sx[kLanes], cy[kLanes],
          sy[kLanes];
      for (int m = 0; m < kLanes; ++m) {
        cd[m] = 1.0; sd[m] = 0.0;
        cx[m] = 1.0; sx[m] = 0.0;
        cy[m] = 1.0; sy[m] = 0.0;
      }
      for (int l = 1; l < L; ++l) {
        const double il = inv_l[l];
        const double zrl = zr[l], zil = zi[l];
#pragma omp simd
        for (int m = 0; m < kLanes; ++m) {
          const double ncd = cd[m] * s.dc[m] - sd[m] * s.ds[m];
          const double nsd = sd[m] * s.dc[m] + cd[m] * s.ds[m];
          cd[m] = ncd; sd[m] = nsd;
          const double ncx = cx[m] * s.xc[m] - sx[m] * s.xs[m];
          const double nsx = sx[m] * s.xc[m] + cx[m] * s.xs[m];
          cx[m] = ncx; sx[m] = nsx;
          const double ncy = cy[m] * s.yc[m] - sy[m] * s.ys[m];
          const double nsy = sy[m] * s.yc[m] + cy[m] * s.ys[m];
          cy[m] = ncy; sy[m] = nsy;
          const double sincx = nsx * s.igx[m] * il;
          const double sincy = nsy * s.igy[m] * il;
          // Re(z * exp(+j alpha l)) per lane
          acc[m] += s.weight[m] * sincx * sincy * (zrl * ncd - zil * nsd);
        }
      }
    }
    for (int m = 0; m < count; ++m) out.values[n0 + m] = acc[m];
  }
  return out;
}

} // namespace oat
