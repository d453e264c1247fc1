// SPDX-License-Identifier: Apache-2.0
#include "oat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oat/errors.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

constexpr double kFwhmOfSigma = 2.3548200450309493; // 2 sqrt(2 ln 2)

struct Patch {
  int half = 0;
  const double* data = nullptr;
  double at(int n1, int n2) const {
    return data[(n2 + half) * (2 * half + 1) + (n1 + half)];
  }
};

} // namespace

GaussianFit gaussian_fit_fwhm(std::span<const double> patch, int half_width) {
  const int side = 2 * half_width + 1;
  if (half_width < 1 ||
      patch.size() != static_cast<std::size_t>(side) * side)
    throw ShapeError("gaussian_fit_fwhm: patch size does not match half width");

  GaussianFit fit;
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : patch) peak = std::max(peak, v);
  if (!(peak > 0.0)) return fit; // nothing to fit

  const Patch P{half_width, patch.data()};

  // log-linear seed: log v = log peak - u/(2 sigma^2), u = n1^2+n2^2,
  // restricted to samples above a fraction of the peak
  double su = 0.0, sv = 0.0, suu = 0.0, suv = 0.0;
  int count = 0;
  for (int n2 = -half_width; n2 <= half_width; ++n2) {
    for (int n1 = -half_width; n1 <= half_width; ++n1) {
      const double v = P.at(n1, n2);
      if (v < 0.05 * peak) continue;
      const double u = n1 * n1 + n2 * n2;
      const double lv = std::log(v);
      su += u; sv += lv; suu += u * u; suv += u * lv;
      ++count;
    }
  }
  double sigma = 1.0;
  double amp = peak;
  if (count >= 3) {
    const double det = count * suu - su * su;
    if (det > 0.0) {
      const double slope = (count * suv - su * sv) / det;
      const double intercept = (sv * suu - su * suv) / det;
      if (slope < 0.0) {
        sigma = std::sqrt(-0.5 / slope);
        amp = std::exp(intercept);
      }
    }
  }

  // Gauss-Newton on (amp, sigma)
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, jtr0 = 0.0, jtr1 = 0.0;
    for (int n2 = -half_width; n2 <= half_width; ++n2) {
      for (int n1 = -half_width; n1 <= half_width; ++n1) {
        const double u = n1 * n1 + n2 * n2;
        const double e = std::exp(-0.5 * u / (sigma * sigma));
        const double model = amp * e;
        const double resid = model - P.at(n1, n2);
        const double ja = e;
        const double js = amp * e * u / (sigma * sigma * sigma);
        jtj00 += ja * ja; jtj01 += ja * js; jtj11 += js * js;
        jtr0 += ja * resid; jtr1 += js * resid;
      }
    }
    const double det = jtj00 * jtj11 - jtj01 * jtj01;
    if (det == 0.0) break;
    const double da = -(jtj11 * jtr0 - jtj01 * jtr1) / det;
    const double ds = -(jtj00 * jtr1 - jtj01 * jtr0) / det;
    amp += da;
    sigma += ds;
    if (!(sigma > 1e-6) || !std::isfinite(sigma) || !std::isfinite(amp)) break;
    if (std::abs(da) < 1e-10 * std::max(1.0, std::abs(amp)) &&
        std::abs(ds) < 1e-10 * std::max(1.0, sigma)) {
      converged = true;
      break;
    }
  }

  double ss = 0.0;
  for (int n2 = -half_width; n2 <= half_width; ++n2) {
    for (int n1 = -half_width; n1 <= half_width; ++n1) {
      const double u = n1 * n1 + n2 * n2;
      const double resid = amp * std::exp(-0.5 * u / (sigma * sigma)) -
                           P.at(n1, n2);
      ss += resid * resid;
    }
  }

  fit.peak = amp;
  fit.sigma_px = sigma;
  fit.fwhm_px = kFwhmOfSigma * sigma;
  fit.rms_residual = std::sqrt(ss / (static_cast<double>(side) * side));
  fit.converged = converged && amp > 0.0 && std::isfinite(fit.fwhm_px);
  return fit;
}

RoiStats roi_stats(const CoefficientVector& theta, const RoiSpec& roi) {
  if (roi.signal.empty() || roi.background.empty())
    throw ShapeError("roi_stats: both ROIs must be nonempty");
  const std::size_t N = theta.size();
  RoiStats st;
  for (std::size_t n : roi.signal) {
    if (n >= N) throw ShapeError("roi_stats: signal index out of range");
    st.signal_mean += theta.values[n];
  }
  st.signal_mean /= static_cast<double>(roi.signal.size());
  for (std::size_t n : roi.background) {
    if (n >= N) throw ShapeError("roi_stats: background index out of range");
    st.background_mean += theta.values[n];
  }
  st.background_mean /= static_cast<double>(roi.background.size());
  if (roi.background.size() > 1) {
    double ss = 0.0;
    for (std::size_t n : roi.background) {
      const double d = theta.values[n] - st.background_mean;
      ss += d * d;
    }
    st.sigma_b = std::sqrt(ss / static_cast<double>(roi.background.size() - 1));
  }
  return st;
}

double cnr(const RoiStats& stats) {
  if (stats.sigma_b == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(stats.signal_mean - stats.background_mean) / stats.sigma_b;
}

namespace {

struct SliceCenter {
  int ix = 0, iy = 0;
};

// argmax within the recenter radius around the nominal center
SliceCenter recenter(const CoefficientVector& theta, const StructureSpec& s,
                     int iz) {
  const ImageGrid& g = theta.grid;
  const int cx = static_cast<int>(std::lround(
      (s.center_x_mm - g.center_mm.x) / g.spacing_mm + 0.5 * (g.nx - 1)));
  const int cy = static_cast<int>(std::lround(
      (s.center_y_mm - g.center_mm.y) / g.spacing_mm + 0.5 * (g.ny - 1)));
  SliceCenter best{std::clamp(cx, 0, g.nx - 1), std::clamp(cy, 0, g.ny - 1)};
  double best_v = -std::numeric_limits<double>::infinity();
  for (int dy = -s.recenter_radius_px; dy <= s.recenter_radius_px; ++dy) {
    for (int dx = -s.recenter_radius_px; dx <= s.recenter_radius_px; ++dx) {
      const int ix = cx + dx, iy = cy + dy;
      if (ix < 0 || ix >= g.nx || iy < 0 || iy >= g.ny) continue;
      const double v = theta.values[g.index(ix, iy, iz)];
      if (v > best_v) {
        best_v = v;
        best = {ix, iy};
      }
    }
  }
  return best;
}

std::pair<int, int> slice_range(const ImageGrid& g, const StructureSpec& s) {
  int z0 = static_cast<int>(std::ceil(
      (s.z_min_mm - g.center_mm.z) / g.spacing_mm + 0.5 * (g.nz - 1)));
  int z1 = static_cast<int>(std::floor(
      (s.z_max_mm - g.center_mm.z) / g.spacing_mm + 0.5 * (g.nz - 1)));
  z0 = std::clamp(z0, 0, g.nz - 1);
  z1 = std::clamp(z1, 0, g.nz - 1);
  if (z1 < z0) throw ConfigError("structure z-range misses the grid");
  return {z0, z1};
}

} // namespace

RoiSpec build_roi(const CoefficientVector& theta, const StructureSpec& spec) {
  const ImageGrid& g = theta.grid;
  const auto [z0, z1] = slice_range(g, spec);
  RoiSpec roi;

  const double excl2 = spec.broi_exclude_mm * spec.broi_exclude_mm;
  const double rad = spec.broi_radius_mm;
  for (int iz = z0; iz <= z1; ++iz) {
    const SliceCenter c = recenter(theta, spec, iz);
    roi.signal.push_back(g.index(c.ix, c.iy, iz));
    const Vec3 cpos = g.voxel_center(c.ix, c.iy, iz);

    // seeded rejection sampling in the ring around the hot spot
    std::uint64_t ctr = static_cast<std::uint64_t>(iz) << 32;
    int placed = 0;
    int guard = 0;
    while (placed < spec.broi_per_slice && guard < 100000) {
      const double ux = 2.0 * rng::uniform_at(spec.broi_seed, ctr++) - 1.0;
      const double uy = 2.0 * rng::uniform_at(spec.broi_seed, ctr++) - 1.0;
      ++guard;
      const double dx = ux * rad, dy = uy * rad;
      const double r2 = dx * dx + dy * dy;
      if (r2 > rad * rad || r2 <= excl2) continue;
      const int ix = static_cast<int>(std::lround(
          (cpos.x + dx - g.center_mm.x) / g.spacing_mm + 0.5 * (g.nx - 1)));
      const int iy = static_cast<int>(std::lround(
          (cpos.y + dy - g.center_mm.y) / g.spacing_mm + 0.5 * (g.ny - 1)));
      if (ix < 0 || ix >= g.nx || iy < 0 || iy >= g.ny) continue;
      const std::size_t n = g.index(ix, iy, iz);
      if (n == roi.signal.back()) continue;
      roi.background.push_back(n);
      ++placed;
    }
    if (placed < spec.broi_per_slice)
      throw ConfigError("b-ROI sampling failed: ring does not fit the grid");
  }
  return roi;
}

StructureResolution fwhm_along_structure(const CoefficientVector& theta,
                                         const StructureSpec& spec) {
  const ImageGrid& g = theta.grid;
  const auto [z0, z1] = slice_range(g, spec);
  const int hw = spec.patch_half_px;
  const int side = 2 * hw + 1;
  std::vector<double> patch(static_cast<std::size_t>(side) * side);

  StructureResolution out;
  double sum = 0.0;
  for (int iz = z0; iz <= z1; ++iz) {
    const SliceCenter c = recenter(theta, spec, iz);
    if (c.ix - hw < 0 || c.ix + hw >= g.nx || c.iy - hw < 0 ||
        c.iy + hw >= g.ny)
      throw ConfigError("fit patch exceeds the grid");
    for (int n2 = -hw; n2 <= hw; ++n2)
      for (int n1 = -hw; n1 <= hw; ++n1)
        patch[(n2 + hw) * side + (n1 + hw)] =
            theta.values[g.index(c.ix + n1, c.iy + n2, iz)];
    const GaussianFit fit = gaussian_fit_fwhm(patch, hw);
    if (fit.converged) {
      sum += fit.fwhm_px * g.spacing_mm;
      ++out.slices_used;
    } else {
      ++out.slices_failed;
    }
  }
  if (out.slices_used > 0) out.mean_fwhm_mm = sum / out.slices_used;
  return out;
}

std::vector<TradeoffPoint> sweep_tradeoff(
    const std::function<CoefficientVector(double)>& reconstruct,
    const std::vector<double>& reg_values, const StructureSpec& spec) {
  if (reg_values.size() < 2)
    throw ConfigError("sweep needs at least two regularization values");

  std::vector<TradeoffPoint> points;
  points.reserve(reg_values.size());
  for (double reg : reg_values) {
    const CoefficientVector vol = reconstruct(reg);
    const RoiSpec roi = build_roi(vol, spec);
    const RoiStats st = roi_stats(vol, roi);
    const StructureResolution res = fwhm_along_structure(vol, spec);
    TradeoffPoint p;
    p.reg_param = reg;
    p.mean_fwhm_mm = res.mean_fwhm_mm;
    p.sigma_b = st.sigma_b;
    p.signal_mean = st.signal_mean;
    p.cnr = cnr(st);
    p.fit_ok = res.slices_used > 0 && res.slices_failed == 0;
    points.push_back(p);
  }
  return points;
}

std::string tradeoff_csv(const std::vector<TradeoffPoint>& points) {
  std::ostringstream os;
  os.precision(12);
  os << "reg_param,fwhm_mm,sigma_b,signal_mean,cnr\n";
  for (const auto& p : points)
    os << p.reg_param << ',' << p.mean_fwhm_mm << ',' << p.sigma_b << ','
       << p.signal_mean << ',' << p.cnr << '\n';
  return os.str();
}

} // namespace oat
