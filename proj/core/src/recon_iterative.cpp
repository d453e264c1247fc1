// SPDX-License-Identifier: Apache-2.0
#include "oat/recon_iterative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oat/errors.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {

void require_dims_at_least(const ImageGrid& g, int min_dim) {
  if (g.nx < min_dim || g.ny < min_dim || g.nz < min_dim)
    throw ShapeError("grid too small for the smoothness penalty");
}

// Iterates all 1-D lines of the volume along one axis.
template <typename Fn>
void for_each_line(const ImageGrid& g, int axis, Fn&& fn) {
  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = static_cast<std::size_t>(g.nx) * g.ny;
  if (axis == 0) {
    for (int iz = 0; iz < g.nz; ++iz)
      for (int iy = 0; iy < g.ny; ++iy)
        fn(static_cast<std::size_t>(iz) * sz + iy * sy, sx, g.nx);
  } else if (axis == 1) {
    for (int iz = 0; iz < g.nz; ++iz)
      for (int ix = 0; ix < g.nx; ++ix)
        fn(static_cast<std::size_t>(iz) * sz + ix, sy, g.ny);
  } else {
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix)
        fn(static_cast<std::size_t>(iy) * sy + ix, sz, g.nz);
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

double laplacian_penalty(const CoefficientVector& theta) {
  require_dims_at_least(theta.grid, 3);
  const double* x = theta.values.data();
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    for_each_line(theta.grid, axis, [&](std::size_t base, std::size_t stride,
                                        int len) {
      for (int i = 0; i < len; ++i) {
        const int prev = std::max(i - 1, 0);
        const int next = std::min(i + 1, len - 1);
        const double t = 2.0 * x[base + i * stride] - x[base + prev * stride] -
                         x[base + next * stride];
        total += t * t;
      }
    });
  }
  return total;
}

std::vector<double> laplacian_penalty_gradient(const CoefficientVector& theta) {
  require_dims_at_least(theta.grid, 3);
  const double* x = theta.values.data();
  std::vector<double> grad(theta.size(), 0.0);
  std::vector<double> t;
  for (int axis = 0; axis < 3; ++axis) {
    for_each_line(theta.grid, axis, [&](std::size_t base, std::size_t stride,
                                        int len) {
      t.resize(len);
      for (int i = 0; i < len; ++i) {
        const int prev = std::max(i - 1, 0);
        const int next = std::min(i + 1, len - 1);
        t[i] = 2.0 * x[base + i * stride] - x[base + prev * stride] -
               x[base + next * stride];
      }
      // adjoint of the clamped second difference
      grad[base] += 2.0 * (t[0] - t[1]);
      for (int i = 1; i < len - 1; ++i)
        grad[base + i * stride] += 2.0 * (2.0 * t[i] - t[i - 1] - t[i + 1]);
      grad[base + (len - 1) * stride] += 2.0 * (t[len - 1] - t[len - 2]);
    });
  }
  return grad;
}

double tv_norm(const CoefficientVector& theta) {
  const ImageGrid& g = theta.grid;
  if (g.nx < 2 && g.ny < 2 && g.nz < 2) return 0.0;
  const double* x = theta.values.data();
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;
  double total = 0.0;
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (int iz = 0; iz < g.nz; ++iz) {
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        const std::size_t n = iz * sz + iy * sy + ix;
        const double dx = ix > 0 ? x[n] - x[n - 1] : 0.0;
        const double dy = iy > 0 ? x[n] - x[n - sy] : 0.0;
        const double dz = iz > 0 ? x[n] - x[n - sz] : 0.0;
        total += std::sqrt(dx * dx + dy * dy + dz * dz);
      }
    }
  }
  return total;
}

namespace {

// Negative divergence: adjoint of the backward-difference stack used by
// tv_norm and prox_tv.
void apply_div_transpose(const ImageGrid& g, const std::vector<double>& px,
                         const std::vector<double>& py,
                         const std::vector<double>& pz,
                         std::vector<double>& out) {
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;
#pragma omp parallel for schedule(static)
  for (int iz = 0; iz < g.nz; ++iz) {
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        const std::size_t n = iz * sz + iy * sy + ix;
        double v = 0.0;
        if (ix > 0) v += px[n];
        if (ix + 1 < g.nx) v -= px[n + 1];
        if (iy > 0) v += py[n];
        if (iy + 1 < g.ny) v -= py[n + sy];
        if (iz > 0) v += pz[n];
        if (iz + 1 < g.nz) v -= pz[n + sz];
        out[n] = v;
      }
    }
  }
}

} // namespace

CoefficientVector prox_tv(const CoefficientVector& v, double mu,
                          int inner_iters, bool nonneg) {
  if (mu < 0.0) throw ConfigError("prox_tv: mu must be >= 0");
  if (inner_iters < 1) throw ConfigError("prox_tv: need >= 1 inner iteration");
  const ImageGrid& g = v.grid;
  const std::size_t N = v.size();

  CoefficientVector x = v;
  auto clamp_x = [&]() {
    if (!nonneg) return;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) x.values[i] = std::max(x.values[i], 0.0);
  };
  if (mu == 0.0) {
    clamp_x();
    return x;
  }

  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;
  std::vector<double> px(N, 0.0), py(N, 0.0), pz(N, 0.0);
  std::vector<double> rx = px, ry = py, rz = pz; // momentum point
  std::vector<double> divt(N, 0.0);
  const double step = 1.0 / (12.0 * mu);
  double t = 1.0;

  for (int it = 0; it < inner_iters; ++it) {
    // primal estimate at the momentum point
    apply_div_transpose(g, rx, ry, rz, divt);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) {
      double xv = v.values[i] - mu * divt[i];
      if (nonneg && xv < 0.0) xv = 0.0;
      x.values[i] = xv;
    }
    // dual ascent + ball projection
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double m = (t - 1.0) / tn;
    t = tn;
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < g.nz; ++iz) {
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
          const std::size_t n = iz * sz + iy * sy + ix;
          const double gx = ix > 0 ? x.values[n] - x.values[n - 1] : 0.0;
          const double gy = iy > 0 ? x.values[n] - x.values[n - sy] : 0.0;
          const double gz = iz > 0 ? x.values[n] - x.values[n - sz] : 0.0;
          double nx = rx[n] + step * gx;
          double ny = ry[n] + step * gy;
          double nz = rz[n] + step * gz;
          const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
          if (norm > 1.0) {
            nx /= norm;
            ny /= norm;
            nz /= norm;
          }
          // FISTA momentum on the dual variables
          rx[n] = nx + m * (nx - px[n]);
          ry[n] = ny + m * (ny - py[n]);
          rz[n] = nz + m * (nz - pz[n]);
          px[n] = nx;
          py[n] = ny;
          pz[n] = nz;
        }
      }
    }
  }

  apply_div_transpose(g, px, py, pz, divt);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    double xv = v.values[i] - mu * divt[i];
    if (nonneg && xv < 0.0) xv = 0.0;
    x.values[i] = xv;
  }
  return x;
}

double estimate_fidelity_lipschitz(const SystemOperator& op, int iters,
                                   double safety, std::uint64_t seed) {
  CoefficientVector v = CoefficientVector::zeros(op.grid());
  for (std::size_t i = 0; i < v.size(); ++i)
    v.values[i] = rng::normal_at(seed, i);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nv = std::sqrt(dot(v.values, v.values));
    if (nv == 0.0) throw NumericalError("power iteration collapsed to zero");
    for (auto& x : v.values) x /= nv;
    CoefficientVector w = op.apply_adjoint(op.apply(v));
    lambda = dot(v.values, w.values); // Rayleigh quotient
    v = std::move(w);
  }
  if (!finite(lambda) || lambda <= 0.0)
    throw NumericalError("power iteration failed");
  return 2.0 * lambda * safety;
}

SolveResult solve_plsq(const FrequencyData& data, const SystemOperator& op,
                       const PlsQConfig& cfg) {
  if (cfg.alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (data.size() != op.data_size())
    throw ShapeError("solve_plsq: data does not match the operator");
  const bool penalized = cfg.alpha > 0.0;
  if (penalized) require_dims_at_least(op.grid(), 3);

  CoefficientVector theta = cfg.init ? *cfg.init
                                     : CoefficientVector::zeros(op.grid());
  if (theta.size() != op.num_voxels())
    throw ShapeError("solve_plsq: initialization does not match the grid");

  // residual r = data - H theta, kept incrementally
  FrequencyData r = data;
  if (cfg.init) {
    const FrequencyData ht = op.apply(theta);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] -= ht.values[i];
  }

  auto cost_parts = [&](double& fid, double& pen) {
    fid = weighted_inner(r, r);
    pen = penalized ? cfg.alpha * laplacian_penalty(theta) : 0.0;
  };

  std::vector<double> grad(op.num_voxels());
  auto compute_grad = [&]() {
    const CoefficientVector adj = op.apply_adjoint(r);
    if (penalized) {
      const std::vector<double> pg = laplacian_penalty_gradient(theta);
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = -2.0 * adj.values[i] + cfg.alpha * pg[i];
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = -2.0 * adj.values[i];
    }
  };

  SolveResult res;
  double fid = 0.0, pen = 0.0;
  cost_parts(fid, pen);
  double cost = fid + pen;
  if (!finite(cost)) throw NumericalError("solve_plsq: non-finite cost");
  res.trace.push_back({0, fid, pen, cost});

  compute_grad();
  std::vector<double> dir(grad.size());
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -grad[i];
  double g_dot_g = dot(grad, grad);

  CoefficientVector d_img = CoefficientVector::zeros(op.grid());
  for (int k = 1; k <= cfg.max_iters; ++k) {
    if (g_dot_g == 0.0) break; // stationary point

    double g_dot_d = dot(grad, dir);
    if (g_dot_d >= 0.0) { // lost conjugacy, restart on steepest descent
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -grad[i];
      g_dot_d = -g_dot_g;
    }

    d_img.values = dir;
    const FrequencyData hd = op.apply(d_img);
    const double curv_fid = weighted_inner(hd, hd);
    double curv = curv_fid;
    std::vector<double> pg_d;
    if (penalized) {
      pg_d = laplacian_penalty_gradient(d_img);
      curv += 0.5 * cfg.alpha * dot(pg_d, dir);
    }
    if (curv <= 0.0) break; // flat direction, nothing to gain

    const double step = -0.5 * g_dot_d / curv;
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta.values[i] += step * dir[i];
    for (std::size_t i = 0; i < r.size(); ++i)
      r.values[i] -= step * hd.values[i];

    // gradient update: g += step * (2 adj(Hd) + alpha * lapgrad(d))
    const CoefficientVector adj_hd = op.apply_adjoint(hd);
    if (penalized) {
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] += step * (2.0 * adj_hd.values[i] + cfg.alpha * pg_d[i]);
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] += step * 2.0 * adj_hd.values[i];
    }

    cost_parts(fid, pen);
    const double new_cost = fid + pen;
    if (!finite(new_cost)) throw NumericalError("solve_plsq: non-finite cost");
    res.trace.push_back({k, fid, pen, new_cost});
    res.iterations = k;

    const double g_dot_g_new = dot(grad, grad);
    const double beta =
        (k % cfg.restart_every == 0) ? 0.0 : g_dot_g_new / g_dot_g;
    for (std::size_t i = 0; i < dir.size(); ++i)
      dir[i] = -grad[i] + beta * dir[i];
    g_dot_g = g_dot_g_new;

    const double denom = std::max(std::abs(cost), 1e-300);
    const bool converged = std::abs(cost - new_cost) / denom < cfg.rel_tol;
    cost = new_cost;
    if (converged) break;
  }

  res.theta = std::move(theta);
  return res;
}

SolveResult solve_plstv(const FrequencyData& data, const SystemOperator& op,
                        const PlsTvConfig& cfg) {
  if (cfg.lambda_tv < 0.0) throw ConfigError("lambda_tv must be >= 0");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (cfg.inner_prox_iters < 1)
    throw ConfigError("inner prox iterations must be >= 1");
  if (data.size() != op.data_size())
    throw ShapeError("solve_plstv: data does not match the operator");

  const double lip = cfg.lipschitz
                         ? *cfg.lipschitz
                         : estimate_fidelity_lipschitz(
                               op, cfg.power_iters, cfg.power_safety,
                               cfg.power_seed);
  if (!(lip > 0.0)) throw ConfigError("Lipschitz constant must be > 0");
  const double step = 1.0 / lip;
  const double mu = cfg.lambda_tv / lip;

  const std::size_t N = op.num_voxels();
  CoefficientVector x = CoefficientVector::zeros(op.grid());
  CoefficientVector x_prev = x;
  CoefficientVector y = x;
  double t = 1.0;

  auto cost_of = [&](const CoefficientVector& img, double& fid, double& pen) {
    FrequencyData r = op.apply(img);
    for (std::size_t i = 0; i < r.size(); ++i)
      r.values[i] = data.values[i] - r.values[i];
    fid = weighted_inner(r, r);
    pen = cfg.lambda_tv > 0.0 ? cfg.lambda_tv * tv_norm(img) : 0.0;
  };

  SolveResult res;
  CoefficientVector best = x;
  double best_cost = std::numeric_limits<double>::infinity();
  if (cfg.trace_cost) {
    double fid = 0.0, pen = 0.0;
    cost_of(x, fid, pen);
    best_cost = fid + pen;
    res.trace.push_back({0, fid, pen, best_cost});
  }

  for (int k = 1; k <= cfg.max_iters; ++k) {
    // gradient step on the fidelity at the momentum point
    FrequencyData r = op.apply(y);
    for (std::size_t i = 0; i < r.size(); ++i)
      r.values[i] = data.values[i] - r.values[i];
    const CoefficientVector adj = op.apply_adjoint(r);
    CoefficientVector z = y;
    for (std::size_t i = 0; i < N; ++i)
      z.values[i] += step * 2.0 * adj.values[i];

    x = (cfg.lambda_tv > 0.0 || cfg.nonneg)
            ? prox_tv(z, mu, cfg.inner_prox_iters, cfg.nonneg)
            : std::move(z);

    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / tn;
    t = tn;
    for (std::size_t i = 0; i < N; ++i)
      y.values[i] = x.values[i] + momentum * (x.values[i] - x_prev.values[i]);
    x_prev = x;
    res.iterations = k;

    if (cfg.trace_cost) {
      double fid = 0.0, pen = 0.0;
      cost_of(x, fid, pen);
      const double total = fid + pen;
      if (!finite(total)) throw NumericalError("solve_plstv: non-finite cost");
      res.trace.push_back({k, fid, pen, total});
      if (total <= best_cost) {
        best_cost = total;
        best = x;
      }
    }
  }

  res.theta = cfg.trace_cost ? std::move(best) : std::move(x);
  return res;
}

} // namespace oat
