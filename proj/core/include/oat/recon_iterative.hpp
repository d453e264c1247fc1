// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oat/system_operator.hpp"

namespace oat {

/// Quadratic smoothness penalty: squared second differences along each
/// axis, neighbor indices clamped at the volume faces (constant images are
/// penalty-free). Requires every grid dimension >= 3.
double laplacian_penalty(const CoefficientVector& theta);
std::vector<double> laplacian_penalty_gradient(const CoefficientVector& theta);

/// Total variation with one-sided backward differences, clamped at faces.
double tv_norm(const CoefficientVector& theta);

/// prox of mu*TV (plus optional nonnegativity) by dual gradient projection
/// with momentum, fixed iteration count.
CoefficientVector prox_tv(const CoefficientVector& v, double mu,
                          int inner_iters, bool nonneg);

struct SolverTraceRow {
  int iter = 0;
  double fidelity = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

struct SolveResult {
  CoefficientVector theta;
  std::vector<SolverTraceRow> trace;
  int iterations = 0;
};

struct PlsQConfig {
  double alpha = 0.0;
  int max_iters = 50;
  double rel_tol = 1e-4;
  std::optional<CoefficientVector> init; // zero start when absent
  int restart_every = 50;
};

struct PlsTvConfig {
  double lambda_tv = 0.0;
  int max_iters = 50;
  int inner_prox_iters = 20;
  bool nonneg = true;
  /// Lipschitz constant of the fidelity gradient; estimated by power
  /// iteration when absent.
  std::optional<double> lipschitz;
  int power_iters = 30;
  double power_safety = 1.05;
  std::uint64_t power_seed = 7;
  /// Record per-iteration cost (adds one forward application per
  /// iteration); the returned iterate is then the best one visited.
  bool trace_cost = true;
};

/// Penalized least squares with the quadratic smoothness penalty, solved by
/// Fletcher-Reeves conjugate gradients with exact line search. The cost
/// trace is nonincreasing.
SolveResult solve_plsq(const FrequencyData& data, const SystemOperator& op,
                       const PlsQConfig& cfg);

/// Penalized least squares with the TV penalty and nonnegativity, solved by
/// FISTA with the dual-projection TV prox.
SolveResult solve_plstv(const FrequencyData& data, const SystemOperator& op,
                        const PlsTvConfig& cfg);

/// Largest eigenvalue of adjoint(apply(.)) by power iteration; the fidelity
/// gradient Lipschitz constant is twice this, times the safety factor.
double estimate_fidelity_lipschitz(const SystemOperator& op, int iters = 30,
                                   double safety = 1.05,
                                   std::uint64_t seed = 7);

} // namespace oat
