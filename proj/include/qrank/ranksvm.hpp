#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"

namespace qrank::ranksvm {

enum class KernelKind { linear, rbf, sigmoid };

std::string kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

struct Kernel {
  KernelKind kind = KernelKind::linear;
  double gamma = 1.0;  // rbf and sigmoid
  double coef0 = 0.0;  // sigmoid

  /// gamma = 1/dim, coef0 = 0.
  static Kernel with_defaults(KernelKind kind, std::size_t dim);
  bool operator==(const Kernel&) const = default;
};

/// linear: a.b, rbf: exp(-gamma |a-b|^2), sigmoid: tanh(gamma a.b + coef0).
double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b);

struct SvmOptions {
  /// Trade-off parameter. The hinge term is weighted c / P for P training pairs.
  double c = 3.0;
  /// Stop when (primal - dual) <= tol * max(primal, 1e-12).
  double tol = 1e-6;
  std::size_t max_iters = 1000;  // epochs over the pair set
  std::uint64_t seed = 42;
  /// Standardize features before training (linear kernel only); the stored
  /// weights are mapped back so the model scores raw features.
  bool standardize = false;
  /// Upper bound on cached candidate-kernel entries for train_kernel.
  std::size_t kernel_cache_entries = 25'000'000;
};

/// Optimizer diagnostics.
struct TrainState {
  std::vector<double> slacks;  // max(0, 1 - margin) per training pair
  std::size_t iterations = 0;
  /// Objective of the best iterate at each checkpoint (entry 0 = start).
  std::vector<double> objective_trace;
  /// Dual objective after each epoch; non-decreasing for convex kernels.
  std::vector<double> dual_trace;
  double duality_gap = 0.0;
  bool converged = false;
};

/// f(x) = w.x
struct LinearModel {
  std::vector<double> w;
  double c = 0.0;
  double objective = 0.0;
  bool converged = true;

  std::size_t dim() const { return w.size(); }
};

struct SupportPair {
  double alpha = 0.0;
  std::vector<double> u;
  std::vector<double> v;
};

/// f(x) = sum_p alpha_p (k(x, u_p) - k(x, v_p))
struct KernelModel {
  Kernel kernel;
  double c = 0.0;
  std::size_t dim = 0;
  std::vector<SupportPair> support;
  double objective = 0.0;
  bool converged = true;
};

struct LinearFit {
  LinearModel model;
  TrainState state;
};

struct KernelFit {
  KernelModel model;
  TrainState state;
};

/// Primal objective 1/2 |w|^2 + (c/P) sum_p max(0, 1 - w.(x_u - x_v)).
double linear_objective(const Dataset& ds, std::span<const double> w, double c);

LinearFit train_linear(const Dataset& ds, const SvmOptions& opts);
KernelFit train_kernel(const Dataset& ds, const Kernel& kernel, const SvmOptions& opts);

double score(const LinearModel& m, std::span<const double> x);
double score(const KernelModel& m, std::span<const double> x);

std::string format_model(const LinearModel& m);
std::string format_model(const KernelModel& m);
LinearModel parse_linear_model(std::string_view text);
KernelModel parse_kernel_model(std::string_view text);

}  // namespace qrank::ranksvm
