#include "qrank/ranksvm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "qrank/error.hpp"
#include "qrank/pairwise.hpp"
#include "qrank/rng.hpp"
#include "qrank/textio.hpp"

namespace qrank::ranksvm {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_options(const SvmOptions& opts) {
  if (!(opts.c > 0.0) || !std::isfinite(opts.c)) throw ConfigError("c must be a positive finite value");
  if (!(opts.tol > 0.0)) throw ConfigError("tol must be positive");
  if (opts.max_iters == 0) throw ConfigError("max_iters must be >= 1");
}

std::vector<DatasetPair> training_pairs(const Dataset& ds) {
  auto pairs = generate_pairs(ds);
  if (pairs.empty()) throw DataError("no discordant pairs: nothing to rank");
  return pairs;
}

const std::vector<double>& features(const Dataset& ds, std::size_t group, std::size_t idx) {
  return ds.groups[group].candidates[idx].features;
}

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("non-finite input to kernel");
}

}  // namespace

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::sigmoid: return "sigmoid";
  }
  return "?";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  if (name == "sigmoid") return KernelKind::sigmoid;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

Kernel Kernel::with_defaults(KernelKind kind, std::size_t dim) {
  return Kernel{kind, dim == 0 ? 1.0 : 1.0 / static_cast<double>(dim), 0.0};
}

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("kernel dimension mismatch");
  check_finite(a);
  check_finite(b);
  switch (k.kind) {
    case KernelKind::linear:
      return dot(a, b);
    case KernelKind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
      }
      return std::exp(-k.gamma * d2);
    }
    case KernelKind::sigmoid:
      return std::tanh(k.gamma * dot(a, b) + k.coef0);
  }
  return 0.0;
}

double linear_objective(const Dataset& ds, std::span<const double> w, double c) {
  const auto pairs = generate_pairs(ds);
  if (pairs.empty()) throw DataError("no discordant pairs: nothing to rank");
  double hinge = 0.0;
  for (const auto& p : pairs) {
    const auto& xu = features(ds, p.group, p.sample.u);
    const auto& xv = features(ds, p.group, p.sample.v);
    hinge += std::max(0.0, 1.0 - (dot(w, xu) - dot(w, xv)));
  }
  return 0.5 * dot(w, w) + c / static_cast<double>(pairs.size()) * hinge;
}

// Dual coordinate descent over pair-difference vectors z_p = x_u - x_v:
//   max_a  sum(a) - 1/2 |sum_p a_p z_p|^2   s.t. 0 <= a_p <= c/P,
// with w = sum_p a_p z_p maintained incrementally.
LinearFit train_linear(const Dataset& ds, const SvmOptions& opts) {
  check_options(opts);
  if (opts.standardize) {
    const auto scaler = Standardizer::fit(ds);
    SvmOptions inner = opts;
    inner.standardize = false;
    auto fit = train_linear(scaler.apply(ds), inner);
    // w.((x - mean) * scale) ranks identically to (w * scale).x
    for (std::size_t j = 0; j < fit.model.w.size(); ++j) fit.model.w[j] *= scaler.scale[j];
    return fit;
  }

  const auto pairs = training_pairs(ds);
  const std::size_t n_pairs = pairs.size();
  const std::size_t d = ds.dim;
  const double upper = opts.c / static_cast<double>(n_pairs);

  std::vector<double> z(n_pairs * d);
  std::vector<double> qdiag(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto& xu = features(ds, pairs[p].group, pairs[p].sample.u);
    const auto& xv = features(ds, pairs[p].group, pairs[p].sample.v);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      z[p * d + j] = xu[j] - xv[j];
      sq += z[p * d + j] * z[p * d + j];
    }
    qdiag[p] = sq;
  }
  auto zrow = [&](std::size_t p) { return std::span<const double>(z.data() + p * d, d); };

  std::vector<double> alpha(n_pairs, 0.0);
  std::vector<double> w(d, 0.0);
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);

  auto primal = [&](std::span<const double> wv) {
    double hinge = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) hinge += std::max(0.0, 1.0 - dot(wv, zrow(p)));
    return 0.5 * dot(wv, wv) + upper * hinge;
  };

  LinearFit fit;
  std::vector<double> best_w = w;
  double best_obj = primal(w);
  fit.state.objective_trace.push_back(best_obj);

  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t p : order) {
      const double grad = dot(w, zrow(p)) - 1.0;
      const double old = alpha[p];
      double next = 0.0;
      if (qdiag[p] > 0.0) {
        next = std::clamp(old - grad / qdiag[p], 0.0, upper);
      } else {
        next = grad < 0.0 ? upper : 0.0;
      }
      const double delta = next - old;
      if (delta == 0.0) continue;
      alpha[p] = next;
      const auto zp = zrow(p);
      for (std::size_t j = 0; j < d; ++j) w[j] += delta * zp[j];
    }
    fit.state.iterations = iter + 1;

    const double obj = primal(w);
    const double dual = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * dot(w, w);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
    }
    fit.state.objective_trace.push_back(best_obj);
    fit.state.dual_trace.push_back(dual);
    fit.state.duality_gap = best_obj - dual;
    if (fit.state.duality_gap <= opts.tol * std::max(best_obj, 1e-12)) {
      fit.state.converged = true;
      break;
    }
  }

  fit.state.slacks.resize(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p)
    fit.state.slacks[p] = std::max(0.0, 1.0 - dot(best_w, zrow(p)));
  fit.model.w = std::move(best_w);
  fit.model.c = opts.c;
  fit.model.objective = best_obj;
  fit.model.converged = fit.state.converged;
  return fit;
}

// Same dual as train_linear with z_p living in the kernel feature space. The
// kernel matrix is cached over the candidates that occur in some pair, and the
// per-candidate outputs f_i = sum_p a_p (K(i,u_p) - K(i,v_p)) are kept current.
KernelFit train_kernel(const Dataset& ds, const Kernel& kernel, const SvmOptions& opts) {
  check_options(opts);
  if (opts.standardize) throw ConfigError("feature standardization is supported for the linear solver only");
  if (kernel.kind != KernelKind::linear && !(kernel.gamma > 0.0))
    throw ConfigError("kernel gamma must be positive");

  const auto pairs = training_pairs(ds);
  const std::size_t n_pairs = pairs.size();
  const double upper = opts.c / static_cast<double>(n_pairs);

  std::unordered_map<std::size_t, std::size_t> slot;  // group * stride + idx -> local
  std::size_t stride = 0;
  for (const auto& g : ds.groups) stride = std::max(stride, g.size());
  std::vector<const std::vector<double>*> points;
  std::vector<std::size_t> pu(n_pairs), pv(n_pairs);
  auto local = [&](std::size_t group, std::size_t idx) {
    const auto key = group * stride + idx;
    auto [it, inserted] = slot.emplace(key, points.size());
    if (inserted) points.push_back(&features(ds, group, idx));
    return it->second;
  };
  for (std::size_t p = 0; p < n_pairs; ++p) {
    pu[p] = local(pairs[p].group, pairs[p].sample.u);
    pv[p] = local(pairs[p].group, pairs[p].sample.v);
  }
  const std::size_t n = points.size();
  if (n > 0 && n > opts.kernel_cache_entries / n) {
    throw DataError("kernel matrix for " + std::to_string(n) + " candidates exceeds the cache budget of " +
                    std::to_string(opts.kernel_cache_entries) + " entries");
  }

  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      kmat[i * n + j] = kmat[j * n + i] = kernel_eval(kernel, *points[i], *points[j]);
  auto k = [&](std::size_t i, std::size_t j) { return kmat[i * n + j]; };

  std::vector<double> qdiag(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p)
    qdiag[p] = std::max(k(pu[p], pu[p]) + k(pv[p], pv[p]) - 2.0 * k(pu[p], pv[p]), 1e-12);

  std::vector<double> alpha(n_pairs, 0.0);
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);

  auto objectives = [&]() {
    double quad = 0.0;
    double hinge = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const double margin = out[pu[p]] - out[pv[p]];
      quad += alpha[p] * margin;
      hinge += std::max(0.0, 1.0 - margin);
    }
    const double sum_alpha = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    return std::pair{0.5 * quad + upper * hinge, sum_alpha - 0.5 * quad};
  };

  KernelFit fit;
  std::vector<double> best_alpha = alpha;
  double best_obj = objectives().first;
  fit.state.objective_trace.push_back(best_obj);

  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t p : order) {
      const double grad = out[pu[p]] - out[pv[p]] - 1.0;
      const double old = alpha[p];
      const double next = std::clamp(old - grad / qdiag[p], 0.0, upper);
      const double delta = next - old;
      if (delta == 0.0) continue;
      alpha[p] = next;
      const double* ru = kmat.data() + pu[p] * n;
      const double* rv = kmat.data() + pv[p] * n;
      for (std::size_t i = 0; i < n; ++i) out[i] += delta * (ru[i] - rv[i]);
    }
    fit.state.iterations = iter + 1;

    const auto [obj, dual] = objectives();
    if (obj < best_obj) {
      best_obj = obj;
      best_alpha = alpha;
    }
    fit.state.objective_trace.push_back(best_obj);
    fit.state.dual_trace.push_back(dual);
    fit.state.duality_gap = best_obj - dual;
    if (std::abs(fit.state.duality_gap) <= opts.tol * std::max(best_obj, 1e-12)) {
      fit.state.converged = true;
      break;
    }
  }

  // Outputs for the best iterate, for the reported slacks.
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    if (best_alpha[p] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += best_alpha[p] * (k(pu[p], i) - k(pv[p], i));
  }
  fit.state.slacks.resize(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p)
    fit.state.slacks[p] = std::max(0.0, 1.0 - (out[pu[p]] - out[pv[p]]));

  fit.model.kernel = kernel;
  fit.model.c = opts.c;
  fit.model.dim = ds.dim;
  fit.model.objective = best_obj;
  fit.model.converged = fit.state.converged;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    if (best_alpha[p] > 0.0)
      fit.model.support.push_back(SupportPair{best_alpha[p], *points[pu[p]], *points[pv[p]]});
  }
  return fit;
}

double score(const LinearModel& m, std::span<const double> x) {
  if (x.size() != m.w.size()) {
    throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                    std::to_string(m.w.size()));
  }
  return dot(m.w, x);
}

double score(const KernelModel& m, std::span<const double> x) {
  if (x.size() != m.dim) {
    throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                    std::to_string(m.dim));
  }
  double s = 0.0;
  for (const auto& sp : m.support)
    s += sp.alpha * (kernel_eval(m.kernel, x, sp.u) - kernel_eval(m.kernel, x, sp.v));
  return s;
}

std::string format_model(const LinearModel& m) {
  std::string out = "ranksvm linear c=" + textio::format_real(m.c) + " dim=" + std::to_string(m.dim()) + "\nw";
  for (double v : m.w) out += ' ' + textio::format_real(v);
  out += '\n';
  return out;
}

std::string format_model(const KernelModel& m) {
  std::string out = "ranksvm " + kernel_name(m.kernel.kind) + " c=" + textio::format_real(m.c) +
                    " dim=" + std::to_string(m.dim) + " gamma=" + textio::format_real(m.kernel.gamma) +
                    " coef0=" + textio::format_real(m.kernel.coef0) + '\n';
  for (const auto& sp : m.support) {
    out += "alpha=" + textio::format_real(sp.alpha) + " u=";
    std::string u;
    textio::append_sparse(u, sp.u);
    out += u.empty() ? "" : u.substr(1);
    out += " v=";
    std::string v;
    textio::append_sparse(v, sp.v);
    out += v.empty() ? "" : v.substr(1);
    out += '\n';
  }
  return out;
}

namespace {

struct Header {
  KernelKind kind;
  double c;
  std::size_t dim;
  double gamma = 1.0;
  double coef0 = 0.0;
};

Header parse_header(std::string_view line) {
  const auto t = textio::split_ws(line);
  if (t.size() < 4 || t[0] != "ranksvm") throw DataError("not a ranksvm model header");
  Header h{parse_kernel(t[1]), 0.0, 0};
  auto c = textio::kv_value(t[2], "c");
  auto dim = textio::kv_value(t[3], "dim");
  auto cv = c ? textio::parse_real(*c) : std::nullopt;
  auto dv = dim ? textio::parse_uint(*dim) : std::nullopt;
  if (!cv || !dv) throw DataError("malformed ranksvm header");
  h.c = *cv;
  h.dim = static_cast<std::size_t>(*dv);
  if (h.kind != KernelKind::linear) {
    if (t.size() != 6) throw DataError("kernel model header needs gamma= and coef0=");
    auto g = textio::kv_value(t[4], "gamma");
    auto c0 = textio::kv_value(t[5], "coef0");
    auto gv = g ? textio::parse_real(*g) : std::nullopt;
    auto c0v = c0 ? textio::parse_real(*c0) : std::nullopt;
    if (!gv || !c0v) throw DataError("malformed kernel parameters");
    h.gamma = *gv;
    h.coef0 = *c0v;
  } else if (t.size() != 4) {
    throw DataError("malformed ranksvm header");
  }
  return h;
}

}  // namespace

LinearModel parse_linear_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.empty()) throw DataError("empty model file");
  const auto h = parse_header(lines[0]);
  if (h.kind != KernelKind::linear) throw DataError("expected a linear ranksvm model");
  if (lines.size() != 2) throw DataError("linear model needs exactly one weight line");
  const auto t = textio::split_ws(lines[1]);
  if (t.empty() || t[0] != "w" || t.size() != h.dim + 1) throw DataError("weight line does not match dim");
  LinearModel m;
  m.c = h.c;
  for (std::size_t j = 1; j < t.size(); ++j) {
    auto v = textio::parse_real(t[j]);
    if (!v) throw DataError("invalid weight '" + std::string(t[j]) + "'");
    m.w.push_back(*v);
  }
  return m;
}

KernelModel parse_kernel_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.empty()) throw DataError("empty model file");
  const auto h = parse_header(lines[0]);
  if (h.kind == KernelKind::linear) throw DataError("expected a kernel ranksvm model");
  KernelModel m;
  m.kernel = Kernel{h.kind, h.gamma, h.coef0};
  m.c = h.c;
  m.dim = h.dim;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto t = textio::split_ws(lines[i]);
    auto a = t.empty() ? std::nullopt : textio::kv_value(t[0], "alpha");
    auto av = a ? textio::parse_real(*a) : std::nullopt;
    if (!av) throw DataError("support line " + std::to_string(i) + ": missing alpha");
    std::size_t vpos = 0;
    for (std::size_t j = 1; j < t.size(); ++j)
      if (t[j].substr(0, 2) == "v=") vpos = j;
    if (t.size() < 3 || t[1].substr(0, 2) != "u=" || vpos == 0)
      throw DataError("support line " + std::to_string(i) + ": expected u= and v=");
    std::vector<std::string_view> u, v;
    if (t[1].size() > 2) u.push_back(t[1].substr(2));
    for (std::size_t j = 2; j < vpos; ++j) u.push_back(t[j]);
    if (t[vpos].size() > 2) v.push_back(t[vpos].substr(2));
    for (std::size_t j = vpos + 1; j < t.size(); ++j) v.push_back(t[j]);
    m.support.push_back(SupportPair{*av, textio::parse_sparse(u, m.dim), textio::parse_sparse(v, m.dim)});
  }
  return m;
}

}  // namespace qrank::ranksvm
