#include "entlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "entlab/parallel.hpp"

namespace entlab {

namespace {

struct Moments {
  double n = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  void add(double x, double y) {
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  double var_x() const { return std::max(0.0, sxx / n - (sx / n) * (sx / n)); }
  double var_y() const { return std::max(0.0, syy / n - (sy / n) * (sy / n)); }
  double cov() const { return sxy / n - (sx / n) * (sy / n); }
};

double categorical_kl_exact(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    if (q[j] <= 0.0) return INFINITY;
    kl += p[j] * std::log(p[j] / q[j]);
  }
  return std::max(0.0, kl);
}

}  // namespace

VarianceCheck group_variance_check(int n, const std::function<double(Rng&)>& sampler, long trials,
                                   std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("group size must be >= 2");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  Rng rng(seed);
  Moments a;
  Moments r;
  std::vector<double> rewards(static_cast<std::size_t>(n));
  for (long k = 0; k < trials; ++k) {
    for (auto& x : rewards) x = sampler(rng);
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    for (double x : rewards) {
      a.add(x - mean, 0.0);
      r.add(x, 0.0);
    }
  }
  VarianceCheck out;
  out.n = n;
  out.trials = trials;
  out.var_a = a.var_x();
  out.var_r = r.var_x();
  out.expected_ratio = 1.0 - 1.0 / n;
  out.ratio = out.var_r > 0.0 ? out.var_a / out.var_r : 0.0;
  out.rel_error = out.var_r > 0.0 ? std::abs(out.ratio - out.expected_ratio) / out.expected_ratio : 0.0;
  return out;
}

InflationCheck kl_penalty_inflation_check(int n, double kappa,
                                          const std::function<std::pair<double, double>(Rng&)>& joint,
                                          long trials, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("group size must be >= 2");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  Rng rng(seed);
  Moments adv;  // x = A, y = A'
  Moments sk;   // x = S, y = K
  std::vector<std::pair<double, double>> draws(static_cast<std::size_t>(n));
  for (long k = 0; k < trials; ++k) {
    double ms = 0.0;
    double mr = 0.0;
    for (auto& d : draws) {
      d = joint(rng);
      ms += d.first;
      mr += d.first - kappa * d.second;
    }
    ms /= n;
    mr /= n;
    for (const auto& [s, kk] : draws) {
      adv.add(s - ms, (s - kappa * kk) - mr);
      sk.add(s, kk);
    }
  }
  InflationCheck out;
  out.n = n;
  out.kappa = kappa;
  out.trials = trials;
  out.var_a = adv.var_x();
  out.var_a_kl = adv.var_y();
  out.diff = out.var_a_kl - out.var_a;
  out.sigma_k2 = sk.var_y();
  out.cov_sk = sk.cov();
  out.predicted = (1.0 - 1.0 / n) * (kappa * kappa * out.sigma_k2 - 2.0 * kappa * out.cov_sk);
  out.rel_error = out.predicted != 0.0 ? std::abs(out.diff - out.predicted) / std::abs(out.predicted)
                                       : std::abs(out.diff);
  return out;
}

void TwoStateProcess::validate() const {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0, 1]");
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("h must lie in (0, 1]");
  if (!(entry >= 0.0 && entry < 1.0)) throw std::invalid_argument("entry probability must lie in [0, 1)");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
}

std::vector<RenewalSample> renewal_simulate(const TwoStateProcess& p, long episodes, std::uint64_t seed,
                                            int threads) {
  p.validate();
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  std::vector<RenewalSample> out(static_cast<std::size_t>(episodes));
  parallel_for(out.size(), threads, [&](std::size_t e) {
    Rng rng(derive_seed(seed, e));
    RenewalSample s;
    bool reasoning = false;
    for (;;) {
      ++s.length;
      if (reasoning) {
        ++s.reasoning;
        if (!rng.bernoulli(p.alpha)) ++s.nhe;
        if (rng.bernoulli(p.q)) reasoning = false;
      } else {
        if (rng.bernoulli(p.beta)) ++s.nhe;
        if (rng.bernoulli(p.h)) break;
        if (rng.bernoulli(p.entry)) reasoning = true;
      }
    }
    out[e] = s;
  });
  return out;
}

MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs two equal-length series");
  Moments m;
  for (std::size_t i = 0; i < x.size(); ++i) m.add(x[i], y[i]);
  LinearFit f;
  const double vx = m.var_x();
  if (vx <= 0.0) throw std::invalid_argument("linear_fit needs variation in x");
  f.slope = m.cov() / vx;
  f.intercept = m.sy / m.n - f.slope * m.sx / m.n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  const double my = m.sy / m.n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

double HazardModel::operator()(double entropy) const {
  return lo + (hi - lo) / (1.0 + std::exp(steepness * (entropy - center)));
}

void HazardModel::validate() const {
  if (!(lo > 0.0 && lo <= hi && hi <= 1.0)) throw std::invalid_argument("hazard needs 0 < lo <= hi <= 1");
  if (!(steepness >= 0.0)) throw std::invalid_argument("hazard steepness must be >= 0");
}

HazardCheck hazard_dominance_check(const HazardModel& hazard, const EntropyPathModel& paths, double theta,
                                   long episodes, std::uint64_t seed, long max_steps) {
  hazard.validate();
  if (episodes < 2) throw std::invalid_argument("episodes must be >= 2");
  if (!(paths.high >= paths.low) || !(paths.shift >= 0.0)) throw std::invalid_argument("invalid entropy path model");
  const double lam_theta = hazard(theta);

  const auto n = static_cast<std::size_t>(episodes);
  std::vector<double> len1(n), len2(n), gap(n), slack1(n), slack2(n), wald1(n), wald2(n), nhe1(n), nhe2(n);
  for (std::size_t e = 0; e < n; ++e) {
    Rng rng(derive_seed(seed, e));
    bool stop1 = false;
    bool stop2 = false;
    long l1 = 0, l2 = 0, n1 = 0, n2 = 0;
    double w1 = 0.0, w2 = 0.0;
    for (long t = 0; t < max_steps && !(stop1 && stop2); ++t) {
      const double h1 = paths.low + (paths.high - paths.low) * rng.uniform();
      const double h2 = h1 + paths.shift * rng.uniform();
      const double u = rng.uniform();
      if (!stop1) {
        ++l1;
        if (h1 >= theta) ++n1;
        w1 += hazard(h1);
        stop1 = u < hazard(h1);
      }
      if (!stop2) {
        ++l2;
        if (h2 >= theta) ++n2;
        w2 += hazard(h2);
        stop2 = u < hazard(h2);
      }
    }
    len1[e] = static_cast<double>(l1);
    len2[e] = static_cast<double>(l2);
    nhe1[e] = static_cast<double>(n1);
    nhe2[e] = static_cast<double>(n2);
    gap[e] = len2[e] - len1[e];
    slack1[e] = len1[e] - nhe1[e] / lam_theta;
    slack2[e] = len2[e] - nhe2[e] / lam_theta;
    wald1[e] = w1;
    wald2[e] = w2;
  }

  auto fill = [&](HazardPathStats& s, const std::vector<double>& len, const std::vector<double>& nhe,
                  const std::vector<double>& slack, const std::vector<double>& wald) {
    s.mean_length = estimate_mean(len).mean;
    s.mean_nhe = estimate_mean(nhe).mean;
    s.bound = s.mean_nhe / lam_theta;
    const auto sl = estimate_mean(slack);
    s.slack = sl.mean;
    s.slack_se = sl.se;
    s.bound_ok = s.slack >= -3.0 * s.slack_se;
    const auto w = estimate_mean(wald);
    s.wald_mean = w.mean;
    s.wald_se = w.se;
  };

  HazardCheck out;
  out.episodes = episodes;
  out.theta = theta;
  out.lambda_theta = lam_theta;
  const auto g = estimate_mean(gap);
  out.length_gap = g.mean;
  out.gap_se = g.se;
  out.dominance_ok = g.mean >= -3.0 * g.se;
  fill(out.low_path, len1, nhe1, slack1, wald1);
  fill(out.high_path, len2, nhe2, slack2, wald2);
  return out;
}

std::pair<double, double> pinsker_sides(std::span<const double> pi, std::span<const double> ref,
                                        std::span<const double> f, double bound_m) {
  if (pi.size() != ref.size() || pi.size() != f.size()) throw std::invalid_argument("alphabet sizes differ");
  double ep = 0.0;
  double er = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    ep += pi[j] * f[j];
    er += ref[j] * f[j];
  }
  return {std::abs(ep - er), bound_m * std::sqrt(2.0 * categorical_kl_exact(pi, ref))};
}

std::pair<double, double> dv_sides(std::span<const double> pi, std::span<const double> ref,
                                   std::span<const double> f, std::span<const double> eta_grid) {
  if (pi.size() != ref.size() || pi.size() != f.size()) throw std::invalid_argument("alphabet sizes differ");
  if (eta_grid.empty()) throw std::invalid_argument("empty eta grid");
  double lhs = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) lhs += pi[j] * f[j];
  const double kl = categorical_kl_exact(pi, ref);
  double best = INFINITY;
  for (double eta : eta_grid) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    double hi = -INFINITY;
    for (std::size_t j = 0; j < f.size(); ++j)
      if (ref[j] > 0.0) hi = std::max(hi, std::log(ref[j]) + eta * f[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j)
      if (ref[j] > 0.0) s += std::exp(std::log(ref[j]) + eta * f[j] - hi);
    best = std::min(best, (hi + std::log(s)) / eta + kl / eta);
  }
  return {lhs, best};
}

std::vector<double> default_eta_grid() {
  std::vector<double> g(32);
  for (int i = 0; i < 32; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -3.0 + 6.0 * i / 31.0);
  return g;
}

BudgetCheck budget_bounds_check(int pairs, int alphabet, double bound_m, std::uint64_t seed) {
  if (pairs < 1 || alphabet < 2) throw std::invalid_argument("need pairs >= 1 and alphabet >= 2");
  if (!(bound_m > 0.0)) throw std::invalid_argument("bound M must be positive");
  BudgetCheck out;
  out.pairs = pairs;
  out.alphabet = alphabet;
  out.worst_pinsker_margin = INFINITY;
  out.worst_dv_margin = INFINITY;
  const auto grid = default_eta_grid();
  const auto a = static_cast<std::size_t>(alphabet);
  std::vector<double> pi(a), ref(a), f(a);
  for (int k = 0; k < pairs; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double spread_pi = 0.1 + 3.0 * rng.uniform();
    const double spread_ref = 0.1 + 3.0 * rng.uniform();
    double zp = 0.0, zr = 0.0;
    for (std::size_t j = 0; j < a; ++j) {
      pi[j] = std::exp(spread_pi * rng.normal());
      ref[j] = std::exp(spread_ref * rng.normal());
      f[j] = bound_m * (2.0 * rng.uniform() - 1.0);
      zp += pi[j];
      zr += ref[j];
    }
    for (std::size_t j = 0; j < a; ++j) {
      pi[j] /= zp;
      ref[j] /= zr;
    }
    const auto [pl, pr] = pinsker_sides(pi, ref, f, bound_m);
    const auto [dl, dr] = dv_sides(pi, ref, f, grid);
    out.worst_pinsker_margin = std::min(out.worst_pinsker_margin, pr - pl);
    out.worst_dv_margin = std::min(out.worst_dv_margin, dr - dl);
    if (pl > pr + out.slack) ++out.pinsker_violations;
    if (dl > dr + out.slack) ++out.dv_violations;
  }
  return out;
}

}  // namespace entlab
