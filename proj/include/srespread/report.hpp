#pragma once

#include <cmath>
#include <vector>

#include "srespread/experiment.hpp"

namespace srespread {

// All derived quantities of one run, with bootstrap errors taken jointly
// from the same chunk resamples so correlated estimates (like the mean
// alpha and exp(-Gamma)) get an honest combined error.
struct FitReport {
  Window gamma_window, alpha_window, residual_window, beta_window;
  int interior_margin = 0;
  double include_threshold = 0.0;
  int bootstrap_resamples = 0;

  TotalSreCurve total;
  FitResult gamma;

  std::vector<AlphaEntry> alpha;
  int alpha_interior_count = 0;
  double alpha_interior_mean = std::nan("");
  double alpha_interior_se = 0.0;
  // mean interior alpha minus exp(-Gamma), with joint bootstrap error
  double alpha_gamma_diff = std::nan("");
  double alpha_gamma_diff_se = 0.0;

  std::vector<ResidualEntry> residuals;
  std::vector<int> residual_skipped_t;
  double residual_frac_within_3se = std::nan("");

  std::vector<SwapEntry> swap;
  int swap_interior_count = 0;
  double swap_interior_frac_within_3se = std::nan("");

  bool width_defined = false;
  std::vector<double> sigma;
  FitResult beta;
  FitResult variance_slope;
};

inline FitReport analyze_profile(const SpreadProfile& profile) {
  const RunConfig& cfg = profile.config;
  const int L = cfg.n_sites;
  const int T = cfg.depth;

  FitReport rep;
  rep.gamma_window = cfg.gamma_window_or_default();
  rep.alpha_window = cfg.alpha_window_or_default();
  rep.residual_window = cfg.residual_window_or_default();
  rep.beta_window = cfg.beta_window_or_default();
  rep.interior_margin = cfg.analysis.interior_margin;
  rep.include_threshold = cfg.analysis.include_threshold;
  rep.bootstrap_resamples = cfg.analysis.bootstrap_resamples;

  BootstrapReplicates reps = make_bootstrap(profile);
  rep.total = total_sre_curve(profile, reps);
  NormalizedProfile np = normalize_profile(profile, rep.total);
  rep.gamma = fit_decay_rate(rep.total, rep.gamma_window, profile, reps);

  // --- alpha table and its interior mean -------------------------------
  rep.alpha = gate_io_ratio(profile, reps);
  std::vector<const AlphaEntry*> picked;
  for (const AlphaEntry& e : rep.alpha) {
    if (e.defined && e.interior && e.t >= rep.alpha_window.lo && e.t <= rep.alpha_window.hi) {
      picked.push_back(&e);
    }
  }
  rep.alpha_interior_count = static_cast<int>(picked.size());
  if (!picked.empty()) {
    double s = 0.0;
    for (const AlphaEntry* e : picked) s += e->value;
    rep.alpha_interior_mean = s / static_cast<double>(picked.size());

    std::vector<double> rep_mean, rep_diff;
    for (int r = 0; r < reps.n_reps; ++r) {
      const double* cm = reps.rep(r);
      double acc = 0.0;
      int n = 0;
      for (const AlphaEntry* e : picked) {
        int i = e->site, j = (e->site + 1) % L;
        double den = cm[e->t * L + i] + cm[e->t * L + j];
        if (den <= 0.0) continue;
        acc += (cm[(e->t + 1) * L + i] + cm[(e->t + 1) * L + j]) / den;
        ++n;
      }
      if (n == 0) continue;
      double mean_r = acc / n;
      rep_mean.push_back(mean_r);
      if (rep.gamma.ok) {
        // rep gamma over the same window
        std::vector<double> xs, ys;
        bool valid = true;
        for (int t = rep.gamma_window.lo; t <= rep.gamma_window.hi && valid; ++t) {
          double tot = 0.0;
          for (int i = 0; i < L; ++i) tot += cm[t * L + i];
          if (tot <= 0.0) {
            valid = false;
            break;
          }
          xs.push_back(static_cast<double>(t));
          ys.push_back(std::log(tot));
        }
        double slope, intercept, r2;
        if (valid && detail::ls_fit(xs, ys, slope, intercept, r2)) {
          rep_diff.push_back(mean_r - std::exp(slope));
        }
      }
    }
    rep.alpha_interior_se = detail::sd_from_samples(rep_mean);
    if (rep.gamma.ok) {
      rep.alpha_gamma_diff = rep.alpha_interior_mean - std::exp(-rep.gamma.value);
      rep.alpha_gamma_diff_se = detail::sd_from_samples(rep_diff);
    }
  }

  // --- discrete-diffusion residuals ------------------------------------
  int within = 0, total_r = 0;
  for (int t = std::max(1, rep.residual_window.lo); t <= std::min(T, rep.residual_window.hi); ++t) {
    if (!np.included[t] || !np.included[t - 1]) {
      rep.residual_skipped_t.push_back(t);
      continue;
    }
    bool has_interior = false;
    for (int i = 0; i < L && !has_interior; ++i) {
      has_interior = distance_to_magic(i, cfg.magic_sites, L) <= t - rep.interior_margin;
    }
    if (!has_interior) {
      rep.residual_skipped_t.push_back(t);
      continue;
    }
    auto entries = diffusion_residual(profile, np, reps, rep.total, t);
    for (const ResidualEntry& e : entries) {
      ++total_r;
      if (std::abs(e.r) <= 3.0 * e.se) ++within;
      rep.residuals.push_back(e);
    }
  }
  if (total_r > 0) {
    rep.residual_frac_within_3se = static_cast<double>(within) / total_r;
  }

  // --- output equality across gates ------------------------------------
  rep.swap = swap_symmetry_check(profile, reps);
  int sw_within = 0;
  for (const SwapEntry& e : rep.swap) {
    if (!e.interior) continue;
    ++rep.swap_interior_count;
    if (std::abs(e.delta) <= 3.0 * e.se) ++sw_within;
  }
  if (rep.swap_interior_count > 0) {
    rep.swap_interior_frac_within_3se =
        static_cast<double>(sw_within) / rep.swap_interior_count;
  }

  // --- width and its exponent ------------------------------------------
  if (cfg.magic_sites.size() == 1) {
    rep.width_defined = true;
    rep.sigma = profile_width(profile, np);
    rep.beta = fit_width_exponent(rep.sigma, rep.beta_window);
    rep.variance_slope = fit_variance_slope(rep.sigma, rep.beta_window);

    if (rep.beta.ok || rep.variance_slope.ok) {
      const int m = cfg.magic_sites[0];
      std::vector<double> rep_beta, rep_slope;
      std::vector<double> at(L);
      for (int r = 0; r < reps.n_reps; ++r) {
        const double* cm = reps.rep(r);
        std::vector<double> rsig(T + 1, std::nan(""));
        bool valid = true;
        for (int t = std::max(1, rep.beta_window.lo);
             t <= std::min(T, rep.beta_window.hi) && valid; ++t) {
          if (!np.included[t]) continue;
          double tot = 0.0;
          for (int i = 0; i < L; ++i) tot += cm[t * L + i];
          if (tot <= 0.0) {
            valid = false;
            break;
          }
          double md = 0.0, md2 = 0.0;
          for (int i = 0; i < L; ++i) {
            double a = cm[t * L + i] / tot;
            double d = static_cast<double>(ring_displacement(i, m, L));
            md += a * d;
            md2 += a * d * d;
          }
          rsig[t] = std::sqrt(std::max(0.0, md2 - md * md));
        }
        if (!valid) continue;
        FitResult rb = fit_width_exponent(rsig, rep.beta_window);
        if (rb.ok) rep_beta.push_back(rb.value);
        FitResult rv = fit_variance_slope(rsig, rep.beta_window);
        if (rv.ok) rep_slope.push_back(rv.value);
      }
      rep.beta.se = detail::sd_from_samples(rep_beta);
      rep.variance_slope.se = detail::sd_from_samples(rep_slope);
    }
  }

  return rep;
}

}  // namespace srespread
