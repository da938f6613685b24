#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "srespread/circuit.hpp"
#include "srespread/magic_state.hpp"
#include "srespread/sre.hpp"

namespace srespread {

struct Window {
  int lo = 0;
  int hi = 0;
};

struct AnalysisOptions {
  std::optional<Window> gamma_window;     // default [4, min(12, (L-2)/2)]
  std::optional<Window> alpha_window;     // default: gamma window
  std::optional<Window> residual_window;  // default [4, min(10, T)]
  std::optional<Window> beta_window;      // default: gamma window
  int interior_margin = 3;                // interior site: dist <= t - margin
  double include_threshold = 10.0;        // keep t while M(t) >= thr * SE
  int bootstrap_resamples = 200;
};

struct RunConfig {
  int n_sites = 0;
  int depth = 0;
  long long samples = 0;
  std::uint64_t master_seed = 0;
  std::vector<int> magic_sites;
  GateKind gate_kind = GateKind::full_clifford;
  int threads = 0;  // 0 = hardware concurrency
  bool force_identity_gates = false;
  long long max_cost = 100'000'000'000LL;  // guard on L * T * samples
  AnalysisOptions analysis;

  void validate() const {
    if (n_sites < 2 || n_sites % 2 != 0) {
      throw std::invalid_argument("RunConfig: n_sites must be even and >= 2");
    }
    if (depth < 0) throw std::invalid_argument("RunConfig: negative depth");
    if (samples < 1) throw std::invalid_argument("RunConfig: samples must be >= 1");
    std::vector<int> ms = magic_sites;
    std::sort(ms.begin(), ms.end());
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (ms[i] < 0 || ms[i] >= n_sites) {
        throw std::invalid_argument("RunConfig: magic site out of range");
      }
      if (i > 0 && ms[i] == ms[i - 1]) {
        throw std::invalid_argument("RunConfig: duplicate magic site");
      }
    }
    auto check_window = [&](const std::optional<Window>& w, const char* name) {
      if (!w) return;
      if (w->lo < 0 || w->hi > depth || w->lo > w->hi) {
        throw std::invalid_argument(std::string("RunConfig: bad ") + name);
      }
    };
    check_window(analysis.gamma_window, "gamma window");
    check_window(analysis.alpha_window, "alpha window");
    check_window(analysis.residual_window, "residual window");
    check_window(analysis.beta_window, "beta window");
    if (analysis.bootstrap_resamples < 2) {
      throw std::invalid_argument("RunConfig: need at least 2 bootstrap resamples");
    }
    long double cost = static_cast<long double>(n_sites) * (depth + 1) * samples;
    if (cost > static_cast<long double>(max_cost)) {
      throw std::runtime_error("RunConfig: resource cap exceeded (n_sites*depth*samples)");
    }
  }

  int resolved_threads() const {
    if (threads > 0) return threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }

  Window gamma_window_or_default() const {
    if (analysis.gamma_window) return *analysis.gamma_window;
    return {std::min(4, depth), std::min({12, (n_sites - 2) / 2, depth})};
  }
  Window alpha_window_or_default() const {
    if (analysis.alpha_window) return *analysis.alpha_window;
    return gamma_window_or_default();
  }
  Window residual_window_or_default() const {
    if (analysis.residual_window) return *analysis.residual_window;
    return {std::min(4, depth), std::min(10, depth)};
  }
  Window beta_window_or_default() const {
    if (analysis.beta_window) return *analysis.beta_window;
    return gamma_window_or_default();
  }
};

// Bit set of observed single-qubit spectrum classes (single-T runs).
inline constexpr std::uint32_t spectrum_class_bit(SingleQubitSpectrumClass c) {
  return 1u << static_cast<int>(c);
}

// Monte Carlo accumulation of the averaged single-qubit SRE M_i(t):
// streaming mean and M2 per cell plus fixed-size per-chunk means that
// drive the bootstrap and make the reduction order independent of the
// worker count.
struct SpreadProfile {
  static constexpr int kChunkSamples = 512;

  RunConfig config;
  int n_chunks = 0;
  std::vector<double> mean;             // (depth+1) * n_sites, index t*L + i
  std::vector<double> m2;               // sum of squared deviations
  std::vector<double> chunk_mean;       // n_chunks * cells
  std::vector<long long> chunk_count;   // per chunk
  std::uint32_t observed_class_mask = 0;
  double wall_seconds = 0.0;

  int cells() const { return (config.depth + 1) * config.n_sites; }
  int cell(int site, int t) const { return t * config.n_sites + site; }
  double mean_at(int site, int t) const { return mean[cell(site, t)]; }
  double sem_at(int site, int t) const {
    long long n = config.samples;
    if (n < 2) return 0.0;
    return std::sqrt(m2[cell(site, t)] / (static_cast<double>(n) * (n - 1)));
  }
};

namespace detail {

// Time at which the light cone of site i first reaches any magic site
// under the incremental convention, or depth+1 if it never does.
inline std::vector<int> first_reach_times(const RunConfig& cfg) {
  std::vector<int> reach(cfg.n_sites, cfg.depth + 1);
  for (int i = 0; i < cfg.n_sites; ++i) {
    for (int t = 0; t <= cfg.depth && reach[i] > cfg.depth; ++t) {
      for (int m : cfg.magic_sites) {
        bool inside = (t == 0) ? (m == i)
                               : in_lightcone(m, i, t, cfg.n_sites,
                                              LightconeConvention::incremental);
        if (inside) {
          reach[i] = t;
          break;
        }
      }
    }
  }
  return reach;
}

struct MTable {
  // M values by (ones, halves); NaN marks combinations outside Table II.
  double v[4][4];
  std::uint32_t class_bit[4][4];

  MTable() {
    for (auto& row : v) {
      for (double& x : row) x = std::nan("");
    }
    for (auto& row : class_bit) {
      for (std::uint32_t& b : row) b = 0;
    }
    auto put = [&](int a, int b, SingleQubitSpectrumClass c) {
      v[a][b] = spectrum_class_sre(c);
      class_bit[a][b] = spectrum_class_bit(c);
    };
    put(1, 0, SingleQubitSpectrumClass::stabilizer_pure_like);
    put(2, 0, SingleQubitSpectrumClass::stabilizer);
    put(1, 1, SingleQubitSpectrumClass::half_magic);
    put(1, 2, SingleQubitSpectrumClass::full_magic);
  }
};

// One worker-local evolution workspace; reused across samples.
struct Workspace {
  std::vector<const CliffordGate2*> gates;  // depth * (L/2)
  PauliString xs, zs;
  std::vector<std::uint64_t> xy, zy;
  std::vector<double> m_vals;  // per-sample M_i(t)
  std::vector<PauliString> seed_x, seed_z;
};

inline void run_sample(const RunConfig& cfg, const ProductState& state,
                       const std::vector<int>& reach, const MTable& mtable,
                       std::uint64_t sample_index, Workspace& ws,
                       std::uint32_t& class_mask) {
  const int L = cfg.n_sites;
  const int T = cfg.depth;
  const int half = L / 2;
  const bool single_t = cfg.magic_sites.size() <= 1;
  LayerSampler sampler{cfg.master_seed, sample_index, cfg.gate_kind,
                       cfg.force_identity_gates};

  // One positional draw per (sample, layer, pair), shared by all strings
  // of this sample.
  ws.gates.resize(static_cast<std::size_t>(T) * half);
  for (int tau = 1; tau <= T; ++tau) {
    for (int k = 0; k < half; ++k) {
      ws.gates[static_cast<std::size_t>(tau - 1) * half + k] = &sampler.gate_for(tau, k);
    }
  }

  std::fill(ws.m_vals.begin(), ws.m_vals.end(), 0.0);
  const double m_magic = sre2_from_counts({1, 2});  // log(4/3)
  for (int m : cfg.magic_sites) ws.m_vals[m] = m_magic;

  const int words = static_cast<int>(PauliString::word_count(L));
  for (int i = 0; i < L; ++i) {
    if (reach[i] > T) continue;  // light cone never meets a magic site
    ws.xs = ws.seed_x[i];
    ws.zs = ws.seed_z[i];

    for (int tau = 1; tau <= T; ++tau) {
      const CliffordGate2* const* layer =
          &ws.gates[static_cast<std::size_t>(tau - 1) * half];
      const bool odd = (tau % 2 == 1);
      for (int k = 0; k < half; ++k) {
        int a = odd ? 2 * k : 2 * k + 1;
        int b = odd ? 2 * k + 1 : (2 * k + 2) % L;
        apply_gate_inplace(ws.xs, *layer[k], a, b);
        apply_gate_inplace(ws.zs, *layer[k], a, b);
      }

      ExactAmp cx = state.expectation_masks(ws.xs.x_data(), ws.xs.z_data(),
                                            ws.xs.phase_exp());
      ExactAmp cz = state.expectation_masks(ws.zs.x_data(), ws.zs.z_data(),
                                            ws.zs.phase_exp());
      // Y image from the X and Z images: A(Y) = i A(X) A(Z).
      int cross = 0;
      for (int w = 0; w < words; ++w) {
        ws.xy[w] = ws.xs.x_data()[w] ^ ws.zs.x_data()[w];
        ws.zy[w] = ws.xs.z_data()[w] ^ ws.zs.z_data()[w];
        cross += std::popcount(ws.xs.z_data()[w] & ws.zs.x_data()[w]);
      }
      int phase_y = (1 + ws.xs.phase_exp() + ws.zs.phase_exp() + 2 * cross) & 3;
      ExactAmp cy = state.expectation_masks(ws.xy.data(), ws.zy.data(), phase_y);

      double m_val;
      if (single_t) {
        int ones = 1, halves = 0;
        for (const ExactAmp& c : {cx, cy, cz}) {
          if (!c.nonzero) continue;
          if (c.half_exponent == 0) {
            ++ones;
          } else {
            ++halves;
          }
        }
        if (ones > 3 || halves > 3 || std::isnan(mtable.v[ones][halves])) {
          throw std::logic_error("run_monte_carlo: single-qubit spectrum outside Table II");
        }
        class_mask |= mtable.class_bit[ones][halves];
        m_val = mtable.v[ones][halves];
      } else {
        double s2 = 1.0, s4 = 1.0;
        for (const ExactAmp& c : {cx, cy, cz}) {
          if (!c.nonzero) continue;
          double v2 = std::ldexp(1.0, -static_cast<int>(c.half_exponent));
          s2 += v2;
          s4 += v2 * v2;
        }
        m_val = -std::log(s4 / s2);
      }

      // Exact zero outside the light cone, checked on every sample.
      if (tau < reach[i] && m_val != 0.0) {
        throw std::logic_error("run_monte_carlo: nonzero SRE outside the light cone");
      }
      ws.m_vals[static_cast<std::size_t>(tau) * L + i] = m_val;
    }
  }
}

}  // namespace detail

inline SpreadProfile run_monte_carlo(const RunConfig& config) {
  config.validate();
  auto start = std::chrono::steady_clock::now();

  const int L = config.n_sites;
  const int T = config.depth;
  const long long N = config.samples;
  const int cells = (T + 1) * L;
  const int n_chunks =
      static_cast<int>((N + SpreadProfile::kChunkSamples - 1) / SpreadProfile::kChunkSamples);

  if (config.gate_kind == GateKind::full_clifford) {
    CliffordTable::instance();  // build the enumeration before the workers fork
  } else {
    RestrictedTable::instance();
  }

  SpreadProfile profile;
  profile.config = config;
  profile.n_chunks = n_chunks;
  profile.mean.assign(cells, 0.0);
  profile.m2.assign(cells, 0.0);
  profile.chunk_mean.assign(static_cast<std::size_t>(n_chunks) * cells, 0.0);
  profile.chunk_count.assign(n_chunks, 0);
  std::vector<double> chunk_m2(static_cast<std::size_t>(n_chunks) * cells, 0.0);

  const ProductState state = ProductState::with_t_sites(L, config.magic_sites);
  const std::vector<int> reach = detail::first_reach_times(config);
  const detail::MTable mtable;

  std::atomic<int> next_chunk{0};
  std::atomic<std::uint32_t> class_mask{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    detail::Workspace ws;
    ws.xy.assign(PauliString::word_count(L), 0);
    ws.zy.assign(PauliString::word_count(L), 0);
    ws.m_vals.assign(cells, 0.0);
    ws.seed_x.reserve(L);
    ws.seed_z.reserve(L);
    for (int i = 0; i < L; ++i) {
      ws.seed_x.push_back(PauliString::single_site(i, Letter::X, L));
      ws.seed_z.push_back(PauliString::single_site(i, Letter::Z, L));
    }
    std::vector<double> local_mean(cells), local_m2(cells);

    try {
      for (;;) {
        int c = next_chunk.fetch_add(1);
        if (c >= n_chunks) break;
        long long lo = static_cast<long long>(c) * SpreadProfile::kChunkSamples;
        long long hi = std::min<long long>(N, lo + SpreadProfile::kChunkSamples);
        std::fill(local_mean.begin(), local_mean.end(), 0.0);
        std::fill(local_m2.begin(), local_m2.end(), 0.0);
        std::uint32_t local_class = 0;
        long long n_local = 0;
        for (long long s = lo; s < hi; ++s) {
          detail::run_sample(config, state, reach, mtable,
                             static_cast<std::uint64_t>(s), ws, local_class);
          ++n_local;
          double inv_n = 1.0 / static_cast<double>(n_local);
          for (int cidx = 0; cidx < cells; ++cidx) {
            double x = ws.m_vals[cidx];
            double delta = x - local_mean[cidx];
            local_mean[cidx] += delta * inv_n;
            local_m2[cidx] += delta * (x - local_mean[cidx]);
          }
        }
        double* cm = &profile.chunk_mean[static_cast<std::size_t>(c) * cells];
        double* c2 = &chunk_m2[static_cast<std::size_t>(c) * cells];
        std::copy(local_mean.begin(), local_mean.end(), cm);
        std::copy(local_m2.begin(), local_m2.end(), c2);
        profile.chunk_count[c] = n_local;
        class_mask.fetch_or(local_class);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  int n_threads = std::min<int>(config.resolved_threads(), n_chunks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Fixed-order merge of the chunk accumulators keeps results bit-stable
  // for any worker count.
  long long n_merged = 0;
  for (int c = 0; c < n_chunks; ++c) {
    long long nb = profile.chunk_count[c];
    const double* cm = &profile.chunk_mean[static_cast<std::size_t>(c) * cells];
    const double* c2 = &chunk_m2[static_cast<std::size_t>(c) * cells];
    if (n_merged == 0) {
      std::copy(cm, cm + cells, profile.mean.begin());
      std::copy(c2, c2 + cells, profile.m2.begin());
    } else {
      double na = static_cast<double>(n_merged), nbd = static_cast<double>(nb);
      double w = na * nbd / (na + nbd);
      for (int cidx = 0; cidx < cells; ++cidx) {
        double delta = cm[cidx] - profile.mean[cidx];
        profile.mean[cidx] += delta * nbd / (na + nbd);
        profile.m2[cidx] += c2[cidx] + delta * delta * w;
      }
    }
    n_merged += nb;
  }

  profile.observed_class_mask = class_mask.load();
  profile.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return profile;
}

// ---------------------------------------------------------------------------
// Derived observables and fits.

struct BootstrapReplicates {
  int n_reps = 0;
  int cells = 0;
  std::vector<double> cell_mean;  // n_reps * cells

  const double* rep(int r) const { return &cell_mean[static_cast<std::size_t>(r) * cells]; }
};

inline constexpr std::uint64_t kBootstrapStreamTag = 0x626f6f74;  // resampling

// Chunk-level bootstrap: resample whole chunks with replacement and
// recombine their means, weighted by chunk sample counts.
inline BootstrapReplicates make_bootstrap(const SpreadProfile& profile) {
  BootstrapReplicates reps;
  reps.n_reps = profile.config.analysis.bootstrap_resamples;
  reps.cells = profile.cells();
  reps.cell_mean.assign(static_cast<std::size_t>(reps.n_reps) * reps.cells, 0.0);
  int n_chunks = profile.n_chunks;
  for (int r = 0; r < reps.n_reps; ++r) {
    SplitStream rng = SplitStream::keyed(
        profile.config.master_seed, {kBootstrapStreamTag, static_cast<std::uint64_t>(r)});
    double* out = &reps.cell_mean[static_cast<std::size_t>(r) * reps.cells];
    double total_w = 0.0;
    for (int d = 0; d < n_chunks; ++d) {
      int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_chunks)));
      double w = static_cast<double>(profile.chunk_count[c]);
      const double* cm = &profile.chunk_mean[static_cast<std::size_t>(c) * reps.cells];
      for (int i = 0; i < reps.cells; ++i) out[i] += w * cm[i];
      total_w += w;
    }
    double inv = 1.0 / total_w;
    for (int i = 0; i < reps.cells; ++i) out[i] *= inv;
  }
  return reps;
}

struct TotalSreCurve {
  std::vector<double> value;  // M(t)
  std::vector<double> se;     // bootstrap standard error
  std::vector<char> included;
};

inline TotalSreCurve total_sre_curve(const SpreadProfile& profile,
                                     const BootstrapReplicates& reps) {
  const int L = profile.config.n_sites;
  const int T = profile.config.depth;
  TotalSreCurve curve;
  curve.value.assign(T + 1, 0.0);
  curve.se.assign(T + 1, 0.0);
  curve.included.assign(T + 1, 0);
  for (int t = 0; t <= T; ++t) {
    double s = 0.0;
    for (int i = 0; i < L; ++i) s += profile.mean_at(i, t);
    curve.value[t] = s;
  }
  for (int t = 0; t <= T; ++t) {
    double acc = 0.0, acc2 = 0.0;
    for (int r = 0; r < reps.n_reps; ++r) {
      const double* cm = reps.rep(r);
      double s = 0.0;
      for (int i = 0; i < L; ++i) s += cm[t * L + i];
      acc += s;
      acc2 += s * s;
    }
    double n = static_cast<double>(reps.n_reps);
    double var = std::max(0.0, (acc2 - acc * acc / n) / (n - 1));
    curve.se[t] = std::sqrt(var);
    curve.included[t] =
        curve.value[t] > 0.0 &&
        curve.value[t] >= profile.config.analysis.include_threshold * curve.se[t];
  }
  return curve;
}

struct NormalizedProfile {
  std::vector<double> a;       // (T+1) * L; zero where excluded
  std::vector<char> included;  // per t
};

inline NormalizedProfile normalize_profile(const SpreadProfile& profile,
                                           const TotalSreCurve& curve) {
  const int L = profile.config.n_sites;
  const int T = profile.config.depth;
  NormalizedProfile np;
  np.a.assign(profile.cells(), 0.0);
  np.included.assign(T + 1, 0);
  for (int t = 0; t <= T; ++t) {
    if (!curve.included[t]) continue;
    np.included[t] = 1;
    for (int i = 0; i < L; ++i) {
      np.a[t * L + i] = profile.mean_at(i, t) / curve.value[t];
    }
  }
  return np;
}

struct FitResult {
  bool ok = false;
  double value = 0.0;
  double se = 0.0;
  double r2 = 0.0;
  Window window;
  std::string error;
};

namespace detail {

// Least-squares slope/intercept; returns false for degenerate input.
inline bool ls_fit(const std::vector<double>& x, const std::vector<double>& y,
                   double& slope, double& intercept, double& r2) {
  std::size_t n = x.size();
  if (n < 2) return false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (det == 0.0) return false;
  slope = (n * sxy - sx * sy) / det;
  intercept = (sy - slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (slope * x[i] + intercept);
    ss_res += e * e;
  }
  r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return true;
}

inline double sd_from_samples(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    s += x;
    s2 += x * x;
  }
  double n = static_cast<double>(v.size());
  return std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1)));
}

}  // namespace detail

// Gamma from the log-linear decay of M(t) over [t1, t2]. Non-positive or
// excluded values inside the window are a fit failure, never clipped.
inline FitResult fit_decay_rate(const TotalSreCurve& curve, Window window,
                                const SpreadProfile& profile,
                                const BootstrapReplicates& reps) {
  FitResult fit;
  fit.window = window;
  std::vector<double> xs, ys;
  for (int t = window.lo; t <= window.hi; ++t) {
    if (t < 0 || t >= static_cast<int>(curve.value.size())) continue;
    if (!curve.included[t] || curve.value[t] <= 0.0) {
      fit.error = "non-positive or excluded M(t) at t=" + std::to_string(t);
      return fit;
    }
    xs.push_back(static_cast<double>(t));
    ys.push_back(std::log(curve.value[t]));
  }
  double slope, intercept;
  if (!detail::ls_fit(xs, ys, slope, intercept, fit.r2)) {
    fit.error = "window too small";
    return fit;
  }
  fit.ok = true;
  fit.value = -slope;

  const int L = profile.config.n_sites;
  std::vector<double> rep_gamma;
  rep_gamma.reserve(reps.n_reps);
  for (int r = 0; r < reps.n_reps; ++r) {
    const double* cm = reps.rep(r);
    std::vector<double> ry;
    ry.reserve(xs.size());
    bool valid = true;
    for (double xt : xs) {
      int t = static_cast<int>(xt);
      double s = 0.0;
      for (int i = 0; i < L; ++i) s += cm[t * L + i];
      if (s <= 0.0) {
        valid = false;
        break;
      }
      ry.push_back(std::log(s));
    }
    if (!valid) continue;
    double rs, ri, rr2;
    if (detail::ls_fit(xs, ry, rs, ri, rr2)) rep_gamma.push_back(-rs);
  }
  fit.se = detail::sd_from_samples(rep_gamma);
  return fit;
}

// Signed displacement of site i from site m, minimal image on the ring.
inline int ring_displacement(int i, int m, int L) {
  int d = ((i - m) % L + L) % L;
  return d > L / 2 ? d - L : d;
}

inline int ring_distance(int i, int m, int L) { return std::abs(ring_displacement(i, m, L)); }

// Smallest ring distance from site i to any magic site.
inline int distance_to_magic(int i, const std::vector<int>& magic, int L) {
  int best = L;
  for (int m : magic) best = std::min(best, ring_distance(i, m, L));
  return best;
}

enum class ResidualMode : std::uint8_t {
  centered,   // r_i(t) = a_i(t) - [a_{i-1}(t-1) + a_{i+1}(t-1)] / 2
  gate_bond,  // bond-resolved variant using the layer that acted from t-1 to t
};

struct ResidualEntry {
  int t = 0;
  int site = 0;
  double r = 0.0;
  double se = 0.0;
};

// Discrete-diffusion residuals on interior sites at time t (both t and
// t-1 must be included).
inline std::vector<ResidualEntry> diffusion_residual(
    const SpreadProfile& profile, const NormalizedProfile& np,
    const BootstrapReplicates& reps, const TotalSreCurve& curve, int t,
    ResidualMode mode = ResidualMode::centered) {
  const int L = profile.config.n_sites;
  if (t < 1 || t > profile.config.depth) {
    throw std::invalid_argument("diffusion_residual: t out of range");
  }
  if (!np.included[t] || !np.included[t - 1]) {
    throw std::invalid_argument("diffusion_residual: t or t-1 excluded");
  }
  const int margin = profile.config.analysis.interior_margin;
  std::vector<int> sites;
  for (int i = 0; i < L; ++i) {
    if (distance_to_magic(i, profile.config.magic_sites, L) <= t - margin) {
      sites.push_back(i);
    }
  }
  if (sites.empty()) {
    throw std::invalid_argument("diffusion_residual: empty interior set");
  }

  auto residual_from = [&](const double* a_t, const double* a_prev, int i) {
    int il = (i - 1 + L) % L, ir = (i + 1) % L;
    if (mode == ResidualMode::centered) {
      return a_t[i] - 0.5 * (a_prev[il] + a_prev[ir]);
    }
    // gate_bond: layer t pairs; i solo bonds (i, i+1) or (i-1, i)
    bool odd_layer = (t % 2 == 1);
    bool left_end = odd_layer ? (i % 2 == 0) : (i % 2 == 1);
    int j = left_end ? ir : il;
    return a_t[i] - 0.5 * (a_prev[i] + a_prev[j]);
  };

  std::vector<ResidualEntry> out;
  out.reserve(sites.size());
  const double* a_t = &np.a[static_cast<std::size_t>(t) * L];
  const double* a_prev = &np.a[static_cast<std::size_t>(t - 1) * L];
  for (int i : sites) {
    ResidualEntry e;
    e.t = t;
    e.site = i;
    e.r = residual_from(a_t, a_prev, i);
    out.push_back(e);
  }

  // bootstrap SEs
  std::vector<std::vector<double>> rep_r(sites.size());
  for (int r = 0; r < reps.n_reps; ++r) {
    const double* cm = reps.rep(r);
    double tot_t = 0.0, tot_prev = 0.0;
    for (int i = 0; i < L; ++i) {
      tot_t += cm[t * L + i];
      tot_prev += cm[(t - 1) * L + i];
    }
    if (tot_t <= 0.0 || tot_prev <= 0.0) continue;
    std::vector<double> at(L), ap(L);
    for (int i = 0; i < L; ++i) {
      at[i] = cm[t * L + i] / tot_t;
      ap[i] = cm[(t - 1) * L + i] / tot_prev;
    }
    for (std::size_t s = 0; s < sites.size(); ++s) {
      rep_r[s].push_back(residual_from(at.data(), ap.data(), sites[s]));
    }
  }
  for (std::size_t s = 0; s < sites.size(); ++s) {
    out[s].se = detail::sd_from_samples(rep_r[s]);
  }
  (void)curve;
  return out;
}

struct AlphaEntry {
  int t = 0;     // input time; the gate maps t -> t+1
  int site = 0;  // left end of the bond (site, site+1 mod L)
  double value = 0.0;
  bool defined = false;
  bool interior = false;
};

// Ratio of output to input single-qubit SRE sums across each gate bond of
// the layer acting between t and t+1.
inline std::vector<AlphaEntry> gate_io_ratio(const SpreadProfile& profile,
                                             const BootstrapReplicates& reps) {
  const int L = profile.config.n_sites;
  const int T = profile.config.depth;
  const int margin = profile.config.analysis.interior_margin;
  const double thr = profile.config.analysis.include_threshold;

  // bootstrap SE of each bond denominator, for the undefined flag
  std::vector<AlphaEntry> out;
  for (int t = 0; t < T; ++t) {
    auto pairs = pairs_for_layer(t + 1, L);
    for (auto [i, j] : pairs) {
      AlphaEntry e;
      e.t = t;
      e.site = i;
      double den = profile.mean_at(i, t) + profile.mean_at(j, t);
      double num = profile.mean_at(i, t + 1) + profile.mean_at(j, t + 1);
      std::vector<double> rep_den;
      rep_den.reserve(reps.n_reps);
      for (int r = 0; r < reps.n_reps; ++r) {
        const double* cm = reps.rep(r);
        rep_den.push_back(cm[t * L + i] + cm[t * L + j]);
      }
      double se_den = detail::sd_from_samples(rep_den);
      e.defined = den > 0.0 && den >= thr * se_den;
      if (e.defined) e.value = num / den;
      e.interior =
          distance_to_magic(i, profile.config.magic_sites, L) <= t - margin &&
          distance_to_magic(j, profile.config.magic_sites, L) <= t - margin;
      out.push_back(e);
    }
  }
  return out;
}

struct SwapEntry {
  int t = 0;     // output time of the gate (layer t acts from t-1 to t)
  int site = 0;  // left end of the bond
  double delta = 0.0;
  double se = 0.0;
  bool interior = false;
};

// Output equality across each gate: Delta = M_i(t) - M_j(t) for the bond
// (i, j) of the layer that produced time t.
inline std::vector<SwapEntry> swap_symmetry_check(const SpreadProfile& profile,
                                                  const BootstrapReplicates& reps) {
  const int L = profile.config.n_sites;
  const int T = profile.config.depth;
  const int margin = profile.config.analysis.interior_margin;
  std::vector<SwapEntry> out;
  for (int t = 1; t <= T; ++t) {
    auto pairs = pairs_for_layer(t, L);
    for (auto [i, j] : pairs) {
      SwapEntry e;
      e.t = t;
      e.site = i;
      e.delta = profile.mean_at(i, t) - profile.mean_at(j, t);
      std::vector<double> rep_delta;
      rep_delta.reserve(reps.n_reps);
      for (int r = 0; r < reps.n_reps; ++r) {
        const double* cm = reps.rep(r);
        rep_delta.push_back(cm[t * L + i] - cm[t * L + j]);
      }
      e.se = detail::sd_from_samples(rep_delta);
      e.interior =
          distance_to_magic(i, profile.config.magic_sites, L) <= t - 1 - margin &&
          distance_to_magic(j, profile.config.magic_sites, L) <= t - 1 - margin;
      out.push_back(e);
    }
  }
  return out;
}

// Standard deviation of the normalized profile around the magic site,
// minimal-image displacements. Defined for single-magic-site runs.
inline std::vector<double> profile_width(const SpreadProfile& profile,
                                         const NormalizedProfile& np) {
  if (profile.config.magic_sites.size() != 1) {
    throw std::invalid_argument("profile_width: single magic site required");
  }
  const int L = profile.config.n_sites;
  const int T = profile.config.depth;
  const int m = profile.config.magic_sites[0];
  std::vector<double> sigma(T + 1, std::nan(""));
  for (int t = 0; t <= T; ++t) {
    if (!np.included[t]) continue;
    double mean_d = 0.0, mean_d2 = 0.0;
    for (int i = 0; i < L; ++i) {
      double d = static_cast<double>(ring_displacement(i, m, L));
      double a = np.a[t * L + i];
      mean_d += a * d;
      mean_d2 += a * d * d;
    }
    sigma[t] = std::sqrt(std::max(0.0, mean_d2 - mean_d * mean_d));
  }
  return sigma;
}

// beta from log sigma vs log t over the window (t >= 1, sigma > 0).
inline FitResult fit_width_exponent(const std::vector<double>& sigma, Window window) {
  FitResult fit;
  fit.window = window;
  std::vector<double> xs, ys;
  for (int t = std::max(1, window.lo); t <= window.hi; ++t) {
    if (t >= static_cast<int>(sigma.size())) break;
    if (std::isnan(sigma[t]) || sigma[t] <= 0.0) {
      fit.error = "sigma missing or non-positive at t=" + std::to_string(t);
      return fit;
    }
    xs.push_back(std::log(static_cast<double>(t)));
    ys.push_back(std::log(sigma[t]));
  }
  double slope, intercept;
  if (!detail::ls_fit(xs, ys, slope, intercept, fit.r2)) {
    fit.error = "window too small";
    return fit;
  }
  fit.ok = true;
  fit.value = slope;
  return fit;
}

// Linear fit of sigma^2 against t; for a diffusive profile the slope is
// 2D in units of sites^2 per step.
inline FitResult fit_variance_slope(const std::vector<double>& sigma, Window window) {
  FitResult fit;
  fit.window = window;
  std::vector<double> xs, ys;
  for (int t = std::max(1, window.lo); t <= window.hi; ++t) {
    if (t >= static_cast<int>(sigma.size())) break;
    if (std::isnan(sigma[t])) {
      fit.error = "sigma missing at t=" + std::to_string(t);
      return fit;
    }
    xs.push_back(static_cast<double>(t));
    ys.push_back(sigma[t] * sigma[t]);
  }
  double slope, intercept;
  if (!detail::ls_fit(xs, ys, slope, intercept, fit.r2)) {
    fit.error = "window too small";
    return fit;
  }
  fit.ok = true;
  fit.value = slope;
  return fit;
}

}  // namespace srespread
