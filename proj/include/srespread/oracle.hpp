#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "srespread/circuit.hpp"
#include "srespread/clifford.hpp"
#include "srespread/magic_state.hpp"
#include "srespread/pauli.hpp"

namespace srespread {

// Dense reference implementation for small systems; never a performance
// path. Site j maps to bit j of the basis index (little-endian).
class DenseState {
 public:
  static constexpr int kMaxSites = 12;

  static DenseState prepare_initial(const std::vector<SiteKind>& kinds) {
    int L = static_cast<int>(kinds.size());
    if (L < 1 || L > kMaxSites) {
      throw std::invalid_argument("DenseState: need 1..12 sites");
    }
    DenseState s;
    s.n_ = L;
    s.amp_.assign(std::size_t{1} << L, {0.0, 0.0});
    s.amp_[0] = {1.0, 0.0};
    const std::complex<double> t_phase = std::polar(1.0, M_PI / 4.0);
    for (int j = 0; j < L; ++j) {
      if (kinds[j] != SiteKind::t_state) continue;
      // |0> -> (|0> + e^{i pi/4} |1>)/sqrt2 on site j
      std::uint64_t bit = 1ull << j;
      for (std::uint64_t n = 0; n < s.amp_.size(); ++n) {
        if (n & bit) continue;
        std::complex<double> a = s.amp_[n];
        s.amp_[n] = a * kInvSqrt2;
        s.amp_[n | bit] = a * kInvSqrt2 * t_phase;
      }
    }
    return s;
  }

  int n_sites() const { return n_; }
  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  void apply_h(int q) {
    std::uint64_t bit = 1ull << q;
    for (std::uint64_t n = 0; n < amp_.size(); ++n) {
      if (n & bit) continue;
      std::complex<double> a = amp_[n], b = amp_[n | bit];
      amp_[n] = (a + b) * kInvSqrt2;
      amp_[n | bit] = (a - b) * kInvSqrt2;
    }
  }

  void apply_s(int q) {
    std::uint64_t bit = 1ull << q;
    for (std::uint64_t n = 0; n < amp_.size(); ++n) {
      if (n & bit) amp_[n] *= std::complex<double>(0.0, 1.0);
    }
  }

  void apply_cnot(int control, int target) {
    std::uint64_t cbit = 1ull << control, tbit = 1ull << target;
    for (std::uint64_t n = 0; n < amp_.size(); ++n) {
      if ((n & cbit) && !(n & tbit)) std::swap(amp_[n], amp_[n | tbit]);
    }
  }

  // Applies a generator word in unitary order at the mapped qubit pair
  // (slot 0 -> pair.first, slot 1 -> pair.second).
  void apply_gate_word(const GateWord& word, std::pair<int, int> pair) {
    auto site = [&](int slot) { return slot == 0 ? pair.first : pair.second; };
    for (Primitive p : word.ops) {
      switch (p) {
        case Primitive::H0: apply_h(site(0)); break;
        case Primitive::H1: apply_h(site(1)); break;
        case Primitive::S0: apply_s(site(0)); break;
        case Primitive::S1: apply_s(site(1)); break;
        case Primitive::CX01: apply_cnot(site(0), site(1)); break;
        case Primitive::CX10: apply_cnot(site(1), site(0)); break;
      }
    }
  }

  // <psi| P |psi>; real for Hermitian strings.
  std::complex<double> expect_pauli(const PauliString& p) const {
    if (p.n_sites() != n_) {
      throw std::invalid_argument("DenseState::expect_pauli: size mismatch");
    }
    std::uint64_t x = 0, z = 0;
    for (int j = 0; j < n_; ++j) {
      if (p.x_bit(j)) x |= 1ull << j;
      if (p.z_bit(j)) z |= 1ull << j;
    }
    // i^phase X^x Z^z |n> = i^phase (-1)^{n.z} |n ^ x>
    static constexpr std::complex<double> kIPow[4] = {
        {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    std::complex<double> head = kIPow[p.phase_exp() & 3];
    std::complex<double> acc = 0.0;
    for (std::uint64_t n = 0; n < amp_.size(); ++n) {
      double sgn = (std::popcount(n & z) & 1) ? -1.0 : 1.0;
      acc += std::conj(amp_[n ^ x]) * sgn * amp_[n];
    }
    return head * acc;
  }

 private:
  int n_ = 0;
  std::vector<std::complex<double>> amp_;
};

// Reduced density matrix on up to 4 sites, row-major.
struct DensityMatrix {
  int n_sites = 0;
  std::vector<std::complex<double>> mat;  // dim x dim, dim = 2^n_sites

  int dim() const { return 1 << n_sites; }

  std::complex<double> trace() const {
    std::complex<double> t = 0.0;
    for (int i = 0; i < dim(); ++i) t += mat[i * dim() + i];
    return t;
  }

  double purity() const {
    // Tr[rho^2] for Hermitian rho.
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      for (int j = 0; j < dim(); ++j) {
        s += (mat[i * dim() + j] * mat[j * dim() + i]).real();
      }
    }
    return s;
  }
};

inline DensityMatrix reduced_density(const DenseState& state,
                                     const std::vector<int>& sites) {
  int k = static_cast<int>(sites.size());
  if (k < 1 || k > 4) {
    throw std::invalid_argument("reduced_density: need 1..4 sites");
  }
  DensityMatrix rho;
  rho.n_sites = k;
  rho.mat.assign(std::size_t{1} << (2 * k), {0.0, 0.0});
  const auto& amp = state.amplitudes();
  std::uint64_t keep_mask = 0;
  for (int s : sites) keep_mask |= 1ull << s;
  std::uint64_t env_mask = (amp.size() - 1) & ~keep_mask;

  auto sub_index = [&](std::uint64_t n) {
    int idx = 0;
    for (int b = 0; b < k; ++b) {
      if (n & (1ull << sites[b])) idx |= 1 << b;
    }
    return idx;
  };

  for (std::uint64_t n = 0; n < amp.size(); ++n) {
    if (amp[n] == std::complex<double>(0.0, 0.0)) continue;
    int row = sub_index(n);
    std::uint64_t env = n & env_mask;
    // match every m with the same environment bits
    for (std::uint64_t sub = 0;; sub = (sub - keep_mask) & keep_mask) {
      std::uint64_t m = env | sub;
      int col = sub_index(m);
      rho.mat[row * rho.dim() + col] += amp[n] * std::conj(amp[m]);
      if (sub == keep_mask) break;
    }
  }
  return rho;
}

// Mixed-state SRE of order alpha: (log A_alpha + S_2) / (1 - alpha) with
// A_alpha the 2alpha-moment of the Pauli spectrum and S_2 the second
// Renyi entropy.
inline double sre_alpha(const DensityMatrix& rho, double alpha) {
  if (alpha == 1.0) throw std::invalid_argument("sre_alpha: alpha = 1");
  int n = rho.n_sites;
  double a_moment = 0.0;
  for (int code = 0; code < (1 << (2 * n)); ++code) {
    // trace of rho * (tensor of letters); letters indexed by 2-bit fields
    std::complex<double> tr = 0.0;
    for (int r = 0; r < rho.dim(); ++r) {
      for (int c = 0; c < rho.dim(); ++c) {
        // entry (c, r) of the Pauli string: product over sites
        double er = 1.0, ei = 0.0;
        bool zero = false;
        for (int s = 0; s < n && !zero; ++s) {
          int l = (code >> (2 * s)) & 3;
          int rb = (c >> s) & 1, cb = (r >> s) & 1;  // P_{c,r} factor
          double pr = 0.0, pi = 0.0;
          switch (l) {
            case 0: if (rb == cb) pr = 1.0; else zero = true; break;
            case 1: if (rb != cb) pr = 1.0; else zero = true; break;
            case 2: if (rb != cb) pi = (rb == 0 ? -1.0 : 1.0); else zero = true; break;
            case 3: if (rb == cb) pr = (rb == 0 ? 1.0 : -1.0); else zero = true; break;
          }
          if (!zero) {
            double nr = er * pr - ei * pi;
            double ni = er * pi + ei * pr;
            er = nr;
            ei = ni;
          }
        }
        if (!zero) tr += rho.mat[r * rho.dim() + c] * std::complex<double>(er, ei);
      }
    }
    a_moment += std::pow(std::abs(tr), 2.0 * alpha);
  }
  a_moment /= static_cast<double>(1 << n);
  double s2 = -std::log(rho.purity());
  return (std::log(a_moment) + s2) / (1.0 - alpha);
}

// Pure-state SRE of order 2 from the full Pauli spectrum; exponential in
// L, capped at 7 sites. For each x mask the z sum is a Walsh-Hadamard
// transform of f_x[n] = conj(psi[n ^ x]) psi[n], and the Hermitizing
// phase i^{|x & z|} drops out of |c|^4.
inline double sre2_pure_dense(const DenseState& state) {
  int L = state.n_sites();
  if (L > 7) throw std::invalid_argument("sre2_pure_dense: capped at 7 sites");
  const auto& amp = state.amplitudes();
  std::uint64_t dim = amp.size();
  double sum4 = 0.0;
  std::vector<std::complex<double>> f(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    for (std::uint64_t n = 0; n < dim; ++n) f[n] = std::conj(amp[n ^ x]) * amp[n];
    for (std::uint64_t h = 1; h < dim; h <<= 1) {
      for (std::uint64_t n = 0; n < dim; n += h << 1) {
        for (std::uint64_t j = n; j < n + h; ++j) {
          std::complex<double> a = f[j], b = f[j + h];
          f[j] = a + b;
          f[j + h] = a - b;
        }
      }
    }
    for (std::uint64_t z = 0; z < dim; ++z) {
      double a2 = std::norm(f[z]);
      sum4 += a2 * a2;
    }
  }
  return -std::log(sum4 / static_cast<double>(dim));
}

// Schroedinger state matching the incremental Heisenberg trajectory at
// time tau: <psi0| Q_tau |psi0> = <psi_tau| P |psi_tau> requires applying
// layer tau first and layer 1 last.
inline DenseState dense_state_at(const std::vector<SiteKind>& kinds,
                                 const BrickworkSchedule& schedule,
                                 const LayerSampler& sampler, int tau) {
  DenseState psi = DenseState::prepare_initial(kinds);
  for (int layer = tau; layer >= 1; --layer) {
    int L = schedule.n_sites;
    for (int k = 0; k < L / 2; ++k) {
      psi.apply_gate_word(sampler.word_for(layer, k), layer_pair(layer, k, L));
    }
  }
  return psi;
}

}  // namespace srespread
