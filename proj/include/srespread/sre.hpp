#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srespread/magic_state.hpp"

namespace srespread {

// Pauli spectrum of a reduced state: |c_P| over the local Pauli basis,
// identity coefficient first (and equal to 1 for unit-trace states).
struct PauliSpectrum {
  std::vector<double> values;
};

// Exact integer summary of a spectrum whose entries are 0, 1/sqrt(2) or 1:
// a entries of modulus 1 (including the identity), b of modulus 1/sqrt(2).
struct SpectrumCounts {
  int ones = 0;
  int halves = 0;
};

// alpha=2 SRE from counts: -log((a + b/4) / (a + b/2)), natural log.
inline double sre2_from_counts(SpectrumCounts c) {
  if (c.ones < 1) {
    throw std::invalid_argument("sre2_from_counts: spectrum lacks the identity entry");
  }
  double s4 = c.ones + 0.25 * c.halves;
  double s2 = c.ones + 0.5 * c.halves;
  return -std::log(s4 / s2);
}

inline double sre2_from_values(std::span<const double> values) {
  double s2 = 0.0, s4 = 0.0;
  for (double v : values) {
    double v2 = v * v;
    s2 += v2;
    s4 += v2 * v2;
  }
  if (s2 == 0.0) throw std::invalid_argument("sre2_from_values: all-zero spectrum");
  return -std::log(s4 / s2);
}

inline double sre2_from_values(const PauliSpectrum& s) {
  return sre2_from_values(std::span<const double>(s.values));
}

// Closed form for the T state: M^(alpha) = log[(1 + 2/2^alpha)/2] / (1-alpha).
inline double sre_alpha_t_closed_form(double alpha) {
  if (alpha == 1.0) {
    throw std::invalid_argument("sre_alpha_t_closed_form: alpha = 1");
  }
  return std::log((1.0 + 2.0 * std::pow(2.0, -alpha)) / 2.0) / (1.0 - alpha);
}

// The four single-qubit spectra a single injected T state can produce.
enum class SingleQubitSpectrumClass : std::uint8_t {
  stabilizer_pure_like,  // {1, 0, 0, 0}
  stabilizer,            // {1, 1, 0, 0}
  half_magic,            // {1, 1/sqrt2, 0, 0}
  full_magic,            // {1, 1/sqrt2, 1/sqrt2, 0}
};

inline const char* spectrum_class_name(SingleQubitSpectrumClass c) {
  static constexpr const char* names[4] = {"stabilizer_pure_like", "stabilizer",
                                           "half_magic", "full_magic"};
  return names[static_cast<int>(c)];
}

inline double spectrum_class_sre(SingleQubitSpectrumClass c) {
  switch (c) {
    case SingleQubitSpectrumClass::stabilizer_pure_like:
    case SingleQubitSpectrumClass::stabilizer: return 0.0;
    case SingleQubitSpectrumClass::half_magic: return sre2_from_counts({1, 1});
    case SingleQubitSpectrumClass::full_magic: return sre2_from_counts({1, 2});
  }
  return 0.0;
}

inline SingleQubitSpectrumClass classify_single_qubit_counts(SpectrumCounts c) {
  if (c.ones == 1 && c.halves == 0) return SingleQubitSpectrumClass::stabilizer_pure_like;
  if (c.ones == 2 && c.halves == 0) return SingleQubitSpectrumClass::stabilizer;
  if (c.ones == 1 && c.halves == 1) return SingleQubitSpectrumClass::half_magic;
  if (c.ones == 1 && c.halves == 2) return SingleQubitSpectrumClass::full_magic;
  throw std::domain_error("classify_single_qubit_counts: spectrum (" +
                          std::to_string(c.ones) + ", " + std::to_string(c.halves) +
                          ") is not a single-T spectrum");
}

// Classifies a length-4 spectrum whose entries must be exactly 0,
// 1/sqrt(2), or 1 (the exact-amplitude evaluator guarantees this for
// single-T experiments; anything else signals a violated assumption).
inline SingleQubitSpectrumClass classify_single_qubit_spectrum(const PauliSpectrum& s) {
  if (s.values.size() != 4) {
    throw std::invalid_argument("classify_single_qubit_spectrum: need 4 values");
  }
  SpectrumCounts c;
  for (double v : s.values) {
    double a = std::abs(v);
    if (a == 1.0) {
      ++c.ones;
    } else if (a == kInvSqrt2) {
      ++c.halves;
    } else if (a != 0.0) {
      throw std::domain_error("classify_single_qubit_spectrum: value outside {0, 1/sqrt2, 1}");
    }
  }
  if (s.values.empty() || s.values[0] != 1.0) {
    throw std::invalid_argument("classify_single_qubit_spectrum: identity entry must be 1");
  }
  return classify_single_qubit_counts(c);
}

// ---------------------------------------------------------------------------
// Enumeration of physically allowed two-qubit Pauli spectra.
//
// Coefficients live in {0, +-1/sqrt2, +-1}, so everything below works in
// the ring Z[sqrt2]: after scaling the reconstructed density matrix by
// 4*sqrt2 all entries are p + q*sqrt2 with integer p, q, and the PSD test
// is a sign test on exact characteristic-polynomial coefficients.

namespace detail {

struct Q2 {
  long long p = 0, q = 0;  // p + q*sqrt(2)

  Q2 operator+(Q2 o) const { return {p + o.p, q + o.q}; }
  Q2 operator-(Q2 o) const { return {p - o.p, q - o.q}; }
  Q2 operator*(Q2 o) const { return {p * o.p + 2 * q * o.q, p * o.q + q * o.p}; }
  Q2 operator-() const { return {-p, -q}; }
  bool is_zero() const { return p == 0 && q == 0; }

  // sign of p + q*sqrt2
  int sign() const {
    if (p == 0 && q == 0) return 0;
    if (p >= 0 && q >= 0) return 1;
    if (p <= 0 && q <= 0) return -1;
    // opposite signs: compare p^2 with 2 q^2
    long long pp = p * p, qq = 2 * q * q;
    if (p > 0) return pp > qq ? 1 : (pp < qq ? -1 : 0);
    return pp < qq ? 1 : (pp > qq ? -1 : 0);
  }
};

struct C2c {
  Q2 re, im;

  C2c operator+(C2c o) const { return {re + o.re, im + o.im}; }
  C2c operator-(C2c o) const { return {re - o.re, im - o.im}; }
  C2c operator*(C2c o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
};

using Mat4 = std::array<std::array<C2c, 4>, 4>;

// Single-qubit Pauli entries as integer complex pairs.
inline void pauli_entry(int letter, int r, int c, int& re, int& im) {
  re = 0;
  im = 0;
  switch (letter) {
    case 0: if (r == c) re = 1; break;                    // I
    case 1: if (r != c) re = 1; break;                    // X
    case 2: if (r != c) im = (r == 0 ? -1 : 1); break;    // Y
    case 3: if (r == c) re = (r == 0 ? 1 : -1); break;    // Z
  }
}

// Adds value * (sigma_a x sigma_b) to m; value is the coefficient times
// sqrt2 (so +-1 encodes +-1/sqrt2 and +-sqrt2 encodes +-1).
inline void add_scaled_pauli(Mat4& m, int letter_a, int letter_b, Q2 value) {
  for (int ra = 0; ra < 2; ++ra) {
    for (int ca = 0; ca < 2; ++ca) {
      int ar, ai;
      pauli_entry(letter_a, ra, ca, ar, ai);
      if (ar == 0 && ai == 0) continue;
      for (int rb = 0; rb < 2; ++rb) {
        for (int cb = 0; cb < 2; ++cb) {
          int br, bi;
          pauli_entry(letter_b, rb, cb, br, bi);
          if (br == 0 && bi == 0) continue;
          // (ar + i ai)(br + i bi), each factor is 0 or +-1/+-i
          int er = ar * br - ai * bi;
          int ei = ar * bi + ai * br;
          C2c& cell = m[2 * ra + rb][2 * ca + cb];
          if (er) cell.re = cell.re + (er > 0 ? value : -value);
          if (ei) cell.im = cell.im + (ei > 0 ? value : -value);
        }
      }
    }
  }
}

inline Q2 real_of_det3(const Mat4& m, int i, int j, int k) {
  const int idx[3] = {i, j, k};
  C2c det{{0, 0}, {0, 0}};
  for (int c = 0; c < 3; ++c) {
    C2c a = m[idx[0]][idx[c]];
    int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
    C2c minor = m[idx[1]][idx[c1]] * m[idx[2]][idx[c2]] -
                m[idx[1]][idx[c2]] * m[idx[2]][idx[c1]];
    det = det + a * minor;
  }
  return det.re;  // Hermitian principal minors are real
}

inline Q2 real_of_det4(const Mat4& m) {
  C2c det{{0, 0}, {0, 0}};
  for (int c = 0; c < 4; ++c) {
    // 3x3 minor of rows 1..3 without column c
    int cols[3], n = 0;
    for (int cc = 0; cc < 4; ++cc) {
      if (cc != c) cols[n++] = cc;
    }
    C2c minor{{0, 0}, {0, 0}};
    for (int x = 0; x < 3; ++x) {
      int x1 = (x + 1) % 3, x2 = (x + 2) % 3;
      C2c sub = m[2][cols[x1]] * m[3][cols[x2]] - m[2][cols[x2]] * m[3][cols[x1]];
      minor = minor + m[1][cols[x]] * sub;
    }
    C2c term = m[0][c] * minor;
    if (c % 2 == 1) term = C2c{-term.re, -term.im};
    det = det + term;
  }
  return det.re;
}

// PSD test for a Hermitian 4x4 via the characteristic polynomial: all
// elementary symmetric sums of the eigenvalues (= sums of principal
// minors) must be nonnegative.
inline bool psd4(const Mat4& m) {
  Q2 e1{0, 0};
  for (int i = 0; i < 4; ++i) e1 = e1 + m[i][i].re;
  if (e1.sign() < 0) return false;
  Q2 e2{0, 0};
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      Q2 off = m[i][j].re * m[i][j].re + m[i][j].im * m[i][j].im;
      e2 = e2 + m[i][i].re * m[j][j].re - off;
    }
  }
  if (e2.sign() < 0) return false;
  Q2 e3 = real_of_det3(m, 0, 1, 2) + real_of_det3(m, 0, 1, 3) +
          real_of_det3(m, 0, 2, 3) + real_of_det3(m, 1, 2, 3);
  if (e3.sign() < 0) return false;
  return real_of_det4(m).sign() >= 0;
}

}  // namespace detail

struct TwoQubitSpectrumClass {
  int ones = 0;    // a
  int halves = 0;  // b
  double sre = 0.0;

  bool operator<(const TwoQubitSpectrumClass& o) const {
    return ones != o.ones ? ones < o.ones : halves < o.halves;
  }
};

// Brute-force search over all sixteen coefficients with c_II = 1 and the
// other fifteen in {0, +-1/sqrt2, +-1}, pruned by the purity bounds
// (total <= 4, each single-site marginal <= 1 beyond the identity) and
// kept only when the reconstructed 4x4 density matrix is PSD. Returns the
// distinct (a, b) classes with their SRE values.
inline std::vector<TwoQubitSpectrumClass> enumerate_allowed_two_qubit_spectra() {
  using detail::Mat4;
  using detail::Q2;

  // Slot order: A marginals (XI, YI, ZI), B marginals (IX, IY, IZ), then
  // the nine cross terms.
  std::array<std::pair<int, int>, 15> slots{};
  int n = 0;
  for (int a = 1; a < 4; ++a) slots[n++] = {a, 0};
  for (int b = 1; b < 4; ++b) slots[n++] = {0, b};
  for (int a = 1; a < 4; ++a) {
    for (int b = 1; b < 4; ++b) slots[n++] = {a, b};
  }

  // Candidate values v; twice_sq = 2 v^2, scaled = v * sqrt2 in Z[sqrt2].
  struct Candidate {
    int twice_sq;
    Q2 scaled;
    bool is_one;  // |v| == 1
  };
  const std::array<Candidate, 5> values{{
      {0, {0, 0}, false},
      {1, {1, 0}, false},   // +1/sqrt2
      {1, {-1, 0}, false},  // -1/sqrt2
      {2, {0, 1}, true},    // +1
      {2, {0, -1}, true},   // -1
  }};

  std::set<std::pair<int, int>> classes;
  Mat4 m{};
  detail::add_scaled_pauli(m, 0, 0, Q2{0, 1});  // c_II = 1

  // Budgets in units of 2 v^2: marginals <= 2 each, total (non-identity) <= 6.
  auto recurse = [&](auto&& self, int slot, int total, int marg_a, int marg_b,
                     int ones, int halves) -> void {
    if (slot == 15) {
      if (detail::psd4(m)) classes.insert({1 + ones, halves});
      return;
    }
    auto [la, lb] = slots[slot];
    bool in_a = (lb == 0);
    bool in_b = (la == 0);
    for (const Candidate& c : values) {
      int t = total + c.twice_sq;
      if (t > 6) continue;
      int ma = marg_a + (in_a ? c.twice_sq : 0);
      int mb = marg_b + (in_b ? c.twice_sq : 0);
      if (ma > 2 || mb > 2) continue;
      if (!c.scaled.is_zero()) detail::add_scaled_pauli(m, la, lb, c.scaled);
      self(self, slot + 1, t, ma, mb, ones + (c.is_one ? 1 : 0),
           halves + (c.twice_sq == 1 ? 1 : 0));
      if (!c.scaled.is_zero()) detail::add_scaled_pauli(m, la, lb, -c.scaled);
    }
  };
  recurse(recurse, 0, 0, 0, 0, 0, 0);

  std::vector<TwoQubitSpectrumClass> out;
  out.reserve(classes.size());
  for (auto [a, b] : classes) {
    out.push_back({a, b, sre2_from_counts({a, b})});
  }
  return out;
}

}  // namespace srespread
