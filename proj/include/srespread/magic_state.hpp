#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "srespread/pauli.hpp"

namespace srespread {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

enum class SiteKind : std::uint8_t { zero, t_state };

// Exact Pauli expectation factor: zero, or sign * 2^(-half_exponent/2).
// Products stay in this form, so spectrum classification needs no
// floating-point tolerance.
struct ExactAmp {
  bool nonzero = false;
  std::int8_t sign = 1;
  std::uint8_t half_exponent = 0;

  static ExactAmp zero() { return {}; }
  static ExactAmp one() { return {true, 1, 0}; }

  double value() const {
    if (!nonzero) return 0.0;
    double v = std::ldexp(1.0, -static_cast<int>(half_exponent >> 1));
    if (half_exponent & 1) v *= kInvSqrt2;
    return sign < 0 ? -v : v;
  }

  double abs_value() const { return nonzero ? std::abs(value()) : 0.0; }

  ExactAmp& operator*=(const ExactAmp& o) {
    if (!nonzero || !o.nonzero) return *this = zero();
    sign = static_cast<std::int8_t>(sign * o.sign);
    half_exponent = static_cast<std::uint8_t>(half_exponent + o.half_exponent);
    return *this;
  }
};

// Per-site expectation of a Pauli letter on |0> or |T>.
inline ExactAmp site_factor(SiteKind kind, Letter letter) {
  if (kind == SiteKind::zero) {
    switch (letter) {
      case Letter::I:
      case Letter::Z: return ExactAmp::one();
      default: return ExactAmp::zero();
    }
  }
  switch (letter) {
    case Letter::I: return ExactAmp::one();
    case Letter::X: return {true, 1, 1};
    case Letter::Y: return {true, -1, 1};
    case Letter::Z: return ExactAmp::zero();
  }
  return ExactAmp::zero();
}

// Product state of |0> and |T> factors; supplies exact expectations of
// Hermitian Pauli strings, factorized over sites.
class ProductState {
 public:
  static ProductState all_zero(int n_sites) {
    return ProductState(std::vector<SiteKind>(check(n_sites), SiteKind::zero));
  }

  static ProductState with_t_sites(int n_sites, const std::vector<int>& t_sites) {
    std::vector<SiteKind> kinds(check(n_sites), SiteKind::zero);
    for (int m : t_sites) {
      if (m < 0 || m >= n_sites) {
        throw std::out_of_range("ProductState: magic site out of range");
      }
      if (kinds[m] == SiteKind::t_state) {
        throw std::invalid_argument("ProductState: duplicate magic site");
      }
      kinds[m] = SiteKind::t_state;
    }
    return ProductState(std::move(kinds));
  }

  explicit ProductState(std::vector<SiteKind> kinds) : kinds_(std::move(kinds)) {
    n_ = static_cast<int>(kinds_.size());
    check(n_);
    t_mask_.assign(PauliString::word_count(n_), 0);
    full_mask_.assign(PauliString::word_count(n_), 0);
    for (int j = 0; j < n_; ++j) {
      full_mask_[j >> 6] |= 1ull << (j & 63);
      if (kinds_[j] == SiteKind::t_state) {
        t_mask_[j >> 6] |= 1ull << (j & 63);
        magic_sites_.push_back(j);
      }
    }
  }

  int n_sites() const { return n_; }
  SiteKind kind(int site) const { return kinds_[site]; }
  const std::vector<int>& magic_sites() const { return magic_sites_; }
  const std::vector<std::uint64_t>& t_mask() const { return t_mask_; }

  // <psi0| P |psi0> for a Hermitian string, as an exact amplitude.
  ExactAmp expectation(const PauliString& p) const {
    if (p.n_sites() != n_) {
      throw std::invalid_argument("ProductState::expectation: size mismatch");
    }
    if (!p.is_hermitian()) {
      throw std::invalid_argument("ProductState::expectation: non-Hermitian string");
    }
    return expectation_masks(p.x_data(), p.z_data(), p.phase_exp());
  }

  double expectation_value(const PauliString& p) const {
    return expectation(p).value();
  }

  // Mask-level evaluator shared with the Monte Carlo hot loop. The string
  // is i^phase * X^x Z^z; the caller guarantees Hermiticity.
  ExactAmp expectation_masks(const std::uint64_t* x, const std::uint64_t* z,
                             int phase_exp) const {
    int k = 0;       // T sites hit by X or Y
    int y_total = 0;
    int y_on_t = 0;
    for (std::size_t w = 0; w < t_mask_.size(); ++w) {
      std::uint64_t zero_mask = full_mask_[w] & ~t_mask_[w];
      if (x[w] & zero_mask) return ExactAmp::zero();          // X or Y on |0>
      if (z[w] & ~x[w] & t_mask_[w]) return ExactAmp::zero();  // plain Z on |T>
      k += std::popcount(x[w] & t_mask_[w]);
      y_total += std::popcount(x[w] & z[w]);
      y_on_t += std::popcount(x[w] & z[w] & t_mask_[w]);
    }
    int head = (phase_exp - y_total) & 3;
    // Hermitian strings have head 0 or 2.
    int sign = (head == 0 ? 1 : -1) * ((y_on_t & 1) ? -1 : 1);
    return ExactAmp{true, static_cast<std::int8_t>(sign),
                    static_cast<std::uint8_t>(k)};
  }

  // Brute-force count of nonzero expectations over all 4^w Pauli strings
  // supported inside a width-w window (identity outside), taken mod L.
  std::uint64_t count_nonzero_in_region(int start, int width) const {
    if (width < 0 || width > 14) {
      throw std::invalid_argument("count_nonzero_in_region: width must be in [0, 14]");
    }
    std::vector<SiteKind> region(width);
    for (int p = 0; p < width; ++p) region[p] = kinds_[((start + p) % n_ + n_) % n_];
    std::uint64_t count = 0;
    std::uint64_t total = 1ull << (2 * width);
    for (std::uint64_t code = 0; code < total; ++code) {
      bool zero = false;
      for (int p = 0; p < width; ++p) {
        int l = (code >> (2 * p)) & 3;  // 0=I 1=X 2=Y 3=Z
        if (region[p] == SiteKind::zero ? (l == 1 || l == 2) : (l == 3)) {
          zero = true;
          break;
        }
      }
      if (!zero) ++count;
    }
    return count;
  }

 private:
  static int check(int n) {
    if (n <= 0) throw std::invalid_argument("ProductState: n_sites must be positive");
    return n;
  }

  int n_ = 0;
  std::vector<SiteKind> kinds_;
  std::vector<int> magic_sites_;
  std::vector<std::uint64_t> t_mask_;
  std::vector<std::uint64_t> full_mask_;
};

}  // namespace srespread
