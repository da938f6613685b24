#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace srespread {

enum class Letter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char letter_char(Letter l) { return "IXYZ"[static_cast<int>(l)]; }

// Signed Pauli string on n sites, bit-packed: the operator is
// i^phase_exp * prod_j X_j^{x_j} Z_j^{z_j}. A site with x=z=1 holds a Y
// up to the phase bookkeeping (XZ = -iY), so a string is Hermitian iff
// phase_exp and the number of Y sites have equal parity; Hermitian
// strings carry an overall sign of +/-1 in the per-site letter picture.
class PauliString {
 public:
  PauliString() = default;

  static PauliString identity(int n_sites) {
    PauliString p;
    p.n_ = check_sites(n_sites);
    p.x_.assign(word_count(n_sites), 0);
    p.z_.assign(word_count(n_sites), 0);
    p.phase_ = 0;
    return p;
  }

  static PauliString single_site(int site, Letter letter, int n_sites) {
    PauliString p = identity(n_sites);
    if (site < 0 || site >= n_sites) {
      throw std::out_of_range("PauliString::single_site: site out of range");
    }
    p.set_letter(site, letter);
    return p;
  }

  // Parses the debug text form, e.g. "+IXYZ" or "-ZZ".
  static PauliString from_text(const std::string& text) {
    if (text.size() < 2 || (text[0] != '+' && text[0] != '-')) {
      throw std::invalid_argument("PauliString::from_text: expected sign prefix");
    }
    PauliString p = identity(static_cast<int>(text.size()) - 1);
    for (std::size_t j = 1; j < text.size(); ++j) {
      Letter l;
      switch (text[j]) {
        case 'I': l = Letter::I; break;
        case 'X': l = Letter::X; break;
        case 'Y': l = Letter::Y; break;
        case 'Z': l = Letter::Z; break;
        default:
          throw std::invalid_argument("PauliString::from_text: bad letter");
      }
      p.set_letter(static_cast<int>(j) - 1, l);
    }
    if (text[0] == '-') p.phase_ = (p.phase_ + 2) & 3;
    return p;
  }

  int n_sites() const { return n_; }
  int phase_exp() const { return phase_; }
  const std::vector<std::uint64_t>& x_words() const { return x_; }
  const std::vector<std::uint64_t>& z_words() const { return z_; }

  bool x_bit(int site) const { return (x_[site >> 6] >> (site & 63)) & 1; }
  bool z_bit(int site) const { return (z_[site >> 6] >> (site & 63)) & 1; }

  Letter letter_at(int site) const {
    int code = (x_bit(site) ? 1 : 0) | (z_bit(site) ? 2 : 0);
    // code 1 = x only, 2 = z only, 3 = both (Y up to phase).
    static constexpr Letter table[4] = {Letter::I, Letter::X, Letter::Z,
                                        Letter::Y};
    return table[code];
  }

  // Overwrites the letter at `site`, keeping the string's letter-picture
  // sign unchanged (the phase absorbs the Y bookkeeping).
  void set_letter(int site, Letter letter) {
    int dy = (letter_at(site) == Letter::Y) ? -1 : 0;
    std::uint64_t bit = 1ull << (site & 63);
    x_[site >> 6] &= ~bit;
    z_[site >> 6] &= ~bit;
    switch (letter) {
      case Letter::I: break;
      case Letter::X: x_[site >> 6] |= bit; break;
      case Letter::Z: z_[site >> 6] |= bit; break;
      case Letter::Y:
        x_[site >> 6] |= bit;
        z_[site >> 6] |= bit;
        dy += 1;
        break;
    }
    phase_ = (phase_ + dy + 4) & 3;
  }

  int y_count() const {
    int c = 0;
    for (std::size_t w = 0; w < x_.size(); ++w) c += std::popcount(x_[w] & z_[w]);
    return c;
  }

  int weight() const {
    int c = 0;
    for (std::size_t w = 0; w < x_.size(); ++w) c += std::popcount(x_[w] | z_[w]);
    return c;
  }

  bool is_identity() const {
    for (std::size_t w = 0; w < x_.size(); ++w) {
      if (x_[w] | z_[w]) return false;
    }
    return true;
  }

  bool is_hermitian() const { return ((phase_ - y_count()) & 1) == 0; }

  // +1 or -1 for Hermitian strings: the sign s in  s * (tensor of letters).
  int sign() const {
    int k = (phase_ - y_count()) & 3;
    if (k & 1) throw std::logic_error("PauliString::sign: non-Hermitian string");
    return k == 0 ? 1 : -1;
  }

  void negate() { phase_ = (phase_ + 2) & 3; }

  std::vector<int> support() const {
    std::vector<int> out;
    for (std::size_t w = 0; w < x_.size(); ++w) {
      std::uint64_t bits = x_[w] | z_[w];
      while (bits) {
        int b = std::countr_zero(bits);
        out.push_back(static_cast<int>(w) * 64 + b);
        bits &= bits - 1;
      }
    }
    return out;
  }

  // Smallest and largest supported site, or (-1, -1) for the identity.
  std::pair<int, int> support_bounds() const {
    auto s = support();
    if (s.empty()) return {-1, -1};
    return {s.front(), s.back()};
  }

  PauliString& multiply_inplace(const PauliString& q) {
    if (q.n_ != n_) {
      throw std::invalid_argument("PauliString::multiply: length mismatch");
    }
    int cross = 0;
    for (std::size_t w = 0; w < x_.size(); ++w) {
      cross += std::popcount(z_[w] & q.x_[w]);
      x_[w] ^= q.x_[w];
      z_[w] ^= q.z_[w];
    }
    phase_ = (phase_ + q.phase_ + 2 * cross) & 3;
    return *this;
  }

  friend PauliString multiply(PauliString p, const PauliString& q) {
    p.multiply_inplace(q);
    return p;
  }

  friend bool commutes(const PauliString& p, const PauliString& q) {
    if (q.n_ != p.n_) {
      throw std::invalid_argument("commutes: length mismatch");
    }
    int form = 0;
    for (std::size_t w = 0; w < p.x_.size(); ++w) {
      form ^= std::popcount(p.x_[w] & q.z_[w]) ^ std::popcount(p.z_[w] & q.x_[w]);
    }
    return (form & 1) == 0;
  }

  bool operator==(const PauliString& o) const {
    return n_ == o.n_ && phase_ == o.phase_ && x_ == o.x_ && z_ == o.z_;
  }
  bool operator!=(const PauliString& o) const { return !(*this == o); }

  // Debug text form: sign prefix plus letters, e.g. "+IXYZ".
  std::string to_string() const {
    std::string s;
    s.reserve(n_ + 1);
    s.push_back(sign() > 0 ? '+' : '-');
    for (int j = 0; j < n_; ++j) s.push_back(letter_char(letter_at(j)));
    return s;
  }

  // Direct mask access for hot loops; words beyond n_sites are zero.
  std::uint64_t* x_data() { return x_.data(); }
  std::uint64_t* z_data() { return z_.data(); }
  const std::uint64_t* x_data() const { return x_.data(); }
  const std::uint64_t* z_data() const { return z_.data(); }
  int word_count() const { return static_cast<int>(x_.size()); }
  void set_phase_exp(int p) { phase_ = p & 3; }
  void add_phase_exp(int d) { phase_ = (phase_ + d) & 3; }

  // Writes the x/z bits of one site without phase bookkeeping; callers
  // must account for the Y-count change themselves (gate tables do).
  void set_bits_raw(int site, bool x, bool z) {
    std::uint64_t bit = 1ull << (site & 63);
    x_[site >> 6] = (x_[site >> 6] & ~bit) | (x ? bit : 0);
    z_[site >> 6] = (z_[site >> 6] & ~bit) | (z ? bit : 0);
  }

  static std::size_t word_count(int n_sites) {
    return static_cast<std::size_t>((n_sites + 63) / 64);
  }

 private:
  static int check_sites(int n) {
    if (n <= 0) throw std::invalid_argument("PauliString: n_sites must be positive");
    return n;
  }

  int n_ = 0;
  int phase_ = 0;  // exponent of i, mod 4
  std::vector<std::uint64_t> x_;
  std::vector<std::uint64_t> z_;
};

}  // namespace srespread
