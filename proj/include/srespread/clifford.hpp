#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "srespread/pauli.hpp"
#include "srespread/rng.hpp"

namespace srespread {

// Primitive gates on a qubit pair; slot indices are 0 and 1.
enum class Primitive : std::uint8_t { H0, H1, S0, S1, CX01, CX10 };

inline const char* primitive_name(Primitive p) {
  static constexpr const char* names[6] = {"H0", "H1", "S0", "S1", "CX01", "CX10"};
  return names[static_cast<int>(p)];
}

// Generator word in unitary order: front() is applied to states first.
struct GateWord {
  std::vector<Primitive> ops;

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (i) s.push_back(' ');
      s += primitive_name(ops[i]);
    }
    return s;
  }
};

// Two-site Hermitian Pauli as a 4-bit letter code plus sign. Code bits:
// x0 | z0<<1 | x1<<2 | z1<<3.
struct SignedPauli2 {
  std::uint8_t code = 0;
  std::int8_t sign = 1;

  bool operator==(const SignedPauli2&) const = default;
};

inline int pauli2_y_count(std::uint8_t code) {
  return ((code & 3) == 3 ? 1 : 0) + (((code >> 2) & 3) == 3 ? 1 : 0);
}

inline PauliString pauli2_to_string(SignedPauli2 p) {
  PauliString s = PauliString::identity(2);
  static constexpr Letter table[4] = {Letter::I, Letter::X, Letter::Z, Letter::Y};
  s.set_letter(0, table[p.code & 3]);
  s.set_letter(1, table[(p.code >> 2) & 3]);
  if (p.sign < 0) s.negate();
  return s;
}

inline SignedPauli2 pauli2_from_string(const PauliString& s) {
  if (s.n_sites() != 2) throw std::invalid_argument("pauli2_from_string: need 2 sites");
  SignedPauli2 p;
  p.code = static_cast<std::uint8_t>((s.x_bit(0) ? 1 : 0) | (s.z_bit(0) ? 2 : 0) |
                                     (s.x_bit(1) ? 4 : 0) | (s.z_bit(1) ? 8 : 0));
  p.sign = static_cast<std::int8_t>(s.sign());
  return p;
}

// Adjoint action A(P) = C^dag P C of a two-qubit Clifford element, stored
// as the signed images of the generators X0, Z0, X1, Z1 plus a lookup
// table over all 16 two-site Paulis. The phase_delta table is expressed
// in the x/z-mask convention so a gate application to an embedded pair of
// a long string is a code swap plus a mod-4 phase increment.
struct CliffordGate2 {
  std::array<SignedPauli2, 4> images{};      // A(X0), A(Z0), A(X1), A(Z1)
  std::array<std::uint8_t, 16> out_code{};   // input letter code -> output code
  std::array<std::uint8_t, 16> phase_delta{};  // mod-4 increment of phase_exp

  // Dedup key: Clifford element modulo global phase.
  std::uint32_t key() const {
    std::uint32_t k = 0;
    for (int i = 0; i < 4; ++i) {
      k |= static_cast<std::uint32_t>(images[i].code | (images[i].sign < 0 ? 16 : 0))
           << (5 * i);
    }
    return k;
  }

  SignedPauli2 apply(SignedPauli2 p) const {
    int in_y = pauli2_y_count(p.code);
    std::uint8_t oc = out_code[p.code];
    int out_y = pauli2_y_count(oc);
    // phase_delta = (out_y - in_y + 2*[sign flip]) mod 4; recover the sign.
    int d = (phase_delta[p.code] - (out_y - in_y)) & 3;
    return SignedPauli2{oc, static_cast<std::int8_t>(d == 0 ? p.sign : -p.sign)};
  }

  bool operator==(const CliffordGate2& o) const { return images == o.images; }

  void rebuild_tables() {
    for (int code = 0; code < 16; ++code) {
      // sigma = i^y * X0^x0 Z0^z0 X1^x1 Z1^z1; push generators through the
      // adjoint action and multiply the images in that fixed order.
      PauliString acc = PauliString::identity(2);
      acc.set_phase_exp(pauli2_y_count(static_cast<std::uint8_t>(code)));
      if (code & 1) acc.multiply_inplace(pauli2_to_string(images[0]));
      if (code & 2) acc.multiply_inplace(pauli2_to_string(images[1]));
      if (code & 4) acc.multiply_inplace(pauli2_to_string(images[2]));
      if (code & 8) acc.multiply_inplace(pauli2_to_string(images[3]));
      SignedPauli2 out = pauli2_from_string(acc);
      out_code[code] = out.code;
      int dy = pauli2_y_count(out.code) - pauli2_y_count(static_cast<std::uint8_t>(code));
      phase_delta[code] = static_cast<std::uint8_t>((dy + (out.sign < 0 ? 2 : 0)) & 3);
    }
    if (out_code[0] != 0 || phase_delta[0] != 0) {
      throw std::logic_error("CliffordGate2: identity not fixed");
    }
  }
};

inline CliffordGate2 identity_gate() {
  CliffordGate2 g;
  g.images[0] = {1, 1};   // X0
  g.images[1] = {2, 1};   // Z0
  g.images[2] = {4, 1};   // X1
  g.images[3] = {8, 1};   // Z1
  g.rebuild_tables();
  return g;
}

inline CliffordGate2 primitive_gate(Primitive p) {
  CliffordGate2 g = identity_gate();
  switch (p) {
    case Primitive::H0:  // X0 <-> Z0
      g.images[0] = {2, 1};
      g.images[1] = {1, 1};
      break;
    case Primitive::H1:
      g.images[2] = {8, 1};
      g.images[3] = {4, 1};
      break;
    case Primitive::S0:  // S^dag X S = -Y
      g.images[0] = {3, -1};
      break;
    case Primitive::S1:
      g.images[2] = {12, -1};
      break;
    case Primitive::CX01:  // control 0, target 1
      g.images[0] = {5, 1};   // X0 -> X0 X1
      g.images[3] = {10, 1};  // Z1 -> Z0 Z1
      break;
    case Primitive::CX10:
      g.images[2] = {5, 1};   // X1 -> X0 X1
      g.images[1] = {10, 1};  // Z0 -> Z0 Z1
      break;
  }
  g.rebuild_tables();
  return g;
}

// Composite of two adjoint actions; the result corresponds to the unitary
// g*h, i.e. h applied to states first, then g. On operators that is
// A_{gh}(P) = A_h(A_g(P)).
inline CliffordGate2 compose(const CliffordGate2& g, const CliffordGate2& h) {
  CliffordGate2 out;
  for (int i = 0; i < 4; ++i) out.images[i] = h.apply(g.images[i]);
  out.rebuild_tables();
  return out;
}

// A(p) for a 2-site Hermitian PauliString.
inline PauliString conjugate_pauli(const CliffordGate2& g, const PauliString& p) {
  if (p.n_sites() != 2) throw std::invalid_argument("conjugate_pauli: need 2 sites");
  if (!p.is_hermitian()) throw std::invalid_argument("conjugate_pauli: non-Hermitian input");
  SignedPauli2 sp = pauli2_from_string(p);
  return pauli2_to_string(g.apply(sp));
}

// Structural invariants of a valid adjoint action (anticommuting
// conjugate pairs, commuting cross pairs, invertible symplectic part).
inline bool gate_is_valid(const CliffordGate2& g) {
  auto str = [&](int i) { return pauli2_to_string(g.images[i]); };
  for (int i = 0; i < 4; ++i) {
    PauliString s = str(i);
    if (s.is_identity() || !s.is_hermitian()) return false;
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      bool want_anti = (i == 0 && j == 1) || (i == 2 && j == 3);
      if (commutes(str(i), str(j)) == want_anti) return false;
    }
  }
  // Images generate the Pauli group mod phases iff the 4x4 GF(2) matrix of
  // (x0, z0, x1, z1) rows is invertible.
  std::array<std::uint8_t, 4> rows{};
  for (int i = 0; i < 4; ++i) rows[i] = g.images[i].code;
  std::uint8_t used = 0;
  for (int col = 0; col < 4; ++col) {
    int pivot = -1;
    for (int r = 0; r < 4; ++r) {
      if (!((used >> r) & 1) && ((rows[r] >> col) & 1)) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) return false;
    used |= 1 << pivot;
    for (int r = 0; r < 4; ++r) {
      if (r != pivot && ((rows[r] >> col) & 1)) rows[r] ^= rows[pivot];
    }
  }
  return true;
}

// Full enumeration of the two-qubit Clifford group modulo global phase:
// breadth-first closure from the identity under the six primitives, each
// element paired with a shortest generator word. Deterministic order.
class CliffordTable {
 public:
  static const CliffordTable& instance() {
    static const CliffordTable table;
    return table;
  }

  std::size_t size() const { return gates_.size(); }
  const CliffordGate2& gate(std::size_t i) const { return gates_[i]; }
  const GateWord& word(std::size_t i) const { return words_[i]; }

  // Index of an adjoint action, or -1 if absent.
  int find(const CliffordGate2& g) const {
    auto it = index_.find(g.key());
    return it == index_.end() ? -1 : static_cast<int>(it->second);
  }

 private:
  CliffordTable() {
    std::array<CliffordGate2, 6> prim;
    for (int p = 0; p < 6; ++p) prim[p] = primitive_gate(static_cast<Primitive>(p));

    gates_.reserve(11520);
    words_.reserve(11520);
    gates_.push_back(identity_gate());
    words_.push_back({});
    index_.emplace(gates_[0].key(), 0);

    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
      std::size_t cur = frontier.front();
      frontier.pop_front();
      for (int p = 0; p < 6; ++p) {
        // Appending primitive p to the word applies it after the current
        // unitary: new = compose(prim, cur).
        CliffordGate2 next = compose(prim[p], gates_[cur]);
        auto [it, inserted] = index_.emplace(next.key(), gates_.size());
        if (!inserted) continue;
        GateWord w = words_[cur];
        w.ops.push_back(static_cast<Primitive>(p));
        gates_.push_back(next);
        words_.push_back(std::move(w));
        frontier.push_back(gates_.size() - 1);
      }
    }
  }

  std::vector<CliffordGate2> gates_;
  std::vector<GateWord> words_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
};

inline std::size_t sample_uniform_index(SplitStream& rng) {
  return static_cast<std::size_t>(rng.below(CliffordTable::instance().size()));
}

inline const CliffordGate2& sample_uniform(SplitStream& rng) {
  return CliffordTable::instance().gate(sample_uniform_index(rng));
}

// Restricted gate set: a CNOT with random direction followed by two
// independent single-qubit draws, each uniform over {H, S} placed on a
// uniformly chosen qubit of the pair. The two draws may hit the same
// qubit; the first draw acts first in unitary order. 32 raw tuples,
// indexed by bits (dir | g1<<1 | q1<<2 | g2<<3 | q2<<4).
class RestrictedTable {
 public:
  static constexpr int kTuples = 32;

  static const RestrictedTable& instance() {
    static const RestrictedTable table;
    return table;
  }

  const CliffordGate2& gate(int tuple) const { return gates_[tuple]; }
  const GateWord& word(int tuple) const { return words_[tuple]; }

 private:
  RestrictedTable() {
    for (int t = 0; t < kTuples; ++t) {
      bool dir10 = t & 1;
      bool g1_s = (t >> 1) & 1;
      int q1 = (t >> 2) & 1;
      bool g2_s = (t >> 3) & 1;
      int q2 = (t >> 4) & 1;
      GateWord w;
      w.ops.push_back(dir10 ? Primitive::CX10 : Primitive::CX01);
      w.ops.push_back(single(g1_s, q1));
      w.ops.push_back(single(g2_s, q2));
      CliffordGate2 g = primitive_gate(w.ops[0]);
      g = compose(primitive_gate(w.ops[1]), g);
      g = compose(primitive_gate(w.ops[2]), g);
      gates_[t] = g;
      words_[t] = std::move(w);
    }
  }

  static Primitive single(bool is_s, int qubit) {
    if (is_s) return qubit ? Primitive::S1 : Primitive::S0;
    return qubit ? Primitive::H1 : Primitive::H0;
  }

  std::array<CliffordGate2, kTuples> gates_;
  std::array<GateWord, kTuples> words_;
};

inline int sample_restricted_tuple(SplitStream& rng) {
  return static_cast<int>(rng.next() & 31);
}

inline const CliffordGate2& sample_restricted(SplitStream& rng) {
  return RestrictedTable::instance().gate(sample_restricted_tuple(rng));
}

}  // namespace srespread
