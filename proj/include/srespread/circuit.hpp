#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "srespread/clifford.hpp"
#include "srespread/pauli.hpp"
#include "srespread/rng.hpp"

namespace srespread {

enum class GateKind : std::uint8_t { full_clifford, restricted };

// Brickwork circuit on a periodic ring; odd layers pair (2k, 2k+1), even
// layers pair (2k+1, 2k+2 mod L) including the wraparound bond.
struct BrickworkSchedule {
  int n_sites = 0;
  int depth = 0;
  GateKind gate_kind = GateKind::full_clifford;

  BrickworkSchedule() = default;
  BrickworkSchedule(int L, int T, GateKind kind)
      : n_sites(L), depth(T), gate_kind(kind) {
    if (L <= 0 || L % 2 != 0) {
      throw std::invalid_argument("BrickworkSchedule: n_sites must be even and positive");
    }
    if (T < 0) throw std::invalid_argument("BrickworkSchedule: negative depth");
  }
};

inline std::vector<std::pair<int, int>> pairs_for_layer(int layer_index, int L) {
  if (L <= 0 || L % 2 != 0) {
    throw std::invalid_argument("pairs_for_layer: L must be even and positive");
  }
  if (layer_index < 1) throw std::invalid_argument("pairs_for_layer: layer_index < 1");
  std::vector<std::pair<int, int>> out;
  out.reserve(L / 2);
  if (layer_index % 2 == 1) {
    for (int k = 0; k < L / 2; ++k) out.emplace_back(2 * k, 2 * k + 1);
  } else {
    for (int k = 0; k < L / 2; ++k) out.emplace_back(2 * k + 1, (2 * k + 2) % L);
  }
  return out;
}

inline std::pair<int, int> layer_pair(int layer_index, int pair_index, int L) {
  if (layer_index % 2 == 1) return {2 * pair_index, 2 * pair_index + 1};
  return {2 * pair_index + 1, (2 * pair_index + 2) % L};
}

// Gate source with one positional draw per (sample, layer, pair): the
// stream is keyed, so skipped gates never perturb the ones that are used
// and every worker regenerates identical circuits.
struct LayerSampler {
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;
  GateKind kind = GateKind::full_clifford;
  bool force_identity = false;  // test hook: every gate acts trivially

  static constexpr std::uint64_t kStreamTag = 0x67617465;  // gate slots

  SplitStream stream_for(int layer, int pair_index) const {
    return SplitStream::keyed(master_seed,
                              {kStreamTag, sample_index,
                               static_cast<std::uint64_t>(layer),
                               static_cast<std::uint64_t>(pair_index)});
  }

  const CliffordGate2& gate_for(int layer, int pair_index) const {
    static const CliffordGate2 id = identity_gate();
    if (force_identity) return id;
    SplitStream rng = stream_for(layer, pair_index);
    if (kind == GateKind::full_clifford) return sample_uniform(rng);
    return sample_restricted(rng);
  }

  GateWord word_for(int layer, int pair_index) const {
    if (force_identity) return {};
    SplitStream rng = stream_for(layer, pair_index);
    if (kind == GateKind::full_clifford) {
      return CliffordTable::instance().word(sample_uniform_index(rng));
    }
    return RestrictedTable::instance().word(sample_restricted_tuple(rng));
  }
};

// Conjugates the 2-site restriction of `s` at sites (a, b) through the
// gate's adjoint action. Identity restrictions are left untouched.
inline void apply_gate_inplace(PauliString& s, const CliffordGate2& g, int a, int b) {
  int code = (s.x_bit(a) ? 1 : 0) | (s.z_bit(a) ? 2 : 0) | (s.x_bit(b) ? 4 : 0) |
             (s.z_bit(b) ? 8 : 0);
  if (code == 0) return;
  int oc = g.out_code[code];
  s.set_bits_raw(a, oc & 1, oc & 2);
  s.set_bits_raw(b, oc & 4, oc & 8);
  s.add_phase_exp(g.phase_delta[code]);
}

inline void apply_layer_inplace(PauliString& s, int layer_index,
                                const LayerSampler& sampler) {
  int L = s.n_sites();
  for (int k = 0; k < L / 2; ++k) {
    auto [a, b] = layer_pair(layer_index, k, L);
    int code = (s.x_bit(a) ? 1 : 0) | (s.z_bit(a) ? 2 : 0) | (s.x_bit(b) ? 4 : 0) |
               (s.z_bit(b) ? 8 : 0);
    if (code == 0) continue;  // out of support; positional draw makes skipping exact
    const CliffordGate2& g = sampler.gate_for(layer_index, k);
    int oc = g.out_code[code];
    s.set_bits_raw(a, oc & 1, oc & 2);
    s.set_bits_raw(b, oc & 4, oc & 8);
    s.add_phase_exp(g.phase_delta[code]);
  }
}

// Incremental Heisenberg trajectory: Q_0 = p0, Q_tau = A_tau(Q_{tau-1})
// with a fresh layer of parity tau drawn at each step. Layers are i.i.d.,
// so ensemble statistics match conjugating through a depth-T brickwork
// circuit while keeping every intermediate time readable in one pass.
inline std::vector<PauliString> evolve_trajectory(const PauliString& p0,
                                                  const BrickworkSchedule& schedule,
                                                  const LayerSampler& sampler) {
  if (p0.n_sites() != schedule.n_sites) {
    throw std::invalid_argument("evolve_trajectory: string/schedule size mismatch");
  }
  std::vector<PauliString> traj;
  traj.reserve(schedule.depth + 1);
  traj.push_back(p0);
  PauliString cur = p0;
  for (int tau = 1; tau <= schedule.depth; ++tau) {
    apply_layer_inplace(cur, tau, sampler);
    traj.push_back(cur);
  }
  return traj;
}

// Two light-cone conventions, distinguished by which layer parity sits
// innermost in the conjugation:
//   backward_from_depth -- backward cone of site i at depth t in a circuit
//     whose innermost conjugating layer has the parity of t.
//   incremental -- the evolve_trajectory convention; the innermost layer
//     is layer 1 (odd), after which every layer widens both ends by one.
enum class LightconeConvention : std::uint8_t { backward_from_depth, incremental };

// Raw interval before periodic reduction; ends may fall outside [0, L).
inline std::pair<int, int> lightcone_interval(int i, int t,
                                              LightconeConvention convention) {
  if (t < 1) throw std::invalid_argument("lightcone_interval: t < 1");
  bool odd_site = (i % 2 != 0);
  if (convention == LightconeConvention::backward_from_depth) {
    bool odd_time = (t % 2 != 0);
    if (odd_site == odd_time) return {i - t, i + t - 1};
    return {i - t + 1, i + t};
  }
  if (odd_site) return {i - t, i + t - 1};
  return {i - t + 1, i + t};
}

// Membership of `site` in a raw interval taken mod L.
inline bool interval_contains_mod(std::pair<int, int> interval, int site, int L) {
  auto [s, e] = interval;
  if (e - s + 1 >= L) return true;
  int rel = ((site - s) % L + L) % L;
  return rel <= e - s;
}

inline bool in_lightcone(int site, int i, int t, int L,
                         LightconeConvention convention) {
  if (t < 1) return site == i;
  return interval_contains_mod(lightcone_interval(i, t, convention), site, L);
}

}  // namespace srespread
