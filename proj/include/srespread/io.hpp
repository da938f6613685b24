#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srespread/report.hpp"

namespace srespread {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a over the canonical key=value form of the physics-relevant
// configuration; thread count and output paths do not participate.
inline std::string canonical_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "length=" << cfg.n_sites << "\n";
  os << "depth=" << cfg.depth << "\n";
  os << "samples=" << cfg.samples << "\n";
  os << "seed=" << cfg.master_seed << "\n";
  os << "magic-sites=";
  for (std::size_t i = 0; i < cfg.magic_sites.size(); ++i) {
    if (i) os << ',';
    os << cfg.magic_sites[i];
  }
  os << "\n";
  os << "circuit=" << (cfg.gate_kind == GateKind::full_clifford ? "full-clifford" : "restricted")
     << "\n";
  os << "force-identity-gates=" << (cfg.force_identity_gates ? 1 : 0) << "\n";
  auto window = [&](const char* name, const std::optional<Window>& w) {
    os << name << "=";
    if (w) os << w->lo << ',' << w->hi;
    else os << "default";
    os << "\n";
  };
  window("gamma-window", cfg.analysis.gamma_window);
  window("alpha-window", cfg.analysis.alpha_window);
  window("residual-window", cfg.analysis.residual_window);
  window("beta-window", cfg.analysis.beta_window);
  os << "interior-margin=" << cfg.analysis.interior_margin << "\n";
  os << "include-threshold=" << cfg.analysis.include_threshold << "\n";
  os << "bootstrap=" << cfg.analysis.bootstrap_resamples << "\n";
  return os.str();
}

inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : canonical_config_text(cfg)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string stamp_line(const SpreadProfile& profile) {
  return std::string("# srespread v") + kVersion + " seed=" +
         std::to_string(profile.config.master_seed) + " config=" +
         config_hash(profile.config) + "\n";
}

}  // namespace detail

inline void write_profile_csv(const std::filesystem::path& path,
                              const SpreadProfile& profile) {
  std::string text = detail::stamp_line(profile);
  text += "t,site,mean_sre,sem,n_samples\n";
  const int L = profile.config.n_sites;
  for (int t = 0; t <= profile.config.depth; ++t) {
    for (int i = 0; i < L; ++i) {
      text += std::to_string(t);
      text += ',';
      text += std::to_string(i);
      text += ',';
      text += detail::fmt_double(profile.mean_at(i, t));
      text += ',';
      text += detail::fmt_double(profile.sem_at(i, t));
      text += ',';
      text += std::to_string(profile.config.samples);
      text += '\n';
    }
  }
  detail::write_file(path, text);
}

inline void write_chunk_means_csv(const std::filesystem::path& path,
                                  const SpreadProfile& profile) {
  std::string text = detail::stamp_line(profile);
  text += "chunk,count,t,site,mean\n";
  const int L = profile.config.n_sites;
  const int cells = profile.cells();
  for (int c = 0; c < profile.n_chunks; ++c) {
    const double* cm = &profile.chunk_mean[static_cast<std::size_t>(c) * cells];
    for (int t = 0; t <= profile.config.depth; ++t) {
      for (int i = 0; i < L; ++i) {
        text += std::to_string(c);
        text += ',';
        text += std::to_string(profile.chunk_count[c]);
        text += ',';
        text += std::to_string(t);
        text += ',';
        text += std::to_string(i);
        text += ',';
        text += detail::fmt_double(cm[t * L + i]);
        text += '\n';
      }
    }
  }
  detail::write_file(path, text);
}

inline void write_normalized_csv(const std::filesystem::path& path,
                                 const SpreadProfile& profile,
                                 const FitReport& report) {
  std::string text = detail::stamp_line(profile);
  text += "t,site,a,included_flag\n";
  const int L = profile.config.n_sites;
  for (int t = 0; t <= profile.config.depth; ++t) {
    bool inc = t < static_cast<int>(report.total.included.size()) &&
               report.total.included[t];
    for (int i = 0; i < L; ++i) {
      double a = inc ? profile.mean_at(i, t) / report.total.value[t] : 0.0;
      text += std::to_string(t);
      text += ',';
      text += std::to_string(i);
      text += ',';
      text += detail::fmt_double(a);
      text += ',';
      text += (inc ? '1' : '0');
      text += '\n';
    }
  }
  detail::write_file(path, text);
}

namespace detail {

inline nlohmann::ordered_json fit_to_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["ok"] = f.ok;
  if (f.ok) {
    j["value"] = f.value;
    j["se"] = f.se;
    j["r2"] = f.r2;
  } else {
    j["error"] = f.error;
  }
  j["window"] = {f.window.lo, f.window.hi};
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const SpreadProfile& profile,
                                             const FitReport& rep) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["seed"] = profile.config.master_seed;
  j["config_hash"] = config_hash(profile.config);
  j["windows"] = {{"gamma", {rep.gamma_window.lo, rep.gamma_window.hi}},
                  {"alpha", {rep.alpha_window.lo, rep.alpha_window.hi}},
                  {"residual", {rep.residual_window.lo, rep.residual_window.hi}},
                  {"beta", {rep.beta_window.lo, rep.beta_window.hi}}};
  j["interior_margin"] = rep.interior_margin;
  j["include_threshold"] = rep.include_threshold;
  j["bootstrap_resamples"] = rep.bootstrap_resamples;

  nlohmann::ordered_json totals = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < rep.total.value.size(); ++t) {
    totals.push_back({{"t", t},
                      {"value", rep.total.value[t]},
                      {"se", rep.total.se[t]},
                      {"included", static_cast<bool>(rep.total.included[t])}});
  }
  j["total_sre"] = std::move(totals);
  j["gamma"] = detail::fit_to_json(rep.gamma);

  nlohmann::ordered_json alpha = nlohmann::ordered_json::array();
  for (const AlphaEntry& e : rep.alpha) {
    nlohmann::ordered_json je{{"t", e.t}, {"site", e.site}, {"defined", e.defined},
                              {"interior", e.interior}};
    if (e.defined) je["value"] = e.value;
    alpha.push_back(std::move(je));
  }
  j["alpha"] = {{"entries", std::move(alpha)},
                {"interior_count", rep.alpha_interior_count},
                {"interior_mean", rep.alpha_interior_mean},
                {"interior_se", rep.alpha_interior_se},
                {"diff_vs_exp_gamma", rep.alpha_gamma_diff},
                {"diff_vs_exp_gamma_se", rep.alpha_gamma_diff_se}};

  nlohmann::ordered_json residuals = nlohmann::ordered_json::array();
  for (const ResidualEntry& e : rep.residuals) {
    residuals.push_back({{"t", e.t}, {"site", e.site}, {"r", e.r}, {"se", e.se}});
  }
  j["diffusion_residuals"] = {{"entries", std::move(residuals)},
                              {"skipped_t", rep.residual_skipped_t},
                              {"frac_within_3se", rep.residual_frac_within_3se}};

  nlohmann::ordered_json swaps = nlohmann::ordered_json::array();
  for (const SwapEntry& e : rep.swap) {
    swaps.push_back({{"t", e.t},
                     {"site", e.site},
                     {"delta", e.delta},
                     {"se", e.se},
                     {"interior", e.interior}});
  }
  j["swap_symmetry"] = {{"entries", std::move(swaps)},
                        {"interior_count", rep.swap_interior_count},
                        {"interior_frac_within_3se", rep.swap_interior_frac_within_3se}};

  j["width"] = {{"defined", rep.width_defined}};
  if (rep.width_defined) {
    nlohmann::ordered_json sig = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < rep.sigma.size(); ++t) {
      if (!std::isnan(rep.sigma[t])) sig.push_back({{"t", t}, {"sigma", rep.sigma[t]}});
    }
    j["width"]["sigma"] = std::move(sig);
    j["width"]["beta"] = detail::fit_to_json(rep.beta);
    j["width"]["variance_slope"] = detail::fit_to_json(rep.variance_slope);
  }
  return j;
}

// NaN is not representable in JSON; nlohmann serializes it as null.
inline void write_fits_json(const std::filesystem::path& path,
                            const SpreadProfile& profile, const FitReport& rep) {
  detail::write_file(path, report_to_json(profile, rep).dump(2) + "\n");
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["length"] = cfg.n_sites;
  j["depth"] = cfg.depth;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.master_seed;
  j["magic_sites"] = cfg.magic_sites;
  j["circuit"] = cfg.gate_kind == GateKind::full_clifford ? "full-clifford" : "restricted";
  j["force_identity_gates"] = cfg.force_identity_gates;
  j["max_cost"] = cfg.max_cost;
  auto window = [](const std::optional<Window>& w) -> nlohmann::ordered_json {
    if (!w) return nullptr;
    return {w->lo, w->hi};
  };
  j["gamma_window"] = window(cfg.analysis.gamma_window);
  j["alpha_window"] = window(cfg.analysis.alpha_window);
  j["residual_window"] = window(cfg.analysis.residual_window);
  j["beta_window"] = window(cfg.analysis.beta_window);
  j["interior_margin"] = cfg.analysis.interior_margin;
  j["include_threshold"] = cfg.analysis.include_threshold;
  j["bootstrap_resamples"] = cfg.analysis.bootstrap_resamples;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.n_sites = j.at("length").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.samples = j.at("samples").get<long long>();
  cfg.master_seed = j.at("seed").get<std::uint64_t>();
  cfg.magic_sites = j.at("magic_sites").get<std::vector<int>>();
  std::string circuit = j.at("circuit").get<std::string>();
  if (circuit == "full-clifford") {
    cfg.gate_kind = GateKind::full_clifford;
  } else if (circuit == "restricted") {
    cfg.gate_kind = GateKind::restricted;
  } else {
    throw std::invalid_argument("config: unknown circuit kind " + circuit);
  }
  cfg.force_identity_gates = j.value("force_identity_gates", false);
  cfg.max_cost = j.value("max_cost", cfg.max_cost);
  auto window = [&](const char* key) -> std::optional<Window> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return Window{j.at(key).at(0).get<int>(), j.at(key).at(1).get<int>()};
  };
  cfg.analysis.gamma_window = window("gamma_window");
  cfg.analysis.alpha_window = window("alpha_window");
  cfg.analysis.residual_window = window("residual_window");
  cfg.analysis.beta_window = window("beta_window");
  cfg.analysis.interior_margin = j.value("interior_margin", 3);
  cfg.analysis.include_threshold = j.value("include_threshold", 10.0);
  cfg.analysis.bootstrap_resamples = j.value("bootstrap_resamples", 200);
  return cfg;
}

// Writes the whole bundle; profile.csv, normalized.csv, chunk_means.csv
// and fits.json are byte-stable for a given (config, seed); run_meta.json
// carries the wall time and is not.
inline void write_bundle(const std::filesystem::path& dir, const SpreadProfile& profile,
                         const FitReport& report) {
  std::filesystem::create_directories(dir);
  write_profile_csv(dir / "profile.csv", profile);
  write_normalized_csv(dir / "normalized.csv", profile, report);
  write_chunk_means_csv(dir / "chunk_means.csv", profile);
  write_fits_json(dir / "fits.json", profile, report);

  nlohmann::ordered_json meta;
  meta["version"] = kVersion;
  meta["config_hash"] = config_hash(profile.config);
  meta["config"] = config_to_json(profile.config);
  meta["threads"] = profile.config.threads;
  meta["wall_seconds"] = profile.wall_seconds;
  meta["observed_class_mask"] = profile.observed_class_mask;
  detail::write_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Rebuilds a SpreadProfile from a stored bundle (profile.csv,
// chunk_means.csv, run_meta.json); m2 is reconstructed from the sem
// column. Used by the analyze subcommand.
inline SpreadProfile read_bundle(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "run_meta.json");
  if (!meta_in) throw std::runtime_error("cannot open " + (dir / "run_meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);
  SpreadProfile profile;
  profile.config = config_from_json(meta.at("config"));
  profile.config.validate();
  profile.observed_class_mask = meta.value("observed_class_mask", 0u);

  const int cells = profile.cells();
  profile.mean.assign(cells, 0.0);
  profile.m2.assign(cells, 0.0);

  std::ifstream pin(dir / "profile.csv");
  if (!pin) throw std::runtime_error("cannot open " + (dir / "profile.csv").string());
  std::string line;
  while (std::getline(pin, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    auto f = detail::split(line, ',');
    if (f.size() != 5) throw std::runtime_error("profile.csv: bad row: " + line);
    int t = std::stoi(f[0]);
    int site = std::stoi(f[1]);
    double mean = std::stod(f[2]);
    double sem = std::stod(f[3]);
    long long n = std::stoll(f[4]);
    if (n != profile.config.samples) {
      throw std::runtime_error("profile.csv: sample count mismatch");
    }
    profile.mean[profile.cell(site, t)] = mean;
    profile.m2[profile.cell(site, t)] = sem * sem * static_cast<double>(n) * (n - 1);
  }

  std::ifstream cin_(dir / "chunk_means.csv");
  if (!cin_) throw std::runtime_error("cannot open " + (dir / "chunk_means.csv").string());
  int max_chunk = -1;
  std::vector<std::tuple<int, long long, int, int, double>> rows;
  while (std::getline(cin_, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
    auto f = detail::split(line, ',');
    if (f.size() != 5) throw std::runtime_error("chunk_means.csv: bad row: " + line);
    int c = std::stoi(f[0]);
    rows.emplace_back(c, std::stoll(f[1]), std::stoi(f[2]), std::stoi(f[3]),
                      std::stod(f[4]));
    max_chunk = std::max(max_chunk, c);
  }
  profile.n_chunks = max_chunk + 1;
  profile.chunk_mean.assign(static_cast<std::size_t>(profile.n_chunks) * cells, 0.0);
  profile.chunk_count.assign(profile.n_chunks, 0);
  for (auto& [c, cnt, t, site, mean] : rows) {
    profile.chunk_count[c] = cnt;
    profile.chunk_mean[static_cast<std::size_t>(c) * cells + profile.cell(site, t)] = mean;
  }
  return profile;
}

// Plain-text key=value config file; '#' starts a comment line.
inline std::map<std::string, std::string> parse_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config file line " + std::to_string(lineno) +
                               ": expected key=value");
    }
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace srespread
