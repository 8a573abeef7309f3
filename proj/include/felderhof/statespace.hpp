#pragma once

// Particle-number sectors of the M-site quantum space. Every operator in the
// model changes the particle count by exactly one, so states are stored per
// sector over the C(M,k) sorted-configuration basis instead of the full 2^M
// space.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "felderhof/theta.hpp"

namespace felderhof {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

/// Strictly increasing particle positions 1 <= x_1 < ... < x_N <= M.
struct Configuration {
  int m_sites = 0;
  std::vector<int> positions;

  Configuration(int m, std::vector<int> pos) : m_sites(m), positions(std::move(pos)) {
    if (m_sites < 0) throw std::invalid_argument("Configuration: negative site count");
    int prev = 0;
    for (int x : positions) {
      if (x <= prev || x > m_sites)
        throw std::invalid_argument(
            "Configuration: positions must be strictly increasing in 1..M");
      prev = x;
    }
  }

  int particle_count() const { return static_cast<int>(positions.size()); }

  std::uint32_t mask() const {
    std::uint32_t m = 0;
    for (int x : positions) m |= 1u << (x - 1);
    return m;
  }

  bool operator==(const Configuration& o) const {
    return m_sites == o.m_sites && positions == o.positions;
  }
};

/// All C(M,k) configurations of one sector in lexicographic order of the
/// position tuples, with the inverse ordinal lookup.
class SectorBasis {
 public:
  static std::shared_ptr<const SectorBasis> make(int m_sites, int particle_count) {
    return std::shared_ptr<const SectorBasis>(new SectorBasis(m_sites, particle_count));
  }

  int m_sites() const { return m_; }
  int particle_count() const { return k_; }
  std::size_t dim() const { return configs_.size(); }
  const Configuration& config(std::size_t i) const { return configs_.at(i); }

  std::size_t index_of(const Configuration& c) const {
    if (c.m_sites != m_ || c.particle_count() != k_)
      throw std::invalid_argument("SectorBasis: configuration from a different sector");
    return index_.at(c.mask());
  }

  std::size_t index_of_mask(std::uint32_t mask) const { return index_.at(mask); }

 private:
  SectorBasis(int m_sites, int particle_count) : m_(m_sites), k_(particle_count) {
    if (m_ < 0 || m_ > 20)
      throw std::invalid_argument("SectorBasis: site count must lie in 0..20");
    if (k_ < 0 || k_ > m_)
      throw std::invalid_argument("SectorBasis: particle count must lie in 0..M");
    std::vector<int> pos(k_);
    for (int i = 0; i < k_; ++i) pos[i] = i + 1;
    configs_.reserve(binomial(m_, k_));
    while (true) {
      configs_.emplace_back(m_, pos);
      index_.emplace(configs_.back().mask(), configs_.size() - 1);
      // next combination in lexicographic order
      int i = k_ - 1;
      while (i >= 0 && pos[i] == m_ - k_ + i + 1) --i;
      if (i < 0) break;
      ++pos[i];
      for (int j = i + 1; j < k_; ++j) pos[j] = pos[j - 1] + 1;
    }
  }

  int m_, k_;
  std::vector<Configuration> configs_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
};

/// Complex amplitude vector over one particle-number sector.
struct SectorVector {
  std::shared_ptr<const SectorBasis> basis;
  std::vector<cx> amplitudes;

  SectorVector(std::shared_ptr<const SectorBasis> b, std::vector<cx> amps)
      : basis(std::move(b)), amplitudes(std::move(amps)) {
    if (amplitudes.size() != basis->dim())
      throw std::invalid_argument("SectorVector: amplitude count must match basis size");
  }

  int m_sites() const { return basis->m_sites(); }
  int sector() const { return basis->particle_count(); }
};

inline SectorVector vacuum(int m_sites) {
  if (m_sites < 1) throw std::invalid_argument("vacuum: need at least one site");
  return SectorVector(SectorBasis::make(m_sites, 0), {cx(1.0)});
}

inline SectorVector configuration_state(const Configuration& c) {
  auto basis = SectorBasis::make(c.m_sites, c.particle_count());
  std::vector<cx> amps(basis->dim(), cx(0.0));
  amps[basis->index_of(c)] = cx(1.0);
  return SectorVector(std::move(basis), std::move(amps));
}

/// Pairing of the dual basis state <dual_c| with v.
inline cx inner(const Configuration& dual_c, const SectorVector& v) {
  if (dual_c.m_sites != v.m_sites() || dual_c.particle_count() != v.sector())
    throw std::invalid_argument("inner: sector mismatch");
  return v.amplitudes[v.basis->index_of(dual_c)];
}

/// The dual state <0^{M-N+n} 1^{N-n}|: holes on sites 1..M-N+n, particles on
/// the last N-n sites, i.e. the configuration {M-N+n+1, ..., M}.
inline Configuration mixed_dual(int m_sites, int n_b, int n_c) {
  if (n_c < 0 || n_c > n_b || n_b > m_sites)
    throw std::invalid_argument("mixed_dual: need 0 <= n <= N <= M");
  std::vector<int> pos;
  for (int x = m_sites - n_b + n_c + 1; x <= m_sites; ++x) pos.push_back(x);
  return Configuration(m_sites, std::move(pos));
}

}  // namespace felderhof
