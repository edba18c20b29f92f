#include "nflab/lattice.hpp"

#include <sstream>

namespace nflab {

std::vector<JVec> enumerate_sites(const LatticeGeometry& geom) {
  std::vector<JVec> out;
  const int k = geom.k_max;
  if (geom.dim == 1) {
    for (int a = -k; a <= k; ++a) out.push_back(JVec{a, 0, 0});
  } else if (geom.dim == 2) {
    for (int a = -k; a <= k; ++a)
      for (int b = -k; b <= k; ++b) out.push_back(JVec{a, b, 0});
  } else {
    for (int a = -k; a <= k; ++a)
      for (int b = -k; b <= k; ++b)
        for (int c = -k; c <= k; ++c) out.push_back(JVec{a, b, c});
  }
  return out;
}

std::vector<ModeIndex> enumerate_modes(const LatticeGeometry& geom) {
  std::vector<ModeIndex> out;
  for (const auto& site : enumerate_sites(geom)) {
    out.push_back(ModeIndex{site, -1});
    out.push_back(ModeIndex{site, +1});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ModeIndex> modes_within_radius(const LatticeGeometry& geom, double N, bool strict) {
  LatticeGeometry g = geom;
  g.k_max = std::min(geom.k_max, static_cast<int>(std::floor(N)));
  const double n2 = N * N;
  std::vector<ModeIndex> out;
  for (const auto& site : enumerate_sites(g)) {
    const ModeIndex m{site, +1};
    const double r2 = static_cast<double>(m.radius2());
    if (strict ? r2 < n2 : r2 <= n2) {
      out.push_back(ModeIndex{site, -1});
      out.push_back(m);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double multiset_count(std::size_t n, int degree) {
  double c = 1.0;
  for (int i = 1; i <= degree; ++i)
    c *= static_cast<double>(n + static_cast<std::size_t>(degree - i)) / static_cast<double>(i);
  return c;
}

std::string to_string(const ModeIndex& m) {
  std::ostringstream os;
  os << "((" << m.j[0];
  if (m.j[1] != 0 || m.j[2] != 0) os << "," << m.j[1];
  if (m.j[2] != 0) os << "," << m.j[2];
  os << ")," << (m.sigma > 0 ? "+" : "-") << ")";
  return os.str();
}

std::string to_string(const MultiIndex& m) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (i) os << " ";
    os << to_string(m.entries[i]);
  }
  os << "]";
  return os.str();
}

}  // namespace nflab
