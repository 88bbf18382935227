#include "sobonet/subdomain.hpp"

#include <algorithm>
#include <cmath>

#include "sobonet/errors.hpp"

namespace sobonet {

int cells_per_axis(int m_j, int K) { return m_j == 1 ? K : K + 1; }

Interval cell_interval(int m_j, int i_j, int K) {
  if (m_j != 1 && m_j != 2) throw InvalidInput("colour must be 1 or 2");
  if (K < 1) throw InvalidInput("K must be positive");
  const double k = K;
  const int shifted = m_j == 2 ? 1 : 0;
  Interval iv{(2.0 * i_j - shifted) / (2.0 * k), (3.0 + 4.0 * i_j - 2.0 * shifted) / (4.0 * k)};
  iv.lo = std::max(iv.lo, 0.0);
  iv.hi = std::min(iv.hi, 1.0);
  return iv;
}

std::vector<Interval> cell_box(const SubdomainIndex& idx) {
  if (idx.m.size() != idx.i.size()) throw InvalidInput("colour and index dimensions differ");
  std::vector<Interval> box;
  for (std::size_t j = 0; j < idx.m.size(); ++j) box.push_back(cell_interval(idx.m[j], idx.i[j], idx.K));
  return box;
}

double cell_center(int m_j, int i_j, int K) {
  return (m_j == 1 ? 8.0 * i_j + 3.0 : 8.0 * i_j - 1.0) / (8.0 * K);
}

int locate_axis(int m_j, int K, double x) {
  const double shift = m_j == 2 ? 0.5 / K : 0.0;
  const int guess = static_cast<int>(std::floor((x + shift) * K));
  for (int i : {guess - 1, guess, guess + 1}) {
    if (i < 0 || i >= cells_per_axis(m_j, K)) continue;
    if (cell_interval(m_j, i, K).contains(x)) return i;
  }
  return -1;
}

bool in_omega(std::span<const int> m, int K, std::span<const double> x) {
  for (std::size_t j = 0; j < m.size(); ++j)
    if (locate_axis(m[j], K, x[j]) < 0) return false;
  return true;
}

std::vector<std::vector<int>> colourings(int d) {
  const std::vector<int> twos(static_cast<std::size_t>(d), 2);
  auto idx = multi_range(twos);
  for (auto& v : idx)
    for (int& e : v) e += 1;
  return idx;
}

std::vector<std::vector<int>> multi_range(std::span<const int> counts) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(counts.size(), 0);
  for (int c : counts)
    if (c <= 0) return out;
  while (true) {
    out.push_back(cur);
    int j = static_cast<int>(counts.size()) - 1;
    while (j >= 0 && ++cur[static_cast<std::size_t>(j)] == counts[static_cast<std::size_t>(j)]) {
      cur[static_cast<std::size_t>(j)] = 0;
      --j;
    }
    if (j < 0) break;
  }
  return out;
}

}  // namespace sobonet
