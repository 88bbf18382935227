#pragma once

#include <span>
#include <utility>
#include <vector>

namespace sobonet {

// Cell O_{m,i} of the two-colour covering of [0,1]^d at resolution K.
struct SubdomainIndex {
  std::vector<int> m;  // entries in {1,2}
  std::vector<int> i;  // entries in 0..K
  int K = 1;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Number of cells along one axis: K for colour 1, K+1 for colour 2.
int cells_per_axis(int m_j, int K);
Interval cell_interval(int m_j, int i_j, int K);  // clipped to [0,1]
std::vector<Interval> cell_box(const SubdomainIndex& idx);
// Centre of the unclipped cell: (8i+3)/(8K) for colour 1, (8i-1)/(8K) for colour 2.
double cell_center(int m_j, int i_j, int K);

// Index of the cell containing x_j along one axis, or -1.
int locate_axis(int m_j, int K, double x);
bool in_omega(std::span<const int> m, int K, std::span<const double> x);

// {1,2}^d in lexicographic order.
std::vector<std::vector<int>> colourings(int d);
// 0..counts[j]-1 per axis, lexicographic with the first axis slowest.
std::vector<std::vector<int>> multi_range(std::span<const int> counts);

}  // namespace sobonet
