#include "mwlab/grid.hpp"

#include "mwlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mwlab {

void GridSpec::validate() const {
  if (d < 1 || d > 2) throw ParameterError("grid: dimension must be 1 or 2, got " + std::to_string(d));
  if (L < 0 || L > kMaxLevel)
    throw ParameterError("grid: level must lie in [0, 12], got " + std::to_string(L));
  for (int k = 0; k < 2; ++k) {
    const int s = shift[k];
    if (k >= d) {
      if (s != 0) throw ParameterError("grid: shift on unused axis must be 0");
      continue;
    }
    if (s < 0 || s >= side()) throw ParameterError("grid: shift out of [0, 2^L)");
  }
}

double GridSpec::cell_measure() const { return std::ldexp(1.0, -d * L); }

Coords GridSpec::cell_coords(std::size_t index) const {
  if (d == 1) return {static_cast<int>(index), 0};
  const auto s = static_cast<std::size_t>(side());
  return {static_cast<int>(index % s), static_cast<int>(index / s)};
}

std::size_t GridSpec::cell_index(Coords c) const {
  if (d == 1) return static_cast<std::size_t>(c[0]);
  return static_cast<std::size_t>(c[0]) + static_cast<std::size_t>(c[1]) * static_cast<std::size_t>(side());
}

std::array<double, 2> GridSpec::cell_lower(std::size_t index) const {
  const Coords c = cell_coords(index);
  const double h = std::ldexp(1.0, -L);
  return {c[0] * h, d == 2 ? c[1] * h : 0.0};
}

std::array<double, 2> GridSpec::cell_center(std::size_t index) const {
  auto lo = cell_lower(index);
  const double h = std::ldexp(1.0, -L);
  lo[0] += 0.5 * h;
  if (d == 2) lo[1] += 0.5 * h;
  return lo;
}

std::string GridSpec::describe() const {
  std::ostringstream os;
  os << "d=" << d << " L=" << L;
  if (shift[0] != 0 || shift[1] != 0) os << " shift=(" << shift[0] << "," << shift[1] << ")";
  return os.str();
}

double Cube::measure() const { return std::ldexp(1.0, -grid.d * level); }
double Cube::side_length() const { return std::ldexp(1.0, -level); }

std::string Cube::describe() const {
  std::ostringstream os;
  os << "level " << level << " anchor (" << anchor[0];
  if (grid.d == 2) os << "," << anchor[1];
  os << ")";
  return os.str();
}

bool CubeSet::contains(std::size_t cell) const {
  return std::binary_search(members.begin(), members.end(), cell);
}

std::vector<Cube> enumerate_cubes(const GridSpec& grid, int max_level) {
  grid.validate();
  if (max_level < 0 || max_level > grid.L)
    throw ParameterError("enumerate_cubes: max_level must lie in [0, L]");
  std::vector<Cube> out;
  for (int level = 0; level <= max_level; ++level) {
    const int n = 1 << level;
    const int ny = grid.d == 2 ? n : 1;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < n; ++i) out.push_back(Cube{grid, level, {i, j}});
  }
  return out;
}

std::vector<Cube> enumerate_cubes(const GridSpec& grid) { return enumerate_cubes(grid, grid.L); }

std::vector<GridSpec> shifted_grids(int d, int L) {
  GridSpec base{d, L, {0, 0}};
  base.validate();
  const int side = base.side();
  // nearest lattice point to 1/3, wrapped onto the torus
  const int third = static_cast<int>(std::lround(side / 3.0)) % side;
  std::vector<GridSpec> out;
  const int count = 1 << d;
  for (int t = 0; t < count; ++t) {
    GridSpec g = base;
    for (int k = 0; k < d; ++k) g.shift[k] = ((t >> k) & 1) ? third : 0;
    out.push_back(g);
  }
  return out;
}

CubeSet cells_of(const Cube& q) {
  const GridSpec& g = q.grid;
  g.validate();
  if (q.level < 0 || q.level > g.L) throw ParameterError("cells_of: cube level out of range");
  const int span = 1 << (g.L - q.level);
  const int side = g.side();
  CubeSet out{g, {}};
  out.members.reserve(static_cast<std::size_t>(g.d == 2 ? span * span : span));
  const int ny = g.d == 2 ? span : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < span; ++i) {
      Coords c{(q.anchor[0] * span + g.shift[0] + i) % side, 0};
      if (g.d == 2) c[1] = (q.anchor[1] * span + g.shift[1] + j) % side;
      out.members.push_back(g.cell_index(c));
    }
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

CubeSet all_cells(const GridSpec& grid) {
  CubeSet out{grid, {}};
  out.members.resize(grid.cell_count());
  for (std::size_t i = 0; i < out.members.size(); ++i) out.members[i] = i;
  return out;
}

CubeSet intersect(const CubeSet& a, const CubeSet& b) {
  CubeSet out{a.grid, {}};
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(out.members));
  return out;
}

}  // namespace mwlab
