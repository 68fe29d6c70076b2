#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace mwlab {

using Coords = std::array<int, 2>;

/// Dyadic partition of [0,1)^d into 2^{dL} cells of side 2^{-L}.
///
/// `shift` offsets the coarser dyadic cubes by whole finest cells per axis
/// (torus wrap-around), so every cube of a shifted grid is still a union of
/// finest cells. Cell indices are lexicographic with axis 0 fastest.
struct GridSpec {
  int d = 1;
  int L = 0;
  Coords shift{0, 0};

  static constexpr int kMaxLevel = 12;

  void validate() const;
  int side() const { return 1 << L; }
  std::size_t cell_count() const { return std::size_t{1} << (d * L); }
  double cell_measure() const;
  Coords cell_coords(std::size_t index) const;
  std::size_t cell_index(Coords c) const;
  std::array<double, 2> cell_lower(std::size_t index) const;
  std::array<double, 2> cell_center(std::size_t index) const;
  // Grids compare equal when they share the finest lattice; the shift only
  // changes which cubes exist, never the cells.
  bool same_lattice(const GridSpec& o) const { return d == o.d && L == o.L; }
  bool operator==(const GridSpec& o) const = default;
  std::string describe() const;
};

/// A dyadic cube of `grid` at `level` (side 2^{-level}), `anchor` in units of
/// its own side length.
struct Cube {
  GridSpec grid;
  int level = 0;
  Coords anchor{0, 0};

  double measure() const;
  double side_length() const;
  std::size_t cell_span() const { return std::size_t{1} << (grid.L - level); }
  bool operator==(const Cube& o) const = default;
  std::string describe() const;
};

/// Set of finest cells (sorted, unique). Houses E, E_M, E_P.
struct CubeSet {
  GridSpec grid;
  std::vector<std::size_t> members;

  bool empty() const { return members.empty(); }
  std::size_t size() const { return members.size(); }
  double measure() const { return static_cast<double>(members.size()) * grid.cell_measure(); }
  bool contains(std::size_t cell) const;
};

/// Every cube of levels 0..max_level, ordered by level then lexicographic anchor.
std::vector<Cube> enumerate_cubes(const GridSpec& grid, int max_level);
std::vector<Cube> enumerate_cubes(const GridSpec& grid);

/// The 2^d grids with shift t in {0,1/3}^d rounded to the nearest multiple of
/// 2^{-L} (mod 1).
std::vector<GridSpec> shifted_grids(int d, int L);

/// Finest cells composing `q`.
CubeSet cells_of(const Cube& q);

/// Whole domain as a set.
CubeSet all_cells(const GridSpec& grid);

/// Cells in `a` that are also in `b`.
CubeSet intersect(const CubeSet& a, const CubeSet& b);

}  // namespace mwlab
