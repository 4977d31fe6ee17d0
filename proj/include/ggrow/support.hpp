#pragma once

#include <string>
#include <vector>

#include "ggrow/errors.hpp"

namespace ggrow {

// Upper-diagonal coordinate (i, j) with i <= j; i == j denotes a diagonal
// coordinate where those are admissible (descent candidates). All indices in
// the library and its file formats are 0-based.
struct Edge {
  int i = 0;
  int j = 0;

  friend bool operator==(Edge a, Edge b) { return a.i == b.i && a.j == b.j; }
  friend bool operator!=(Edge a, Edge b) { return !(a == b); }
  // Lexicographic order; used for deterministic tie-breaking everywhere.
  friend bool operator<(Edge a, Edge b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  }
};

inline long max_edges(int d) { return static_cast<long>(d) * (d - 1) / 2; }

// Activated edge set E over a fixed dimension. The diagonal set D is implicit
// and always active; insertion order records the activation sequence.
class Support {
 public:
  explicit Support(int dim) : dim_(dim) {
    if (dim < 1) throw DimensionError("Support: dim must be >= 1");
    active_.assign(static_cast<std::size_t>(dim) * dim, 0);
  }

  int dim() const { return dim_; }

  // Edges in activation order.
  const std::vector<Edge>& edges() const { return edges_; }

  long edge_count() const { return static_cast<long>(edges_.size()); }

  bool full() const { return edge_count() == max_edges(dim_); }

  bool contains(int i, int j) const {
    check_range(i, j);
    return active_[static_cast<std::size_t>(i) * dim_ + j] != 0;
  }

  void add(int i, int j) {
    check_range(i, j);
    if (i >= j) throw SupportError("Support::add: need i < j");
    if (contains(i, j))
      throw SupportError("Support::add: edge (" + std::to_string(i) + "," +
                         std::to_string(j) + ") already active");
    active_[static_cast<std::size_t>(i) * dim_ + j] = 1;
    edges_.push_back({i, j});
  }

  // Free edges U \ E in lexicographic order.
  std::vector<Edge> free_edges() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(max_edges(dim_) - edge_count()));
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        if (!active_[static_cast<std::size_t>(i) * dim_ + j])
          out.push_back({i, j});
    return out;
  }

 private:
  void check_range(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
      throw DimensionError("Support: index out of range");
  }

  int dim_;
  std::vector<Edge> edges_;
  std::vector<char> active_;
};

}  // namespace ggrow
