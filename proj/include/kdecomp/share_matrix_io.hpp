#pragma once

// CSV form of a share matrix, laid out like the published tables: a header of
// component names, one row per quantile interval (Q1..Qp) and a final "Null"
// row holding w_j/p. The transposed layout (components as rows, a "Null"
// column) is also accepted; the position of the "Null" marker decides.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "kdecomp/inference.hpp"

namespace kdecomp {

struct LoadedShareMatrix {
  ShareMatrixd matrix;
  // Mass-invariant tolerance implied by the printed precision: m * p * 10^-d
  // for d decimals, never below 1e-9.
  double tolerance = 1e-9;
  bool transposed = false;
};

LoadedShareMatrix read_share_matrix(std::istream& in, double effective_n);
LoadedShareMatrix read_share_matrix(const std::filesystem::path& path, double effective_n);

/// Writes the table layout. With `decimals`, cells are fixed-point rounded.
void write_share_matrix(std::ostream& out, const ShareMatrixd& s, std::optional<int> decimals = std::nullopt);

}  // namespace kdecomp
