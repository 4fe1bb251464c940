#include "kdecomp/share_matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kdecomp/data.hpp"

namespace kdecomp {

namespace {

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_null_marker(const std::string& cell) {
  std::string s = trimmed(cell);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s == "null";
}

struct Cell {
  double value;
  int decimals;
};

Cell parse_cell(const std::string& raw, std::size_t line) {
  const std::string text = trimmed(raw);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw RowError(line, "cannot parse share '" + raw + "'");
  }
  const auto point = text.find('.');
  int decimals = 0;
  if (point != std::string::npos) {
    const auto exp = text.find_first_of("eE", point);
    decimals = static_cast<int>((exp == std::string::npos ? text.size() : exp) - point - 1);
  }
  return {v, decimals};
}

}  // namespace

LoadedShareMatrix read_share_matrix(std::istream& in, double effective_n) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    if (rows.empty() && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    rows.push_back(split_csv_line(line));
    lines.push_back(line_no);
  }
  if (rows.size() < 2) throw SchemaError("share matrix: need a header and at least one data row");
  const auto& header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw RowError(lines[r], "expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(rows[r].size()));
    }
  }

  std::optional<std::size_t> null_row;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (is_null_marker(rows[r][0])) null_row = r;
  }
  std::optional<std::size_t> null_col;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (is_null_marker(header[c])) null_col = c;
  }
  if (!null_row && !null_col) throw SchemaError("share matrix: no 'Null' row or column found");

  LoadedShareMatrix out;
  out.transposed = !null_row.has_value();
  int decimals = 0;
  auto read = [&](std::size_t r, std::size_t c) {
    const Cell cell = parse_cell(rows[r][c], lines[r]);
    decimals = std::max(decimals, cell.decimals);
    return cell.value;
  };

  ShareMatrixd& s = out.matrix;
  s.effective_n = effective_n;
  if (!out.transposed) {
    // rows: quantiles then Null; columns: components
    const auto m = static_cast<Eigen::Index>(header.size() - 1);
    const auto p = static_cast<Eigen::Index>(rows.size() - 2);
    s.shares.resize(m, p);
    s.null_weights.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) s.component_names.push_back(trimmed(header[static_cast<std::size_t>(j + 1)]));
    Eigen::Index k = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double v = read(r, static_cast<std::size_t>(j + 1));
        if (r == *null_row) {
          s.null_weights(j) = v;
        } else {
          s.shares(j, k) = v;
        }
      }
      if (r != *null_row) ++k;
    }
  } else {
    // rows: components; columns: quantiles and Null
    const auto m = static_cast<Eigen::Index>(rows.size() - 1);
    const auto p = static_cast<Eigen::Index>(header.size() - 2);
    s.shares.resize(m, p);
    s.null_weights.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t r = static_cast<std::size_t>(j + 1);
      s.component_names.push_back(trimmed(rows[r][0]));
      Eigen::Index k = 0;
      for (std::size_t c = 1; c < header.size(); ++c) {
        const double v = read(r, c);
        if (c == *null_col) {
          s.null_weights(j) = v;
        } else {
          s.shares(j, k++) = v;
        }
      }
    }
  }
  // The printed null cell is w_j / p.
  s.null_weights *= static_cast<double>(s.quantiles());
  out.tolerance = std::max(1e-9, static_cast<double>(s.components() * s.quantiles()) * std::pow(10.0, -decimals));
  return out;
}

LoadedShareMatrix read_share_matrix(const std::filesystem::path& path, double effective_n) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return read_share_matrix(in, effective_n);
}

void write_share_matrix(std::ostream& out, const ShareMatrixd& s, std::optional<int> decimals) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  if (decimals) {
    out << std::fixed << std::setprecision(*decimals);
  } else {
    out << std::setprecision(12);
  }
  for (const auto& name : s.component_names) out << ',' << csv_escape(name);
  out << '\n';
  const auto expected = s.expected();
  for (Eigen::Index k = 0; k < s.quantiles(); ++k) {
    out << 'Q' << (k + 1);
    for (Eigen::Index j = 0; j < s.components(); ++j) out << ',' << s.shares(j, k);
    out << '\n';
  }
  out << "Null";
  for (Eigen::Index j = 0; j < s.components(); ++j) out << ',' << expected(j, 0);
  out << '\n';
  out.flags(flags);
  out.precision(precision);
}

}  // namespace kdecomp
