#pragma once

// Observation ingestion, category binning and vote weighting.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdecomp/density.hpp"

namespace kdecomp {

/// Splits one CSV record. Double quotes delimit fields that contain commas;
/// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

struct DatasetSchema {
  std::string value_column = "value";
  std::string paper_id_column;                  // empty: no paper ids
  std::map<std::string, std::string> label_columns;  // dimension -> column
  std::optional<std::string> positive_only_column;
};

struct LoadOptions {
  bool strict = false;
  // Used when the schema names no positive-only column.
  bool default_positive_only = true;
};

struct RowIssue {
  std::size_t line;
  std::string message;
};

struct LoadResult {
  std::vector<Observation> observations;
  std::vector<RowIssue> issues;
};

LoadResult load_csv(std::istream& in, const DatasetSchema& schema, const LoadOptions& options = {});
LoadResult load_csv(const std::filesystem::path& path, const DatasetSchema& schema, const LoadOptions& options = {});

/// Maps the raw label in `source` to a category written to `dimension`.
class CategoryBinning {
public:
  enum class Kind { explicit_map, numeric_values, year_ranges };

  struct YearRange {
    int first;
    int last;
    std::string name;
  };

  /// Exact string match on the raw label.
  static CategoryBinning explicit_map(std::string source, std::string dimension,
                                      std::vector<std::pair<std::string, std::string>> mapping,
                                      std::optional<std::string> overflow);
  /// Exact decimal match after normalization ("3", "3.0" and "3.00" coincide);
  /// each listed value is its own category, named as listed.
  static CategoryBinning numeric_values(std::string source, std::string dimension, std::vector<std::string> values,
                                        std::optional<std::string> overflow);
  /// Inclusive integer year ranges.
  static CategoryBinning year_ranges(std::string source, std::string dimension, std::vector<YearRange> ranges,
                                     std::optional<std::string> overflow);

  const std::string& source() const noexcept { return source_; }
  const std::string& dimension() const noexcept { return dimension_; }
  Kind kind() const noexcept { return kind_; }
  const std::optional<std::string>& overflow() const noexcept { return overflow_; }

  /// Category names in report order, overflow last.
  std::vector<std::string> categories() const;

  /// nullopt when the raw value matches no rule and there is no overflow.
  std::optional<std::string> classify(std::string_view raw) const;

private:
  CategoryBinning(Kind kind, std::string source, std::string dimension, std::optional<std::string> overflow);

  Kind kind_;
  std::string source_;
  std::string dimension_;
  std::optional<std::string> overflow_;
  std::vector<std::pair<std::string, std::string>> mapping_;  // normalized key -> category
  std::vector<YearRange> ranges_;
};

/// Pure rate of time preference: 3.0, 2.0, 1.5, 1.0, 0.1, 0.0 and "other".
CategoryBinning discount_rate_binning(std::string source = "prtp", std::string dimension = "prtp");
/// Authors with five or more papers, and "Other".
CategoryBinning author_binning(std::string source = "author", std::string dimension = "author");
/// Publication periods 1982-1995 through 2014-2020.
CategoryBinning period_binning(std::string source = "year", std::string dimension = "period");

/// Decimal normalization used for numeric category matching; nullopt if the
/// text is not a plain decimal number.
std::optional<std::string> normalize_decimal(std::string_view text);

struct CategoryCount {
  std::string category;
  std::size_t count = 0;
};

struct BinningResult {
  std::vector<Observation> observations;
  std::vector<CategoryCount> counts;  // binning order; categories with zero members included
};

BinningResult bin_categories(std::vector<Observation> observations, const CategoryBinning& binning);

enum class VoteScheme { per_estimate, per_paper };

std::optional<VoteScheme> parse_vote_scheme(std::string_view name);

/// Per-observation weights summing to one: 1/n each, or 1/(papers * estimates
/// in the paper) so that every paper carries the same total weight.
std::vector<double> vote_weights(std::span<const Observation> observations, VoteScheme scheme);

/// Category-count report: category,count,weight
void write_category_report(std::ostream& out, std::span<const Observation> observations, std::string_view dimension,
                           std::span<const double> weights, const std::vector<std::string>& order = {});

}  // namespace kdecomp
