#include "kdecomp/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

namespace kdecomp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<bool> parse_flag(std::string_view text) {
  std::string s(trim(text));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "y" || s == "t") return true;
  if (s == "0" || s == "false" || s == "no" || s == "n" || s == "f") return false;
  return std::nullopt;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

LoadResult load_csv(std::istream& in, const DatasetSchema& schema, const LoadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("input has no header row");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = std::string(trim(h));

  const std::size_t value_col = column_index(header, schema.value_column);
  std::optional<std::size_t> paper_col;
  if (!schema.paper_id_column.empty()) paper_col = column_index(header, schema.paper_id_column);
  std::optional<std::size_t> positive_col;
  if (schema.positive_only_column) positive_col = column_index(header, *schema.positive_only_column);
  std::vector<std::pair<std::string, std::size_t>> label_cols;
  for (const auto& [dimension, column] : schema.label_columns) {
    label_cols.emplace_back(dimension, column_index(header, column));
  }

  LoadResult result;
  auto report = [&](std::string message) {
    if (options.strict) throw RowError(line_no, message);
    result.issues.push_back({line_no, std::move(message)});
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      report("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    Observation obs;
    obs.line = line_no;
    const auto value = parse_double(fields[value_col]);
    if (!value) {
      report("cannot parse value '" + fields[value_col] + "' in column '" + schema.value_column + "'");
      continue;
    }
    obs.value = *value;
    if (paper_col) obs.paper_id = std::string(trim(fields[*paper_col]));
    obs.positive_only = options.default_positive_only;
    if (positive_col) {
      const auto flag = parse_flag(fields[*positive_col]);
      if (!flag) {
        report("cannot parse positive-only flag '" + fields[*positive_col] + "'");
        continue;
      }
      obs.positive_only = *flag;
    }
    for (const auto& [dimension, col] : label_cols) obs.labels[dimension] = std::string(trim(fields[col]));
    result.observations.push_back(std::move(obs));
  }
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const DatasetSchema& schema, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return load_csv(in, schema, options);
}

std::optional<std::string> normalize_decimal(std::string_view text) {
  text = trim(text);
  bool negative = false;
  if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;
  std::string integral;
  std::string fraction;
  bool seen_point = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      (seen_point ? fraction : integral).push_back(c);
    } else {
      return std::nullopt;
    }
  }
  if (integral.empty() && fraction.empty()) return std::nullopt;
  integral.erase(0, std::min(integral.find_first_not_of('0'), integral.size()));
  if (integral.empty()) integral = "0";
  while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();
  std::string out = integral;
  if (!fraction.empty()) out += "." + fraction;
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

CategoryBinning::CategoryBinning(Kind kind, std::string source, std::string dimension,
                                 std::optional<std::string> overflow)
    : kind_(kind), source_(std::move(source)), dimension_(std::move(dimension)), overflow_(std::move(overflow)) {}

CategoryBinning CategoryBinning::explicit_map(std::string source, std::string dimension,
                                              std::vector<std::pair<std::string, std::string>> mapping,
                                              std::optional<std::string> overflow) {
  CategoryBinning b(Kind::explicit_map, std::move(source), std::move(dimension), std::move(overflow));
  b.mapping_ = std::move(mapping);
  return b;
}

CategoryBinning CategoryBinning::numeric_values(std::string source, std::string dimension,
                                                std::vector<std::string> values, std::optional<std::string> overflow) {
  CategoryBinning b(Kind::numeric_values, std::move(source), std::move(dimension), std::move(overflow));
  for (auto& v : values) {
    const auto key = normalize_decimal(v);
    if (!key) throw BinningError("numeric bin '" + v + "' is not a decimal number");
    b.mapping_.emplace_back(*key, std::move(v));
  }
  return b;
}

CategoryBinning CategoryBinning::year_ranges(std::string source, std::string dimension, std::vector<YearRange> ranges,
                                             std::optional<std::string> overflow) {
  CategoryBinning b(Kind::year_ranges, std::move(source), std::move(dimension), std::move(overflow));
  for (const auto& r : ranges) {
    if (r.first > r.last) throw BinningError("year range '" + r.name + "' is empty");
  }
  b.ranges_ = std::move(ranges);
  return b;
}

std::vector<std::string> CategoryBinning::categories() const {
  std::vector<std::string> out;
  auto add = [&out](const std::string& name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  };
  if (kind_ == Kind::year_ranges) {
    for (const auto& r : ranges_) add(r.name);
  } else {
    for (const auto& [key, name] : mapping_) add(name);
  }
  if (overflow_) add(*overflow_);
  return out;
}

std::optional<std::string> CategoryBinning::classify(std::string_view raw) const {
  raw = trim(raw);
  switch (kind_) {
    case Kind::explicit_map:
      for (const auto& [key, name] : mapping_) {
        if (key == raw) return name;
      }
      break;
    case Kind::numeric_values:
      if (const auto key = normalize_decimal(raw)) {
        for (const auto& [k, name] : mapping_) {
          if (k == *key) return name;
        }
      }
      break;
    case Kind::year_ranges:
      if (const auto year = parse_double(raw); year && std::floor(*year) == *year) {
        for (const auto& r : ranges_) {
          if (*year >= r.first && *year <= r.last) return r.name;
        }
      }
      break;
  }
  return overflow_;
}

CategoryBinning discount_rate_binning(std::string source, std::string dimension) {
  return CategoryBinning::numeric_values(std::move(source), std::move(dimension),
                                         {"3.0", "2.0", "1.5", "1.0", "0.1", "0.0"}, "other");
}

CategoryBinning author_binning(std::string source, std::string dimension) {
  return CategoryBinning::explicit_map(std::move(source), std::move(dimension),
                                       {{"Hope", "Hope"},
                                        {"Nordhaus", "Nordhaus"},
                                        {"Ploeg", "Ploeg"},
                                        {"van der Ploeg", "Ploeg"},
                                        {"Tol", "Tol"}},
                                       "Other");
}

CategoryBinning period_binning(std::string source, std::string dimension) {
  return CategoryBinning::year_ranges(std::move(source), std::move(dimension),
                                      {{1982, 1995, "1982-1995"},
                                       {1996, 2001, "1996-2001"},
                                       {2002, 2006, "2002-2006"},
                                       {2007, 2013, "2007-2013"},
                                       {2014, 2020, "2014-2020"}},
                                      std::nullopt);
}

BinningResult bin_categories(std::vector<Observation> observations, const CategoryBinning& binning) {
  BinningResult result;
  const auto names = binning.categories();
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& name : names) {
    slot.emplace(name, result.counts.size());
    result.counts.push_back({name, 0});
  }
  for (std::size_t i = 0; i < observations.size(); ++i) {
    auto& obs = observations[i];
    const auto raw = obs.label(binning.source());
    if (!raw) {
      throw BinningError(detail::where(obs, i) + " has no '" + binning.source() + "' label to bin");
    }
    const auto category = binning.classify(*raw);
    if (!category) {
      throw BinningError("binning of '" + binning.source() + "' is not total: value '" + std::string(*raw) + "' in " +
                         detail::where(obs, i) + " matches no category and there is no overflow category");
    }
    obs.labels[binning.dimension()] = *category;
    ++result.counts[slot.at(*category)].count;
  }
  result.observations = std::move(observations);
  return result;
}

std::optional<VoteScheme> parse_vote_scheme(std::string_view name) {
  if (name == "estimate" || name == "per_estimate" || name == "per-estimate") return VoteScheme::per_estimate;
  if (name == "paper" || name == "per_paper" || name == "per-paper") return VoteScheme::per_paper;
  return std::nullopt;
}

std::vector<double> vote_weights(std::span<const Observation> observations, VoteScheme scheme) {
  const std::size_t n = observations.size();
  if (n == 0) throw ValidationError("vote_weights: no observations");
  if (scheme == VoteScheme::per_estimate) return std::vector<double>(n, 1.0 / static_cast<double>(n));

  std::unordered_map<std::string_view, std::size_t> per_paper;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = observations[i].paper_id;
    if (id.empty()) throw ValidationError("vote_weights: " + detail::where(observations[i], i) + " has no paper id");
    ++per_paper[id];
  }
  const double papers = static_cast<double>(per_paper.size());
  std::vector<double> weights;
  weights.reserve(n);
  for (const auto& obs : observations) {
    weights.push_back(1.0 / (papers * static_cast<double>(per_paper.at(obs.paper_id))));
  }
  return weights;
}

void write_category_report(std::ostream& out, std::span<const Observation> observations, std::string_view dimension,
                           std::span<const double> weights, const std::vector<std::string>& order) {
  std::vector<std::string> names = order;
  std::map<std::string, std::pair<std::size_t, double>, std::less<>> tally;
  for (const auto& name : order) tally.emplace(name, std::pair<std::size_t, double>{0, 0.0});
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto label = observations[i].label(dimension);
    if (!label) throw SchemaError(detail::where(observations[i], i) + " has no label for '" + std::string(dimension) + "'");
    auto it = tally.find(*label);
    if (it == tally.end()) {
      it = tally.emplace(std::string(*label), std::pair<std::size_t, double>{0, 0.0}).first;
      names.emplace_back(*label);
    }
    ++it->second.first;
    it->second.second += weights.empty() ? 0.0 : weights[i];
  }
  out << "category,count,weight\n";
  const auto precision = out.precision(10);
  for (const auto& name : names) {
    const auto& [count, weight] = tally.at(name);
    out << csv_escape(name) << ',' << count << ',' << weight << '\n';
  }
  out.precision(precision);
}

}  // namespace kdecomp
