#include "kdecomp/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kdecomp/data.hpp"
#include "kdecomp/density.hpp"
#include "kdecomp/inference.hpp"
#include "kdecomp/share_matrix_io.hpp"
#include "kdecomp/svg.hpp"

namespace kdecomp::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// A flag value that parsed as a string but means nothing.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string input;
  std::string output = "-";
  std::string value_column = "value";
  std::string paper_column;
  std::vector<std::string> labels;
  std::string positive_column;
  bool assume_positive = true;
  bool strict = false;
  std::string kernel = "weibull-gumbel";
  std::string bandwidth = "silverman";
  std::string weights = "estimate";
  std::string grid;
  std::vector<std::string> bins;
  std::vector<std::string> bin_values;
  std::vector<std::string> bin_years;
  std::vector<std::string> bin_maps;
};

struct Grid {
  double lo = 0;
  double hi = 0;
  int count = 0;
};

std::pair<std::string, std::string> split_assignment(const std::string& text, const std::string& flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError(flag + " expects NAME=VALUE, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, sep)) parts.push_back(part);
  return parts;
}

double to_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " '" + text + "'");
  }
}

std::optional<Grid> parse_grid(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw UsageError("--grid expects lo:hi:count, got '" + text + "'");
  Grid g;
  g.lo = to_double(parts[0], "grid lower bound");
  g.hi = to_double(parts[1], "grid upper bound");
  const double count = to_double(parts[2], "grid count");
  if (count < 1 || count != std::floor(count)) throw UsageError("--grid count must be a positive integer");
  g.count = static_cast<int>(count);
  if (g.count > 1 && !(g.hi > g.lo)) throw UsageError("--grid needs hi > lo when count > 1");
  return g;
}

std::vector<double> grid_points(const Grid& g) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(g.count));
  for (int i = 0; i < g.count; ++i) {
    xs.push_back(g.count == 1 ? g.lo : g.lo + (g.hi - g.lo) * i / (g.count - 1));
  }
  return xs;
}

Grid default_grid(const CompositeDensityd& d) {
  return {quantile(d, 0.001), quantile(d, 0.999), 200};
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("input,-i,--input", o.input, "Observation CSV (header row, comma separated)");
  sub->add_option("-o,--output", o.output, "Output file, '-' for stdout");
  sub->add_option("--value-column", o.value_column, "Column holding the observed values");
  sub->add_option("--paper-column", o.paper_column, "Column holding the source paper id (default: 'paper' if present)");
  sub->add_option("--label", o.labels, "Label dimension read from a column: DIM=COLUMN (repeatable)");
  sub->add_option("--positive-column", o.positive_column, "Column flagging cost-only (positive-support) estimates");
  sub->add_option("--assume-positive", o.assume_positive,
                  "Positive-only default when no --positive-column is given");
  sub->add_flag("--strict", o.strict, "Fail on the first malformed row");
  sub->add_option("--kernel", o.kernel, "normal | knotted | gumbel | weibull | weibull-gumbel");
  sub->add_option("--bandwidth", o.bandwidth, "silverman | sd | fixed=V");
  sub->add_option("--weights", o.weights, "estimate | paper");
  sub->add_option("--grid", o.grid, "Evaluation grid lo:hi:count");
  sub->add_option("--bin", o.bins, "Preset binning DIM=discount|author|period (repeatable)");
  sub->add_option("--bin-values", o.bin_values, "Numeric categories DIM=v1,v2,... with overflow 'other'");
  sub->add_option("--bin-years", o.bin_years, "Year ranges DIM=1982-1995,1996-2001,... with overflow 'other'");
  sub->add_option("--bin-map", o.bin_maps, "Explicit categories DIM=raw:cat,raw:cat,... with overflow 'Other'");
}

std::vector<CategoryBinning> binnings(const CommonOptions& o) {
  std::vector<CategoryBinning> out;
  for (const auto& b : o.bins) {
    const auto [dim, preset] = split_assignment(b, "--bin");
    if (preset == "discount") {
      out.push_back(discount_rate_binning(dim, dim));
    } else if (preset == "author") {
      out.push_back(author_binning(dim, dim));
    } else if (preset == "period") {
      out.push_back(period_binning(dim, dim));
    } else {
      throw UsageError("unknown binning preset '" + preset + "' (discount, author, period)");
    }
  }
  for (const auto& b : o.bin_values) {
    const auto [dim, list] = split_assignment(b, "--bin-values");
    out.push_back(CategoryBinning::numeric_values(dim, dim, split(list, ','), "other"));
  }
  for (const auto& b : o.bin_years) {
    const auto [dim, list] = split_assignment(b, "--bin-years");
    std::vector<CategoryBinning::YearRange> ranges;
    for (const auto& r : split(list, ',')) {
      const auto dash = r.find('-', 1);
      if (dash == std::string::npos) throw UsageError("--bin-years range '" + r + "' must be FIRST-LAST");
      ranges.push_back({static_cast<int>(to_double(r.substr(0, dash), "year")),
                        static_cast<int>(to_double(r.substr(dash + 1), "year")), r});
    }
    out.push_back(CategoryBinning::year_ranges(dim, dim, std::move(ranges), "other"));
  }
  for (const auto& b : o.bin_maps) {
    const auto [dim, list] = split_assignment(b, "--bin-map");
    std::vector<std::pair<std::string, std::string>> mapping;
    for (const auto& entry : split(list, ',')) {
      const auto colon = entry.find(':');
      if (colon == std::string::npos) throw UsageError("--bin-map entry '" + entry + "' must be RAW:CATEGORY");
      mapping.emplace_back(entry.substr(0, colon), entry.substr(colon + 1));
    }
    out.push_back(CategoryBinning::explicit_map(dim, dim, std::move(mapping), "Other"));
  }
  return out;
}

struct Dataset {
  std::vector<Observation> observations;
  std::vector<double> weights;
  std::map<std::string, std::vector<std::string>> category_order;
};

Dataset load_dataset(const CommonOptions& o, const std::vector<std::string>& needed_dimensions, std::ostream& err) {
  if (o.input.empty()) throw UsageError("no input file given");
  std::ifstream file(o.input);
  if (!file) throw SchemaError("cannot open '" + o.input + "'");
  std::stringstream buffer;
  buffer << file.rdbuf();
  const std::string text = buffer.str();

  std::string first_line = text.substr(0, text.find('\n'));
  if (first_line.size() >= 3 && first_line.compare(0, 3, "\xEF\xBB\xBF") == 0) first_line.erase(0, 3);
  auto header = split_csv_line(first_line);
  for (auto& h : header) {
    while (!h.empty() && (h.back() == ' ' || h.back() == '\r')) h.pop_back();
  }
  auto has_column = [&header](const std::string& c) { return std::find(header.begin(), header.end(), c) != header.end(); };

  DatasetSchema schema;
  schema.value_column = o.value_column;
  schema.paper_id_column = o.paper_column;
  if (schema.paper_id_column.empty() && has_column("paper")) schema.paper_id_column = "paper";
  if (!o.positive_column.empty()) schema.positive_only_column = o.positive_column;
  for (const auto& l : o.labels) {
    const auto [dim, column] = split_assignment(l, "--label");
    schema.label_columns[dim] = column;
  }
  const auto bins = binnings(o);
  auto need = [&](const std::string& dim) {
    if (!schema.label_columns.contains(dim)) schema.label_columns[dim] = dim;
  };
  for (const auto& d : needed_dimensions) need(d);
  for (const auto& b : bins) need(b.source());

  std::istringstream in(text);
  LoadOptions load_options;
  load_options.strict = o.strict;
  load_options.default_positive_only = o.assume_positive;
  LoadResult loaded = load_csv(in, schema, load_options);
  for (const auto& issue : loaded.issues) err << "warning: line " << issue.line << ": " << issue.message << " (skipped)\n";
  if (loaded.observations.empty()) throw ValidationError("no usable observations in '" + o.input + "'");

  Dataset ds;
  ds.observations = std::move(loaded.observations);
  for (const auto& b : bins) {
    auto binned = bin_categories(std::move(ds.observations), b);
    ds.observations = std::move(binned.observations);
    auto& order = ds.category_order[b.dimension()];
    order.clear();
    for (const auto& c : binned.counts) order.push_back(c.category);
  }
  const auto scheme = parse_vote_scheme(o.weights);
  if (!scheme) throw UsageError("unknown --weights '" + o.weights + "' (estimate, paper)");
  ds.weights = vote_weights(ds.observations, *scheme);
  return ds;
}

KernelScheme kernel_scheme(const CommonOptions& o) {
  const auto s = parse_kernel_scheme(o.kernel);
  if (!s) throw UsageError("unknown --kernel '" + o.kernel + "'");
  return *s;
}

BandwidthRule bandwidth_rule(const CommonOptions& o) {
  try {
    if (auto r = BandwidthRule::parse(o.bandwidth)) return *r;
  } catch (const Error&) {
  }
  throw UsageError("invalid --bandwidth '" + o.bandwidth + "' (silverman, sd, fixed=V with V > 0)");
}

// Writes to --output, or to `out` for '-'.
class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw SchemaError("cannot write '" + path + "'");
      stream_ = file_.get();
    }
    stream_->precision(12);
  }
  std::ostream& operator*() { return *stream_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

int cmd_density(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const auto ds = load_dataset(o, {}, err);
  const auto density = fit<double>(ds.observations, kernel_scheme(o), bandwidth_rule(o), ds.weights);
  const Grid grid = parse_grid(o.grid).value_or(default_grid(density));
  Sink sink(o.output, out);
  *sink << "x,pdf,cdf\n";
  for (double x : grid_points(grid)) *sink << x << ',' << density.pdf(x) << ',' << density.cdf(x) << '\n';
  return kExitOk;
}

Decompositiond build_decomposition(const CommonOptions& o, const Dataset& ds, const std::string& by,
                                   const std::string& scope) {
  DecomposeOptions options;
  options.scheme = kernel_scheme(o);
  options.rule = bandwidth_rule(o);
  if (scope == "global") {
    options.scope = BandwidthScope::global;
  } else if (scope == "per-component") {
    options.scope = BandwidthScope::per_component;
  } else {
    throw UsageError("unknown --component-bandwidth '" + scope + "' (global, per-component)");
  }
  if (auto it = ds.category_order.find(by); it != ds.category_order.end()) options.category_order = it->second;
  return decompose<double>(ds.observations, by, ds.weights, options);
}

int cmd_decompose(const CommonOptions& o, const std::string& by, const std::string& scope,
                  const std::string& weights_report, std::ostream& out, std::ostream& err) {
  const auto ds = load_dataset(o, {by}, err);
  const auto d = build_decomposition(o, ds, by, scope);
  const auto composite = reaggregate(d);
  const Grid grid = parse_grid(o.grid).value_or(default_grid(composite));
  const auto xs = grid_points(grid);

  Sink sink(o.output, out);
  *sink << "component,x,pdf\n";
  for (double x : xs) *sink << kCompositeLabel << ',' << x << ',' << composite.pdf(x) << '\n';
  for (const auto& c : d.components()) {
    const auto name = csv_escape(c.name);
    for (double x : xs) *sink << name << ',' << x << ',' << c.weight * c.density.pdf(x) << '\n';
  }
  if (!weights_report.empty()) {
    Sink report(weights_report, out);
    std::vector<std::string> order;
    for (const auto& c : d.components()) order.push_back(c.name);
    write_category_report(*report, ds.observations, by, ds.weights, order);
  }
  return kExitOk;
}

void write_test_report(std::ostream& os, const ShareMatrixd& s, const TestResultd& r) {
  write_share_matrix(os, s);
  os << '\n' << "statistic,dof,p_value,effective_n\n";
  os << std::setprecision(12) << r.statistic << ',' << r.dof << ',' << r.p_value << ',' << s.effective_n << '\n';
}

int cmd_test(const CommonOptions& o, const std::string& by, const std::string& scope, int quantiles,
             const std::string& effective_n, const std::string& shares_file, std::ostream& out, std::ostream& err) {
  const bool auto_n = effective_n == "auto";
  double n = 0;
  if (!auto_n) {
    n = to_double(effective_n, "--effective-n");
    if (!(n > 0)) throw UsageError("--effective-n must be positive or 'auto'");
  }

  if (!shares_file.empty()) {
    if (auto_n) throw UsageError("--effective-n auto needs observations; give a number with --shares");
    const auto loaded = read_share_matrix(shares_file, n);
    const auto result = pearson_test(loaded.matrix, loaded.tolerance);
    Sink sink(o.output, out);
    write_test_report(*sink, loaded.matrix, result);
    return kExitOk;
  }

  if (by.empty()) throw UsageError("test needs --by DIM or --shares FILE");
  if (quantiles < 2) {
    throw TestPreconditionError("the test needs at least two quantile intervals (got --quantiles " +
                                std::to_string(quantiles) + "); with fewer there is nothing to compare");
  }
  const auto ds = load_dataset(o, {by}, err);
  const auto d = build_decomposition(o, ds, by, scope);
  if (auto_n) n = static_cast<double>(ds.observations.size());
  const auto s = share_matrix(d, quantiles, n);
  const auto result = pearson_test(s);
  Sink sink(o.output, out);
  write_test_report(*sink, s, result);
  return kExitOk;
}

int cmd_export_svg(const std::string& input, const std::string& output, std::ostream& out) {
  if (input.empty()) throw UsageError("export-svg needs a curve CSV");
  std::ifstream in(input);
  if (!in) throw SchemaError("cannot open '" + input + "'");
  const auto curves = read_curves(in);
  Sink sink(output, out);
  *sink << render_svg(curves);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Composite kernel densities: fit, decompose by category, and test the decomposition"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  CommonOptions density_opts;
  auto* density = app.add_subcommand("density", "Fit a kernel density and write x,pdf,cdf samples");
  add_common(density, density_opts);

  CommonOptions decompose_opts;
  std::string decompose_by;
  std::string decompose_scope = "global";
  std::string weights_report;
  auto* decomposition = app.add_subcommand("decompose", "Decompose the density by a label; long-format curves");
  add_common(decomposition, decompose_opts);
  decomposition->add_option("--by", decompose_by, "Label dimension to decompose by")->required();
  decomposition->add_option("--component-bandwidth", decompose_scope, "global | per-component");
  decomposition->add_option("--weights-report", weights_report, "Write category,count,weight CSV here");

  CommonOptions test_opts;
  std::string test_by;
  std::string test_scope = "global";
  int quantiles = 5;
  std::string effective_n = "auto";
  std::string shares_file;
  auto* test = app.add_subcommand("test", "Quantile share matrix and Pearson equality-of-proportions test");
  add_common(test, test_opts);
  test->add_option("--by", test_by, "Label dimension to decompose by");
  test->add_option("--component-bandwidth", test_scope, "global | per-component");
  test->add_option("--quantiles,-p", quantiles, "Number of equal-probability intervals");
  test->add_option("--effective-n", effective_n, "Chi-square sample size multiplier, or 'auto' (observation count)");
  test->add_option("--shares", shares_file, "Read a share matrix CSV instead of observations");

  std::string svg_input;
  std::string svg_output = "-";
  auto* svg = app.add_subcommand("export-svg", "Render a curve CSV as an SVG chart");
  svg->add_option("input,-i,--input", svg_input, "Curve CSV from density or decompose");
  svg->add_option("-o,--output", svg_output, "Output file, '-' for stdout");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*density) return cmd_density(density_opts, out, err);
    if (*decomposition) return cmd_decompose(decompose_opts, decompose_by, decompose_scope, weights_report, out, err);
    if (*test) return cmd_test(test_opts, test_by, test_scope, quantiles, effective_n, shares_file, out, err);
    if (*svg) return cmd_export_svg(svg_input, svg_output, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace kdecomp::cli
