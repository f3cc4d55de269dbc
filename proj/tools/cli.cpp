#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "treebounds/bounds.hpp"
#include "treebounds/cond_ind.hpp"
#include "treebounds/errors.hpp"
#include "treebounds/generators.hpp"
#include "treebounds/oracle.hpp"
#include "treebounds/order_stats.hpp"
#include "treebounds/parallel.hpp"
#include "treebounds/tree_model.hpp"

namespace treebounds::cli {
namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string output;
  std::string format = "csv";
  int jobs = 0;
  std::uint64_t seed = 1;
  double tolerance = 1e-7;

  int workers() const {
    if (jobs > 0) return jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
};

std::string shortest(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed4(double v) {
  if (std::abs(v) < 5e-5) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Rows of numbers under a fixed header. The first `int_columns` columns are
/// integral (k, run); absent cells print empty.
class Table {
 public:
  Table(std::vector<std::string> header, std::size_t int_columns)
      : header_(std::move(header)), int_columns_(int_columns) {}

  void add(std::vector<std::optional<double>> row) { rows_.push_back(std::move(row)); }

  void write(std::ostream& os, bool csv) const {
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header_);
    for (const auto& row : rows_) {
      std::vector<std::string> line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (!row[c]) {
          line.emplace_back();
        } else if (c < int_columns_) {
          line.push_back(std::to_string(static_cast<long long>(*row[c])));
        } else {
          line.push_back(csv ? shortest(*row[c]) : fixed4(*row[c]));
        }
      }
      cells.push_back(std::move(line));
    }
    if (csv) {
      for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) os << (c ? "," : "") << line[c];
        os << '\n';
      }
      return;
    }
    std::vector<std::size_t> width(header_.size(), 0);
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) {
        if (c) os << "  ";
        os << std::string(width[c] - line[c].size(), ' ') << line[c];
      }
      os << '\n';
    }
  }

 private:
  std::vector<std::string> header_;
  std::size_t int_columns_;
  std::vector<std::vector<std::optional<double>>> rows_;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return buf.str();
}

TreeSpec read_spec(const std::string& path, bool require_probabilities = true) {
  return parse_tree_json(read_text(path), require_probabilities);
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw UsageError("bad integer '" + std::string(s) + "' in --k");
  }
  return v;
}

// "a..b", "a,b,c" or a single value. Empty selects 1..n.
std::vector<int> parse_ks(const std::string& spec, int n) {
  std::vector<int> ks;
  if (spec.empty()) {
    for (int k = 1; k <= n; ++k) ks.push_back(k);
    return ks;
  }
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const int lo = parse_int(std::string_view(spec).substr(0, dots));
    const int hi = parse_int(std::string_view(spec).substr(dots + 2));
    if (hi < lo) throw UsageError("empty k range " + spec);
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  std::string_view rest = spec;
  while (true) {
    const auto comma = rest.find(',');
    ks.push_back(parse_int(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return ks;
}

Direction parse_direction(const std::string& s) {
  return s == "lower" ? Direction::lower : Direction::upper;
}

Copula require_copula(const std::string& s) {
  const auto c = parse_copula(s);
  if (!c) throw UsageError("unknown copula '" + s + "'");
  return *c;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse_error: return kUsage;
    case ErrorKind::size_cap: return kSizeCap;
    case ErrorKind::solver_failure:
    case ErrorKind::numerical_failure:
    case ErrorKind::invariant_breach: return kInvariantBreach;
    default: return kInvalidModel;
  }
}

// Checks lo <= ... <= hi along a chain of available values.
std::optional<std::string> nesting_violation(std::initializer_list<std::optional<double>> chain,
                                             double tol) {
  static constexpr const char* kNames[] = {"L_uv", "L", "P_ci", "U", "U_uv"};
  std::optional<double> prev;
  int prev_index = -1;
  int index = 0;
  for (const auto& v : chain) {
    if (v) {
      if (prev && *prev > *v + tol) {
        return std::string(kNames[prev_index]) + "=" + shortest(*prev) + " > " + kNames[index] +
               "=" + shortest(*v);
      }
      prev = v;
      prev_index = index;
    }
    ++index;
  }
  return std::nullopt;
}

// ---- subcommands ----

struct ValidateArgs {
  std::string path;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto report = validate_marginals(read_spec(a.path));
  out << report.describe();
  return report.ok ? kOk : kInvalidModel;
}

struct BoundArgs {
  std::string path;
  std::string ks;
  std::string sides = "both";
};

int cmd_bound(const BoundArgs& a, const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = TreeModel::build(read_spec(a.path));
  const auto ks = parse_ks(a.ks, model.size());
  const bool want_u = a.sides != "lower";
  const bool want_l = a.sides != "upper";

  struct Row {
    std::optional<double> u, l;
    double ci = 0, uu = 0, lu = 0;
  };
  std::vector<Row> rows(ks.size());
  parallel_for(ks.size(), o.workers(), [&](std::size_t i) {
    const int k = ks[i];
    Row& r = rows[i];
    if (want_u) r.u = upper_bound(model, k).value;
    if (want_l) r.l = lower_bound(model, k).value;
    r.ci = ci_tail(model, k);
    r.uu = univariate_upper(model.marginals(), k);
    r.lu = univariate_lower(model.marginals(), k);
  });

  Table table({"k", "U", "L", "P_ci", "U_uv", "L_uv"}, 1);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const Row& r = rows[i];
    if (auto bad = nesting_violation({r.lu, r.l, r.ci, r.u, r.uu}, o.tolerance)) {
      err << "InvariantBreach: band nesting fails at k=" << ks[i] << ": " << *bad << '\n';
      return kInvariantBreach;
    }
    table.add({ks[i], r.u, r.l, r.ci, r.uu, r.lu});
  }
  table.write(out, o.format == "csv");
  return kOk;
}

struct CiArgs {
  std::string path;
  std::string ks;
};

int cmd_ci(const CiArgs& a, const Options& o, std::ostream& out) {
  const auto model = TreeModel::build(read_spec(a.path));
  const auto pmf = ci_pmf(model);
  Table table({"k", "pmf", "P_ci"}, 1);
  for (int k : parse_ks(a.ks, model.size())) {
    const double mass = (k >= 0 && k < static_cast<int>(pmf.size())) ? pmf[k] : 0.0;
    table.add({k, mass, ci_tail(model, k)});
  }
  table.write(out, o.format == "csv");
  return kOk;
}

int cmd_univariate(const CiArgs& a, const Options& o, std::ostream& out) {
  const auto model = TreeModel::build(read_spec(a.path));
  Table table({"k", "U_uv", "L_uv"}, 1);
  for (int k : parse_ks(a.ks, model.size())) {
    table.add({k, univariate_upper(model.marginals(), k),
               univariate_lower(model.marginals(), k)});
  }
  table.write(out, o.format == "csv");
  return kOk;
}

struct OracleArgs {
  std::string path;
  int k = 1;
  std::string direction = "upper";
  std::vector<double> weights;
};

int cmd_oracle(const OracleArgs& a, const Options& o, std::ostream& out) {
  const auto model = parse_general_json(read_text(a.path));
  const Direction dir = parse_direction(a.direction);
  if (!a.weights.empty() && static_cast<int>(a.weights.size()) != model.size() + 1) {
    throw UsageError("--weights needs n+1 = " + std::to_string(model.size() + 1) + " values");
  }
  const auto r = a.weights.empty() ? oracle_bound(model, a.k, dir) : oracle_bound(model, a.weights, dir);
  if (r.status != lp::Status::optimal) {
    out << "INFEASIBLE\n";
    return kInvalidModel;
  }
  out << (o.format == "csv" ? shortest(r.value) : fixed4(r.value)) << '\n';
  return kOk;
}

struct BandsArgs {
  int n = 15;
  int runs = 50;
  std::string copula = "comonotone";
};

int cmd_experiment_bands(const BandsArgs& a, const Options& o, std::ostream& out) {
  if (a.n < 2) throw UsageError("--n must be at least 2");
  if (a.runs < 1) throw UsageError("--runs must be at least 1");
  const Copula copula = require_copula(a.copula);
  struct Row {
    double u, uu, ci;
  };
  std::vector<std::vector<Row>> runs(a.runs);
  parallel_for(runs.size(), o.workers(), [&](std::size_t run) {
    Rng rng(stream_seed(o.seed, run));
    const auto model = experiment_model(a.n, copula, rng);
    for (int k = 1; k <= a.n; ++k) {
      runs[run].push_back({upper_bound(model, k).value, univariate_upper(model.marginals(), k),
                           ci_tail(model, k)});
    }
  });
  Table table({"run", "k", "U", "U_uv", "P_ci"}, 2);
  for (std::size_t run = 0; run < runs.size(); ++run) {
    for (int k = 1; k <= a.n; ++k) {
      const Row& r = runs[run][k - 1];
      table.add({static_cast<double>(run), k, r.u, r.uu, r.ci});
    }
  }
  table.write(out, o.format == "csv");
  return kOk;
}

struct OrderStatsArgs {
  std::string topology;
  std::string grid;
  std::string copula;
  std::vector<double> mu;
  std::vector<double> sigma;
  int k = 1;
  double x_min = -3.0;
  double x_max = 3.0;
  double x_step = 0.1;
};

std::vector<double> per_node(const std::vector<double>& v, int n, double fallback,
                             const char* flag) {
  if (v.empty()) return std::vector<double>(n, fallback);
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  if (static_cast<int>(v.size()) != n) {
    throw UsageError(std::string(flag) + " needs 1 or " + std::to_string(n) + " values");
  }
  return v;
}

int cmd_orderstats(const OrderStatsArgs& a, const Options& o, std::ostream& out) {
  const auto topo = topology_of(read_spec(a.topology, false));
  CdfGrid grid;
  if (!a.grid.empty()) {
    grid = parse_cdf_grid(read_text(a.grid));
  } else {
    if (!(a.x_step > 0.0) || a.x_max < a.x_min) throw UsageError("bad x range");
    const long count = std::lround((a.x_max - a.x_min) / a.x_step);
    std::vector<double> xs;
    for (long i = 0; i <= count; ++i) {
      // Snap to 12 decimals so grid points print as typed (0.1 steps give 0, not 4e-16).
      xs.push_back(std::round((a.x_min + a.x_step * i) * 1e12) / 1e12);
    }
    const int n = topo->size();
    grid = gaussian_grid(*topo, per_node(a.mu, n, 0.0, "--mu"), per_node(a.sigma, n, 1.0, "--sigma"),
                         xs, require_copula(a.copula));
  }
  const auto curves = sweep(topo, grid, a.k, o.workers());
  Table table({"x", "U", "L", "CI", "U_uv", "L_uv"}, 0);
  for (const auto& p : curves.points) {
    if (nesting_violation({p.univariate_lower, p.lower, p.ci, p.upper, p.univariate_upper},
                          o.tolerance)) {
      throw Error(ErrorKind::invariant_breach, "band nesting fails at x=" + shortest(p.x));
    }
    table.add({p.x, p.upper, p.lower, p.ci, p.univariate_upper, p.univariate_lower});
  }
  table.write(out, o.format == "csv");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tight bounds on P(sum of Bernoullis >= k) given tree-structured marginals",
               "treebounds"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("-o,--output", o.output, "Write results to this file instead of stdout");
  app.add_option("--format", o.format, "csv (full precision) or table (4 decimals)")
      ->check(CLI::IsMember({"csv", "table"}));
  app.add_option("-j,--jobs", o.jobs, "Worker threads; 0 uses every core")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", o.seed, "Seed for experiment generation");
  app.add_option("--tolerance", o.tolerance, "Slack allowed in band nesting checks")
      ->check(CLI::PositiveNumber);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check structure and Frechet bounds");
  validate->add_option("model", va.path, "Tree model JSON")->required();

  BoundArgs ba;
  auto* bound = app.add_subcommand("bound", "Tree bounds with CI and univariate references");
  bound->add_option("model", ba.path, "Tree model JSON")->required();
  bound->add_option("-k,--k", ba.ks, "k, k1,k2,... or lo..hi (default 1..n)");
  bound->add_option("--sides", ba.sides, "upper, lower or both")
      ->check(CLI::IsMember({"upper", "lower", "both"}));

  CiArgs ca;
  auto* ci = app.add_subcommand("ci", "Sum distribution under the conditionally independent law");
  ci->add_option("model", ca.path, "Tree model JSON")->required();
  ci->add_option("-k,--k", ca.ks, "k, k1,k2,... or lo..hi (default 1..n)");

  CiArgs ua;
  auto* uni = app.add_subcommand("univariate", "Bounds from the marginals alone");
  uni->add_option("model", ua.path, "Tree model JSON")->required();
  uni->add_option("-k,--k", ua.ks, "k, k1,k2,... or lo..hi (default 1..n)");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Exact bound by enumerating all 2^n outcomes");
  oracle->add_option("model", oa.path, "Tree or general pairwise model JSON")->required();
  oracle->add_option("-k,--k", oa.k, "Threshold");
  oracle->add_option("--direction", oa.direction)->check(CLI::IsMember({"upper", "lower"}));
  oracle->add_option("--weights", oa.weights, "Weights w_0..w_n instead of a threshold")
      ->delimiter(',');

  BandsArgs bda;
  auto* bands = app.add_subcommand("experiment-bands", "Random trees under a copula");
  bands->add_option("--n", bda.n, "Nodes per tree");
  bands->add_option("--runs", bda.runs, "Number of random trees");
  bands->add_option("--copula", bda.copula, "independence, comonotone or anti-comonotone");

  OrderStatsArgs osa;
  auto* os = app.add_subcommand("orderstats", "Bounds on P(X_{k:n} <= x) along a grid");
  os->add_option("topology", osa.topology, "Tree JSON; probabilities are ignored")->required();
  auto* grid_opt = os->add_option("--grid", osa.grid, "CDF grid JSON");
  auto* cop_opt = os->add_option("--copula", osa.copula, "Gaussian marginals joined by a copula");
  grid_opt->excludes(cop_opt);
  os->add_option("--mu", osa.mu, "Gaussian means, one per node or one for all")->delimiter(',');
  os->add_option("--sigma", osa.sigma, "Gaussian scales")->delimiter(',');
  os->add_option("-k,--k", osa.k, "Order statistic index")->required();
  os->add_option("--x-min", osa.x_min);
  os->add_option("--x-max", osa.x_max);
  os->add_option("--x-step", osa.x_step);

  std::vector<const char*> argv{"treebounds"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (os->parsed() && osa.grid.empty() && osa.copula.empty()) {
      throw CLI::ValidationError("orderstats", "one of --grid or --copula is required");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  std::ostringstream result;
  int code = kOk;
  try {
    if (validate->parsed()) code = cmd_validate(va, result);
    else if (bound->parsed()) code = cmd_bound(ba, o, result, err);
    else if (ci->parsed()) code = cmd_ci(ca, o, result);
    else if (uni->parsed()) code = cmd_univariate(ua, o, result);
    else if (oracle->parsed()) code = cmd_oracle(oa, o, result);
    else if (bands->parsed()) code = cmd_experiment_bands(bda, o, result);
    else code = cmd_orderstats(osa, o, result);
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariantBreach;
  }

  if (o.output.empty()) {
    out << result.str();
  } else {
    std::ofstream file(o.output, std::ios::binary);
    file << result.str();
    if (!file) {
      err << "error: cannot write " << o.output << '\n';
      return kUsage;
    }
  }
  return code;
}

}  // namespace treebounds::cli
