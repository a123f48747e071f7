#include "bwpart/commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "bwpart/errors.hpp"
#include "bwpart/extensions.hpp"
#include "bwpart/fz_table.hpp"
#include "bwpart/kernels.hpp"
#include "bwpart/optimizer.hpp"
#include "bwpart/special.hpp"
#include "bwpart/stochgeo.hpp"

namespace bwpart {

namespace {

constexpr double kWarnTerms = 1e5;

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

nlohmann::ordered_json cell_json(const Cell& cell) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(double v) const {
      if (std::isfinite(v)) return v;
      return format_double(v);
    }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

Cell opt(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }
Cell integer(long long v) { return Cell{static_cast<std::int64_t>(v)}; }

MonteCarloPlan table_plan(const RunConfig& config) {
  MonteCarloPlan plan = config.montecarlo;
  plan.replications = config.fz.samples;
  return plan;
}

// F_Z^-1(eps) for one path-loss exponent: the configured override, or the
// (cached) Monte Carlo table.
class QuantileSource {
 public:
  QuantileSource(const RunConfig& config, std::ostream& log) : config_(config), log_(log) {}

  double at(double alpha, double eps) {
    if (config_.fz.quantile) return *config_.fz.quantile;
    const auto it = tables_.find(alpha);
    if (it != tables_.end()) return it->second.quantile(eps);
    const auto plan = table_plan(config_);
    if (config_.fz.cache_dir.empty()) {
      auto cdf = fz::build(alpha, plan, FadingLaw::none(), config_.fz.layout);
      return tables_.emplace(alpha, std::move(cdf)).first->second.quantile(eps);
    }
    auto cached = fz::load_or_build(config_.fz.cache_dir, alpha, plan, FadingLaw::none(),
                                    config_.fz.layout);
    log_ << (cached.built ? "built F_Z table " : "using F_Z table ") << cached.path.string() << "\n";
    return tables_.emplace(alpha, std::move(cached.table.cdf)).first->second.quantile(eps);
  }

 private:
  const RunConfig& config_;
  std::ostream& log_;
  std::map<double, EmpiricalInterferenceCdf> tables_;
};

void add(Table& t, const std::string& field, Cell value) {
  t.rows.push_back({Cell{field}, std::move(value)});
}

LinkBudget with_alpha_at_db(LinkBudget budget, double alpha, double db) {
  budget.pathloss_alpha = alpha;
  return budget_at_db(budget, db);
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no column " + name);
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << csv_escape(table.header[i]);
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(cell_text(row[i]));
    out << "\n";
  }
}

void write_json(std::ostream& out, const Table& table) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size() && i < table.header.size(); ++i)
      obj[table.header[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  out << rows.dump(2) << "\n";
}

Table cmd_solve(const RunConfig& config, std::ostream& log) {
  const LinkBudget budget = effective_budget(config);
  budget.validate();
  const EbN0 e = eb_n0_of(budget);
  if (!e.is_infinite() && e.linear() < std::log(2.0))
    throw InfeasibleError("Eb/N0 = " + format_double(e.db()) +
                          " dB is below ln 2 (-1.59 dB): the rate cannot be met even without "
                          "interference");
  QuantileSource quantiles(config, log);
  const double q = quantiles.at(budget.pathloss_alpha, budget.outage_eps);
  const auto s = solve(budget, q);
  const auto oracle = grid_oracle_argmax(DensityObjective(s.eb_n0, s.alpha));

  Table t;
  t.header = {"field", "value"};
  add(t, "eb_n0_db", s.eb_n0.db());
  add(t, "alpha", s.alpha);
  add(t, "c_awgn", s.capacity);
  add(t, "b_star", s.b_star);
  add(t, "beta_star", s.beta_star);
  add(t, "beta_star_db", to_db(s.beta_star));
  add(t, "n_star", integer(s.n_star));
  add(t, "b_partition", s.b_partition);
  add(t, "beta_partition_db", to_db(s.beta_partition));
  add(t, "density_constant", s.density_constant);
  add(t, "density_constant_partition", s.density_constant_partition);
  add(t, "fz_quantile", q);
  add(t, "kappa", s.kappa);
  add(t, "density_per_m2", s.density_per_m2);
  add(t, "regime", std::string(to_string(s.regime)));
  add(t, "fixed_point_residual", s.fixed_point_residual);
  add(t, "grid_oracle_b", oracle.b_hat);
  add(t, "closed_form_b", opt(s.closed_form_b));
  add(t, "wideband_b", opt(s.wideband_b));
  return t;
}

Table cmd_sweep(const RunConfig& config, std::ostream&) {
  Table t;
  t.header = {"eb_n0_db", "alpha", "b_star", "beta_db", "density_constant", "c_awgn",
              "wideband_approx", "status"};
  for (double alpha : config.sweep.alpha) {
    for (double db : config.sweep.eb_n0_db) {
      std::vector<Cell> row{db, alpha};
      try {
        const EbN0 e = EbN0::from_db(db);
        const auto fp = solve_fixed_point(e, alpha);
        const DensityObjective unit(e, alpha);
        row.push_back(fp.b_star);
        row.push_back(to_db(beta_of_b(fp.b_star)));
        row.push_back(density_of_b(unit, fp.b_star));
        row.push_back(unit.capacity());
        row.push_back(e.is_infinite() ? Cell{} : Cell{solve_power_limited(e, alpha).b_star});
        row.push_back(std::string("ok"));
      } catch (const InfeasibleError&) {
        row.resize(7);
        row.push_back(std::string("infeasible"));
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

Table cmd_simulate(const RunConfig& config, std::ostream& log) {
  Table t;
  t.header = {"eb_n0_db", "n", "b", "analytic_total_density", "mc_total_density",
              "mc_outage_at_analytic", "mc_outage_stderr", "agree_3sigma", "status"};
  QuantileSource quantiles(config, log);
  const MonteCarloPlan& plan = config.montecarlo;
  for (double db : config.simulate.eb_n0_db) {
    const LinkBudget budget = budget_at_db(config.budget, db);
    const double q = quantiles.at(budget.pathloss_alpha, budget.outage_eps);
    const double eps = budget.outage_eps;
    const double sigma = std::sqrt(eps * (1.0 - eps) / static_cast<double>(plan.replications));
    for (int n = config.simulate.n_min; n <= config.simulate.n_max; ++n) {
      std::vector<Cell> row{db, integer(n), b_of_partition(budget, n)};
      double analytic = 0.0;
      try {
        analytic = max_density(budget, n, q).total;
      } catch (const InfeasibleError&) {
        row.resize(8);
        row.push_back(std::string("infeasible"));
        t.rows.push_back(std::move(row));
        continue;
      }
      row.push_back(analytic);
      if (!(analytic > 0.0)) {
        row.resize(8);
        row.push_back(std::string("boundary"));
        t.rows.push_back(std::move(row));
        continue;
      }
      const auto est = end_to_end_outage_mc(budget, analytic, n, plan);
      row.push_back(config.simulate.calibrate ? Cell{mc_max_total_density(budget, n, plan, analytic)}
                                              : Cell{});
      row.push_back(est.probability);
      row.push_back(sigma);
      row.push_back(std::abs(est.probability - eps) <= 3.0 * sigma);
      row.push_back(std::string("ok"));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

Table cmd_fz(const RunConfig& config, std::ostream& log) {
  const double alpha = config.budget.pathloss_alpha;
  if (!(alpha > 2.0)) throw std::invalid_argument("fz needs pathloss_alpha > 2");
  if (config.fz.cache_dir.empty()) throw ConfigError("fz needs fz.cache_dir");
  MonteCarloPlan plan = table_plan(config);
  const double expected = expected_terms_estimate(alpha, plan);
  if (expected > kWarnTerms)
    log << "warning: alpha=" << format_double(alpha) << " converges slowly; about "
        << format_double(std::round(expected)) << " terms per sample (max_terms "
        << plan.max_terms << ", capped samples keep the tail compensation)\n";
  plan.strict_truncation = false;
  auto cached = fz::load_or_build(config.fz.cache_dir, alpha, plan, FadingLaw::none(), config.fz.layout);
  const auto& cdf = cached.table.cdf;
  if (cached.built && cached.diagnostics.truncated > 0)
    log << "warning: " << cached.diagnostics.truncated << " of " << plan.replications
        << " samples reached max_terms\n";
  log << (cached.built ? "wrote " : "reused ") << cached.path.string() << "\n";

  Table t;
  t.header = {"field", "value"};
  add(t, "path", cached.path.string());
  add(t, "built", cached.built);
  add(t, "alpha", alpha);
  add(t, "n_samples", integer(static_cast<long long>(cdf.metadata().n_samples)));
  add(t, "seed", integer(static_cast<long long>(cdf.metadata().seed)));
  add(t, "layout", fz::to_string(cdf.layout()));
  add(t, "isa", cached.table.isa);
  if (cdf.metadata().n_samples >= EmpiricalInterferenceCdf::kMinSamples)
    add(t, "quantile_at_eps", cdf.quantile(config.budget.outage_eps));
  else
    add(t, "quantile_at_eps", Cell{});
  add(t, "mean_terms", cached.built ? Cell{cached.diagnostics.mean_terms} : Cell{});
  add(t, "truncated", cached.built ? integer(static_cast<long long>(cached.diagnostics.truncated)) : Cell{});
  return t;
}

Table cmd_compare_ds(const RunConfig& config, std::ostream& log) {
  Table t;
  t.header = {"eb_n0_db", "alpha", "n", "ds_density", "fdma_density", "fdma_density_n1", "status"};
  QuantileSource quantiles(config, log);
  for (double db : config.compare_ds.eb_n0_db) {
    for (double alpha : config.compare_ds.alpha) {
      const LinkBudget budget = with_alpha_at_db(config.budget, alpha, db);
      const double q = quantiles.at(alpha, budget.outage_eps);
      const double n1 = max_density(budget, 1, q).total;
      for (int n = config.compare_ds.n_min; n <= config.compare_ds.n_max; ++n) {
        std::vector<Cell> row{db, alpha, integer(n)};
        std::string status = "ok";
        try {
          row.push_back(ds_density(budget, n, q));
        } catch (const InfeasibleError&) {
          row.push_back(Cell{});
          status = "ds_infeasible";
        }
        try {
          row.push_back(max_density(budget, n, q).total);
        } catch (const InfeasibleError&) {
          row.push_back(Cell{});
          status = status == "ok" ? "fdma_infeasible" : "infeasible";
        }
        row.push_back(n1);
        row.push_back(status);
        t.rows.push_back(std::move(row));
      }
    }
  }
  return t;
}

Table cmd_fading(const RunConfig& config, std::ostream&) {
  Table t;
  t.header = {"scenario", "eb_n0_db", "n_opt", "outage_min", "outage_ci_lo", "outage_ci_hi",
              "n_fixed_point", "n_interference_limited"};
  const auto& fs = config.fading;
  for (const auto& tag : fs.scenarios) {
    for (double db : fs.eb_n0_db) {
      const LinkBudget budget = budget_at_db(config.budget, db);
      const auto scenario = parse_fading_scenario(tag, budget);
      const auto sweep = fading_optimal_n(scenario, fs.lambda_total, fs.n_min, fs.n_max, config.montecarlo);
      const auto [lo, hi] = sweep.interval(sweep.n_opt);
      Cell n_fixed_point;
      try {
        n_fixed_point = integer(integer_partition_of_b(budget, solve_fixed_point(eb_n0_of(budget),
                                                                               budget.pathloss_alpha)
                                                                .b_star));
      } catch (const InfeasibleError&) {
      }
      const LinkBudget silent = with_eb_n0(budget, EbN0::infinite());
      const int n_il = integer_partition_of_b(silent, solve_interference_limited(budget.pathloss_alpha));
      t.rows.push_back({tag, db, integer(sweep.n_opt), sweep.at(sweep.n_opt).probability, lo, hi,
                        n_fixed_point, integer(n_il)});
    }
  }
  return t;
}

int run_command(const std::string& verb, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    config.validate();
    Table table;
    if (verb == "solve") table = cmd_solve(config, err);
    else if (verb == "sweep") table = cmd_sweep(config, err);
    else if (verb == "simulate") table = cmd_simulate(config, err);
    else if (verb == "fz") table = cmd_fz(config, err);
    else if (verb == "compare-ds") table = cmd_compare_ds(config, err);
    else if (verb == "fading") table = cmd_fading(config, err);
    else throw ConfigError("unknown command '" + verb + "'");

    std::ostringstream buffer;
    if (config.output.format == OutputFormat::json) write_json(buffer, table);
    else write_csv(buffer, table);
    if (config.output.path.empty()) {
      out << buffer.str();
      out.flush();
    } else {
      std::ofstream file(config.output.path, std::ios::binary | std::ios::trunc);
      if (!file) throw IoError("cannot open output " + config.output.path);
      file << buffer.str();
      file.close();
      if (!file) throw IoError("failed writing " + config.output.path);
    }
    return kExitOk;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TruncationError& e) {
    err << "truncation: " << e.what() << "\n";
    return kExitOther;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace bwpart
