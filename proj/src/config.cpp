#include "bwpart/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bwpart/errors.hpp"
#include "bwpart/extensions.hpp"

namespace bwpart {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class LineError {
 public:
  explicit LineError(int line) : line_(line) {}
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

 private:
  int line_;
};

double to_double(const std::string& v, const LineError& at) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || std::isnan(d))
    at.fail("expected a number, got '" + v + "'");
  return d;
}

std::uint64_t to_u64(const std::string& v, const LineError& at) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
    at.fail("expected a non-negative integer, got '" + v + "'");
  return u;
}

int to_int(const std::string& v, const LineError& at) {
  const auto u = to_u64(v, at);
  if (u > 1'000'000) at.fail("integer out of range: '" + v + "'");
  return static_cast<int>(u);
}

bool to_bool(const std::string& v, const LineError& at) {
  if (v == "true") return true;
  if (v == "false") return false;
  at.fail("expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  if (trim(v).empty()) return items;
  // Commas inside parentheses belong to a single item: uniform(8,12).
  int depth = 0;
  std::string current;
  for (char ch : v) {
    if (ch == '(') ++depth;
    if (ch == ')' && depth > 0) --depth;
    if (ch == ',' && depth == 0) {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  items.push_back(trim(current));
  return items;
}

std::vector<double> to_doubles(const std::string& v, const LineError& at) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item, at));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

std::string join(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += values[i];
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const LineError&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"budget.rate_bps", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.rate_bps = to_double(v, at); }},
      {"budget.bandwidth_hz", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.bandwidth_hz = to_double(v, at); }},
      {"budget.power_w", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.power_w = to_double(v, at); }},
      {"budget.noise_density", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.noise_density = to_double(v, at); }},
      {"budget.distance_m", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.distance_m = to_double(v, at); }},
      {"budget.pathloss_alpha", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.pathloss_alpha = to_double(v, at); }},
      {"budget.outage_eps", [](RunConfig& c, const std::string& v, const LineError& at) { c.budget.outage_eps = to_double(v, at); }},
      {"budget.eb_n0_db", [](RunConfig& c, const std::string& v, const LineError& at) {
         if (v.empty()) c.eb_n0_db.reset(); else c.eb_n0_db = to_double(v, at); }},
      {"montecarlo.seed", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.seed = to_u64(v, at); }},
      {"montecarlo.replications", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.replications = to_u64(v, at); }},
      {"montecarlo.truncation_rel_tol", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.truncation_rel_tol = to_double(v, at); }},
      {"montecarlo.max_terms", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.max_terms = to_u64(v, at); }},
      {"montecarlo.tail_rule", [](RunConfig& c, const std::string& v, const LineError& at) {
         try { c.montecarlo.tail_rule = fz::parse_tail_rule(v); } catch (const std::invalid_argument& e) { at.fail(e.what()); } }},
      {"montecarlo.strict_truncation", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.strict_truncation = to_bool(v, at); }},
      {"montecarlo.threads", [](RunConfig& c, const std::string& v, const LineError& at) { c.montecarlo.threads = static_cast<unsigned>(to_int(v, at)); }},
      {"fz.samples", [](RunConfig& c, const std::string& v, const LineError& at) { c.fz.samples = to_u64(v, at); }},
      {"fz.quantile", [](RunConfig& c, const std::string& v, const LineError& at) {
         if (v.empty()) c.fz.quantile.reset(); else c.fz.quantile = to_double(v, at); }},
      {"fz.layout", [](RunConfig& c, const std::string& v, const LineError& at) {
         try { c.fz.layout = fz::parse_layout(v); } catch (const std::invalid_argument& e) { at.fail(e.what()); } }},
      {"fz.cache_dir", [](RunConfig& c, const std::string& v, const LineError&) { c.fz.cache_dir = v; }},
      {"sweep.eb_n0_db", [](RunConfig& c, const std::string& v, const LineError& at) { c.sweep.eb_n0_db = to_doubles(v, at); }},
      {"sweep.alpha", [](RunConfig& c, const std::string& v, const LineError& at) { c.sweep.alpha = to_doubles(v, at); }},
      {"simulate.eb_n0_db", [](RunConfig& c, const std::string& v, const LineError& at) { c.simulate.eb_n0_db = to_doubles(v, at); }},
      {"simulate.n_min", [](RunConfig& c, const std::string& v, const LineError& at) { c.simulate.n_min = to_int(v, at); }},
      {"simulate.n_max", [](RunConfig& c, const std::string& v, const LineError& at) { c.simulate.n_max = to_int(v, at); }},
      {"simulate.calibrate", [](RunConfig& c, const std::string& v, const LineError& at) { c.simulate.calibrate = to_bool(v, at); }},
      {"compare-ds.eb_n0_db", [](RunConfig& c, const std::string& v, const LineError& at) { c.compare_ds.eb_n0_db = to_doubles(v, at); }},
      {"compare-ds.alpha", [](RunConfig& c, const std::string& v, const LineError& at) { c.compare_ds.alpha = to_doubles(v, at); }},
      {"compare-ds.n_min", [](RunConfig& c, const std::string& v, const LineError& at) { c.compare_ds.n_min = to_int(v, at); }},
      {"compare-ds.n_max", [](RunConfig& c, const std::string& v, const LineError& at) { c.compare_ds.n_max = to_int(v, at); }},
      {"fading.scenarios", [](RunConfig& c, const std::string& v, const LineError&) { c.fading.scenarios = split_list(v); }},
      {"fading.lambda_total", [](RunConfig& c, const std::string& v, const LineError& at) { c.fading.lambda_total = to_double(v, at); }},
      {"fading.eb_n0_db", [](RunConfig& c, const std::string& v, const LineError& at) { c.fading.eb_n0_db = to_doubles(v, at); }},
      {"fading.n_min", [](RunConfig& c, const std::string& v, const LineError& at) { c.fading.n_min = to_int(v, at); }},
      {"fading.n_max", [](RunConfig& c, const std::string& v, const LineError& at) { c.fading.n_max = to_int(v, at); }},
      {"output.path", [](RunConfig& c, const std::string& v, const LineError&) { c.output.path = v; }},
      {"output.format", [](RunConfig& c, const std::string& v, const LineError& at) {
         if (v == "csv") c.output.format = OutputFormat::csv;
         else if (v == "json") c.output.format = OutputFormat::json;
         else at.fail("output.format must be csv or json"); }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

void require_grid(const std::vector<double>& grid, const std::string& name) {
  require(!grid.empty(), name + " must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], name + " must be strictly increasing");
}

void require_range(int lo, int hi, const std::string& name) {
  require(lo >= 1 && hi >= lo, name + " needs 1 <= n_min <= n_max");
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest text that parses back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void RunConfig::validate() const {
  try {
    budget.validate();
    montecarlo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eb_n0_db) require(!std::isnan(*eb_n0_db), "budget.eb_n0_db must be a number");
  require(fz.samples >= 1, "fz.samples must be >= 1");
  if (fz.quantile) require(*fz.quantile > 0.0, "fz.quantile must be > 0");
  require_grid(sweep.eb_n0_db, "sweep.eb_n0_db");
  require_grid(sweep.alpha, "sweep.alpha");
  require_grid(simulate.eb_n0_db, "simulate.eb_n0_db");
  require_range(simulate.n_min, simulate.n_max, "simulate");
  require_grid(compare_ds.eb_n0_db, "compare-ds.eb_n0_db");
  require_grid(compare_ds.alpha, "compare-ds.alpha");
  require_range(compare_ds.n_min, compare_ds.n_max, "compare-ds");
  require(!fading.scenarios.empty(), "fading.scenarios must not be empty");
  for (const auto& tag : fading.scenarios) {
    try {
      parse_fading_scenario(tag, budget);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("invalid fading scenario '" + tag + "': " + e.what());
    }
  }
  require(fading.lambda_total >= 0.0 && std::isfinite(fading.lambda_total),
          "fading.lambda_total must be finite and >= 0");
  require_grid(fading.eb_n0_db, "fading.eb_n0_db");
  require_range(fading.n_min, fading.n_max, "fading");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  static const std::string kSections[] = {"budget", "montecarlo", "fz", "sweep", "simulate",
                                          "compare-ds", "fading", "output"};
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError at(line_no);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') at.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : kSections) known = known || s == section;
      if (!known) at.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) at.fail("expected key = value");
    if (section.empty()) at.fail("key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(section + "." + key);
    if (it == setters().end()) at.fail("unknown key '" + key + "' in [" + section + "]");
    it->second(config, value, at);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << "\n"; };
  out << "[budget]\n";
  kv("rate_bps", format_double(c.budget.rate_bps));
  kv("bandwidth_hz", format_double(c.budget.bandwidth_hz));
  kv("power_w", format_double(c.budget.power_w));
  kv("noise_density", format_double(c.budget.noise_density));
  kv("distance_m", format_double(c.budget.distance_m));
  kv("pathloss_alpha", format_double(c.budget.pathloss_alpha));
  kv("outage_eps", format_double(c.budget.outage_eps));
  kv("eb_n0_db", c.eb_n0_db ? format_double(*c.eb_n0_db) : "");
  out << "\n[montecarlo]\n";
  kv("seed", std::to_string(c.montecarlo.seed));
  kv("replications", std::to_string(c.montecarlo.replications));
  kv("truncation_rel_tol", format_double(c.montecarlo.truncation_rel_tol));
  kv("max_terms", std::to_string(c.montecarlo.max_terms));
  kv("tail_rule", fz::to_string(c.montecarlo.tail_rule));
  kv("strict_truncation", c.montecarlo.strict_truncation ? "true" : "false");
  kv("threads", std::to_string(c.montecarlo.threads));
  out << "\n[fz]\n";
  kv("samples", std::to_string(c.fz.samples));
  kv("quantile", c.fz.quantile ? format_double(*c.fz.quantile) : "");
  kv("layout", fz::to_string(c.fz.layout));
  kv("cache_dir", c.fz.cache_dir);
  out << "\n[sweep]\n";
  kv("eb_n0_db", join(c.sweep.eb_n0_db));
  kv("alpha", join(c.sweep.alpha));
  out << "\n[simulate]\n";
  kv("eb_n0_db", join(c.simulate.eb_n0_db));
  kv("n_min", std::to_string(c.simulate.n_min));
  kv("n_max", std::to_string(c.simulate.n_max));
  kv("calibrate", c.simulate.calibrate ? "true" : "false");
  out << "\n[compare-ds]\n";
  kv("eb_n0_db", join(c.compare_ds.eb_n0_db));
  kv("alpha", join(c.compare_ds.alpha));
  kv("n_min", std::to_string(c.compare_ds.n_min));
  kv("n_max", std::to_string(c.compare_ds.n_max));
  out << "\n[fading]\n";
  kv("scenarios", join(c.fading.scenarios));
  kv("lambda_total", format_double(c.fading.lambda_total));
  kv("eb_n0_db", join(c.fading.eb_n0_db));
  kv("n_min", std::to_string(c.fading.n_min));
  kv("n_max", std::to_string(c.fading.n_max));
  out << "\n[output]\n";
  kv("path", c.output.path);
  kv("format", c.output.format == OutputFormat::csv ? "csv" : "json");
  return out.str();
}

LinkBudget budget_at_db(const LinkBudget& budget, double db) {
  if (std::isinf(db) && db > 0) return with_eb_n0(budget, EbN0::infinite());
  LinkBudget b = budget;
  // A configured N0 of zero has no finite Eb/N0; a finite dB target needs noise.
  if (b.noise_density == 0.0) throw ConfigError("a finite eb_n0_db needs budget.noise_density > 0");
  return with_eb_n0(b, EbN0::from_db(db));
}

LinkBudget effective_budget(const RunConfig& config) {
  if (!config.eb_n0_db) return config.budget;
  return budget_at_db(config.budget, *config.eb_n0_db);
}

}  // namespace bwpart
