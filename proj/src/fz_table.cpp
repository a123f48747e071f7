#include "bwpart/fz_table.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "bwpart/errors.hpp"
#include "bwpart/kernels.hpp"

namespace bwpart::fz {

namespace {

using Layout = EmpiricalInterferenceCdf::Layout;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw IoError(std::string("F_Z table: bad ") + what + " '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || end != text.c_str() + text.size() || errno == ERANGE)
    throw IoError(std::string("F_Z table: bad ") + what + " '" + text + "'");
  return v;
}

// Keeps file names portable: anything outside [A-Za-z0-9.-] becomes '_'.
std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')) c = '_';
  return out;
}

class LockFile {
 public:
  explicit LockFile(std::filesystem::path path) : path_(std::move(path)) {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw IoError("cannot acquire lock " + path_.string() + ": " + std::strerror(errno) +
                    " (another writer, or a stale lock to remove)");
    std::fclose(f);
  }
  ~LockFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace

std::string to_string(TailRule rule) {
  return rule == TailRule::fluctuation ? "fluctuation" : "mean_bound";
}

TailRule parse_tail_rule(const std::string& text) {
  if (text == "fluctuation") return TailRule::fluctuation;
  if (text == "mean_bound") return TailRule::mean_bound;
  throw std::invalid_argument("unknown tail rule '" + text + "'");
}

std::string to_string(Layout layout) {
  return layout == Layout::samples ? "samples" : "quantile_grid";
}

Layout parse_layout(const std::string& text) {
  if (text == "samples") return Layout::samples;
  if (text == "quantile_grid") return Layout::quantile_grid;
  throw std::invalid_argument("unknown table layout '" + text + "'");
}

std::string cache_file_name(const TableKey& key) {
  return "fz-v" + std::to_string(kFormatVersion) + "-a" + g17(key.alpha) + "-n" +
         std::to_string(key.n_samples) + "-s" + std::to_string(key.seed) + "-t" +
         g17(key.truncation_rel_tol) + "-" + to_string(key.tail_rule) + "-" +
         sanitize(key.fading_tag) + "-" + to_string(key.layout) + ".txt";
}

std::string serialize(const EmpiricalInterferenceCdf& cdf, TailRule rule, std::string_view isa) {
  const auto& m = cdf.metadata();
  std::string out;
  out.reserve(64 + cdf.points().size() * 25);
  out += "bwpart-fz " + std::to_string(kFormatVersion) + "\n";
  out += "alpha " + g17(m.alpha) + "\n";
  out += "n_samples " + std::to_string(m.n_samples) + "\n";
  out += "seed " + std::to_string(m.seed) + "\n";
  out += "truncation_rel_tol " + g17(m.truncation_rel_tol) + "\n";
  out += "tail_rule " + to_string(rule) + "\n";
  out += "fading_tag " + m.fading_tag + "\n";
  out += "layout " + to_string(cdf.layout()) + "\n";
  out += "points " + std::to_string(cdf.points().size()) + "\n";
  out += "isa " + std::string(isa) + "\n";
  out += "data\n";
  for (double v : cdf.points()) {
    out += g17(v);
    out += '\n';
  }
  return out;
}

LoadedTable parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("F_Z table: empty input");
  if (line != "bwpart-fz " + std::to_string(kFormatVersion))
    throw IoError("F_Z table: unsupported header '" + line + "'");
  std::map<std::string, std::string> fields;
  bool saw_data = false;
  while (std::getline(in, line)) {
    if (line == "data") {
      saw_data = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw IoError("F_Z table: malformed header line '" + line + "'");
    fields[line.substr(0, space)] = line.substr(space + 1);
  }
  if (!saw_data) throw IoError("F_Z table: missing data section");
  auto field = [&](const char* name) -> const std::string& {
    const auto it = fields.find(name);
    if (it == fields.end()) throw IoError(std::string("F_Z table: missing field ") + name);
    return it->second;
  };
  EmpiricalInterferenceCdf::Metadata meta;
  meta.alpha = parse_double(field("alpha"), "alpha");
  meta.n_samples = parse_u64(field("n_samples"), "n_samples");
  meta.seed = parse_u64(field("seed"), "seed");
  meta.truncation_rel_tol = parse_double(field("truncation_rel_tol"), "truncation_rel_tol");
  meta.fading_tag = field("fading_tag");
  const auto points = parse_u64(field("points"), "points");
  Layout layout;
  TailRule rule;
  try {
    layout = parse_layout(field("layout"));
    rule = parse_tail_rule(field("tail_rule"));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("F_Z table: ") + e.what());
  }

  std::vector<double> values;
  values.reserve(points);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(parse_double(line, "value"));
  }
  if (values.size() != points)
    throw IoError("F_Z table: expected " + std::to_string(points) + " values, found " +
                  std::to_string(values.size()));
  try {
    if (layout == Layout::samples) {
      const auto n = meta.n_samples;
      auto cdf = EmpiricalInterferenceCdf::from_samples(std::move(values), meta);
      if (n != cdf.metadata().n_samples) throw IoError("F_Z table: n_samples disagrees with data");
      return {std::move(cdf), rule, field("isa")};
    }
    return {EmpiricalInterferenceCdf::from_quantile_grid(std::move(values), meta), rule, field("isa")};
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("F_Z table: ") + e.what());
  }
}

LoadedTable read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open F_Z table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("cannot read F_Z table " + path.string());
  return parse(buf.str());
}

void write_file(const std::filesystem::path& path, const EmpiricalInterferenceCdf& cdf,
                TailRule rule) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  LockFile lock(path.string() + ".lock");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    const std::string text = serialize(cdf, rule, kernels::to_string(kernels::active().isa));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move table into place at " + path.string());
  }
}

EmpiricalInterferenceCdf build(double alpha, const MonteCarloPlan& plan, FadingLaw fading,
                               Layout layout, SamplingDiagnostics* diagnostics) {
  auto z = sample_z(alpha, plan, fading);
  if (diagnostics) *diagnostics = z.diagnostics;
  EmpiricalInterferenceCdf::Metadata meta;
  meta.alpha = alpha;
  meta.seed = plan.seed;
  meta.truncation_rel_tol = plan.truncation_rel_tol;
  meta.fading_tag = fading.tag();
  auto cdf = EmpiricalInterferenceCdf::from_samples(std::move(z.values), meta);
  if (layout == Layout::samples) return cdf;
  return EmpiricalInterferenceCdf::from_quantile_grid(
      cdf.quantile_grid(EmpiricalInterferenceCdf::kDefaultGridPoints), cdf.metadata());
}

CacheResult load_or_build(const std::filesystem::path& cache_dir, double alpha,
                          const MonteCarloPlan& plan, FadingLaw fading, Layout layout) {
  TableKey key;
  key.alpha = alpha;
  key.n_samples = plan.replications;
  key.seed = plan.seed;
  key.truncation_rel_tol = plan.truncation_rel_tol;
  key.tail_rule = plan.tail_rule;
  key.fading_tag = fading.tag();
  key.layout = layout;
  const auto path = cache_dir / cache_file_name(key);
  if (std::filesystem::exists(path)) {
    auto table = read_file(path);
    return {std::move(table), path, false, {}};
  }
  SamplingDiagnostics diag;
  auto cdf = build(alpha, plan, fading, layout, &diag);
  write_file(path, cdf, plan.tail_rule);
  LoadedTable table{std::move(cdf), plan.tail_rule,
                    std::string(kernels::to_string(kernels::active().isa))};
  return {std::move(table), path, true, diag};
}

}  // namespace bwpart::fz
