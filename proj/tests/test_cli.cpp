#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("bwpart-cli-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args) {
  const auto err_path = scratch() / "stderr.txt";
  const std::string cmd = std::string("'") + BWPART_CLI_PATH + "' " + args + " 2>'" + err_path.string() + "'";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

/// Copies a data config and appends extra lines (later keys win).
fs::path config(const std::string& name, const std::string& extra = "") {
  const auto path = scratch() / (name + "-" + std::to_string(std::hash<std::string>{}(extra)) + ".conf");
  std::ofstream out(path);
  out << slurp(fs::path(BWPART_TEST_DATA) / (name + ".conf")) << "\n" << extra;
  return path;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::map<std::string, std::string> fields(const std::string& csv) {
  std::map<std::string, std::string> m;
  const auto rows = parse_csv(csv);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].size() >= 2) m[rows[i][0]] = rows[i][1];
  return m;
}

std::size_t col(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("solve: design example") {
  const auto r = run("solve --config '" + config("design").string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto f = fields(r.out);
  CHECK(f.at("n_star") == "8");
  CHECK(std::stod(f.at("b_star")) == doctest::Approx(1.26).epsilon(0.01));
  CHECK(f.at("eb_n0_db") == "inf");
  CHECK(f.at("regime") == "interference_limited");
  CHECK(f.at("wideband_b").empty());

  const auto r60 = run("solve --config '" + config("design", "[budget]\nrate_bps = 60e6\n").string() + "'");
  REQUIRE(r60.exit_code == 0);
  CHECK(fields(r60.out).at("n_star") == "1");
}

TEST_CASE("solve: below -1.59 dB is infeasible") {
  const auto r = run("solve --config '" + config("reference", "[budget]\neb_n0_db = -2\n").string() + "'");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("-1.59") != std::string::npos);
}

TEST_CASE("solve: reference budget") {
  const auto r = run("solve --config '" + config("reference").string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto f = fields(r.out);
  CHECK(f.at("n_star") == "23");
  CHECK(std::stod(f.at("kappa")) == doctest::Approx(0.0032).epsilon(0.03));
}

TEST_CASE("sweep: monotone columns and wideband limit") {
  const auto r = run("sweep --config '" +
                     config("reference", "[sweep]\neb_n0_db = -3, 0, 3, 6, 9, 12, 15, 20, 30, inf\nalpha = 2.5, 3, 3.5, 4\n")
                         .string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 40);
  CHECK(rows[0] == std::vector<std::string>{"eb_n0_db", "alpha", "b_star", "beta_db", "density_constant",
                                            "c_awgn", "wideband_approx", "status"});
  const auto& h = rows[0];
  std::map<std::string, double> last;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row[col(h, "status")] == "infeasible") {
      CHECK(row[col(h, "eb_n0_db")] == "-3");
      continue;
    }
    const std::string alpha = row[col(h, "alpha")];
    const double b = std::stod(row[col(h, "b_star")]);
    if (last.count(alpha)) CHECK(b >= last[alpha]);
    last[alpha] = b;
    if (row[col(h, "eb_n0_db")] == "inf" && alpha == "4") CHECK(b == doctest::Approx(2.3).epsilon(0.005));
  }

  // Wideband row: alpha = 4 at C = 0.05.
  const auto w = run("sweep --config '" +
                     config("reference", "[sweep]\neb_n0_db = -1.5162705406281858\nalpha = 4\n").string() + "'");
  REQUIRE(w.exit_code == 0);
  const auto wr = parse_csv(w.out);
  const double b = std::stod(wr[1][col(wr[0], "b_star")]);
  const double c = std::stod(wr[1][col(wr[0], "c_awgn")]);
  CHECK(c == doctest::Approx(0.05).epsilon(0.01));
  CHECK(b / c == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("simulate: peaks and agreement") {
  const auto r = run("simulate --config '" +
                     config("reference", "[simulate]\neb_n0_db = 0, 30\nn_min = 1\nn_max = 30\ncalibrate = false\n")
                         .string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto rows = parse_csv(r.out);
  const auto& h = rows[0];
  std::map<std::string, std::pair<int, double>> peak;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string db = row[col(h, "eb_n0_db")];
    const std::string status = row[col(h, "status")];
    if (status != "ok") {
      CHECK(db == "0");
      continue;
    }
    CHECK(row[col(h, "agree_3sigma")] == "true");
    CHECK(row[col(h, "mc_total_density")].empty());
    const double v = std::stod(row[col(h, "analytic_total_density")]);
    auto& p = peak[db];
    if (v > p.second) p = {std::stoi(row[col(h, "n")]), v};
  }
  CHECK(peak["30"].first == 23);
  CHECK(peak["0"].first == 5);
}

TEST_CASE("simulate: calibrated densities peak near the analytic optimum") {
  const auto r = run("simulate --config '" +
                     config("reference", "[simulate]\neb_n0_db = 30\nn_min = 19\nn_max = 27\ncalibrate = true\n")
                         .string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto rows = parse_csv(r.out);
  const auto& h = rows[0];
  int best = 0;
  double best_v = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = std::stod(rows[i][col(h, "mc_total_density")]);
    const double a = std::stod(rows[i][col(h, "analytic_total_density")]);
    CHECK(v == doctest::Approx(a).epsilon(0.1));
    if (v > best_v) {
      best_v = v;
      best = std::stoi(rows[i][col(h, "n")]);
    }
  }
  CHECK(std::abs(best - 23) <= 1);
}

TEST_CASE("fz: cache is idempotent and warns near alpha = 2") {
  const auto cache = scratch() / "cache";
  const std::string extra = "[fz]\nquantile =\nsamples = 2000\ncache_dir = " + cache.string() + "\n";
  const auto cfg = config("reference", extra);
  const auto first = run("fz --config '" + cfg.string() + "'");
  REQUIRE(first.exit_code == 0);
  const auto f1 = fields(first.out);
  CHECK(f1.at("built") == "true");
  const fs::path table = f1.at("path");
  REQUIRE(fs::exists(table));
  const auto bytes = slurp(table);
  CHECK(bytes.rfind("bwpart-fz 1\n", 0) == 0);

  const auto second = run("fz --config '" + cfg.string() + "'");
  REQUIRE(second.exit_code == 0);
  CHECK(fields(second.out).at("built") == "false");
  fs::remove(table);
  const auto third = run("fz --config '" + cfg.string() + "'");
  REQUIRE(third.exit_code == 0);
  CHECK(slurp(table) == bytes);

  const auto slow = run("fz --config '" +
                        config("reference", extra + "[budget]\npathloss_alpha = 2.01\n[montecarlo]\nmax_terms = 100000\n[fz]\nsamples = 1000\n")
                            .string() + "'");
  CHECK(slow.exit_code == 0);
  CHECK(slow.err.find("warning") != std::string::npos);

  const auto bad = run("fz --config '" + config("reference", extra + "[budget]\npathloss_alpha = 2\n").string() + "'");
  CHECK(bad.exit_code == 4);
}

TEST_CASE("compare-ds: direct sequence density decreases") {
  const auto r = run("compare-ds --config '" + config("reference", "[compare-ds]\nn_max = 50\n").string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 2 * 50);
  const auto& h = rows[0];
  double prev = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ds = std::stod(rows[i][col(h, "ds_density")]);
    const double n1 = std::stod(rows[i][col(h, "fdma_density_n1")]);
    if (rows[i][col(h, "n")] != "1") CHECK(ds < prev);
    else CHECK(ds == doctest::Approx(n1).epsilon(1e-12));
    CHECK(ds <= n1 * (1 + 1e-12));
    prev = ds;
  }
}

TEST_CASE("fading: no fading follows the base model") {
  const auto r = run("fading --config '" + config("fading").string() + "'");
  REQUIRE(r.exit_code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 2 * 3);
  const auto& h = rows[0];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const int n_opt = std::stoi(row[col(h, "n_opt")]);
    if (row[col(h, "scenario")] == "none/fixed") {
      // Outage counts of N = 11 and 12 can tie at high SNR; ties go to the smaller N.
      CHECK(std::abs(n_opt - std::stoi(row[col(h, "n_fixed_point")])) <= 1);
    }
    if (row[col(h, "eb_n0_db")] == "40")
      CHECK(std::abs(n_opt - std::stoi(row[col(h, "n_interference_limited")])) <= 1);
    CHECK(std::stod(row[col(h, "outage_ci_lo")]) <= std::stod(row[col(h, "outage_min")]));
  }
}

TEST_CASE("json output parses and mirrors the csv rows") {
  const auto cfg = config("design").string();
  const auto csv = run("solve --config '" + cfg + "'");
  const auto js = run("solve --format json --config '" + cfg + "'");
  REQUIRE(js.exit_code == 0);
  const auto doc = nlohmann::json::parse(js.out);
  REQUIRE(doc.is_array());
  CHECK(doc.size() + 1 == parse_csv(csv.out).size());
  bool found = false;
  for (const auto& row : doc)
    if (row.at("field") == "n_star") {
      CHECK(row.at("value") == 8);
      found = true;
    }
  CHECK(found);
}

TEST_CASE("output file, seed and determinism") {
  const auto out1 = scratch() / "a.csv";
  const auto out2 = scratch() / "b.csv";
  const auto cfg = config("reference", "[simulate]\neb_n0_db = 10\nn_min = 5\nn_max = 8\ncalibrate = false\n").string();
  REQUIRE(run("simulate --threads 2 --config '" + cfg + "' --out '" + out1.string() + "'").exit_code == 0);
  REQUIRE(run("simulate --threads 1 --config '" + cfg + "' --out '" + out2.string() + "'").exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));
  REQUIRE(run("simulate --seed 77 --config '" + cfg + "' --out '" + out2.string() + "'").exit_code == 0);
  CHECK(slurp(out1) != slurp(out2));
}

TEST_CASE("exit codes") {
  CHECK(run("solve --config /nonexistent/run.conf").exit_code == 3);
  const auto broken = run("solve --config '" + (fs::path(BWPART_TEST_DATA) / "broken.conf").string() + "'");
  CHECK(broken.exit_code == 4);
  CHECK(broken.err.find("line 3") != std::string::npos);
  CHECK(run("solve --format xml").exit_code == 4);
  CHECK(run("transmogrify").exit_code == 4);
  CHECK(run("solve --config '" + config("design").string() + "' --out /nonexistent/dir/out.csv").exit_code == 3);
}
