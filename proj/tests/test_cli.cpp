#include "catch_amalgamated.hpp"

#include "commands.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

using namespace segmarket;
using namespace segmarket::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using nlohmann::json;

namespace {

std::string data(const std::string& name) { return std::string(SEGMARKET_TEST_DATA) + "/" + name; }

std::string render(const Report& r, Format f) {
  std::ostringstream os;
  write_report(os, r, f);
  return os.str();
}

double summary(const Report& r, const std::string& key) {
  for (const auto& [k, v] : r.summary)
    if (k == key) {
      if (auto d = std::get_if<double>(&v)) return *d;
      if (auto n = std::get_if<long long>(&v)) return static_cast<double>(*n);
    }
  FAIL("missing summary key " << key);
  return 0.0;
}

const Table& table(const Report& r, const std::string& name) {
  for (const auto& t : r.tables)
    if (t.name == name) return t;
  FAIL("missing table " << name);
  throw;
}

double num(const Cell& c) { return std::get<double>(c); }

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing rejects bad documents with a useful message") {
  CHECK_THAT(config_error(json::parse(R"({"calibrate": {"beta": 0.9, "phi": 0.06, "r": 0.75,
      "psi": 0.25, "b": 0.2, "y_l": 0.5, "w_l": 0.495, "gamma": 1}})")),
             ContainsSubstring("calibrate.gamma"));
  CHECK_THAT(config_error(json::parse(R"({"calibrate": {"beta": 0.9, "phi": 0.06, "r": 0.75,
      "psi": 0.25, "b": 0.2, "y_l": 0.5}})")),
             ContainsSubstring("w_l"));
  CHECK_THAT(config_error(json::parse(R"({"calibrate": {"beta": "high", "phi": 0.06, "r": 0.75,
      "psi": 0.25, "b": 0.2, "y_l": 0.5, "w_l": 0.495}})")),
             ContainsSubstring("beta"));
  CHECK_FALSE(config_error(json::parse(R"({})")).empty());
  CHECK_FALSE(config_error(json::parse(R"({"calibrate": {"beta": 1.2, "phi": 0.06, "r": 0.75,
      "psi": 0.25, "b": 0.2, "y_l": 0.5, "w_l": 0.495}})")).empty());
  CHECK_THROWS_AS(load_config(data("malformed.json")), ConfigError);
  CHECK_THAT(config_error(json::parse(R"({"calibrate": {"beta": 0.9, "phi": 0.06, "r": 0.75,
      "psi": 0.25, "b": 0.2, "y_l": 0.5, "w_l": 0.495}, "solver": {"bogus_tolerance": 1}})")),
             ContainsSubstring("solver.bogus_tolerance"));
  CHECK_THROWS_AS(load_config(data("does_not_exist.json")), ConfigError);
}

TEST_CASE("calibrated and explicit parameter blocks agree") {
  const auto a = load_config(data("example1.json"));
  const auto b = load_config(data("example1_params.json"));
  CHECK(a.calibrated);
  CHECK_FALSE(b.calibrated);
  CHECK_THAT(a.params.w_h, WithinAbs(b.params.w_h, 1e-12));
  CHECK_THAT(a.params.y_h, WithinAbs(b.params.y_h, 1e-12));
}

TEST_CASE("sweep ranges expand to evenly spaced values") {
  const auto cfg = load_config(data("phi_sweep.json"));
  REQUIRE(cfg.sweep.values.size() == 30);
  CHECK_THAT(cfg.sweep.values.front(), WithinAbs(0.01, 1e-15));
  CHECK_THAT(cfg.sweep.values.back(), WithinAbs(0.3, 1e-15));
}

TEST_CASE("bounds command values") {
  const auto r1 = cmd_bounds(load_config(data("example1.json")));
  CHECK_THAT(summary(r1, "pi_low"), WithinAbs(0.1647, 5e-4));
  CHECK_THAT(summary(r1, "pi_high"), WithinAbs(0.1802, 5e-4));
  const auto r2 = cmd_bounds(load_config(data("example2.json")));
  CHECK_THAT(summary(r2, "pi_low"), WithinAbs(0.2104, 5e-4));
  CHECK_THAT(summary(r2, "pi_high"), WithinAbs(0.2368, 5e-4));
}

TEST_CASE("JSON output keeps full precision") {
  const auto cfg = load_config(data("example2.json"));
  const auto r = cmd_bounds(cfg);
  const auto doc = json::parse(render(r, Format::Json));
  CHECK(doc.at("command") == "bounds");
  const auto b = compute_bounds(cfg.model());
  const double back = doc.at("summary").at("pi_low").get<double>();
  CHECK(std::abs(back - b.pi_low) <= 1e-15 * b.pi_low);
}

TEST_CASE("CSV output layout") {
  const auto r = cmd_figure(load_config(data("example1.json")), {.figure_id = "G1-low"});
  const auto csv = render(r, Format::Csv);
  CHECK(csv.rfind("p,G\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line.rfind("0.000000,", 0) == 0);
  const auto fields = line.substr(line.find(',') + 1);
  CHECK(fields.size() - fields.find('.') - 1 == 6);

  const auto multi = render(cmd_solve(load_config(data("example2.json")), {}), Format::Csv);
  CHECK(multi.rfind("# summary\n", 0) == 0);
  CHECK(multi.find("# equilibria\n") != std::string::npos);
}

TEST_CASE("solve reports the expected equilibrium counts") {
  CHECK(table(cmd_solve(load_config(data("example1.json")), {}), "equilibria").rows.size() == 1);
  CHECK(table(cmd_solve(load_config(data("example2.json")), {}), "equilibria").rows.size() == 3);
  // reject and mixed, plus low tech only since ψ <= π̄
  CHECK(table(cmd_solve(load_config(data("two_equilibria.json")), {}), "equilibria").rows.size() ==
        3);
  const auto r = cmd_solve(load_config(data("example2.json")), {.oracle = true});
  for (const auto& row : table(r, "equilibria").rows) CHECK(num(row.back()) < 1e-6);
}

TEST_CASE("figure G0 has no root strictly inside the mixed segment at Example 1") {
  const auto cfg = load_config(data("example1.json"));
  const auto b = compute_bounds(cfg.model());
  const auto r = cmd_figure(cfg, {.figure_id = "G0"});
  for (const auto& row : table(r, "G0").rows) {
    const double pi = num(row[0]), g = num(row[1]);
    if (pi > b.pi_low + 1e-9 && pi < b.pi_high - 1e-9) CHECK(g > 0.0);
  }
}

TEST_CASE("figure G1-low changes sign once at Example 2") {
  auto cfg = load_config(data("example2.json"));
  cfg.figure.points = 10001;
  const auto r = cmd_figure(cfg, {.figure_id = "G1-low"});
  const auto& rows = table(r, "G1-low").rows;
  int changes = 0;
  double root = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if ((num(rows[i - 1][1]) > 0.0) != (num(rows[i][1]) > 0.0)) {
      ++changes;
      root = num(rows[i][0]);
    }
  CHECK(changes == 1);
  CHECK_THAT(root, WithinAbs(0.7838, 1e-3));
}

TEST_CASE("figure disc marks the crossing above the diagonal") {
  const auto r = cmd_figure(load_config(data("example1.json")), {.figure_id = "disc"});
  int male = 0, female = 0, crossing = 0;
  for (const auto& row : table(r, "disc").rows) {
    const auto& curve = std::get<std::string>(row[0]);
    male += curve == "male";
    female += curve == "female";
    if (curve == "crossing") {
      ++crossing;
      CHECK(num(row[2]) > num(row[1]));
    }
  }
  CHECK(male > 0);
  CHECK(female > 0);
  CHECK(crossing >= 1);
  CHECK_THROWS_AS(cmd_figure(load_config(data("example1.json")), {.figure_id = "bogus"}),
                  ConfigError);
}

TEST_CASE("output is deterministic") {
  const auto cfg = load_config(data("example2_sim.json"));
  CHECK(render(cmd_simulate(cfg, {}), Format::Json) == render(cmd_simulate(cfg, {}), Format::Json));
  CHECK(render(cmd_groups(cfg, {}), Format::Csv) == render(cmd_groups(cfg, {}), Format::Csv));
}

TEST_CASE("groups quota check finds no asymmetric survivors") {
  const auto r = cmd_groups(load_config(data("example1.json")), {.quota = true});
  CHECK(summary(r, "quota_asymmetric_survivors") == 0.0);
}

TEST_CASE("sweep over phi reports every value") {
  const auto cfg = load_config(data("phi_sweep.json"));
  const auto r = cmd_sweep(cfg, {});
  REQUIRE_FALSE(r.tables.empty());
  std::set<double> seen;
  for (const auto& row : r.tables.front().rows) seen.insert(num(row[0]));
  CHECK(seen.size() == cfg.sweep.values.size());
}
