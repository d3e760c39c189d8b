#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace hypcomp;
using Catch::Approx;

TEST_CASE("config parsing: key=value documents") {
  ExperimentConfig c = parse_config(
      "# run a small spectrum survey\n"
      "experiment=gram rank=2 depth=3\n"
      "s_grid=0.6,0.75 seed=7 format=csv # trailing comment\n");
  REQUIRE(c.experiment == "gram");
  REQUIRE(c.rank == 2);
  REQUIRE(c.depth.has_value());
  REQUIRE(*c.depth == 3);
  REQUIRE(c.s_grid == std::vector<double>{0.6, 0.75});
  REQUIRE(c.seed == 7);
  REQUIRE(c.format == "csv");
  REQUIRE(c.out.empty());
  REQUIRE(c.lengths.empty());
  REQUIRE_FALSE(c.s.has_value());

  // inclusive range syntax lo:hi:step
  ExperimentConfig r = parse_config("experiment=gram s_grid=0.55:1.0:0.05");
  REQUIRE(r.s_grid.size() == 10);
  REQUIRE(r.s_grid.front() == Approx(0.55).margin(1e-12));
  REQUIRE(r.s_grid.back() == Approx(1.0).margin(1e-9));

  // defaults of an untouched config
  ExperimentConfig d = parse_config("experiment=density");
  REQUIRE(d.rank == 2);
  REQUIRE(d.seed == 0);
  REQUIRE(d.format == "json");
  REQUIRE_FALSE(d.depth.has_value());
}

TEST_CASE("config parsing: JSON documents") {
  ExperimentConfig c = parse_config(
      R"({"experiment": "fell", "g": "ab", "s_grid": [0.75, 0.51],
          "rank": 2, "seed": 11, "tol": 0.5})");
  REQUIRE(c.experiment == "fell");
  REQUIRE(c.g.has_value());
  REQUIRE(*c.g == "ab");
  REQUIRE(c.s_grid == std::vector<double>{0.75, 0.51});
  REQUIRE(c.seed == 11);
  REQUIRE(c.tol.has_value());
  REQUIRE(*c.tol == 0.5);
  // strings inside JSON still parse as numbers where numbers are expected
  ExperimentConfig c2 =
      parse_config(R"({"experiment": "weak", "s": "0.7", "t_min": "4"})");
  REQUIRE(*c2.s == 0.7);
  REQUIRE(*c2.t_min == 4);
}

TEST_CASE("config parsing: later keys override earlier ones") {
  ExperimentConfig c;
  apply_config_text(c, "experiment=gram depth=3 seed=1");
  apply_config_text(c, "depth=5 seed=2");  // e.g. a --config file on top
  validate_config(c);
  REQUIRE(*c.depth == 5);
  REQUIRE(c.seed == 2);
  REQUIRE(c.experiment == "gram");
}

TEST_CASE("config parsing: malformed documents are rejected") {
  REQUIRE_THROWS_AS(parse_config("experiment=gram frobnicate=1"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram seed=-3"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram depth=abc"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram =x"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment density"), ParseError);
  REQUIRE_THROWS_AS(parse_config("{\"experiment\": \"gram\""), ParseError);
  REQUIRE_THROWS_AS(parse_config("[1, 2]"), ParseError);
  REQUIRE_THROWS_AS(parse_config("{\"experiment\": 5}"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram s_grid=,"), ParseError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram s_grid=0.5:0.6"),
                    ParseError);
}

TEST_CASE("config validation: documented caps") {
  REQUIRE_THROWS_AS(parse_config(""), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=nosuch"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram depth=12"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram depth=0"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=weak t_max=10"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=equi t_min=0"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=equi t_min=5 t_max=3"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram rank=30"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram rank=1"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram format=xml"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram rank=2 lengths=1,2,3"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram rank=2 lengths=1,0"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram s=1.5"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram s_grid=0.0,0.5"),
                    ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=gram tol=-1"), ValidationError);
  REQUIRE_THROWS_AS(parse_config("experiment=decay Lmax=300"),
                    ValidationError);
  // the weak probe accepts exactly the documented window
  REQUIRE_NOTHROW(parse_config("experiment=weak t_min=4 t_max=9"));
}

TEST_CASE("report serialization round-trips byte for byte") {
  Report r = run(parse_config("experiment=gram depth=2 s_grid=0.6,0.75"));
  REQUIRE(r.error.empty());
  nlohmann::json j = report_to_json(r);
  Report r2 = report_from_json(j);
  REQUIRE(report_to_json(r2).dump(2) == j.dump(2));
  REQUIRE(emit(r, "json") == emit(r2, "json"));
  REQUIRE(emit(r, "csv") == emit(r2, "csv"));

  nlohmann::json broken = j;
  broken.erase("columns");
  REQUIRE_THROWS_AS(report_from_json(broken), ParseError);
  REQUIRE_THROWS_AS(emit(r, "xml"), ValidationError);
}

TEST_CASE("CSV rendering: header, cell formats") {
  Report r;
  r.columns = {"a", "b", "c", "d"};
  r.rows.push_back({42, 2.5, true, std::string("lbl")});
  r.rows.push_back({-1, 0.123456789123, false, std::string("x")});
  REQUIRE(emit(r, "csv") ==
          "a,b,c,d\n42,2.5,1,lbl\n-1,0.123456789,0,x\n");

  Report g = run(parse_config("experiment=gram depth=1 s_grid=0.75"));
  std::string csv = emit(g, "csv");
  REQUIRE(csv.rfind("s,n,dim,min_eig,max_eig,pass\n", 0) == 0);
  // one data row: s=0.75, n=1, dim=4, then two floats and pass=1
  REQUIRE(csv.find("\n0.75,1,4,") != std::string::npos);
  REQUIRE(csv.back() == '\n');
}

TEST_CASE("spectrum survey run: rows, metrics, in-run failures") {
  Report r = run(parse_config("experiment=gram depth=2 s_grid=0.6,0.75"));
  REQUIRE(r.experiment == "gram");
  REQUIRE(r.pass);
  REQUIRE(r.error.empty());
  REQUIRE(r.rank == 2);
  REQUIRE(r.delta == Approx(std::log(3.0)).margin(1e-15));
  REQUIRE(r.columns ==
          std::vector<std::string>{"s", "n", "dim", "min_eig", "max_eig",
                                   "pass"});
  REQUIRE(r.rows.size() == 4);  // n in {1,2} x two grid points
  REQUIRE(r.rows[0][0].get<double>() == 0.6);
  REQUIRE(r.rows[0][1].get<int>() == 1);
  REQUIRE(r.rows[0][2].get<int>() == 4);
  REQUIRE(r.rows[3][2].get<int>() == 12);
  REQUIRE(r.metrics.at("min_eig") > 0.0);
  REQUIRE(r.metrics.at("dim_max") == 12.0);
  REQUIRE(r.metrics.at("rows") == 4.0);

  // a grid value outside the admissible kernel window fails inside the run:
  // the report carries the error instead of throwing
  Report bad = run(parse_config("experiment=gram depth=1 s_grid=0.4,0.75"));
  REQUIRE_FALSE(bad.pass);
  REQUIRE(bad.rows.empty());
  REQUIRE_FALSE(bad.error.empty());
}

TEST_CASE("density run: cell table and defect metrics") {
  Report r = run(parse_config("experiment=density depth=2"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 12);
  REQUIRE(r.columns.size() == 7);
  REQUIRE(r.metrics.at("total_mass_defect") <= 1e-12);
  REQUIRE(r.metrics.at("max_additivity_defect") <= 1e-12);
  REQUIRE(r.metrics.at("max_conf_defect") <= 1e-12);
  REQUIRE(r.metrics.at("cone_dev_Ca") <= 1e-3);
  // first row is the lexicographically first depth-2 cell
  REQUIRE(r.rows[0][0].get<std::string>() == "aa");
  REQUIRE(r.rows[0][1].get<double>() == Approx(1.0 / 12.0).margin(1e-15));
}

TEST_CASE("decay run: slopes against the expected rate") {
  Report r = run(parse_config("experiment=decay Lmax=12 s=0.75"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 12);
  double target = -(1.0 - 0.75) * std::log(3.0);
  REQUIRE(r.metrics.at("target") == Approx(target).margin(1e-12));
  REQUIRE(r.metrics.at("slope_dev") <= 0.02);
  REQUIRE(r.metrics.at("theta_slope_dev") <= 0.02);
  REQUIRE(r.metrics.at("slope") == Approx(-0.2632).margin(5e-3));
  // the two decay diagnostics fit the same exponential rate
  REQUIRE(r.metrics.at("slope") ==
          Approx(r.metrics.at("theta_slope")).margin(1e-9));
  REQUIRE(r.metrics.at("vanishing") == 0.0);
}

TEST_CASE("weak containment run: increasing ratios") {
  Report r = run(parse_config("experiment=weak s=0.7 t_min=4 t_max=6"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 3);
  REQUIRE(r.columns == std::vector<std::string>{"t", "lhs", "rhs", "ratio"});
  REQUIRE(r.metrics.at("ratio_first") == Approx(0.9473813).margin(1e-6));
  REQUIRE(r.metrics.at("ratio_last") == Approx(1.0951566).margin(1e-6));
}

TEST_CASE("fell run: limit and decreasing deviations") {
  Report r = run(parse_config("experiment=fell"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 4);
  REQUIRE(r.metrics.at("limit_target") ==
          Approx(std::sqrt(3.0) / 2.0).margin(1e-12));
  REQUIRE(r.metrics.at("deviation_last") <
          r.metrics.at("deviation_first"));
}

TEST_CASE("vitali run: cover quality across annuli") {
  Report r = run(parse_config("experiment=vitali t_min=2 t_max=4"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 3);
  REQUIRE(r.rows[0][1].get<long long>() == 12);  // shell size at t = 2
  REQUIRE(r.rows[0][2].get<long long>() == 4);   // selected points
  REQUIRE(r.rows[2][2].get<long long>() == 48);
  REQUIRE(r.metrics.at("product_min") == Approx(4.0 / 9.0).margin(1e-12));
  REQUIRE(r.metrics.at("product_max") == Approx(16.0 / 27.0).margin(1e-12));
}

TEST_CASE("equi run: decreasing errors and the averaged coefficient") {
  Report r = run(parse_config("experiment=equi t_min=2 t_max=4 s=0.75"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 9);  // three t values x three function pairs
  REQUIRE(r.metrics.at("terminal_error_max") <= 0.05);
  double q = (4.0 + std::sqrt(3.0)) / 4.0;
  REQUIRE(r.metrics.at("averaged_target") == Approx(q * q).margin(1e-12));
  REQUIRE(r.metrics.at("averaged_reldev") == Approx(0.0336).margin(2e-3));
}

TEST_CASE("cyclic run: rank growth and coefficient separation") {
  Report r = run(parse_config("experiment=cyclic depth=2 Lmax=2"));
  REQUIRE(r.pass);
  REQUIRE(r.rows.size() == 3);  // L = 0, 1, 2
  REQUIRE(r.metrics.at("rank_final") == 12.0);
  REQUIRE(r.metrics.at("dim") == 12.0);
  REQUIRE(r.metrics.at("sep_060_075") >= 0.01);
  REQUIRE(r.metrics.at("sep_075_090") >= 0.01);
  REQUIRE(r.metrics.at("sep_060_090") >= 0.01);
}

TEST_CASE("every experiment reruns byte-identically") {
  const char* configs[] = {
      "experiment=density depth=2",
      "experiment=gram depth=2 s_grid=0.6,0.75",
      "experiment=equi t_min=2 t_max=3 s=0.75",
      "experiment=decay Lmax=8",
      "experiment=weak s=0.7 t_min=4 t_max=5",
      "experiment=fell",
      "experiment=vitali t_min=2 t_max=3",
      "experiment=cyclic depth=2 Lmax=2",
  };
  for (const char* text : configs) {
    INFO(text);
    Report a = run(parse_config(text));
    Report b = run(parse_config(text));
    REQUIRE(a.error.empty());
    REQUIRE(emit(a, "json") == emit(b, "json"));
    REQUIRE(emit(a, "csv") == emit(b, "csv"));
  }
}
