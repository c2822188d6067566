// Copyright 2026 The deroffer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "deroffer/error.hpp"
#include "deroffer/generator.hpp"
#include "deroffer/harness.hpp"
#include "fixtures.hpp"

using namespace deroffer;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("deroffer_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small instance on disk plus a quick configuration around it.
RunConfig quick_config(const fs::path& dir) {
  save_instance(fixtures::small_instance(3, 4, 2), dir / "instance.json");
  RunConfig c;
  c.instance = dir / "instance.json";
  c.output_dir = dir / "out";
  c.trajectory_counts = {2, 3};
  c.dataset.contexts = 6;
  c.dataset.x_per_context = 3;
  c.dataset.xi_per_x = 6;
  c.training.epochs = 20;
  c.training.validate_every = 5;
  return c;
}

RunResult fake(Method m, int count, RunStatus s, double objective, double seconds) {
  RunResult r;
  r.method = m;
  r.trajectories = count;
  r.status = s;
  r.objective = objective;
  r.seconds = seconds;
  r.iterations = 1;
  return r;
}

std::string strip_times(const std::string& csv) {
  // time_s and both speedup columns depend on the clock
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0 && line.find("relative_error") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() >= 10) cells[4] = cells[8] = cells[9] = "";
    for (const auto& c : cells) out += c + ",";
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::Monolithic, Method::Ccg, Method::NnCcg}) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("gurobi"), Error);
}

TEST_CASE("run config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  RunConfig empty = c;
  empty.methods.clear();
  CHECK_THROWS_AS(empty.validate(), Error);
  RunConfig twice = c;
  twice.methods = {Method::Ccg, Method::Ccg};
  CHECK_THROWS_AS(twice.validate(), Error);
  RunConfig counts = c;
  counts.trajectory_counts = {};
  CHECK_THROWS_AS(counts.validate(), Error);
  counts.trajectory_counts = {0};
  CHECK_THROWS_AS(counts.validate(), Error);
  RunConfig tol = c;
  tol.tolerance = 0.0;
  CHECK_THROWS_AS(tol.validate(), Error);
  CHECK(c.model_path() == fs::path("out") / "model.json");
}

TEST_CASE("generator: fixed seed gives an identical file") {
  GeneratorConfig g;
  g.seed = 11;
  CHECK(serialize_instance(generate_instance(g)) == serialize_instance(generate_instance(g)));
  g.seed = 12;
  GeneratorConfig h;
  h.seed = 11;
  CHECK(serialize_instance(generate_instance(g)) != serialize_instance(generate_instance(h)));
}

TEST_CASE("generator: two-bus feeder validates") {
  GeneratorConfig g;
  g.bus_count = 2;
  g.pv_units = 1;
  const OfferInstance inst = generate_instance(g);
  CHECK_NOTHROW(inst.validate());
  CHECK(inst.network.bus_count == 2);
}

TEST_CASE("generator: chain rows are stochastic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorConfig g;
    g.seed = seed;
    const MarkovPriceChain chain = generate_instance(g).price_chain;
    for (const auto& row : chain.transition) {
      long double sum = 0.0L;
      for (double p : row) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(static_cast<double>(sum) - 1.0) <= 1e-9);
    }
    CHECK(std::abs(std::accumulate(chain.initial.begin(), chain.initial.end(), 0.0) - 1.0) <= 1e-9);
  }
}

TEST_CASE("gap uses the monolithic optimum, speedups are time quotients") {
  const std::vector<RunResult> runs = {
      fake(Method::NnCcg, 5, RunStatus::Converged, 101.0, 0.5),
      fake(Method::Monolithic, 5, RunStatus::Converged, 100.0, 3.0),
      fake(Method::Ccg, 5, RunStatus::Converged, 100.0, 1.5),
  };
  const BenchReport r = assemble_report(runs);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].method == Method::Monolithic);
  CHECK(r.rows[2].method == Method::NnCcg);
  CHECK(r.rows[2].reference == "monolithic");
  CHECK(r.rows[2].gap_percent == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rows[0].gap_percent == 0.0);
  CHECK(r.rows[2].speedup_monolithic == 3.0 / 0.5);
  CHECK(r.rows[2].speedup_ccg == 1.5 / 0.5);
  CHECK(r.rows[1].speedup_monolithic == 3.0 / 1.5);
  CHECK(r.rows[0].speedup_monolithic == 1.0);
  CHECK(r.all_converged());
}

TEST_CASE("skipped monolithic falls back to the ccg reference") {
  const std::vector<RunResult> runs = {
      fake(Method::Monolithic, 25, RunStatus::Skipped, 0.0, 0.0),
      fake(Method::Ccg, 25, RunStatus::Converged, 200.0, 4.0),
      fake(Method::NnCcg, 25, RunStatus::Converged, 198.0, 1.0),
  };
  const BenchReport r = assemble_report(runs);
  CHECK(r.rows[0].reference.empty());
  CHECK(r.rows[0].speedup_ccg == 0.0);
  CHECK(r.rows[2].reference == "ccg");
  CHECK(r.rows[2].gap_percent == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.rows[2].speedup_monolithic == 0.0);
  CHECK(r.rows[2].speedup_ccg == 4.0);
  CHECK(r.all_converged());
  std::vector<RunResult> stuck = runs;
  stuck[2].status = RunStatus::NotConverged;
  CHECK_FALSE(assemble_report(stuck).all_converged());
}

TEST_CASE("report csv round trip is exact") {
  BenchReport r = assemble_report({fake(Method::Ccg, 5, RunStatus::Converged, 1.0 / 3.0, 0.123456789),
                                   fake(Method::NnCcg, 5, RunStatus::NotConverged, 2.0 / 7.0, 0.1)});
  r.rows[1].note = "stopped, master status infeasible";
  r.data_seconds = 1.5;
  r.train_seconds = 2.25;
  r.total_seconds = 9.0;
  r.validation_relative_error = 0.031;
  std::stringstream s;
  write_report_csv(r, s);
  const BenchReport back = read_report_csv(s);
  REQUIRE(back.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.rows[i].method == r.rows[i].method);
    CHECK(back.rows[i].status == r.rows[i].status);
    CHECK(back.rows[i].objective == r.rows[i].objective);
    CHECK(back.rows[i].seconds == r.rows[i].seconds);
    CHECK(back.rows[i].gap_percent == r.rows[i].gap_percent);
    CHECK(back.rows[i].speedup_ccg == r.rows[i].speedup_ccg);
    CHECK(back.rows[i].reference == r.rows[i].reference);
  }
  CHECK(back.rows[1].speedup_ccg == back.rows[0].seconds / back.rows[1].seconds);
  CHECK(back.rows[1].note == "stopped; master status infeasible");
  CHECK(back.train_seconds == 2.25);
  CHECK(back.validation_relative_error == 0.031);

  std::istringstream bad_header("method,objective\n");
  CHECK_THROWS_AS(read_report_csv(bad_header), ParseError);
  std::stringstream short_row;
  write_report_csv(BenchReport{}, short_row);
  std::istringstream truncated(short_row.str() + "ccg,5,converged\n");
  try {
    read_report_csv(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field_path() == "rows[0]");
  }
}

TEST_CASE("table lists objective, time, gap and speedup columns") {
  const BenchReport r = assemble_report({fake(Method::Ccg, 5, RunStatus::Converged, 10.0, 1.0)});
  std::ostringstream out;
  write_report_table(r, out);
  for (const char* col : {"Obj ($)", "Time (s)", "Gap (%)", "vs mono", "vs CCG"}) {
    CHECK(out.str().find(col) != std::string::npos);
  }
}

TEST_CASE("monolithic and ccg agree and the cap skips large equivalents") {
  const fs::path dir = scratch("methods");
  RunConfig c = quick_config(dir);
  const OfferInstance inst = load_run_instance(c);
  const StochasticProblem pb = run_problem(inst, 3, c.seed);
  const RunResult mono = run_method(pb, Method::Monolithic, c);
  const RunResult ccg = run_method(pb, Method::Ccg, c);
  REQUIRE(mono.status == RunStatus::Converged);
  REQUIRE(ccg.status == RunStatus::Converged);
  CHECK(std::abs(mono.objective - ccg.objective) <= 1e-6 * std::max(1.0, std::abs(mono.objective)));
  CHECK(ccg.log.rfind("k,LB,UB,gap", 0) == 0);

  c.monolithic_copy_cap = 2;
  const RunResult skipped = run_method(pb, Method::Monolithic, c);
  CHECK(skipped.status == RunStatus::Skipped);
  CHECK(skipped.note.find("cap") != std::string::npos);
}

TEST_CASE("budget override and missing prerequisites") {
  const fs::path dir = scratch("prereq");
  RunConfig c = quick_config(dir);
  c.gamma = 0;
  CHECK(load_run_instance(c).gamma == 0);
  try {
    load_run_model(c);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("deroffer train") != std::string::npos);
  }
  const StochasticProblem pb = run_problem(load_run_instance(c), 2, 1);
  CHECK_THROWS_AS(run_method(pb, Method::NnCcg, c), Error);
  RunConfig none = c;
  none.instance.clear();
  CHECK_THROWS_AS(load_run_instance(none), Error);
}

TEST_CASE("bench: seeded runs reproduce objectives, gaps and iterations") {
  const fs::path dir = scratch("bench");
  RunConfig a = quick_config(dir);
  a.output_dir = dir / "a";
  RunConfig b = a;
  b.output_dir = dir / "b";
  const BenchReport ra = run_bench(a);
  const BenchReport rb = run_bench(b);
  REQUIRE(ra.rows.size() == 6);
  REQUIRE(rb.rows.size() == 6);
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    CHECK(ra.rows[i].objective == rb.rows[i].objective);
    CHECK(ra.rows[i].gap_percent == rb.rows[i].gap_percent);
    CHECK(ra.rows[i].iterations == rb.rows[i].iterations);
    CHECK(ra.rows[i].status == rb.rows[i].status);
  }
  for (const BenchRow& r : ra.rows) {
    if (r.method == Method::Ccg) CHECK(std::abs(r.gap_percent) <= 1e-4);
    if (r.method != Method::Monolithic) CHECK(r.reference == "monolithic");
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(strip_times(slurp(a.output_dir / "report.csv")) == strip_times(slurp(b.output_dir / "report.csv")));
  CHECK(slurp(a.output_dir / "model.json") == slurp(b.output_dir / "model.json"));
  for (const char* f : {"report.txt", "run_ccg_2.json", "log_nn-ccg_3.csv", "run_monolithic_3.json"}) {
    CHECK(fs::exists(a.output_dir / f));
  }
  std::ifstream csv(a.output_dir / "report.csv");
  const BenchReport back = read_report_csv(csv);
  CHECK(back.rows.size() == 6);
  CHECK(back.train_seconds == ra.train_seconds);
}
