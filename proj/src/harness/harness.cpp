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

#include "deroffer/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "deroffer/error.hpp"
#include "json.hpp"

namespace deroffer {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shortest text that reads back to the same double.
std::string exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& field) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw ParseError(field, "not a number: " + text);
  return v;
}

int parse_int(const std::string& text, const std::string& field) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw ParseError(field, "not an integer: " + text);
  return v;
}

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

RunStatus parse_status(const std::string& text) {
  for (RunStatus s : {RunStatus::Converged, RunStatus::NotConverged, RunStatus::Skipped}) {
    if (text == to_string(s)) return s;
  }
  throw ParseError("status", "unknown run status " + text);
}

constexpr const char* kCsvHeader =
    "method,trajectories,status,objective,time_s,iterations,gap_percent,reference,speedup_vs_monolithic,"
    "speedup_vs_ccg,note";

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::Monolithic: return "monolithic";
    case Method::Ccg: return "ccg";
    case Method::NnCcg: return "nn-ccg";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Monolithic, Method::Ccg, Method::NnCcg}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorKind::Configuration, "unknown method '" + std::string(name) + "' (expected monolithic, ccg or nn-ccg)");
}

const char* to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::NotConverged: return "not-converged";
    case RunStatus::Skipped: return "skipped";
  }
  return "?";
}

void RunConfig::validate() const {
  require(!trajectory_counts.empty(), ErrorKind::Configuration, "run: no trajectory counts");
  for (int c : trajectory_counts) {
    require(c > 0, ErrorKind::Configuration, "run: trajectory counts must be positive");
  }
  require(!methods.empty(), ErrorKind::Configuration, "run: the method set is empty");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    require(std::find(methods.begin() + i + 1, methods.end(), methods[i]) == methods.end(), ErrorKind::Configuration,
            std::string("run: method listed twice: ") + to_string(methods[i]));
  }
  require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorKind::Configuration, "run: epsilon must be >= 0");
  require(std::isfinite(tolerance) && tolerance > 0.0, ErrorKind::Configuration, "run: tolerance must be > 0");
  require(max_iterations > 0, ErrorKind::Configuration, "run: max_iterations must be positive");
  require(candidates > 0, ErrorKind::Configuration, "run: candidates must be positive");
  require(monolithic_copy_cap >= 0, ErrorKind::Configuration, "run: monolithic_copy_cap must be >= 0");
}

std::filesystem::path RunConfig::model_path() const {
  return model.empty() ? output_dir / "model.json" : model;
}

OfferInstance load_run_instance(const RunConfig& config) {
  require(!config.instance.empty(), ErrorKind::Configuration, "run: no instance file (create one with `deroffer gen`)");
  OfferInstance instance = load_instance(config.instance);
  if (config.gamma >= 0) {
    instance.gamma = config.gamma;
    instance.validate();
  }
  return instance;
}

StochasticProblem run_problem(const OfferInstance& instance, int trajectories, std::uint64_t seed) {
  return lower(instance, sample_trajectories(instance.price_chain, instance.horizon, trajectories, seed));
}

RunResult run_method(const StochasticProblem& problem, Method method, const RunConfig& config,
                     const SurrogateModel* model) {
  RunResult run;
  run.method = method;
  run.trajectories = problem.scenario_count();
  std::ostringstream log;
  switch (method) {
    case Method::Monolithic: {
      const long vertices = count_extreme_points(problem.uncertainty);
      const long copies = vertices > kDefaultVertexCap ? vertices : vertices * problem.scenario_count();
      if (copies > config.monolithic_copy_cap) {
        run.status = RunStatus::Skipped;
        run.note = std::to_string(copies) + " recourse copies exceed the cap of " +
                   std::to_string(config.monolithic_copy_cap);
        return run;
      }
      const auto start = Clock::now();
      const MonolithicResult m = solve_monolithic(problem);
      run.seconds = seconds_since(start);
      run.iterations = 1;
      run.objective = m.objective;
      run.x = m.x;
      run.status = m.status == solver::SolveStatus::Optimal ? RunStatus::Converged : RunStatus::NotConverged;
      if (run.status != RunStatus::Converged) run.note = std::string("solver status ") + solver::to_string(m.status);
      break;
    }
    case Method::Ccg: {
      CcgSettings settings;
      settings.tol = config.tolerance;
      settings.max_iterations = config.max_iterations;
      const auto start = Clock::now();
      const CcgState s = ccg_solve(problem, settings);
      run.seconds = seconds_since(start);
      run.iterations = s.iteration;
      run.objective = s.upper_bound;
      run.x = s.x;
      run.status = s.converged ? RunStatus::Converged : RunStatus::NotConverged;
      if (!s.converged) run.note = std::string("stopped with master status ") + solver::to_string(s.status);
      write_ccg_log(s, log);
      break;
    }
    case Method::NnCcg: {
      require(model != nullptr, ErrorKind::Configuration, "nn-ccg needs a trained model (run `deroffer train` first)");
      NnCcgSettings settings;
      settings.epsilon = config.epsilon;
      settings.max_iterations = config.max_iterations;
      settings.candidates = config.candidates;
      const auto start = Clock::now();
      const SurrogateView view(problem, *model);
      const NnCcgResult r = nn_ccg(view, settings);
      run.seconds = seconds_since(start);
      run.iterations = r.iterations;
      run.objective = r.objective;
      run.x = r.x;
      run.status = r.converged ? RunStatus::Converged : RunStatus::NotConverged;
      if (!r.converged) run.note = std::string("stopped with master status ") + solver::to_string(r.status);
      write_nn_ccg_log(r, log);
      break;
    }
  }
  run.log = log.str();
  return run;
}

TrainingOutcome train_for(const OfferInstance& instance, const RunConfig& config) {
  DatasetConfig data = config.dataset;
  data.seed = config.seed;
  data.trajectory_counts = config.trajectory_counts;
  TrainConfig training = config.training;
  training.seed = config.seed;

  TrainingOutcome out;
  const auto start = Clock::now();
  const LabeledDataset dataset = generate_dataset(instance, data);
  out.data_seconds = seconds_since(start);
  out.records = dataset.records.size();
  TrainResult trained = train(dataset, training);
  out.train_seconds = trained.seconds;
  out.validation_relative_error = trained.validation_relative_error;
  out.model = std::move(trained.model);
  return out;
}

SurrogateModel load_run_model(const RunConfig& config) { return load_model(config.model_path()); }

bool BenchReport::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.status != RunStatus::NotConverged; });
}

BenchReport assemble_report(const std::vector<RunResult>& runs) {
  std::vector<int> counts;
  for (const RunResult& r : runs) {
    if (std::find(counts.begin(), counts.end(), r.trajectories) == counts.end()) counts.push_back(r.trajectories);
  }
  BenchReport report;
  for (int count : counts) {
    const RunResult* mono = nullptr;
    const RunResult* ccg = nullptr;
    for (const RunResult& r : runs) {
      if (r.trajectories != count || r.status != RunStatus::Converged) continue;
      if (r.method == Method::Monolithic) mono = &r;
      if (r.method == Method::Ccg) ccg = &r;
    }
    const RunResult* ref = mono ? mono : ccg;
    for (Method m : {Method::Monolithic, Method::Ccg, Method::NnCcg}) {
      for (const RunResult& r : runs) {
        if (r.trajectories != count || r.method != m) continue;
        BenchRow row;
        row.method = m;
        row.trajectories = count;
        row.status = r.status;
        row.objective = r.objective;
        row.seconds = r.seconds;
        row.iterations = r.iterations;
        row.note = r.note;
        if (r.status != RunStatus::Skipped) {
          if (ref) {
            row.reference = to_string(ref->method);
            row.gap_percent = 100.0 * (r.objective - ref->objective) / std::max(1.0, std::abs(ref->objective));
          }
          if (mono && r.seconds > 0.0) row.speedup_monolithic = mono->seconds / r.seconds;
          if (ccg && r.seconds > 0.0) row.speedup_ccg = ccg->seconds / r.seconds;
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

void write_report_csv(const BenchReport& report, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const BenchRow& r : report.rows) {
    out << to_string(r.method) << ',' << r.trajectories << ',' << to_string(r.status) << ',' << exact(r.objective)
        << ',' << exact(r.seconds) << ',' << r.iterations << ',' << exact(r.gap_percent) << ',' << r.reference << ','
        << exact(r.speedup_monolithic) << ',' << exact(r.speedup_ccg) << ',' << csv_safe(r.note) << '\n';
  }
  out << "# data_s," << exact(report.data_seconds) << '\n';
  out << "# train_s," << exact(report.train_seconds) << '\n';
  out << "# total_s," << exact(report.total_seconds) << '\n';
  out << "# validation_relative_error," << exact(report.validation_relative_error) << '\n';
}

BenchReport read_report_csv(std::istream& in) {
  BenchReport report;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("header", "not a bench report");
  int row_number = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (line.rfind("# ", 0) == 0) {
      if (cells.size() != 2) throw ParseError(line, "expected '# key,value'");
      const double v = parse_double(cells[1], cells[0]);
      if (cells[0] == "# data_s") report.data_seconds = v;
      else if (cells[0] == "# train_s") report.train_seconds = v;
      else if (cells[0] == "# total_s") report.total_seconds = v;
      else if (cells[0] == "# validation_relative_error") report.validation_relative_error = v;
      continue;
    }
    const std::string where = "rows[" + std::to_string(row_number++) + "]";
    if (cells.size() != 11) throw ParseError(where, "expected 11 columns, got " + std::to_string(cells.size()));
    BenchRow r;
    try {
      r.method = parse_method(cells[0]);
    } catch (const Error& e) {
      throw ParseError(where + ".method", e.what());
    }
    r.trajectories = parse_int(cells[1], where + ".trajectories");
    r.status = parse_status(cells[2]);
    r.objective = parse_double(cells[3], where + ".objective");
    r.seconds = parse_double(cells[4], where + ".time_s");
    r.iterations = parse_int(cells[5], where + ".iterations");
    r.gap_percent = parse_double(cells[6], where + ".gap_percent");
    r.reference = cells[7];
    r.speedup_monolithic = parse_double(cells[8], where + ".speedup_vs_monolithic");
    r.speedup_ccg = parse_double(cells[9], where + ".speedup_vs_ccg");
    r.note = cells[10];
    report.rows.push_back(std::move(r));
  }
  return report;
}

void write_report_table(const BenchReport& report, std::ostream& out) {
  std::ostringstream s;
  s << std::fixed;
  s << std::left << std::setw(11) << "method" << std::right << std::setw(6) << "|Omega|" << std::setw(15) << "Obj ($)"
    << std::setw(11) << "Time (s)" << std::setw(7) << "Iter" << std::setw(11) << "Gap (%)" << std::setw(12)
    << "vs mono" << std::setw(10) << "vs CCG" << "  status\n";
  for (const BenchRow& r : report.rows) {
    s << std::left << std::setw(11) << to_string(r.method) << std::right << std::setw(7) << r.trajectories;
    if (r.status == RunStatus::Skipped) {
      s << std::setw(15) << "-" << std::setw(11) << "-" << std::setw(7) << "-" << std::setw(11) << "-" << std::setw(12)
        << "-" << std::setw(10) << "-" << "  skipped: " << r.note << '\n';
      continue;
    }
    s << std::setw(15) << std::setprecision(4) << r.objective << std::setw(11) << std::setprecision(2) << r.seconds
      << std::setw(7) << r.iterations;
    if (r.reference.empty()) {
      s << std::setw(11) << "-";
    } else {
      s << std::setw(11) << std::setprecision(4) << r.gap_percent;
    }
    auto speedup = [&](double v) {
      std::ostringstream c;
      if (v > 0.0) c << std::fixed << std::setprecision(2) << v << 'x';
      else c << '-';
      return c.str();
    };
    s << std::setw(12) << speedup(r.speedup_monolithic) << std::setw(10) << speedup(r.speedup_ccg) << "  "
      << to_string(r.status);
    if (!r.note.empty()) s << ": " << r.note;
    s << '\n';
  }
  s << std::setprecision(2) << "\ndata collection " << report.data_seconds << " s, training " << report.train_seconds
    << " s, total " << report.total_seconds << " s\n";
  if (report.validation_relative_error > 0.0) {
    s << "surrogate validation relative error " << std::setprecision(4) << report.validation_relative_error << '\n';
  }
  if (!report.rows.empty()) {
    s << "gap reference: monolithic optimum when it ran, else classical CCG\n";
  }
  out << s.str();
}

std::string run_summary_json(const RunResult& run) {
  nlohmann::json doc{
      {"method", to_string(run.method)},
      {"trajectories", run.trajectories},
      {"status", to_string(run.status)},
      {"note", run.note},
      {"objective", run.objective},
      {"time_s", run.seconds},
      {"iterations", run.iterations},
      {"x", run.x},
  };
  return doc.dump(1) + "\n";
}

BenchReport run_bench(const RunConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const OfferInstance instance = load_run_instance(config);
  std::filesystem::create_directories(config.output_dir);

  const bool wants_nn = std::find(config.methods.begin(), config.methods.end(), Method::NnCcg) != config.methods.end();
  SurrogateModel model;
  double data_seconds = 0.0, train_seconds = 0.0, validation = 0.0;
  if (wants_nn) {
    if (config.model.empty()) {
      TrainingOutcome trained = train_for(instance, config);
      data_seconds = trained.data_seconds;
      train_seconds = trained.train_seconds;
      validation = trained.validation_relative_error;
      model = std::move(trained.model);
      save_model(model, config.output_dir / "model.json");
    } else {
      model = load_model(config.model);
    }
  }

  std::vector<RunResult> runs;
  for (int count : config.trajectory_counts) {
    const StochasticProblem problem = run_problem(instance, count, config.seed);
    for (Method m : {Method::Monolithic, Method::Ccg, Method::NnCcg}) {
      if (std::find(config.methods.begin(), config.methods.end(), m) == config.methods.end()) continue;
      runs.push_back(run_method(problem, m, config, wants_nn ? &model : nullptr));
    }
  }

  BenchReport report = assemble_report(runs);
  report.data_seconds = data_seconds;
  report.train_seconds = train_seconds;
  report.validation_relative_error = validation;
  report.total_seconds = seconds_since(start);

  for (const RunResult& r : runs) {
    const std::string stem = std::string(to_string(r.method)) + "_" + std::to_string(r.trajectories);
    write_file(config.output_dir / ("run_" + stem + ".json"), run_summary_json(r));
    if (!r.log.empty()) write_file(config.output_dir / ("log_" + stem + ".csv"), r.log);
  }
  std::ostringstream csv, table;
  write_report_csv(report, csv);
  write_report_table(report, table);
  write_file(config.output_dir / "report.csv", csv.str());
  write_file(config.output_dir / "report.txt", table.str());
  return report;
}

}  // namespace deroffer
