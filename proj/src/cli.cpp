#include "anovakrr/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "anovakrr/anova.hpp"
#include "anovakrr/data.hpp"
#include "anovakrr/error.hpp"
#include "anovakrr/fastsum.hpp"
#include "anovakrr/krr.hpp"
#include "anovakrr/model_io.hpp"
#include "anovakrr/oracle.hpp"
#include "anovakrr/parallel.hpp"
#include "anovakrr/random.hpp"

namespace anovakrr {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kReportSchema = "run-report/1";

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shortest decimal text that reads back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write error on '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json versions() {
  return {{"tool", kToolVersion},
          {"model_schema", kModelSchema},
          {"report_schema", kReportSchema},
          {"rng", {{"name", kRngName}, {"version", kRngVersion}}}};
}

json base_report(const std::string& command, std::uint64_t seed, int threads) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"seed", seed},
          {"threads", threads},
          {"versions", versions()}};
}

// Options shared by every subcommand.
struct Common {
  int threads = 0;
  std::uint64_t seed = 0;
  std::string report;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker thread cap (0 = all available, 1 = serial)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--report", c.report, "Path of the JSON run report");
}

struct DataOptions {
  std::string csv;
  std::string label = "label";
  std::string positive = "1";
  bool balance = false;
};

void add_data(CLI::App* cmd, DataOptions& d, bool with_balance) {
  cmd->add_option("csv", d.csv, "Input CSV file with a header row")->required();
  cmd->add_option("--label", d.label, "Name of the label column")->capture_default_str();
  cmd->add_option("--positive", d.positive, "Label value mapped to +1")->capture_default_str();
  if (with_balance) {
    cmd->add_flag("--balance", d.balance, "Undersample the majority class before anything else");
  }
}

struct ModelOptions {
  double sigma = 1.0;
  std::optional<double> gamma;
  double lambda = 1.0;
  double threshold = 0.0;
  std::string profile = "default";
  double tol = 1e-3;
  int maxiter = 1000;
};

void add_model(CLI::App* cmd, ModelOptions& m, bool with_sigma) {
  if (with_sigma) {
    auto* sigma = cmd->add_option("--sigma", m.sigma, "Gaussian length scale")->capture_default_str();
    auto* gamma = cmd->add_option("--gamma", m.gamma, "Alternative to --sigma: gamma = 1/sigma^2");
    sigma->excludes(gamma);
    cmd->add_option("--lambda", m.lambda, "Ridge parameter")->capture_default_str();
  }
  cmd->add_option("--threshold", m.threshold, "Drop features whose MIS is below this")
      ->capture_default_str();
  cmd->add_option("--profile", m.profile, "NFFT accuracy profile: rough, default or fine")
      ->capture_default_str();
  cmd->add_option("--tol", m.tol, "CG relative residual tolerance")->capture_default_str();
  cmd->add_option("--maxiter", m.maxiter, "CG iteration cap")->capture_default_str();
}

KrrConfig make_config(const ModelOptions& m) {
  KrrConfig c;
  if (m.gamma) {
    if (!(*m.gamma > 0.0)) throw ValidationError("--gamma must be positive");
    c.sigma = 1.0 / std::sqrt(*m.gamma);
  } else {
    c.sigma = m.sigma;
  }
  c.lambda = m.lambda;
  c.mis_threshold = m.threshold;
  c.profile = AccuracyProfile::parse(m.profile).name;
  c.cg_tol = m.tol;
  c.cg_maxiter = m.maxiter;
  c.validate();
  return c;
}

Dataset load_dataset(const DataOptions& d, std::uint64_t seed, json& report) {
  Dataset ds = load_csv(d.csv, d.label, d.positive);
  report["data"] = {{"path", d.csv},
                    {"label_column", d.label},
                    {"positive_label", d.positive},
                    {"rows", ds.rows()},
                    {"features", ds.cols()}};
  if (d.balance) {
    ds = balance_undersample(ds, seed);
    report["data"]["balanced_rows"] = ds.rows();
  }
  return ds;
}

json diagnostics(const KrrModel& m) {
  return {{"cg_iterations", m.cg_iterations},
          {"cg_residual", m.cg_residual},
          {"cg_converged", m.cg_converged},
          {"windows", to_json(m.windows)}};
}

json fit_timings(const KrrModel& m) {
  return {{"scale_seconds", m.timings.scale_seconds},
          {"mis_seconds", m.timings.mis_seconds},
          {"build_seconds", m.timings.build_seconds},
          {"solve_seconds", m.timings.solve_seconds}};
}

// Training accuracy from the converged system: K alpha = y - lambda alpha.
double train_accuracy(const KrrModel& m, const Eigen::VectorXd& y) {
  return accuracy(sign_labels(y - m.config.lambda * m.alpha), y);
}

void warn_unconverged(const KrrModel& m, std::ostream& err) {
  if (!m.cg_converged) {
    err << "warning: CG stopped at the iteration cap (" << m.cg_iterations
        << " iterations, relative residual " << m.cg_residual << ")\n";
  }
}

std::string default_report(const std::string& given, const std::string& artifact) {
  return given.empty() ? artifact + ".report.json" : given;
}

// ---------------------------------------------------------------- commands

int cmd_mis_rank(const DataOptions& d, const Common& c, std::ostream& out) {
  json report = base_report("mis-rank", c.seed, c.threads);
  const auto start = Clock::now();
  const Dataset ds = load_dataset(d, c.seed, report);
  const auto scores = mis_scores(ds.x, ds.y);
  const json result = to_json(scores, ds.column_names);
  out << result.dump(2) << "\n";
  if (!c.report.empty()) {
    report["timings"] = {{"total_seconds", seconds_since(start)}};
    report["result"] = result;
    write_json(c.report, report);
  }
  return 0;
}

int cmd_fit(const DataOptions& d, const ModelOptions& m, const Common& c,
            const std::string& model_out, std::ostream& out, std::ostream& err) {
  json report = base_report("fit", c.seed, c.threads);
  const KrrConfig config = make_config(m);
  const auto start = Clock::now();
  const Dataset ds = load_dataset(d, c.seed, report);
  const double load_seconds = seconds_since(start);

  const auto fit_start = Clock::now();
  KrrModel model = fit(ds.x, ds.y, config);
  const double fit_seconds = seconds_since(fit_start);
  model.feature_names = ds.column_names;
  model.label_column = d.label;
  model.positive_label = d.positive;
  save_model(model, model_out);
  warn_unconverged(model, err);

  const double train_acc = train_accuracy(model, ds.y);
  report["config"] = config_to_json(config);
  report["model"] = model_out;
  report["diagnostics"] = diagnostics(model);
  report["train_accuracy"] = train_acc;
  report["timings"] = fit_timings(model);
  report["timings"]["load_seconds"] = load_seconds;
  report["timings"]["fit_seconds"] = fit_seconds;
  const auto report_path = default_report(c.report, model_out);
  write_json(report_path, report);

  out << "fit: " << ds.rows() << " rows, " << ds.cols() << " features, " << model.windows.size()
      << " windows (" << model.windows.dropped.size() << " features dropped)\n"
      << "  sigma " << config.sigma << ", lambda " << config.lambda << ", profile "
      << to_string(config.profile) << "\n"
      << "  CG " << model.cg_iterations << " iterations, relative residual " << model.cg_residual
      << (model.cg_converged ? "" : " (not converged)") << "\n"
      << "  training accuracy " << train_acc << ", fit time " << fit_seconds << " s\n"
      << "  model -> " << model_out << ", report -> " << report_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& csv, const std::string& out_path,
                const Common& c, std::ostream& out) {
  json report = base_report("predict", c.seed, c.threads);
  const auto start = Clock::now();
  const KrrModel model = load_model(model_path);
  const FeatureTable table = load_feature_table(csv, model.label_column);
  if (!model.feature_names.empty() && table.column_names != model.feature_names) {
    throw ValidationError("predict: feature columns of '" + csv +
                          "' do not match the columns the model was fitted on");
  }
  const double load_seconds = seconds_since(start);

  const auto predict_start = Clock::now();
  const Eigen::VectorXd s = decision_values(model, table.x);
  const Eigen::VectorXd labels = sign_labels(s);
  const double predict_seconds = seconds_since(predict_start);

  std::string text = "row_index,decision_value,label\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    text += std::to_string(i) + "," + format_double(s[i]) + "," +
            (labels[i] > 0 ? "1" : "-1") + "\n";
  }
  write_text(out_path, text);

  report["model"] = model_path;
  report["config"] = config_to_json(model.config);
  report["data"] = {{"path", csv}, {"rows", table.x.rows()}, {"features", table.x.cols()}};
  report["predictions"] = out_path;
  report["timings"] = {{"load_seconds", load_seconds}, {"predict_seconds", predict_seconds}};
  std::optional<double> acc;
  if (table.has_labels && s.size() > 0) {
    Eigen::VectorXd truth(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      truth[i] = table.labels[static_cast<std::size_t>(i)] == model.positive_label ? 1.0 : -1.0;
    }
    acc = accuracy(labels, truth);
    report["accuracy"] = *acc;
  }
  const auto report_path = default_report(c.report, out_path);
  write_json(report_path, report);

  out << "predict: " << s.size() << " rows in " << predict_seconds << " s";
  if (acc) out << ", accuracy " << *acc;
  out << "\n  predictions -> " << out_path << ", report -> " << report_path << "\n";
  return 0;
}

struct GridOptions {
  std::vector<double> sigma_grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> gamma_grid;
  std::vector<double> lambda_grid{1.0, 10.0, 100.0, 1000.0};
  double test_fraction = 0.0;
  bool no_shuffle = false;
  std::string model_out = "model.json";
  std::string table_out;
};

int cmd_gridsearch(const DataOptions& d, const ModelOptions& m, const GridOptions& g,
                   const Common& c, std::ostream& out, std::ostream& err) {
  json report = base_report("gridsearch", c.seed, c.threads);
  const KrrConfig base = make_config(m);
  std::vector<double> sigmas = g.sigma_grid;
  if (!g.gamma_grid.empty()) {
    sigmas.clear();
    for (double gamma : g.gamma_grid) {
      if (!(gamma > 0.0)) throw ValidationError("--gamma-grid values must be positive");
      sigmas.push_back(1.0 / std::sqrt(gamma));
    }
  }
  const auto start = Clock::now();
  const Dataset ds = load_dataset(d, c.seed, report);
  Dataset train = ds;
  std::optional<Dataset> test;
  if (g.test_fraction > 0.0) {
    auto [tr, te] = split_train_test(ds, 1.0 - g.test_fraction, c.seed, !g.no_shuffle);
    train = std::move(tr);
    test = std::move(te);
    report["data"]["train_rows"] = train.rows();
    report["data"]["test_rows"] = test->rows();
  }
  const double load_seconds = seconds_since(start);

  const auto search_start = Clock::now();
  GridSearchResult result =
      grid_search(train.x, train.y, sigmas, g.lambda_grid, base, c.seed, !g.no_shuffle);
  const double search_seconds = seconds_since(search_start);
  KrrModel& model = result.model;
  model.feature_names = ds.column_names;
  model.label_column = d.label;
  model.positive_label = d.positive;
  save_model(model, g.model_out);
  warn_unconverged(model, err);

  json cells = json::array();
  std::string table = "sigma,lambda,status,holdout_accuracy,cg_iterations,cg_converged,fit_seconds,error\n";
  std::size_t failed = 0;
  for (const auto& cell : result.cells) {
    cells.push_back({{"sigma", cell.sigma},
                     {"lambda", cell.lambda},
                     {"ok", cell.ok},
                     {"holdout_accuracy", cell.accuracy},
                     {"cg_iterations", cell.cg_iterations},
                     {"cg_converged", cell.cg_converged},
                     {"fit_seconds", cell.fit_seconds},
                     {"error", cell.error}});
    if (!cell.ok) ++failed;
    std::string message = cell.error;
    std::replace(message.begin(), message.end(), '"', '\'');
    table += format_double(cell.sigma) + "," + format_double(cell.lambda) + "," +
             (cell.ok ? "ok" : "failed") + "," + (cell.ok ? format_double(cell.accuracy) : "") +
             "," + std::to_string(cell.cg_iterations) + "," + (cell.cg_converged ? "1" : "0") + "," +
             format_double(cell.fit_seconds) + ",\"" + message + "\"\n";
  }
  if (!g.table_out.empty()) write_text(g.table_out, table);

  report["config"] = config_to_json(result.best);
  report["grid"] = {{"sigma", sigmas},
                    {"lambda", g.lambda_grid},
                    {"selection", "inner 50:50 holdout of the training rows; ties to smaller lambda, "
                                  "then smaller sigma; the test rows are never used for selection"},
                    {"cells", cells}};
  report["model"] = g.model_out;
  report["diagnostics"] = diagnostics(model);
  report["train_accuracy"] = train_accuracy(model, train.y);
  report["timings"] = fit_timings(model);
  report["timings"]["load_seconds"] = load_seconds;
  report["timings"]["search_seconds"] = search_seconds;

  std::optional<double> test_acc;
  if (test) {
    const auto predict_start = Clock::now();
    test_acc = accuracy(predict(model, test->x), test->y);
    report["timings"]["predict_seconds"] = seconds_since(predict_start);
    report["accuracy"] = *test_acc;
  }
  const auto report_path = default_report(c.report, g.model_out);
  write_json(report_path, report);

  out << "gridsearch: " << result.cells.size() << " cells (" << failed << " failed) on "
      << train.rows() << " training rows in " << search_seconds << " s\n"
      << "  best sigma " << result.best.sigma << ", lambda " << result.best.lambda << "\n"
      << "  refit: CG " << model.cg_iterations << " iterations, training accuracy "
      << train_accuracy(model, train.y) << "\n";
  if (test_acc) out << "  test accuracy " << *test_acc << " on " << test->rows() << " rows\n";
  out << "  model -> " << g.model_out << ", report -> " << report_path << "\n";
  return 0;
}

struct BenchOptions {
  std::vector<long long> n_list{1000, 2000, 4000};
  int dims = 3;
  double sigma = 100.0;
  std::string profile = "default";
  int runs = 10;
  long long direct_max = kDenseSizeGuard;
  std::string out = "bench-mvm.csv";
};

// Least-squares slope of log(t) against log(N).
std::optional<double> loglog_slope(const std::vector<double>& n, const std::vector<double>& t) {
  if (n.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    mx += std::log(n[i]);
    my += std::log(t[i]);
  }
  mx /= static_cast<double>(n.size());
  my /= static_cast<double>(n.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sxy += (std::log(n[i]) - mx) * (std::log(t[i]) - my);
    sxx += (std::log(n[i]) - mx) * (std::log(n[i]) - mx);
  }
  return sxy / sxx;
}

int cmd_bench_mvm(const BenchOptions& b, const Common& c, std::ostream& out) {
  json report = base_report("bench-mvm", c.seed, c.threads);
  if (b.n_list.empty()) throw ValidationError("bench-mvm: --n-list is empty");
  for (std::size_t i = 0; i < b.n_list.size(); ++i) {
    if (b.n_list[i] < 1) throw ValidationError("bench-mvm: N values must be positive");
    if (i > 0 && b.n_list[i] <= b.n_list[i - 1]) {
      throw ValidationError("bench-mvm: --n-list must be strictly ascending");
    }
  }
  if (b.dims < 1 || b.dims > kMaxDims) throw ValidationError("bench-mvm: --d must be 1, 2 or 3");
  if (b.runs < 1) throw ValidationError("bench-mvm: --runs must be at least 1");
  const auto kernel = RadialKernel::gaussian(b.sigma);
  const auto profile = AccuracyProfile::parse(b.profile);
  const auto config = PeriodizationConfig::for_profile(profile);

  Rng rng(c.seed);
  std::string csv = "N,t_direct,t_fast,rel_error,t_build,direct\n";
  json rows = json::array();
  std::vector<double> ns, fast_times, direct_ns, direct_times;
  std::optional<long long> crossover;
  for (const long long n : b.n_list) {
    const auto count = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x(count, b.dims);
    for (Eigen::Index i = 0; i < count; ++i)
      for (int t = 0; t < b.dims; ++t) x(i, t) = uniform_unit(rng);
    Eigen::VectorXd alpha(count);
    for (Eigen::Index i = 0; i < count; ++i) alpha[i] = standard_normal(rng);

    auto t0 = Clock::now();
    const auto op = FastsumOperator::build(kernel, config, profile, x);
    const double t_build = seconds_since(t0);
    Eigen::VectorXd fast;
    t0 = Clock::now();
    for (int r = 0; r < b.runs; ++r) fast = op.apply(alpha);
    const double t_fast = seconds_since(t0) / b.runs;

    const bool run_direct = n <= b.direct_max;
    std::optional<double> t_direct, rel_error;
    if (run_direct) {
      Eigen::VectorXd exact;
      t0 = Clock::now();
      for (int r = 0; r < b.runs; ++r) exact = direct_sum(kernel, x, x, alpha);
      t_direct = seconds_since(t0) / b.runs;
      rel_error = (fast - exact).norm() / exact.norm();
      direct_ns.push_back(static_cast<double>(n));
      direct_times.push_back(*t_direct);
      if (!crossover && t_fast < *t_direct) crossover = n;
    }
    ns.push_back(static_cast<double>(n));
    fast_times.push_back(t_fast);

    csv += std::to_string(n) + "," + (t_direct ? format_double(*t_direct) : "") + "," +
           format_double(t_fast) + "," + (rel_error ? format_double(*rel_error) : "") + "," +
           format_double(t_build) + "," + (run_direct ? "ran" : "skipped") + "\n";
    json row = {{"N", n}, {"t_fast", t_fast}, {"t_build", t_build}, {"direct", run_direct}};
    if (t_direct) row["t_direct"] = *t_direct;
    if (rel_error) row["rel_error"] = *rel_error;
    rows.push_back(row);
  }
  write_text(b.out, csv);

  const auto fast_slope = loglog_slope(ns, fast_times);
  const auto direct_slope = loglog_slope(direct_ns, direct_times);
  report["config"] = {{"n_list", b.n_list},     {"d", b.dims},
                      {"sigma", b.sigma},       {"profile", to_string(profile.name)},
                      {"runs", b.runs},         {"direct_max", b.direct_max}};
  report["rows"] = rows;
  report["fast_loglog_slope"] = fast_slope ? json(*fast_slope) : json(nullptr);
  report["direct_loglog_slope"] = direct_slope ? json(*direct_slope) : json(nullptr);
  report["crossover_N"] = crossover ? json(*crossover) : json(nullptr);
  report["csv"] = b.out;
  const auto report_path = default_report(c.report, b.out);
  write_json(report_path, report);

  out << "bench-mvm: d=" << b.dims << ", sigma " << b.sigma << ", profile "
      << to_string(profile.name) << ", " << b.runs << " runs per N\n";
  for (const auto& row : rows) {
    out << "  N=" << row["N"] << "  fast " << row["t_fast"].get<double>() << " s";
    if (row.contains("t_direct")) {
      out << "  direct " << row["t_direct"].get<double>() << " s  rel_error "
          << row["rel_error"].get<double>();
    } else {
      out << "  direct skipped (N > --direct-max)";
    }
    out << "\n";
  }
  if (fast_slope) out << "  log-log slope fast " << *fast_slope << "\n";
  if (direct_slope) out << "  log-log slope direct " << *direct_slope << "\n";
  out << "  crossover N: " << (crossover ? std::to_string(*crossover) : "not reached") << "\n"
      << "  csv -> " << b.out << ", report -> " << report_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matrix-free Gaussian ANOVA kernel ridge regression with NFFT fast summation",
               "anovakrr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  DataOptions data;
  ModelOptions model;
  GridOptions grid;
  BenchOptions bench;
  std::string model_out = "model.json";
  std::string model_in;
  std::string predict_csv;
  std::string predict_out = "predictions.csv";

  auto* mis = app.add_subcommand("mis-rank", "Rank features by mutual information with the label");
  add_data(mis, data, true);
  add_common(mis, common);

  auto* fit_cmd = app.add_subcommand("fit", "Fit a KRR model on a labelled CSV file");
  add_data(fit_cmd, data, true);
  add_model(fit_cmd, model, true);
  fit_cmd->add_option("--model-out", model_out, "Where to write the model")->capture_default_str();
  add_common(fit_cmd, common);

  auto* pred = app.add_subcommand("predict", "Predict labels for the rows of a CSV file");
  pred->add_option("--model", model_in, "Model file written by fit or gridsearch")->required();
  pred->add_option("csv", predict_csv, "CSV file with the training feature columns")->required();
  pred->add_option("--out", predict_out, "Predictions CSV")->capture_default_str();
  add_common(pred, common);

  auto* gs = app.add_subcommand("gridsearch", "Select sigma and lambda on a holdout, then refit");
  add_data(gs, data, true);
  add_model(gs, model, false);
  auto* sg = gs->add_option("--sigma-grid", grid.sigma_grid, "Comma-separated sigma values")
                 ->delimiter(',')
                 ->capture_default_str();
  auto* gg = gs->add_option("--gamma-grid", grid.gamma_grid,
                            "Comma-separated gamma values, gamma = 1/sigma^2")
                 ->delimiter(',');
  sg->excludes(gg);
  gs->add_option("--lambda-grid", grid.lambda_grid, "Comma-separated lambda values")
      ->delimiter(',')
      ->capture_default_str();
  gs->add_option("--test-fraction", grid.test_fraction,
                 "Hold out this fraction of rows as a test set (0 = none)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  gs->add_flag("--no-shuffle-split", grid.no_shuffle,
               "Split rows in file order instead of shuffling");
  gs->add_option("--model-out", grid.model_out, "Where to write the refitted best model")
      ->capture_default_str();
  gs->add_option("--table-out", grid.table_out, "Per-cell results CSV");
  add_common(gs, common);

  auto* bm = app.add_subcommand("bench-mvm", "Time fast and direct kernel-vector products");
  bm->add_option("--n-list", bench.n_list, "Comma-separated ascending N values")
      ->delimiter(',')
      ->capture_default_str();
  bm->add_option("--d", bench.dims, "Dimension (1 to 3)")->capture_default_str();
  bm->add_option("--sigma", bench.sigma, "Gaussian length scale")->capture_default_str();
  bm->add_option("--profile", bench.profile, "NFFT accuracy profile")->capture_default_str();
  bm->add_option("--runs", bench.runs, "Timed repetitions per N")->capture_default_str();
  bm->add_option("--direct-max", bench.direct_max, "Largest N for the direct product")
      ->capture_default_str();
  bm->add_option("--out", bench.out, "Benchmark CSV")->capture_default_str();
  add_common(bm, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 3;
  }

  try {
    set_max_threads(common.threads);
    if (mis->parsed()) return cmd_mis_rank(data, common, out);
    if (fit_cmd->parsed()) return cmd_fit(data, model, common, model_out, out, err);
    if (pred->parsed()) return cmd_predict(model_in, predict_csv, predict_out, common, out);
    if (gs->parsed()) return cmd_gridsearch(data, model, grid, common, out, err);
    if (bm->parsed()) return cmd_bench_mvm(bench, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return NumericalError("").exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 3;
}

}  // namespace anovakrr
