// svrank: rank tests, confidence intervals, noise estimation, and the
// simulation lab, wrapped around the header-only library.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "svrank/exam_scores.hpp"
#include "svrank/inference.hpp"
#include "svrank/io.hpp"
#include "svrank/simlab.hpp"

namespace {

using nlohmann::json;
using namespace svrank;

constexpr std::uint64_t kDefaultSeed = 20260826ULL;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SVRANK_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw usage_error("SVRANK_SEED must be a non-negative integer");
    }
  }
  return kDefaultSeed;
}

struct InputOptions {
  std::string path;
  bool center = false;
  bool header = false;
  std::string delimiter;  // empty = auto
};

void add_input_options(CLI::App* cmd, InputOptions& opt) {
  cmd->add_option("matrix", opt.path, "matrix file ('-' for stdin)")
      ->required();
  cmd->add_flag("--center", opt.center, "subtract column means before the SVD");
  cmd->add_flag("--header", opt.header, "first non-comment line is a header");
  cmd->add_option("--delimiter", opt.delimiter,
                  "field delimiter (default: auto-detect)");
}

LoadedMatrix load_input(const InputOptions& opt) {
  MatrixReadOptions read_opt;
  read_opt.center_columns = opt.center;
  read_opt.header = opt.header;
  if (!opt.delimiter.empty()) {
    if (opt.delimiter == "\\t" || opt.delimiter == "tab")
      read_opt.delimiter = '\t';
    else if (opt.delimiter.size() == 1)
      read_opt.delimiter = opt.delimiter[0];
    else
      throw usage_error("--delimiter must be a single character or 'tab'");
  }
  if (opt.path == "-") return read_matrix(std::cin, "<stdin>", read_opt);
  return read_matrix_file(opt.path, read_opt);
}

struct NoiseOptions {
  std::optional<double> sigma2;
  std::string estimator;  // simple | median | cv | cv-df | cv-dfc
  int folds = 20;
  double c = 2.0 / 3.0;
  int kappa = 0;  // for --noise-est simple
};

void add_noise_options(CLI::App* cmd, NoiseOptions& opt) {
  auto* s = cmd->add_option("--sigma2", opt.sigma2, "known noise variance");
  auto* e = cmd->add_option("--noise-est", opt.estimator,
                            "noise estimator: simple|median|cv|cv-df|cv-dfc")
                ->check(CLI::IsMember(
                    {"simple", "median", "cv", "cv-df", "cv-dfc"}));
  s->excludes(e);
  cmd->add_option("--folds", opt.folds, "cross-validation folds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--c", opt.c, "shrinkage constant for cv-dfc")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--kappa", opt.kappa,
                  "assumed rank for the simple estimator")
      ->check(CLI::NonNegativeNumber);
}

NoiseVariant variant_from_name(const std::string& name) {
  if (name == "simple") return NoiseVariant::simple;
  if (name == "median") return NoiseVariant::median;
  if (name == "cv") return NoiseVariant::lambda;
  if (name == "cv-df") return NoiseVariant::lambda_df;
  if (name == "cv-dfc") return NoiseVariant::lambda_df_c;
  throw usage_error("unknown noise estimator: " + name);
}

NoiseEstimate resolve_noise(const ObservedMatrix& obs, const NoiseOptions& opt,
                            std::uint64_t seed) {
  if (opt.sigma2) {
    if (*opt.sigma2 <= 0.0) throw parameter_error("--sigma2 must be positive");
    NoiseEstimate est;
    est.sigma2 = *opt.sigma2;
    est.variant = NoiseVariant::simple;
    return est;
  }
  const std::string name = opt.estimator.empty() ? "median" : opt.estimator;
  const NoiseVariant variant = variant_from_name(name);
  switch (variant) {
    case NoiseVariant::simple:
      return sigma_simple(svd_full(obs), opt.kappa,
                          static_cast<int>(obs.entries.rows()));
    case NoiseVariant::median:
      return sigma_med(obs);
    default: {
      RandomStream rng = RandomStream::from(seed, 0xCF);
      const double d1 = singular_values_of(obs.entries)[0];
      const double lambda =
          cv_select_lambda(obs, opt.folds, default_lambda_grid(d1), rng);
      return sigma_hat(obs, lambda, variant, opt.c);
    }
  }
}

TestMethod method_from_name(const std::string& name) {
  if (name == "csv") return TestMethod::csv;
  if (name == "icsv") return TestMethod::icsv;
  if (name == "pseudorank") return TestMethod::pseudorank;
  if (name == "muirhead") return TestMethod::muirhead;
  throw usage_error("unknown method: " + name);
}

json noise_config_json(const NoiseOptions& opt, const NoiseEstimate& est) {
  json j = to_json(est);
  if (!opt.sigma2 && (est.variant == NoiseVariant::lambda ||
                      est.variant == NoiseVariant::lambda_df ||
                      est.variant == NoiseVariant::lambda_df_c))
    j["folds"] = opt.folds;
  j["source"] = opt.sigma2 ? "fixed" : "estimated";
  return j;
}

void emit(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw input_error("cannot open output file: " + out_path);
  out << report.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_test(const InputOptions& input, const NoiseOptions& noise,
             const std::string& method_name, int k, double alpha,
             std::uint64_t seed, bool scree, int mc_samples,
             const std::string& out_path) {
  const LoadedMatrix loaded = load_input(input);
  const ObservedMatrix obs = ObservedMatrix::from(loaded.entries);
  const NoiseEstimate noise_est = resolve_noise(obs, noise, seed);
  const TestMethod method = method_from_name(method_name);
  InferenceConfig cfg;
  cfg.alpha = alpha;
  cfg.importance_sampling.seed = seed;
  if (mc_samples > 0) cfg.importance_sampling.sample_count = mc_samples;
  const SingularSpectrum spectrum = svd_full(obs);

  json body;
  if (scree) {
    body["singular_values"] =
        std::vector<double>(spectrum.values.data(),
                            spectrum.values.data() + spectrum.values.size());
  }
  if (k > 0) {
    body["tests"] = json::array(
        {to_json(step_test(spectrum, k, method, noise_est.sigma2, cfg))});
  } else {
    json tests = json::array();
    for (const TestOutcome& outcome :
         sequential_tests(spectrum, noise_est.sigma2, method, cfg))
      tests.push_back(to_json(outcome));
    body["tests"] = tests;
  }
  json config{{"method", method_name}, {"alpha", alpha},
              {"seed", seed},          {"center", input.center},
              {"k", k},                {"noise", noise_config_json(noise, noise_est)}};
  emit(make_report("test", config, body), out_path);
  return 0;
}

int cmd_rank(const InputOptions& input, const NoiseOptions& noise,
             const std::string& method_name, const std::string& rule_name,
             double alpha, std::uint64_t seed, int mc_samples,
             const std::string& out_path) {
  const LoadedMatrix loaded = load_input(input);
  const ObservedMatrix obs = ObservedMatrix::from(loaded.entries);
  const NoiseEstimate noise_est = resolve_noise(obs, noise, seed);
  const TestMethod method = method_from_name(method_name);
  const StopRule rule =
      rule_name == "strong" ? StopRule::strong : StopRule::simple;
  if (rule_name != "strong" && rule_name != "simple")
    throw usage_error("--rule must be 'simple' or 'strong'");
  InferenceConfig cfg;
  cfg.alpha = alpha;
  cfg.importance_sampling.seed = seed;
  if (mc_samples > 0) cfg.importance_sampling.sample_count = mc_samples;
  const RankDecision decision =
      estimate_rank(obs, method, rule, alpha, noise_est.sigma2, cfg);
  json config{{"method", method_name}, {"rule", rule_name},
              {"alpha", alpha},        {"seed", seed},
              {"center", input.center},
              {"noise", noise_config_json(noise, noise_est)}};
  emit(make_report("rank", config, to_json(decision)), out_path);
  return 0;
}

int cmd_ci(const InputOptions& input, const NoiseOptions& noise, int k,
           double level, std::uint64_t seed, const std::string& out_path) {
  if (level <= 0.0 || level >= 1.0)
    throw parameter_error("--level must lie in (0, 1)");
  const LoadedMatrix loaded = load_input(input);
  const ObservedMatrix obs = ObservedMatrix::from(loaded.entries);
  const NoiseEstimate noise_est = resolve_noise(obs, noise, seed);
  const SingularSpectrum spectrum = svd_full(obs);
  const ConfidenceInterval ci =
      confidence_interval(spectrum, k, noise_est.sigma2, level);
  json config{{"k", k},
              {"level", level},
              {"center", input.center},
              {"noise", noise_config_json(noise, noise_est)}};
  emit(make_report("ci", config, to_json(ci)), out_path);
  return 0;
}

int cmd_noise(const InputOptions& input, const NoiseOptions& noise,
              std::uint64_t seed, const std::string& out_path) {
  const LoadedMatrix loaded = load_input(input);
  const ObservedMatrix obs = ObservedMatrix::from(loaded.entries);
  NoiseOptions resolved = noise;
  if (!resolved.sigma2 && resolved.estimator.empty())
    resolved.estimator = "median";
  const NoiseEstimate est = resolve_noise(obs, resolved, seed);
  json config{{"variant", to_string(est.variant)},
              {"seed", seed},
              {"center", input.center},
              {"folds", resolved.folds},
              {"c", resolved.c}};
  emit(make_report("noise", config, to_json(est)), out_path);
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string suite = "calibration";
  int n_rows = 20;
  int n_cols = 10;
  int rank = 0;
  double m = 1.5;
  double sigma2 = 1.0;
  std::string noise_kind = "gaussian";
  std::string method = "csv";
  std::string rule = "simple";
  std::string noise_mode = "known";
  double alpha = 0.05;
  double level = 0.95;
  int reps = 200;
  int steps = 4;
  std::vector<double> m_grid;
  std::vector<int> ranks;
  std::string out_dir = "svrank-sim";
};

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "heavy") return NoiseKind::heavy_tail;
  if (name == "skew") return NoiseKind::right_skew;
  throw usage_error("unknown noise kind: " + name);
}

std::vector<std::pair<std::string, std::string>> sim_metadata(
    const SimulateOptions& opt, std::uint64_t seed) {
  return {{"suite", opt.suite},
          {"n_rows", std::to_string(opt.n_rows)},
          {"n_cols", std::to_string(opt.n_cols)},
          {"noise_kind", opt.noise_kind},
          {"reps", std::to_string(opt.reps)},
          {"seed", std::to_string(seed)}};
}

int cmd_simulate(const SimulateOptions& opt, std::uint64_t seed) {
  std::filesystem::create_directories(opt.out_dir);
  SimDesign design;
  design.signal.n_rows = opt.n_rows;
  design.signal.n_cols = opt.n_cols;
  design.signal.rank = opt.rank;
  design.signal.m = opt.m;
  design.signal.sigma2 = opt.sigma2;
  design.noise = noise_kind_from_name(opt.noise_kind);
  const TestMethod method = method_from_name(opt.method);

  if (opt.suite == "calibration") {
    CalibrationOptions cal;
    cal.method = method;
    cal.max_step = opt.steps;
    const CalibrationResult result =
        run_null_calibration(design, cal, opt.reps, seed);
    for (const StepCalibration& step : result.steps) {
      DsvTable table;
      table.metadata = sim_metadata(opt, seed);
      table.metadata.emplace_back("k", std::to_string(step.k));
      table.metadata.emplace_back("ks_distance",
                                  format_double(step.ks_distance, 8));
      table.metadata.emplace_back("ks_pvalue",
                                  format_double(step.ks_pvalue, 8));
      table.header = {"uniform_quantile", "p_value"};
      const std::size_t n = step.sorted_pvalues.size();
      for (std::size_t i = 0; i < n; ++i)
        table.rows.push_back({format_double((i + 0.5) / n, 8),
                              format_double(step.sorted_pvalues[i], 8)});
      table.write_file(opt.out_dir + "/qq_step_" + std::to_string(step.k) +
                       ".tsv");
    }
    std::cout << "calibration tables written to " << opt.out_dir << "\n";
    return 0;
  }

  if (opt.suite == "coverage") {
    const std::vector<int> ranks = opt.ranks.empty()
                                       ? std::vector<int>{1, 2, 3}
                                       : opt.ranks;
    const std::vector<double> m_grid =
        opt.m_grid.empty() ? std::vector<double>{1.0, 2.0, 3.0} : opt.m_grid;
    DsvTable table;
    table.metadata = sim_metadata(opt, seed);
    table.metadata.emplace_back("level", format_double(opt.level, 4));
    table.header = {"rank", "m", "k", "coverage"};
    std::uint64_t cell = 0;
    for (int rank : ranks) {
      for (double m : m_grid) {
        SimDesign cell_design = design;
        cell_design.signal.rank = rank;
        cell_design.signal.m = m;
        std::vector<int> which_k;
        for (int k = 1; k <= std::min(rank + 1, opt.n_cols - 1); ++k)
          which_k.push_back(k);
        const auto results =
            run_coverage(cell_design, opt.level, opt.reps,
                         SplitMix64::derive(seed, ++cell), which_k);
        for (const CoverageResult& res : results)
          table.rows.push_back({std::to_string(rank), format_double(m, 4),
                                std::to_string(res.k),
                                format_double(res.rate(), 6)});
      }
    }
    table.write_file(opt.out_dir + "/coverage.tsv");
    std::cout << "coverage table written to " << opt.out_dir << "\n";
    return 0;
  }

  if (opt.suite == "rank") {
    const std::vector<double> m_grid =
        opt.m_grid.empty() ? std::vector<double>{1.0, 2.0, 3.0} : opt.m_grid;
    NoiseMode mode = NoiseMode::known;
    if (opt.noise_mode == "median") mode = NoiseMode::median;
    else if (opt.noise_mode == "cv-dfc") mode = NoiseMode::cv_dfc;
    else if (opt.noise_mode != "known")
      throw usage_error("--noise-mode must be known|median|cv-dfc");
    const StopRule rule =
        opt.rule == "strong" ? StopRule::strong : StopRule::simple;
    DsvTable table;
    table.metadata = sim_metadata(opt, seed);
    table.metadata.emplace_back("method", opt.method);
    table.metadata.emplace_back("rule", opt.rule);
    table.metadata.emplace_back("alpha", format_double(opt.alpha, 4));
    table.metadata.emplace_back("true_rank", std::to_string(opt.rank));
    table.header = {"m", "rate_correct", "rate_over", "mse"};
    std::uint64_t cell = 0;
    for (double m : m_grid) {
      SimDesign cell_design = design;
      cell_design.signal.m = m;
      const RankExperimentResult res = run_rank_experiment(
          cell_design, method, rule, opt.alpha, opt.reps,
          SplitMix64::derive(seed, ++cell), mode);
      table.rows.push_back({format_double(m, 4),
                            format_double(res.rate_correct(), 6),
                            format_double(res.rate_over(), 6),
                            format_double(res.mse, 6)});
    }
    table.write_file(opt.out_dir + "/rank.tsv");
    std::cout << "rank table written to " << opt.out_dir << "\n";
    return 0;
  }

  if (opt.suite == "power") {
    const std::vector<double> m_grid =
        opt.m_grid.empty() ? std::vector<double>{0.5, 1.0, 1.5, 2.0}
                           : opt.m_grid;
    DsvTable table;
    table.metadata = sim_metadata(opt, seed);
    table.metadata.emplace_back("method", opt.method);
    table.metadata.emplace_back("alpha", format_double(opt.alpha, 4));
    table.header = {"m", "rejection_rate"};
    InferenceConfig cfg;
    std::uint64_t cell = 0;
    for (double m : m_grid) {
      SimDesign cell_design = design;
      cell_design.signal.rank = std::max(1, opt.rank);
      cell_design.signal.m = m;
      const std::uint64_t cell_seed = SplitMix64::derive(seed, ++cell);
      int rejections = 0;
      for (int r = 0; r < opt.reps; ++r) {
        RandomStream rng = RandomStream::from(cell_seed, r);
        const Eigen::MatrixXd y = cell_design.draw(rng);
        InferenceConfig rep_cfg = cfg;
        rep_cfg.importance_sampling.seed =
            SplitMix64::derive(cell_seed, (1ULL << 32) + r);
        const TestOutcome outcome =
            step_test(svd_full(ObservedMatrix::from(y)), 1, method,
                      cell_design.signal.sigma2, rep_cfg);
        if (outcome.p_value <= opt.alpha) ++rejections;
      }
      table.rows.push_back(
          {format_double(m, 4),
           format_double(static_cast<double>(rejections) / opt.reps, 6)});
    }
    table.write_file(opt.out_dir + "/power.tsv");
    std::cout << "power table written to " << opt.out_dir << "\n";
    return 0;
  }

  throw usage_error("unknown suite: " + opt.suite);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singular-value rank inference for noisy matrices"};
  app.require_subcommand(1);

  InputOptions test_input, rank_input, ci_input, noise_input;
  NoiseOptions test_noise, rank_noise, ci_noise, noise_noise;
  std::string test_method = "csv", rank_method = "csv", rank_rule = "simple";
  int test_k = 0, ci_k = 1;
  double test_alpha = 0.05, rank_alpha = 0.05, ci_level = 0.95;
  bool scree = false;
  int test_mc = 0, rank_mc = 0;
  std::string test_out, rank_out, ci_out, noise_out;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed (default: $SVRANK_SEED)")
        ->each([&](const std::string&) { seed_given = true; });
  };

  CLI::App* t = app.add_subcommand("test", "step tests for singular values");
  add_input_options(t, test_input);
  add_noise_options(t, test_noise);
  t->add_option("--method", test_method, "csv|icsv|pseudorank|muirhead")
      ->check(CLI::IsMember({"csv", "icsv", "pseudorank", "muirhead"}));
  t->add_option("--k", test_k, "test a single step (default: all steps)");
  t->add_option("--alpha", test_alpha, "significance level");
  t->add_option("--mc-samples", test_mc, "Monte Carlo samples per batch");
  t->add_flag("--scree", scree, "include the singular values in the report");
  t->add_option("--out", test_out, "write the report to a file");
  add_seed(t);

  CLI::App* r = app.add_subcommand("rank", "select the rank by stepwise testing");
  add_input_options(r, rank_input);
  add_noise_options(r, rank_noise);
  r->add_option("--method", rank_method, "csv|icsv|pseudorank|muirhead")
      ->check(CLI::IsMember({"csv", "icsv", "pseudorank", "muirhead"}));
  r->add_option("--rule", rank_rule, "stopping rule: simple|strong")
      ->check(CLI::IsMember({"simple", "strong"}));
  r->add_option("--alpha", rank_alpha, "significance level");
  r->add_option("--mc-samples", rank_mc, "Monte Carlo samples per batch");
  r->add_option("--out", rank_out, "write the report to a file");
  add_seed(r);

  CLI::App* c = app.add_subcommand("ci", "confidence interval for a signal");
  add_input_options(c, ci_input);
  add_noise_options(c, ci_noise);
  c->add_option("--k", ci_k, "signal index")->check(CLI::PositiveNumber);
  c->add_option("--level", ci_level, "confidence level");
  c->add_option("--out", ci_out, "write the report to a file");
  add_seed(c);

  CLI::App* n = app.add_subcommand("noise", "estimate the noise variance");
  add_input_options(n, noise_input);
  add_noise_options(n, noise_noise);
  n->add_option("--variant", noise_noise.estimator,
                "simple|median|cv|cv-df|cv-dfc")
      ->check(CLI::IsMember({"simple", "median", "cv", "cv-df", "cv-dfc"}));
  n->add_option("--out", noise_out, "write the report to a file");
  add_seed(n);

  SimulateOptions sim;
  CLI::App* s = app.add_subcommand("simulate", "run a simulation suite");
  s->add_option("--suite", sim.suite, "calibration|coverage|rank|power")
      ->check(CLI::IsMember({"calibration", "coverage", "rank", "power"}));
  s->add_option("--rows,--N", sim.n_rows, "matrix rows")
      ->check(CLI::PositiveNumber);
  s->add_option("--cols,--p", sim.n_cols, "matrix columns")
      ->check(CLI::PositiveNumber);
  s->add_option("--rank", sim.rank, "true rank")->check(CLI::NonNegativeNumber);
  s->add_option("--m", sim.m, "signal magnitude multiplier");
  s->add_option("--sigma2", sim.sigma2, "noise variance")
      ->check(CLI::PositiveNumber);
  s->add_option("--noise-kind", sim.noise_kind, "gaussian|heavy|skew")
      ->check(CLI::IsMember({"gaussian", "heavy", "skew"}));
  s->add_option("--method", sim.method, "csv|icsv|pseudorank|muirhead")
      ->check(CLI::IsMember({"csv", "icsv", "pseudorank", "muirhead"}));
  s->add_option("--rule", sim.rule, "simple|strong")
      ->check(CLI::IsMember({"simple", "strong"}));
  s->add_option("--noise-mode", sim.noise_mode, "known|median|cv-dfc")
      ->check(CLI::IsMember({"known", "median", "cv-dfc"}));
  s->add_option("--alpha", sim.alpha, "significance level");
  s->add_option("--level", sim.level, "confidence level (coverage suite)");
  s->add_option("--reps", sim.reps, "replications per cell")
      ->check(CLI::PositiveNumber);
  s->add_option("--steps", sim.steps, "steps to calibrate")
      ->check(CLI::PositiveNumber);
  s->add_option("--m-grid", sim.m_grid, "grid of m values");
  s->add_option("--ranks", sim.ranks, "grid of ranks (coverage suite)");
  s->add_option("--out-dir", sim.out_dir, "output directory");
  add_seed(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::uint64_t effective_seed = seed_given ? seed : default_seed();
    if (t->parsed())
      return cmd_test(test_input, test_noise, test_method, test_k, test_alpha,
                      effective_seed, scree, test_mc, test_out);
    if (r->parsed())
      return cmd_rank(rank_input, rank_noise, rank_method, rank_rule,
                      rank_alpha, effective_seed, rank_mc, rank_out);
    if (c->parsed())
      return cmd_ci(ci_input, ci_noise, ci_k, ci_level, effective_seed, ci_out);
    if (n->parsed())
      return cmd_noise(noise_input, noise_noise, effective_seed, noise_out);
    if (s->parsed()) return cmd_simulate(sim, effective_seed);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const degenerate_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const unsupported_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
