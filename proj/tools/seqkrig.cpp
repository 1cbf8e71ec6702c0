// Command-line front end: generate designs, run a single sequential
// campaign, run the benchmark comparison matrix, or export criterion score
// maps. All outputs land in --out-dir together with a manifest listing
// every file and its content digest.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical
// failure, 4 I/O failure. Set SEQKRIG_LOG=info (or debug) for progress
// logging on stderr.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "seqkrig/io.hpp"

namespace {

int log_level() {
  const char* env = std::getenv("SEQKRIG_LOG");
  if (env == nullptr) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[seqkrig] " << msg << "\n";
}

struct CommonArgs {
  std::string out_dir = ".";
  int jobs = 0;
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
  int n_all_override = 0;
  int test_matrix_override = 0;
  std::string format = "csv";  // csv also writes json twins; json suppresses csv
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--out-dir", args.out_dir, "Output directory");
  cmd->add_option("--jobs", args.jobs, "Worker cap (0 = hardware)");
  cmd->add_option("--seed", args.seed_override, "Seed override")
      ->each([&args](const std::string&) { args.has_seed_override = true; });
  cmd->add_option("--n-all", args.n_all_override, "Candidate grid size override");
  cmd->add_option("--test-matrix-size", args.test_matrix_override,
                  "Test matrix size override");
  cmd->add_option("--format", args.format, "Tabular output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_design(int n, int m, const std::string& method, std::uint64_t seed,
               const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  seqkrig::DesignMatrix design =
      method == "lhs" ? seqkrig::latin_hypercube(n, m, seed)
                      : seqkrig::md_optimized_design(n, m, seed);
  const double md2 = seqkrig::mixture_discrepancy(design).md_squared;

  nlohmann::json meta;
  meta["n"] = n;
  meta["m"] = m;
  meta["method"] = method;
  meta["seed"] = seed;
  meta["md_squared"] = md2;

  std::map<std::string, std::string> files;
  files["design.csv"] = seqkrig::io::design_to_csv(design);
  files["design.json"] = seqkrig::io::design_to_json(design).dump(2) + "\n";
  files["design_meta.json"] = meta.dump(2) + "\n";
  seqkrig::io::write_outputs_with_manifest(args.out_dir, files, meta, seed,
                                           seconds_since(start));
  log_info("design written to " + args.out_dir + " (md2 = " + std::to_string(md2) + ")");
  return 0;
}

seqkrig::io::RunConfig load_run_config(const std::string& path, const CommonArgs& args) {
  auto cfg = seqkrig::io::run_config_from_json(seqkrig::io::parse_json_file(path));
  if (args.has_seed_override) cfg.seed = args.seed_override;
  if (args.n_all_override > 0) cfg.grid.n_all = args.n_all_override;
  if (args.test_matrix_override > 0) cfg.test_matrix_size = args.test_matrix_override;
  return cfg;
}

int run_campaign_cmd(const std::string& config_path, const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load_run_config(config_path, args);
  const auto config = seqkrig::io::build_campaign_config(cfg);
  log_info("running campaign: " + cfg.function.name() + " criterion " +
           seqkrig::criterion_name(cfg.criterion.kind));
  const auto result = seqkrig::run_campaign(config, args.jobs);

  const nlohmann::json snapshot = seqkrig::io::run_config_to_json(cfg);
  std::map<std::string, std::string> files;
  files["trace.json"] = seqkrig::io::trace_to_json(result, snapshot).dump(2) + "\n";
  files["rounds.csv"] = seqkrig::io::rounds_to_csv(result, config.n0);
  seqkrig::io::write_outputs_with_manifest(args.out_dir, files, snapshot, cfg.seed,
                                           seconds_since(start));
  log_info("campaign finished with " + std::to_string(result.total_evaluations) +
           " evaluations");
  return 0;
}

int run_bench(const std::string& config_path, const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  auto cfg = seqkrig::io::bench_config_from_json(seqkrig::io::parse_json_file(config_path));
  if (args.has_seed_override) cfg.spec.seed = args.seed_override;
  if (args.n_all_override > 0) cfg.spec.n_all = args.n_all_override;
  if (args.test_matrix_override > 0) cfg.spec.test_matrix_size = args.test_matrix_override;
  log_info("running benchmark matrix");
  const auto table = seqkrig::run_comparison(cfg.spec, args.jobs);

  nlohmann::json snapshot;
  snapshot["seed"] = cfg.spec.seed;
  snapshot["replications"] = cfg.spec.replications;
  snapshot["test_matrix_size"] = cfg.spec.test_matrix_size;
  snapshot["n_all"] = cfg.spec.n_all;

  std::map<std::string, std::string> files;
  files["bench.json"] = seqkrig::io::table_to_json(table).dump(2) + "\n";
  if (args.format == "csv") files["bench.csv"] = seqkrig::io::table_to_csv(table);
  files["rmse_curves.dat"] = seqkrig::io::curves_to_gnuplot(table);
  seqkrig::io::write_outputs_with_manifest(args.out_dir, files, snapshot, cfg.spec.seed,
                                           seconds_since(start));
  log_info("benchmark written to " + args.out_dir);
  return 0;
}

int run_score(const std::string& config_path, const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load_run_config(config_path, args);
  const auto config = seqkrig::io::build_campaign_config(cfg);

  // Round-zero state: initial design, observations, one fit, one scan.
  using namespace seqkrig;
  ObservationCache cache(config.objective);
  const auto design = md_optimized_design(config.n0, config.m,
                                          derive_seed(config.seed, detail::kSeedInitialDesign));
  const Eigen::VectorXd y = cache.observe_all(design);
  const auto model = fit(design, y, config.family,
                         derive_seed(config.seed, detail::kSeedFitBase));
  const auto grid =
      detail::make_grid(config.grid, config.m, derive_seed(config.seed, detail::kSeedGrid));
  const auto scan =
      argmax_over_candidates(config.criterion, criterion_needs_model(config.criterion.kind)
                                                   ? &model
                                                   : nullptr,
                             design, grid, args.jobs);
  const auto part = select_batch_or_top_distinct(grid, scan.scores, config.batch);

  const nlohmann::json snapshot = io::run_config_to_json(cfg);
  std::map<std::string, std::string> files;
  files["scores.csv"] = io::scores_to_csv(grid, scan.scores);
  files["partition.json"] = io::partition_to_json(part, grid, scan.scores).dump(2) + "\n";
  files["design.csv"] = io::design_to_csv(design);
  io::write_outputs_with_manifest(args.out_dir, files, snapshot, cfg.seed,
                                  seconds_since(start));
  log_info("score map written to " + args.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential experimental designs for Kriging surrogates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SEQKRIG_VERSION);

  CommonArgs design_args, run_args, bench_args, score_args;

  int d_n = 25, d_m = 2;
  std::string d_method = "md";
  std::uint64_t d_seed = 0;
  auto* design_cmd = app.add_subcommand("design", "Generate a space-filling design");
  design_cmd->add_option("--n", d_n, "Number of points")->required();
  design_cmd->add_option("--m", d_m, "Dimension")->required();
  design_cmd->add_option("--method", d_method, "lhs or md")
      ->check(CLI::IsMember({"lhs", "md"}));
  design_cmd->add_option("--design-seed", d_seed, "Seed");
  add_common(design_cmd, design_args);

  std::string run_config_path;
  auto* run_cmd = app.add_subcommand("run", "Run one sequential campaign");
  run_cmd->add_option("--config", run_config_path, "JSON config file")->required();
  add_common(run_cmd, run_args);

  std::string bench_config_path;
  auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark comparison matrix");
  bench_cmd->add_option("--config", bench_config_path, "JSON config file")->required();
  add_common(bench_cmd, bench_args);

  std::string score_config_path;
  auto* score_cmd =
      app.add_subcommand("score", "Export the criterion score map of the initial state");
  score_cmd->add_option("--config", score_config_path, "JSON config file")->required();
  add_common(score_cmd, score_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (design_cmd->parsed()) {
      const std::uint64_t seed =
          design_args.has_seed_override ? design_args.seed_override : d_seed;
      return run_design(d_n, d_m, d_method, seed, design_args);
    }
    if (run_cmd->parsed()) return run_campaign_cmd(run_config_path, run_args);
    if (bench_cmd->parsed()) return run_bench(bench_config_path, bench_args);
    if (score_cmd->parsed()) return run_score(score_config_path, score_args);
  } catch (const seqkrig::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const seqkrig::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const seqkrig::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const seqkrig::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const seqkrig::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
