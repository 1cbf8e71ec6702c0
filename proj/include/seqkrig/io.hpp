#ifndef SEQKRIG_IO_HPP
#define SEQKRIG_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqkrig/batch.hpp"
#include "seqkrig/criteria.hpp"
#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"
#include "seqkrig/kernels.hpp"
#include "seqkrig/sequential.hpp"
#include "seqkrig/testbed.hpp"
#include "seqkrig/version.hpp"

namespace seqkrig::io {

using nlohmann::json;

/// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Designs: CSV (one row per point, plain decimal, no header) and JSON
// arrays-of-arrays, both lossless at 17 significant digits.

inline std::string design_to_csv(const DesignMatrix& design) {
  std::ostringstream oss;
  for (int i = 0; i < design.n(); ++i) {
    for (int j = 0; j < design.m(); ++j) {
      if (j) oss << ',';
      oss << format_double(design.points()(i, j));
    }
    oss << '\n';
  }
  return oss.str();
}

inline DesignMatrix design_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw IoError("unparseable design entry '" + field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty design file");
  Eigen::MatrixXd pts(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw IoError("ragged design rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return DesignMatrix(std::move(pts));
}

inline json design_to_json(const DesignMatrix& design) {
  json rows = json::array();
  for (int i = 0; i < design.n(); ++i) {
    json row = json::array();
    for (int j = 0; j < design.m(); ++j) row.push_back(design.points()(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline DesignMatrix design_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw IoError("design json must be a non-empty array");
  const std::size_t m = rows.front().size();
  Eigen::MatrixXd pts(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) throw IoError("ragged design json rows");
    for (std::size_t j = 0; j < m; ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  }
  return DesignMatrix(std::move(pts));
}

// ---------------------------------------------------------------------------
// Kernel and model summaries.

inline json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["family"] = spec.family == KernelFamily::GaussianSeparable ? "gaussian" : "matern";
  j["theta"] = std::vector<double>(spec.theta.data(), spec.theta.data() + spec.theta.size());
  j["nu"] = spec.nu;
  j["phi"] = spec.phi_scale;
  j["nugget"] = spec.nugget;
  return j;
}

inline KernelSpec kernel_from_json(const json& j) {
  KernelSpec spec;
  const std::string family = j.at("family").get<std::string>();
  if (family == "gaussian")
    spec.family = KernelFamily::GaussianSeparable;
  else if (family == "matern")
    spec.family = KernelFamily::Matern;
  else
    throw ConfigError("unknown kernel family '" + family + "'");
  const auto theta = j.at("theta").get<std::vector<double>>();
  spec.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                 static_cast<Eigen::Index>(theta.size()));
  spec.nu = j.at("nu").get<double>();
  spec.phi_scale = j.at("phi").get<double>();
  spec.nugget = j.at("nugget").get<double>();
  spec.validate();
  return spec;
}

inline json model_summary_to_json(const ModelSummary& s) {
  json j;
  j["kernel"] = kernel_to_json(s.kernel);
  j["tau_squared"] = s.tau_squared;
  j["log_likelihood"] = s.log_likelihood;
  j["nugget_escalations"] = s.nugget_escalations;
  return j;
}

// ---------------------------------------------------------------------------
// Cluster partitions and score maps.

inline json partition_to_json(const ClusterPartition& part, const DesignMatrix& candidates,
                              const Eigen::VectorXd& scores) {
  json j;
  json clusters = json::array();
  for (const auto& cluster : part.clusters) {
    json members = json::array();
    for (int idx : cluster) {
      json member;
      member["index"] = idx;
      member["point"] = std::vector<double>(candidates.points().row(idx).data(),
                                            candidates.points().row(idx).data() + candidates.m());
      member["score"] = scores(idx);
      members.push_back(std::move(member));
    }
    clusters.push_back(std::move(members));
  }
  j["clusters"] = std::move(clusters);
  j["batch"] = part.batch;
  j["alpha_used"] = part.alpha_used;
  j["fallback"] = part.fallback;
  return j;
}

/// Candidate coordinates plus score, one row per candidate.
inline std::string scores_to_csv(const DesignMatrix& candidates, const Eigen::VectorXd& scores) {
  std::ostringstream oss;
  for (int j = 0; j < candidates.m(); ++j) oss << 'x' << j + 1 << ',';
  oss << "score\n";
  for (int i = 0; i < candidates.n(); ++i) {
    for (int j = 0; j < candidates.m(); ++j) oss << format_double(candidates.points()(i, j)) << ',';
    oss << format_double(scores(i)) << '\n';
  }
  return oss.str();
}

// ---------------------------------------------------------------------------
// Campaign traces.

inline json round_to_json(const RoundRecord& rec) {
  json j;
  j["round"] = rec.round;
  json pts = json::array();
  for (Eigen::Index i = 0; i < rec.batch_points.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < rec.batch_points.cols(); ++k) row.push_back(rec.batch_points(i, k));
    pts.push_back(std::move(row));
  }
  j["batch"] = std::move(pts);
  j["observations"] = std::vector<double>(rec.batch_observations.data(),
                                          rec.batch_observations.data() +
                                              rec.batch_observations.size());
  if (rec.model) j["model"] = model_summary_to_json(*rec.model);
  if (std::isfinite(rec.rmse)) {
    j["rmse"] = rec.rmse;
    j["mae"] = rec.mae;
  }
  j["batch_fallback"] = rec.batch_fallback;
  return j;
}

inline json trace_to_json(const CampaignResult& result, const json& config_snapshot) {
  json j;
  j["config"] = config_snapshot;
  j["seed"] = result.seed;
  j["total_evaluations"] = result.total_evaluations;
  json rounds = json::array();
  for (const auto& rec : result.rounds) rounds.push_back(round_to_json(rec));
  j["rounds"] = std::move(rounds);
  j["final_design"] = design_to_json(result.final_design);
  j["final_observations"] =
      std::vector<double>(result.final_observations.data(),
                          result.final_observations.data() + result.final_observations.size());
  return j;
}

/// Flat per-point CSV: round, coordinates, response, rmse, mae. Round 0
/// rows are the initial design with the round-0 metrics repeated.
inline std::string rounds_to_csv(const CampaignResult& result, int n0) {
  std::ostringstream oss;
  const int m = result.final_design.m();
  oss << "round,";
  for (int j = 0; j < m; ++j) oss << 'x' << j + 1 << ',';
  oss << "response,rmse,mae\n";
  int offset = 0;
  for (const auto& rec : result.rounds) {
    const int count = rec.round == 0 ? n0 : static_cast<int>(rec.batch_points.rows());
    for (int i = 0; i < count; ++i) {
      oss << rec.round << ',';
      for (int j = 0; j < m; ++j)
        oss << format_double(result.final_design.points()(offset + i, j)) << ',';
      oss << format_double(result.final_observations(offset + i)) << ','
          << format_double(rec.rmse) << ',' << format_double(rec.mae) << '\n';
    }
    offset += count;
  }
  return oss.str();
}

// ---------------------------------------------------------------------------
// Comparison tables.

inline json table_to_json(const ComparisonTable& table) {
  json j;
  json cells = json::array();
  for (const auto& cell : table.cells) {
    json c;
    c["function"] = table.spec.functions[static_cast<std::size_t>(cell.function_index)].name();
    c["m"] = table.spec.functions[static_cast<std::size_t>(cell.function_index)].m;
    c["criterion"] =
        criterion_name(table.spec.criteria[static_cast<std::size_t>(cell.criterion_index)].kind);
    c["b"] = table.spec.b_values[static_cast<std::size_t>(cell.b_index)];
    c["replication"] = cell.replication;
    c["seed"] = cell.cell_seed;
    if (cell.failed) {
      c["error"] = cell.error;
    } else {
      c["rmse"] = cell.report.rmse;
      c["mae"] = cell.report.mae;
    }
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

/// Median table in the benchmark layout: one row per (function, m, b,
/// metric), one column per criterion, plus the winning criterion.
inline std::string table_to_csv(const ComparisonTable& table) {
  std::ostringstream oss;
  oss << "function,m,b,metric";
  for (const auto& crit : table.spec.criteria) oss << ",phi_" << criterion_name(crit.kind);
  oss << ",winner\n";
  for (std::size_t f = 0; f < table.spec.functions.size(); ++f) {
    for (std::size_t b = 0; b < table.spec.b_values.size(); ++b) {
      for (const bool mae : {false, true}) {
        oss << table.spec.functions[f].name() << ',' << table.spec.functions[f].m << ','
            << table.spec.b_values[b] << ',' << (mae ? "mae" : "rmse");
        int winner = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < table.spec.criteria.size(); ++c) {
          const double v = mae ? table.median_mae(static_cast<int>(f), static_cast<int>(c),
                                                  static_cast<int>(b))
                               : table.median_rmse(static_cast<int>(f), static_cast<int>(c),
                                                   static_cast<int>(b));
          oss << ',' << format_double(v);
          if (v < best) {
            best = v;
            winner = static_cast<int>(c);
          }
        }
        oss << ','
            << (winner < 0 ? "none"
                           : std::string("phi_") + criterion_name(
                                 table.spec.criteria[static_cast<std::size_t>(winner)].kind))
            << '\n';
      }
    }
  }
  return oss.str();
}

/// gnuplot-friendly per-round median RMSE curves: one block per
/// (function, b), blank-line separated; columns are the point count
/// followed by one median-RMSE column per criterion.
inline std::string curves_to_gnuplot(const ComparisonTable& table) {
  std::ostringstream oss;
  for (std::size_t f = 0; f < table.spec.functions.size(); ++f) {
    for (std::size_t b = 0; b < table.spec.b_values.size(); ++b) {
      oss << "# " << table.spec.functions[f].name() << " b=" << table.spec.b_values[b]
          << "; columns: n_points";
      for (const auto& crit : table.spec.criteria) oss << " phi_" << criterion_name(crit.kind);
      oss << '\n';
      std::size_t n_rounds = 0;
      for (int rep = 0; rep < table.spec.replications; ++rep) {
        const auto& cl = table.cell(static_cast<int>(f), 0, static_cast<int>(b), rep);
        if (!cl.failed) n_rounds = std::max(n_rounds, cl.curve.size());
      }
      for (std::size_t r = 0; r < n_rounds; ++r) {
        int n_points = 0;
        std::ostringstream line;
        for (std::size_t c = 0; c < table.spec.criteria.size(); ++c) {
          std::vector<double> vals;
          for (int rep = 0; rep < table.spec.replications; ++rep) {
            const auto& cl =
                table.cell(static_cast<int>(f), static_cast<int>(c), static_cast<int>(b), rep);
            if (!cl.failed && r < cl.curve.size()) {
              vals.push_back(cl.curve[r].rmse);
              n_points = cl.curve[r].n_points;
            }
          }
          if (vals.empty()) {
            line << " nan";
          } else {
            std::sort(vals.begin(), vals.end());
            const std::size_t k = vals.size() / 2;
            const double med = vals.size() % 2 ? vals[k] : 0.5 * (vals[k - 1] + vals[k]);
            line << ' ' << format_double(med);
          }
        }
        oss << n_points << line.str() << '\n';
      }
      oss << '\n';
    }
  }
  return oss.str();
}

// ---------------------------------------------------------------------------
// Files, digests, manifests.

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string digest_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

/// Writes the files into out_dir plus a manifest listing every output file
/// with its content digest. The wall-clock entry is informational and not
/// part of any idempotency contract.
inline void write_outputs_with_manifest(const std::filesystem::path& out_dir,
                                        const std::map<std::string, std::string>& files,
                                        const json& config_snapshot, std::uint64_t seed,
                                        double wall_clock_seconds) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");
  json manifest;
  manifest["tool_version"] = SEQKRIG_VERSION;
  manifest["seed"] = seed;
  manifest["wall_clock_seconds"] = wall_clock_seconds;
  manifest["config"] = config_snapshot;
  json outputs = json::array();
  for (const auto& [name, content] : files) {
    write_text_file(out_dir / name, content);
    json entry;
    entry["file"] = name;
    entry["digest"] = digest_hex(content);
    outputs.push_back(std::move(entry));
  }
  manifest["outputs"] = std::move(outputs);
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CLI configuration files (JSON, one schema; see README).

template <typename T>
inline T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("missing config field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + name + "' has the wrong type");
  }
}

template <typename T>
inline T field_or(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + name + "' has the wrong type");
  }
}

struct RunConfig {
  TestFunction function{};
  int n0 = 0;  // 0 means the 5m protocol default
  CriterionSpec criterion{};
  ClusterParams batch{};
  int rounds = 0;  // 0 means 20 for b = 1, 10 otherwise
  CandidateGridSpec grid{};
  std::uint64_t seed = 0;
  Termination termination{};
  int test_matrix_size = 10000;
  bool metrics = true;
  KernelFamily family = KernelFamily::GaussianSeparable;
};

inline KernelFamily family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::GaussianSeparable;
  if (name == "matern") return KernelFamily::Matern;
  throw ConfigError("unknown kernel_family '" + name + "' (expected gaussian or matern)");
}

inline GridMethod grid_method_from_string(const std::string& name) {
  if (name == "md") return GridMethod::MdOptimized;
  if (name == "lhs") return GridMethod::Lhs;
  throw ConfigError("unknown grid_method '" + name + "' (expected md or lhs)");
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  const std::string objective = field<std::string>(j, "objective");
  const int dim = field_or<int>(j, "dimension", 0);
  const auto fn = TestFunction::parse(objective, dim);
  if (!fn) throw ConfigError("unknown objective '" + objective + "' (expected f1..f7)");
  cfg.function = *fn;
  cfg.n0 = field_or<int>(j, "n0", 0);
  const std::string crit = field_or<std::string>(j, "criterion", "gra");
  const auto kind = criterion_from_name(crit);
  if (!kind) throw ConfigError("unknown criterion '" + crit + "'");
  cfg.criterion = CriterionSpec{*kind};
  cfg.batch.b = field_or<int>(j, "b", 1);
  cfg.batch.alpha = field_or<int>(j, "alpha", 15);
  cfg.batch.beta = field_or<double>(j, "beta", 5.0);
  cfg.batch.alpha_decay = field_or<double>(j, "alpha_decay", 0.5);
  cfg.rounds = field_or<int>(j, "rounds", 0);
  cfg.grid.n_all = field_or<int>(j, "n_all", 1000);
  cfg.grid.method = grid_method_from_string(field_or<std::string>(j, "grid_method", "md"));
  cfg.grid.regenerate_each_round = field_or<bool>(j, "regenerate_grid_each_round", false);
  cfg.seed = field_or<std::uint64_t>(j, "seed", 0);
  cfg.test_matrix_size = field_or<int>(j, "test_matrix_size", 10000);
  cfg.metrics = field_or<bool>(j, "metrics", true);
  cfg.family = family_from_string(field_or<std::string>(j, "kernel_family", "gaussian"));
  if (j.contains("termination")) {
    const json& t = j.at("termination");
    const std::string kind_name = field<std::string>(t, "kind");
    if (kind_name == "round_cap") {
      cfg.termination.kind = TerminationKind::RoundCap;
    } else if (kind_name == "point_cap") {
      cfg.termination.kind = TerminationKind::PointCap;
      cfg.termination.point_cap = field<int>(t, "total");
    } else if (kind_name == "rmse_threshold") {
      cfg.termination.kind = TerminationKind::RmseThreshold;
      cfg.termination.rmse_threshold = field<double>(t, "value");
    } else {
      throw ConfigError("unknown termination kind '" + kind_name + "'");
    }
  }
  return cfg;
}

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["objective"] = cfg.function.name();
  j["dimension"] = cfg.function.m;
  j["n0"] = cfg.n0;
  j["criterion"] = criterion_name(cfg.criterion.kind);
  j["b"] = cfg.batch.b;
  j["alpha"] = cfg.batch.alpha;
  j["beta"] = cfg.batch.beta;
  j["alpha_decay"] = cfg.batch.alpha_decay;
  j["rounds"] = cfg.rounds;
  j["n_all"] = cfg.grid.n_all;
  j["grid_method"] = cfg.grid.method == GridMethod::MdOptimized ? "md" : "lhs";
  j["regenerate_grid_each_round"] = cfg.grid.regenerate_each_round;
  j["seed"] = cfg.seed;
  j["test_matrix_size"] = cfg.test_matrix_size;
  j["metrics"] = cfg.metrics;
  j["kernel_family"] = cfg.family == KernelFamily::GaussianSeparable ? "gaussian" : "matern";
  json t;
  switch (cfg.termination.kind) {
    case TerminationKind::RoundCap: t["kind"] = "round_cap"; break;
    case TerminationKind::PointCap:
      t["kind"] = "point_cap";
      t["total"] = cfg.termination.point_cap;
      break;
    case TerminationKind::RmseThreshold:
      t["kind"] = "rmse_threshold";
      t["value"] = cfg.termination.rmse_threshold;
      break;
  }
  j["termination"] = std::move(t);
  return j;
}

/// Builds the executable campaign configuration from a parsed file,
/// applying the protocol defaults (n0 = 5m; 20 added points for b = 1,
/// 10 rounds otherwise) and deriving the test matrix from the seed.
inline CampaignConfig build_campaign_config(const RunConfig& cfg) {
  CampaignConfig config;
  config.objective = make_objective(cfg.function);
  config.m = cfg.function.m;
  config.n0 = cfg.n0 > 0 ? cfg.n0 : 5 * cfg.function.m;
  config.criterion = cfg.criterion;
  config.batch = cfg.batch;
  config.rounds = cfg.rounds > 0 ? cfg.rounds : (cfg.batch.b == 1 ? 20 : 10);
  config.grid = cfg.grid;
  config.seed = cfg.seed;
  config.termination = cfg.termination;
  config.family = cfg.family;
  if (cfg.metrics) {
    DesignMatrix tm = latin_hypercube(cfg.test_matrix_size, cfg.function.m,
                                      derive_seed(cfg.seed, detail::kSeedTestMatrixBase));
    Eigen::VectorXd truth(tm.n());
    for (int i = 0; i < tm.n(); ++i) truth(i) = evaluate(cfg.function, tm.row(i));
    config.metrics = MetricsSpec{std::move(tm), std::move(truth)};
  }
  return config;
}

struct BenchConfig {
  ComparisonSpec spec;
};

inline BenchConfig bench_config_from_json(const json& j) {
  BenchConfig cfg;
  if (!j.contains("functions") || !j.at("functions").is_array() || j.at("functions").empty())
    throw ConfigError("bench config needs a non-empty 'functions' array");
  for (const json& f : j.at("functions")) {
    const std::string id = field<std::string>(f, "id");
    const int m = field_or<int>(f, "m", 0);
    const auto fn = TestFunction::parse(id, m);
    if (!fn) throw ConfigError("unknown function id '" + id + "'");
    cfg.spec.functions.push_back(*fn);
  }
  if (!j.contains("criteria") || !j.at("criteria").is_array() || j.at("criteria").empty())
    throw ConfigError("bench config needs a non-empty 'criteria' array");
  for (const json& c : j.at("criteria")) {
    const auto kind = criterion_from_name(c.get<std::string>());
    if (!kind) throw ConfigError("unknown criterion '" + c.get<std::string>() + "'");
    cfg.spec.criteria.push_back(CriterionSpec{*kind});
  }
  cfg.spec.b_values = field_or<std::vector<int>>(j, "b_values", {1});
  cfg.spec.replications = field_or<int>(j, "replications", 10);
  cfg.spec.seed = field_or<std::uint64_t>(j, "seed", 0);
  cfg.spec.test_matrix_size = field_or<int>(j, "test_matrix_size", 10000);
  cfg.spec.n_all = field_or<int>(j, "n_all", 1000);
  cfg.spec.grid_method = grid_method_from_string(field_or<std::string>(j, "grid_method", "md"));
  cfg.spec.alpha = field_or<int>(j, "alpha", 15);
  cfg.spec.beta = field_or<double>(j, "beta", 5.0);
  cfg.spec.one_point_added = field_or<int>(j, "one_point_added", 20);
  cfg.spec.batch_rounds = field_or<int>(j, "batch_rounds", 10);
  cfg.spec.family = family_from_string(field_or<std::string>(j, "kernel_family", "gaussian"));
  return cfg;
}

inline json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid json in '" + path.string() + "'");
  return j;
}

}  // namespace seqkrig::io

#endif
