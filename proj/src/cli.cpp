#include "eigenrank/cli.hpp"

#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "eigenrank/errors.hpp"
#include "eigenrank/external_backend.hpp"
#include "eigenrank/io.hpp"
#include "eigenrank/subprocess.hpp"

namespace eigenrank {

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

struct BackendFlags {
  std::string kind = "synthetic";
  std::string train_cmd;
  std::string predict_cmd;
  std::string work_dir;
};

struct EngineFlags {
  std::string metric = "dice";
  std::string score_mode = "lambda_max";
  unsigned jobs = 1;

  EngineOptions options() const {
    return EngineOptions{parse_overlap_metric(metric), parse_score_mode(score_mode), jobs};
  }
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
  cmd->add_option("--backend", f.kind, "Segmenter backend")
      ->check(CLI::IsMember({"synthetic", "external"}));
  cmd->add_option("--train-cmd", f.train_cmd, "External backend train program");
  cmd->add_option("--predict-cmd", f.predict_cmd,
                  "External backend predict program (defaults to --train-cmd)");
  cmd->add_option("--work-dir", f.work_dir, "External backend scratch directory");
}

void add_engine_flags(CLI::App* cmd, EngineFlags& f) {
  cmd->add_option("--metric", f.metric, "Pairwise overlap metric")
      ->check(CLI::IsMember({"dice", "jaccard"}));
  cmd->add_option("--score-mode", f.score_mode, "Per-case disagreement score")
      ->check(CLI::IsMember({"lambda_max", "entropy"}));
  cmd->add_option("--jobs", f.jobs, "Concurrent predictions")->check(CLI::PositiveNumber);
}

std::unique_ptr<SegmenterBackend> make_backend(const BackendFlags& f, const Pool& pool,
                                               const fs::path& out) {
  if (f.kind == "synthetic") {
    return std::make_unique<SyntheticBackend>(load_synthetic_cases(pool));
  }
  if (f.train_cmd.empty()) {
    throw Error(ErrorCode::invalid_argument, "--backend external needs --train-cmd");
  }
  ExternalBackendConfig config;
  config.train_command = split_command(f.train_cmd);
  config.predict_command = split_command(f.predict_cmd.empty() ? f.train_cmd : f.predict_cmd);
  config.work_dir = f.work_dir.empty() ? fs::path(out.string() + ".work") : fs::path(f.work_dir);
  return std::make_unique<ExternalBackend>(pool, std::move(config));
}

std::vector<ModelHandle> import_models(SegmenterBackend& backend, const fs::path& path) {
  std::vector<ModelHandle> out;
  for (const auto& d : load_model_descriptions(path)) {
    if (d.is_object() && d.contains("backend") && d["backend"] != backend.name()) {
      throw Error(ErrorCode::invalid_argument,
                  path.string() + ": model was produced by backend " + d["backend"].dump() +
                      ", not \"" + backend.name() + "\"");
    }
    out.push_back(backend.import_model(d));
  }
  return out;
}

ModelHandle import_single_model(SegmenterBackend& backend, const fs::path& path) {
  auto models = import_models(backend, path);
  if (models.size() != 1) {
    throw Error(ErrorCode::invalid_argument,
                path.string() + ": expected exactly one model, found " +
                    std::to_string(models.size()));
  }
  return models.front();
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble-disagreement subset selection and failure prediction", "eigenrank"};
  app.require_subcommand(1);

  // dice
  std::vector<std::string> dice_files;
  std::string dice_metric = "dice";
  auto* dice_cmd = app.add_subcommand("dice", "Overlap score of two mask files");
  dice_cmd->add_option("masks", dice_files, "Two .emsk files")->required()->expected(2);
  dice_cmd->add_option("--metric", dice_metric)->check(CLI::IsMember({"dice", "jaccard"}));

  // matrix
  std::vector<std::string> matrix_files;
  std::string matrix_metric = "dice";
  auto* matrix_cmd = app.add_subcommand("matrix", "Dice matrix and spectrum of several masks");
  matrix_cmd->add_option("masks", matrix_files, "Two or more .emsk files")->required()->expected(2, -1);
  matrix_cmd->add_option("--metric", matrix_metric)->check(CLI::IsMember({"dice", "jaccard"}));

  // select
  std::string sel_manifest, sel_out;
  std::size_t sel_k = 3, sel_iterations = 7;
  std::uint64_t sel_seed = 0;
  BackendFlags sel_backend;
  EngineFlags sel_engine;
  auto* select_cmd = app.add_subcommand("select", "Run subset selection over a pool");
  select_cmd->add_option("--manifest", sel_manifest)->required();
  select_cmd->add_option("--k", sel_k)->required()->check(CLI::PositiveNumber);
  select_cmd->add_option("--iterations", sel_iterations)->required()->check(CLI::Range(2, 100000));
  select_cmd->add_option("--seed", sel_seed);
  select_cmd->add_option("--out", sel_out)->required();
  add_backend_flags(select_cmd, sel_backend);
  add_engine_flags(select_cmd, sel_engine);

  // rank
  std::string rank_manifest, rank_models, rank_out, rank_mode = "iterative", rank_probe;
  std::size_t rank_k = 3, rank_iterations = 7;
  std::uint64_t rank_seed = 0;
  BackendFlags rank_backend;
  EngineFlags rank_engine;
  auto* rank_cmd = app.add_subcommand("rank", "Predict failures by ensemble disagreement");
  rank_cmd->add_option("--manifest", rank_manifest)->required();
  rank_cmd->add_option("--models", rank_models, "Models document (fixed mode)");
  rank_cmd->add_option("--mode", rank_mode)->check(CLI::IsMember({"fixed", "iterative"}));
  rank_cmd->add_option("--k", rank_k)->check(CLI::PositiveNumber);
  rank_cmd->add_option("--iterations", rank_iterations);
  rank_cmd->add_option("--seed", rank_seed);
  rank_cmd->add_option("--probe", rank_probe, "Model whose truth Dice is tracked");
  rank_cmd->add_option("--out", rank_out)->required();
  add_backend_flags(rank_cmd, rank_backend);
  add_engine_flags(rank_cmd, rank_engine);

  // simulate
  std::vector<std::size_t> sim_t;
  std::vector<double> sim_eps;
  std::size_t sim_trials = 100;
  std::uint64_t sim_seed = 0;
  std::string sim_out, sim_sampler = "mixture";
  unsigned sim_jobs = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Dominance-ratio simulation on feasible Dice matrices");
  sim_cmd->add_option("--t", sim_t, "Ensemble sizes")->required()->delimiter(',')
      ->check(CLI::Range(std::size_t{2}, std::size_t{64}));
  sim_cmd->add_option("--epsilon", sim_eps)->required()->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--trials", sim_trials)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_seed);
  sim_cmd->add_option("--sampler", sim_sampler)->check(CLI::IsMember({"mixture", "rejection"}));
  sim_cmd->add_option("--jobs", sim_jobs)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim_out, "CSV path (stdout when omitted)");

  // synth-gen
  std::size_t gen_n = 100, gen_width = 32, gen_height = 32;
  std::uint64_t gen_seed = 0;
  std::string gen_dir;
  auto* gen_cmd = app.add_subcommand("synth-gen", "Write a synthetic dataset and manifest");
  gen_cmd->add_option("--n", gen_n)->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--width", gen_width);
  gen_cmd->add_option("--height", gen_height);
  gen_cmd->add_option("--out-dir", gen_dir)->required();

  // eval
  std::string eval_manifest, eval_model, eval_out;
  BackendFlags eval_backend;
  EngineFlags eval_engine;
  auto* eval_cmd = app.add_subcommand("eval", "Truth overlap of one model over a manifest");
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--out", eval_out)->required();
  add_backend_flags(eval_cmd, eval_backend);
  add_engine_flags(eval_cmd, eval_engine);

  // compare
  std::string cmp_manifest, cmp_out;
  std::size_t cmp_k = 3, cmp_iterations = 7;
  std::vector<std::uint64_t> cmp_seeds{0};
  BackendFlags cmp_backend;
  EngineFlags cmp_engine;
  auto* cmp_cmd = app.add_subcommand("compare", "Selection vs random on common and method-specific holdouts");
  cmp_cmd->add_option("--manifest", cmp_manifest)->required();
  cmp_cmd->add_option("--k", cmp_k)->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--iterations", cmp_iterations)->check(CLI::Range(2, 100000));
  cmp_cmd->add_option("--seeds", cmp_seeds)->delimiter(',');
  cmp_cmd->add_option("--out", cmp_out)->required();
  add_backend_flags(cmp_cmd, cmp_backend);
  add_engine_flags(cmp_cmd, cmp_engine);

  std::vector<const char*> argv;
  argv.push_back("eigenrank");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n"
        << "run 'eigenrank --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*dice_cmd) {
      const double s = overlap(parse_overlap_metric(dice_metric), read_mask(dice_files[0]),
                               read_mask(dice_files[1]));
      out << format_number(s) << "\n";
    } else if (*matrix_cmd) {
      std::vector<BinaryMask> masks;
      for (const auto& f : matrix_files) masks.push_back(read_mask(f));
      out << describe_matrix(build_dice_matrix(masks, parse_overlap_metric(matrix_metric)));
    } else if (*select_cmd) {
      const Manifest m = load_manifest(sel_manifest);
      auto backend = make_backend(sel_backend, m.pool, sel_out);
      const SelectionReport report =
          run_selection(m.pool, sel_k, sel_iterations, *backend, sel_seed, sel_engine.options());
      atomic_write(sel_out, dump(to_json(report, *backend)));
    } else if (*rank_cmd) {
      const Manifest m = load_manifest(rank_manifest);
      auto backend = make_backend(rank_backend, m.pool, rank_out);
      const EngineOptions options = rank_engine.options();
      FailureRequest request;
      request.k = rank_k;
      request.iterations = rank_iterations;
      request.seed = rank_seed;
      request.mode = parse_failure_mode(rank_mode);
      if (!rank_probe.empty()) request.probe = import_single_model(*backend, rank_probe);
      nlohmann::json doc;
      if (request.mode == FailureMode::fixed) {
        if (rank_models.empty()) {
          throw Error(ErrorCode::invalid_argument, "--mode fixed needs --models");
        }
        request.ensemble = import_models(*backend, rank_models);
        doc = ranking_json(rank_failures_fixed(request.ensemble, m.pool, *backend, options));
        if (request.probe) doc["failure"] = to_json(run_failure_elimination(m.pool, request, *backend, options));
      } else {
        doc = to_json(run_failure_elimination(m.pool, request, *backend, options));
      }
      atomic_write(rank_out, dump(doc));
    } else if (*sim_cmd) {
      std::vector<SimulationRow> rows;
      for (double eps : sim_eps) {
        SimulationConfig config{sim_t, eps, sim_trials, sim_seed,
                                parse_feasible_sampler(sim_sampler), sim_jobs};
        auto r = run_conjecture_simulation(config);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      const std::string csv = simulation_csv(rows);
      if (sim_out.empty()) out << csv;
      else atomic_write(sim_out, csv);
    } else if (*gen_cmd) {
      const auto cases = generate_dataset(gen_n, gen_width, gen_height, gen_seed);
      out << write_synthetic_dataset(cases, gen_seed, gen_dir).string() << "\n";
    } else if (*eval_cmd) {
      const Manifest m = load_manifest(eval_manifest);
      auto backend = make_backend(eval_backend, m.pool, eval_out);
      const ModelHandle model = import_single_model(*backend, eval_model);
      const auto ids = m.pool.ids();
      atomic_write(eval_out, dump(to_json(evaluate_model(model, ids, *backend, eval_engine.options()))));
    } else if (*cmp_cmd) {
      const Manifest m = load_manifest(cmp_manifest);
      auto backend = make_backend(cmp_backend, m.pool, cmp_out);
      const auto table = compare_to_random(m.pool, cmp_k, cmp_iterations, *backend, cmp_seeds,
                                           cmp_engine.options());
      atomic_write(cmp_out, dump(to_json(table)));
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace eigenrank
