#include "infomaxda/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>

#include "infomaxda/artifacts.hpp"
#include "infomaxda/config.hpp"
#include "infomaxda/errors.hpp"
#include "infomaxda/experiments.hpp"
#include "infomaxda/gradcheck.hpp"

namespace infomaxda {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// NaN and infinities have no JSON form; they become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json report_to_json(const oracle::CheckReport& r) {
  Json j;
  j["name"] = r.name;
  j["instances_run"] = r.instances_run;
  j["max_abs_violation"] = number(r.max_abs_violation);
  j["worst_case_seed"] = r.worst_case_seed;
  j["tolerance"] = r.tolerance;
  j["passed"] = r.passed;
  j["skipped"] = r.skipped;
  j["detail"] = r.detail;
  j["tightest_slack"] = r.tightest_slack ? number(*r.tightest_slack) : Json(nullptr);
  return j;
}

Json record_json(const MetricsRecord& r) {
  Json j;
  j["epoch"] = r.epoch;
  j["l_cls"] = number(r.l_cls);
  j["l_kld"] = number(r.l_kld);
  j["l_mi"] = number(r.l_mi);
  j["l_ent"] = number(r.l_ent);
  j["mi_estimate"] = number(r.mi_estimate);
  j["constraint_gap"] = number(r.constraint_gap);
  j["source_acc"] = number(r.source_acc);
  j["target_acc"] = number(r.target_acc);
  return j;
}

Json group_json(const GroupSummary& g) {
  Json acc = Json::array();
  for (double a : g.accuracies) acc.push_back(number(a));
  return Json{{"accuracies", acc}, {"mean", number(g.mean)}, {"std", number(g.std)}};
}

struct Invocation {
  std::string subcommand;
  std::optional<std::string> config_path;
  ResolvedConfig config;
  fs::path out_dir;
  std::vector<std::string> artifacts;
  std::ostream& out;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const std::string& relative, std::string_view content) {
    atomic_write_text(out_dir / relative, content);
    artifacts.push_back(relative);
  }
  void write_json(const std::string& relative, const Json& j) { write(relative, j.dump(2) + "\n"); }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  Json config_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : config.entries()) j[k] = v;
    return j;
  }
};

void require_jobs(const RunConfig& run) {
  if (run.jobs < 1) throw ValidationError("run.jobs (--jobs) must be >= 1");
}

void write_cell(Invocation& inv, const std::string& dir, const RunOutcome& run) {
  inv.write(dir + "/metrics.csv", metrics_csv(run.history));
}

std::string group_table(const std::string& first_column, std::span<const std::uint64_t> seeds,
                        std::span<const GroupSummary> groups) {
  std::string s = first_column;
  for (auto seed : seeds) s += ",seed_" + std::to_string(seed);
  s += ",mean,std\n";
  for (const GroupSummary& g : groups) {
    s += g.name;
    for (double a : g.accuracies) s += "," + format_double(a);
    s += "," + format_double(g.mean) + "," + format_double(g.std) + "\n";
  }
  return s;
}

int cmd_gaussian_mi(Invocation& inv) {
  const ResolvedConfig& c = inv.config;
  if (!(std::abs(c.mi.rho) < 1.0)) {
    throw ValidationError("--rho (mi.rho) must satisfy |rho| < 1, got " + format_double(c.mi.rho));
  }
  if (c.mi.dims < 1) throw ValidationError("--dims (mi.dims) must be >= 1");
  if (c.mi.n < 4) throw ValidationError("--n (mi.n) must be >= 4");
  if (c.train.estimator == Estimator::autoencoder) {
    throw ValidationError("--estimator (train.estimator) must be two_critic or mine_single");
  }
  const double true_mi = oracle::gaussian_mi(c.mi.rho, c.mi.dims);
  const PairedSamples paired = gen_correlated_gaussians(c.mi.n, c.mi.dims, c.mi.rho, derive_seed(c.train.seed, 100));
  const MiCurve curve = estimate_mi_run(c.train, paired);

  std::string csv = "epoch,estimate,true_mi\n";
  for (const MiCurvePoint& p : curve.points) {
    csv += std::to_string(p.epoch) + "," + format_double(p.estimate) + "," + format_double(true_mi) + "\n";
  }
  inv.write("mi_curve.csv", csv);

  Json summary;
  summary["estimator"] = std::string(to_string(c.train.estimator));
  summary["rho"] = c.mi.rho;
  summary["dims"] = c.mi.dims;
  summary["true_mi"] = true_mi;
  summary["epochs"] = curve.points.size();
  summary["critic_steps"] = curve.critic_steps;
  if (curve.points.empty()) {
    summary["final_estimate"] = nullptr;
    summary["abs_error"] = nullptr;
  } else {
    summary["final_estimate"] = number(curve.points.back().estimate);
    summary["abs_error"] = number(std::abs(curve.points.back().estimate - true_mi));
    summary["final_constraint_gap"] = number(curve.points.back().constraint_gap);
  }
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  if (!curve.points.empty()) {
    inv.out << "estimate " << format_double(curve.points.back().estimate) << " nats (true "
            << format_double(true_mi) << ") after " << curve.critic_steps << " critic steps\n";
  } else {
    inv.out << "no epochs run\n";
  }
  return kExitOk;
}

int cmd_train(Invocation& inv) {
  const ExperimentData data = build_experiment_data(inv.config.data);
  TrainedModel model = train_dpn(inv.config.train, data.source, data.target, data.evaluation_sets());
  inv.write("metrics.csv", metrics_csv(model.history));
  inv.write("resolved_config.cfg", inv.config.to_text());
  Json summary;
  summary["epochs"] = model.history.size();
  summary["final"] = model.history.empty() ? Json(nullptr) : record_json(model.history.back());
  summary["source_acc"] = number(evaluate(model, data.source));
  summary["target_acc"] = data.target_eval ? number(evaluate(model, *data.target_eval)) : Json(nullptr);
  summary["phase_checks"] = model.phase_checks;
  summary["config"] = inv.config_json();
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  inv.out << "source_acc " << summary["source_acc"].dump() << " target_acc " << summary["target_acc"].dump() << "\n";
  return kExitOk;
}

int cmd_ablate(Invocation& inv) {
  require_jobs(inv.config.run);
  const ExperimentData data = build_experiment_data(inv.config.data);
  const AblationResult r = ablation_run(inv.config.train, data, inv.config.run.seeds, inv.config.run.jobs);
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& mode = r.modes[i / r.seeds.size()].name;
    write_cell(inv, "runs/" + mode + "_seed" + std::to_string(r.seeds[i % r.seeds.size()]), r.runs[i]);
  }
  inv.write("ablation.csv", group_table("mode", r.seeds, r.modes));
  inv.write("resolved_config.cfg", inv.config.to_text());
  Json summary;
  summary["seeds"] = r.seeds;
  Json modes;
  for (const auto& g : r.modes) {
    modes[g.name] = group_json(g);
    inv.out << g.name << " mean " << format_double(g.mean) << " std " << format_double(g.std) << "\n";
  }
  summary["modes"] = modes;
  summary["config"] = inv.config_json();
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  return kExitOk;
}

int cmd_sweep(Invocation& inv) {
  require_jobs(inv.config.run);
  const ExperimentData data = build_experiment_data(inv.config.data);
  const auto& sw = inv.config.sweep;
  const SweepResult r = sensitivity_sweep(inv.config.train, data, sw.alphas, sw.betas, inv.config.run.jobs);
  std::string matrix = "alpha";
  for (double b : r.betas) matrix += "," + format_double(b);
  matrix += "\n";
  for (std::size_t i = 0; i < r.alphas.size(); ++i) {
    matrix += format_double(r.alphas[i]);
    for (std::size_t j = 0; j < r.betas.size(); ++j) {
      matrix += "," + format_double(r.accuracy(i, j));
      write_cell(inv, "cells/alpha" + std::to_string(i) + "_beta" + std::to_string(j), r.runs[i * r.betas.size() + j]);
    }
    matrix += "\n";
  }
  inv.write("matrix.csv", matrix);
  inv.write("resolved_config.cfg", inv.config.to_text());
  Json summary;
  summary["alphas"] = r.alphas;
  summary["betas"] = r.betas;
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.alphas.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < r.betas.size(); ++j) row.push_back(number(r.accuracy(i, j)));
    rows.push_back(row);
  }
  summary["accuracy"] = rows;
  summary["completed_runs"] = r.runs.size();
  summary["config"] = inv.config_json();
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  inv.out << r.runs.size() << " sweep cells completed\n";
  return kExitOk;
}

int cmd_compare(Invocation& inv) {
  require_jobs(inv.config.run);
  const ExperimentData data = build_experiment_data(inv.config.data);
  const ComparisonResult r = estimator_comparison(inv.config.train, data, inv.config.run.seeds, inv.config.run.jobs);
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& arm = r.arms[i / r.seeds.size()].name;
    write_cell(inv, "runs/" + arm + "_seed" + std::to_string(r.seeds[i % r.seeds.size()]), r.runs[i]);
  }
  inv.write("comparison.csv", group_table("arm", r.seeds, r.arms));
  inv.write("resolved_config.cfg", inv.config.to_text());
  Json summary;
  summary["seeds"] = r.seeds;
  Json arms;
  for (const auto& g : r.arms) {
    arms[g.name] = group_json(g);
    inv.out << g.name << " mean " << format_double(g.mean) << " std " << format_double(g.std) << "\n";
  }
  summary["arms"] = arms;
  summary["config"] = inv.config_json();
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  return kExitOk;
}

int cmd_cross_eval(Invocation& inv) {
  const ExperimentData data = build_experiment_data(inv.config.data);
  if (data.extra.empty()) {
    throw ValidationError("cross-eval needs a third domain (data.third_rotation_deg or data.third_path)");
  }
  if (!data.target_eval) throw ValidationError("cross-eval needs target labels for the accuracy curve");
  TrainedModel model = train_dpn(inv.config.train, data.source, data.target, data.evaluation_sets());
  std::vector<double> target_curve, third_curve;
  std::string curves = "epoch,target_acc,third_acc\n";
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    target_curve.push_back(model.history[e].target_acc);
    third_curve.push_back(model.extra_accuracy[e].at(0));
    curves += std::to_string(model.history[e].epoch) + "," + format_double(target_curve.back()) + "," +
              format_double(third_curve.back()) + "\n";
  }
  const CrossEvalResult r = cross_eval(model, data.extra.front(), target_curve, third_curve);
  inv.write("metrics.csv", metrics_csv(model.history));
  inv.write("curves.csv", curves);
  inv.write("resolved_config.cfg", inv.config.to_text());
  Json summary;
  summary["target_acc"] = number(evaluate(model, *data.target_eval));
  summary["third_acc"] = number(r.third_acc);
  summary["pearson_r"] = r.pearson_r ? number(*r.pearson_r) : Json(nullptr);
  summary["pearson_reason"] = r.pearson_r ? Json(nullptr) : Json(r.pearson_reason);
  summary["epochs"] = model.history.size();
  summary["config"] = inv.config_json();
  summary["wall_time_s"] = inv.elapsed();
  inv.write_json("summary.json", summary);
  inv.out << "third_acc " << format_double(r.third_acc) << " pearson_r "
          << (r.pearson_r ? format_double(*r.pearson_r) : "null (" + r.pearson_reason + ")") << "\n";
  return kExitOk;
}

int cmd_oracle(Invocation& inv, std::optional<double> tolerance_override) {
  const OracleConfig& o = inv.config.oracle;
  if (o.instances < 1) throw ValidationError("--instances (oracle.instances) must be >= 1");
  const bool all = o.suite == "all";
  if (!all && o.suite != "elbo" && o.suite != "infomax" && o.suite != "dv") {
    throw ValidationError("--suite (oracle.suite) must be elbo, infomax, dv or all, got '" + o.suite + "'");
  }
  auto tol = [&](double fallback) { return tolerance_override.value_or(fallback); };
  std::vector<oracle::CheckReport> reports;
  if (all || o.suite == "elbo") reports.push_back(oracle::run_elbo_suite(o.instances, o.seed, tol(1e-9)));
  if (all || o.suite == "infomax") reports.push_back(oracle::run_infomax_suite(o.instances, o.seed, tol(1e-12)));
  if (all || o.suite == "dv") {
    reports.push_back(oracle::run_dv_suite(o.instances, o.seed, tol(1e-12)));
    reports.push_back(oracle::run_dv_optimal_suite(o.instances, o.seed, tol(1e-10)));
  }
  Json j = Json::array();
  bool passed = true;
  for (const auto& r : reports) {
    j.push_back(report_to_json(r));
    inv.out << report_to_json(r).dump() << "\n";
    passed = passed && r.passed;
  }
  inv.write_json("oracle.json", j);
  return passed ? kExitOk : kExitCheckFailed;
}

int cmd_gradcheck(Invocation& inv) {
  const GradcheckConfig& g = inv.config.gradcheck;
  if (std::find(kGradcheckLosses.begin(), kGradcheckLosses.end(), g.loss) == kGradcheckLosses.end()) {
    throw ValidationError("--loss (gradcheck.loss) must be one of cls, kld, ent, mi, dv_single, recon; got '" +
                          g.loss + "'");
  }
  const oracle::CheckReport r = run_loss_gradcheck(g.loss, g.seed);
  inv.out << report_to_json(r).dump() << "\n";
  inv.write_json("gradcheck.json", report_to_json(r));
  if (!r.passed) inv.out << "worst offender: " << r.detail << "\n";
  return r.passed ? kExitOk : kExitCheckFailed;
}

void write_manifest(Invocation& inv, const std::string& started_at, int status, const std::string& error,
                    std::ostream& err) {
  Json m;
  m["subcommand"] = inv.subcommand;
  m["config_path"] = inv.config_path ? Json(*inv.config_path) : Json(nullptr);
  m["resolved_config"] = inv.config_json();
  m["out_dir"] = inv.out_dir.string();
  m["started_at"] = started_at;
  m["finished_at"] = utc_timestamp();
  m["artifacts"] = inv.artifacts;
  m["exit_status"] = status;
  m["error"] = error.empty() ? Json(nullptr) : Json(error);
  try {
    atomic_write_text(inv.out_dir / "manifest.json", m.dump(2) + "\n");
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
  }
}

}  // namespace

std::string report_json(const oracle::CheckReport& report) { return report_to_json(report).dump(); }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain adaptation by latent alignment and mutual-information maximization"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::map<std::string, std::string> flag_values;  // key -> raw flag text
  std::map<std::string, CLI::Option*> flag_options;  // key -> option
  std::string config_path;
  std::string out_dir_flag;
  std::optional<double> tolerance_override;

  auto add = [&](const std::string& name, const std::string& description, bool experiment) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->allow_extras();
    sub->add_option("--config", config_path, "Config file of `key = value` lines");
    sub->add_option("--out", out_dir_flag, "Output directory (default $INFOMAXDA_OUT/<subcommand>)");
    if (experiment) {
      auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
        flag_options[name + "|" + key] = sub->add_option(flag, flag_values[name + "|" + key], help);
      };
      bind("--jobs", "run.jobs", "Concurrent runs");
      bind("--seeds", "run.seeds", "Comma-separated training seeds");
      bind("--seed", "train.seed", "Training seed");
      bind("--epochs", "train.epochs", "Epochs per run");
    }
    return sub;
  };
  auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    flag_options[sub->get_name() + "|" + key] =
        sub->add_option(flag, flag_values[sub->get_name() + "|" + key], help);
  };

  CLI::App* mi = add("gaussian-mi", "Critic-only MI estimation on correlated Gaussians", false);
  bind(mi, "--rho", "mi.rho", "Per-dimension correlation, |rho| < 1");
  bind(mi, "--dims", "mi.dims", "Number of (x, z) dimension pairs");
  bind(mi, "--n", "mi.n", "Sample count");
  bind(mi, "--estimator", "train.estimator", "two_critic or mine_single");
  bind(mi, "--epochs", "train.epochs", "Epochs over the training split");
  bind(mi, "--seed", "train.seed", "Seed for samples and critics");
  bind(mi, "--lr", "train.lr", "Critic learning rate");
  add("train", "Train one model", true);
  add("ablate", "Ablation over none / k / m / km", true);
  add("sweep", "alpha x beta sensitivity sweep", true);
  add("compare", "MI estimator comparison", true);
  add("cross-eval", "Train A -> B, score an unseen domain C", true);
  CLI::App* orc = add("oracle", "Exact identity and bound checks", false);
  bind(orc, "--suite", "oracle.suite", "elbo, infomax, dv or all");
  bind(orc, "--instances", "oracle.instances", "Random instances per suite");
  bind(orc, "--seed", "oracle.seed", "Base seed");
  orc->add_option("--tolerance-override", tolerance_override)->group("");
  CLI::App* gc = add("gradcheck", "Finite-difference check of one loss", false);
  bind(gc, "--loss", "gradcheck.loss", "cls, kld, ent, mi, dv_single or recon");
  bind(gc, "--seed", "gradcheck.seed", "Seed for nets and batch");

  std::vector<const char*> argv;
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
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Invocation inv{name, std::nullopt, ResolvedConfig::defaults_for(name), {}, {}, out};
  const std::string started_at = utc_timestamp();
  int status = kExitOk;
  std::string error;
  bool out_dir_ready = false;
  try {
    if (!config_path.empty()) {
      inv.config_path = config_path;
      apply_config_file(inv.config, config_path);
    }
    for (const auto& [key, opt] : flag_options) {
      if (!key.starts_with(name + "|") || opt->count() == 0) continue;
      const std::string config_key = key.substr(name.size() + 1);
      try {
        inv.config.set(config_key, flag_values[key]);
      } catch (const ValidationError& e) {
        throw ValidationError(opt->get_name() + ": " + e.what());
      }
    }
    apply_overrides(inv.config, chosen->remaining());
    if (!out_dir_flag.empty()) inv.config.run.out_dir = out_dir_flag;
    inv.out_dir = inv.config.run.out_dir.empty() ? default_output_root() / name : fs::path(inv.config.run.out_dir);
    out_dir_ready = true;
    if (name != "gaussian-mi" && name != "oracle" && name != "gradcheck") inv.config.train.validate();
    if (name == "gaussian-mi") status = cmd_gaussian_mi(inv);
    else if (name == "train") status = cmd_train(inv);
    else if (name == "ablate") status = cmd_ablate(inv);
    else if (name == "sweep") status = cmd_sweep(inv);
    else if (name == "compare") status = cmd_compare(inv);
    else if (name == "cross-eval") status = cmd_cross_eval(inv);
    else if (name == "oracle") status = cmd_oracle(inv, tolerance_override);
    else status = cmd_gradcheck(inv);
  } catch (const ValidationError& e) {
    status = kExitValidation;
    error = e.what();
  } catch (const NumericalError& e) {
    status = kExitNumerical;
    error = e.what();
  } catch (const IoError& e) {
    status = kExitIo;
    error = e.what();
  } catch (const std::exception& e) {
    status = kExitCheckFailed;
    error = e.what();
  }
  if (!error.empty()) err << "error: " << error << "\n";
  if (!out_dir_ready) {
    inv.out_dir = inv.config.run.out_dir.empty() ? default_output_root() / name : fs::path(inv.config.run.out_dir);
    if (!out_dir_flag.empty()) inv.out_dir = out_dir_flag;
  }
  write_manifest(inv, started_at, status, error, err);
  return status;
}

}  // namespace infomaxda
