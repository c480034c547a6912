#include "commands.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clrmix/clr.h"
#include "clrmix/dataset.h"
#include "clrmix/errors.h"
#include "clrmix/inference.h"
#include "clrmix/lookup.h"
#include "clrmix/service.h"
#include "clrmix/simulate.h"
#include "clrmix/snapshot.h"
#include "clrmix/subjective.h"

namespace clrmix::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

std::string exact(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

double parse_number(std::string_view text, const std::string& flag) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError("'" + std::string(text) + "' is not a number", flag);
  }
  return v;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_number(item, flag));
  if (out.empty()) throw ValidationError("expected a comma-separated list of numbers", flag);
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw StorageError("failed writing '" + path.string() + "'");
}

struct PriorFlags {
  std::string inline_list;
  std::string file;
  std::string favor;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--priors", inline_list, "Comma-separated priors in roster order");
    cmd->add_option("--priors-file", file, "JSON array, or object keyed by competitor id");
    cmd->add_option("--favor", favor, "id=prob: favorite gets prob, the rest split evenly");
  }

  std::vector<double> resolve(const Stratum& roster) const {
    const int given = !inline_list.empty() + !file.empty() + !favor.empty();
    if (given > 1) throw UsageError("use only one of --priors, --priors-file, --favor", "priors");
    std::vector<double> raw;
    if (!inline_list.empty()) {
      raw = parse_number_list(inline_list, "priors");
    } else if (!file.empty()) {
      json doc;
      try {
        doc = json::parse(read_text(file));
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string("priors file is not valid JSON: ") + e.what(),
                              "priors-file");
      }
      if (doc.is_array()) {
        for (const json& v : doc) {
          if (!v.is_number()) throw ValidationError("priors must be numbers", "priors-file");
          raw.push_back(v.get<double>());
        }
      } else if (doc.is_object()) {
        raw.assign(roster.size(), 0.0);
        std::vector<bool> seen(roster.size(), false);
        for (const auto& [id, v] : doc.items()) {
          const auto idx = roster.index_of(id);
          if (!idx) throw ValidationError("unknown competitor '" + id + "'", "priors-file");
          if (!v.is_number()) throw ValidationError("priors must be numbers", "priors-file");
          raw[*idx] = v.get<double>();
          seen[*idx] = true;
        }
        for (std::size_t i = 0; i < seen.size(); ++i) {
          if (!seen[i]) {
            throw ValidationError("no prior given for '" + roster.competitor(i).id + "'",
                                  "priors-file");
          }
        }
      } else {
        throw ValidationError("priors file must hold an array or an object", "priors-file");
      }
    } else if (!favor.empty()) {
      const auto eq = favor.find('=');
      if (eq == std::string::npos) throw ValidationError("expected id=prob", "favor");
      const std::string id = favor.substr(0, eq);
      const auto idx = roster.index_of(id);
      if (!idx) throw ValidationError("unknown competitor '" + id + "'", "favor");
      return favorite_priors(roster.size(), *idx, parse_number(favor.substr(eq + 1), "favor"));
    } else {
      return uniform_priors(roster.size());
    }
    if (raw.size() != roster.size()) {
      throw ValidationError("got " + std::to_string(raw.size()) + " priors for a roster of " +
                                std::to_string(roster.size()),
                            "priors");
    }
    return normalize_elicited_priors(raw);
  }
};

void check_digits(int digits) {
  if (digits < 0 || digits > 17) throw ValidationError("--digits must be in 0..17", "digits");
}

// ---- validate -------------------------------------------------------------

void cmd_validate(const std::string& path, std::ostream& out) {
  const Dataset dataset = read_dataset_file(path);
  const DatasetSummary s = dataset_summary(dataset);
  out << "ok: " << path << '\n';
  out << "historical strata (K): " << s.historical_strata << '\n';
  out << "predictors (p): " << s.predictors << '\n';
  out << "competitor rows: " << s.historical_competitors << '\n';
  out << "stratum size range: " << s.min_stratum_size << "-" << s.max_stratum_size << '\n';
  out << "predictor prevalence (winners / others):\n";
  for (const auto& p : s.prevalence) {
    out << "  " << std::left << std::setw(24) << p.name << std::right << fixed(p.mean_among_winners, 3)
        << " / " << fixed(p.mean_among_others, 3) << '\n';
  }
  if (s.has_prospective) {
    out << "prospective stratum: " << s.prospective_key << " (" << s.prospective_size
        << " competitors)\n";
  } else {
    out << "prospective stratum: none\n";
  }
  out << "fingerprint: " << dataset_fingerprint(dataset) << '\n';
}

// ---- fit ------------------------------------------------------------------

struct FitFlags {
  std::string data;
  double sigma = kDefaultPriorSd;
  double tol = 1e-8;
  int max_iter = 500;
  std::string out;
  int digits = 3;
};

void cmd_fit(const FitFlags& f, std::ostream& out) {
  check_digits(f.digits);
  const Dataset dataset = read_dataset_file(f.data);
  const MapResult map = fit_map(dataset, MapOptions{f.sigma, f.tol, f.max_iter});

  out << "converged: " << (map.converged ? "yes" : "no") << " (iterations " << map.iterations
      << ", gradient norm " << exact(map.gradient_norm) << ")\n";
  out << "log posterior: " << fixed(map.log_posterior, 6) << '\n';
  out << "beta_hat (prior sd " << exact(f.sigma) << "):\n";
  for (std::size_t j = 0; j < dataset.predictor_count(); ++j) {
    out << "  " << std::left << std::setw(24) << dataset.predictor_names()[j] << std::right
        << fixed(map.beta_hat(static_cast<Eigen::Index>(j)), 4) << '\n';
  }
  if (dataset.prospective()) {
    const Stratum& roster = *dataset.prospective();
    const Eigen::VectorXd probs = stratum_win_probabilities(roster, map.beta_hat);
    out << "prospective " << roster.key() << " (omega = 1):\n";
    for (std::size_t i = 0; i < roster.size(); ++i) {
      out << "  " << std::left << std::setw(24) << roster.competitor(i).id << std::right
          << fixed(probs(static_cast<Eigen::Index>(i)), f.digits) << '\n';
    }
  }
  if (!map.converged) {
    throw NumericalFailure("MAP fit did not converge within " + std::to_string(f.max_iter) +
                           " iterations; snapshot not written");
  }
  if (!f.out.empty()) {
    write_snapshot(f.out, make_snapshot(dataset, map, f.sigma));
    out << "snapshot: " << f.out << '\n';
  }
}

// ---- sample ---------------------------------------------------------------

struct SampleFlags {
  std::string data;
  double sigma = kDefaultPriorSd;
  SamplerConfig config;
  bool no_tune = false;
  std::uint64_t seed = 2019;
  std::string draws;
  std::string snapshot;
  int digits = 3;
};

void cmd_sample(SampleFlags f, std::ostream& out) {
  check_digits(f.digits);
  f.config.tune_step = !f.no_tune;
  const Dataset dataset = read_dataset_file(f.data);
  std::optional<ModelSnapshot> snapshot;
  if (!f.snapshot.empty()) {
    snapshot = read_snapshot(f.snapshot);
    verify_snapshot(*snapshot, dataset);
    if (snapshot->prior_sd != f.sigma) {
      throw ValidationError("--sigma differs from the snapshot's prior sd (" +
                                exact(snapshot->prior_sd) + ")",
                            "sigma");
    }
    if (f.draws.empty()) throw UsageError("--snapshot needs --draws to reference", "draws");
  }

  const PosteriorSample sample = sample_posterior(dataset, f.sigma, f.config, f.seed);
  out << "draws kept: " << sample.draws.rows() << " (iterations " << sample.iterations
      << ", burn-in " << sample.burn_in << ", thin " << sample.thin << ", seed " << sample.seed
      << ")\n";
  out << "acceptance rate: " << fixed(sample.acceptance_rate, 3) << " (final step size "
      << fixed(sample.step_size, 4) << ")\n";
  out << "posterior mean (sd):\n";
  const Eigen::VectorXd mean = sample.draws.colwise().mean();
  for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
    const double sd = std::sqrt((sample.draws.col(j).array() - mean(j)).square().sum() /
                                std::max<Eigen::Index>(1, sample.draws.rows() - 1));
    out << "  " << std::left << std::setw(24) << dataset.predictor_names()[static_cast<std::size_t>(j)]
        << std::right << fixed(mean(j), 4) << " (" << fixed(sd, 4) << ")\n";
  }
  if (dataset.prospective()) {
    const Stratum& roster = *dataset.prospective();
    const SubjectiveSpec spec(uniform_priors(roster.size()), 1.0);
    const auto intervals = predictive_intervals(sample, roster, spec);
    out << "prospective " << roster.key() << " (omega = 1, 95% equal-tail):\n";
    for (std::size_t i = 0; i < roster.size(); ++i) {
      out << "  " << std::left << std::setw(24) << roster.competitor(i).id << std::right
          << fixed(intervals[i].point, f.digits) << " (" << fixed(intervals[i].lower, f.digits)
          << ", " << fixed(intervals[i].upper, f.digits) << ")\n";
    }
  }
  if (!f.draws.empty()) {
    std::ofstream file(f.draws, std::ios::binary | std::ios::trunc);
    if (!file) throw StorageError("cannot write '" + f.draws + "'");
    write_draws_csv(file, sample.draws, dataset.predictor_names());
    file.close();
    if (!file) throw StorageError("failed writing '" + f.draws + "'");
    out << "draws: " << f.draws << '\n';
  }
  if (snapshot) {
    const fs::path base = fs::absolute(f.snapshot).parent_path();
    snapshot->posterior = PosteriorReference{
        fs::proximate(fs::absolute(f.draws), base),
        static_cast<std::size_t>(sample.draws.rows()),
        sample.acceptance_rate,
        sample.seed,
        sample.burn_in,
        sample.thin,
        sample.iterations,
    };
    write_snapshot(f.snapshot, *snapshot);
    out << "snapshot updated: " << f.snapshot << '\n';
  }
}

// ---- predict --------------------------------------------------------------

struct PredictFlags {
  std::string snapshot;
  double omega = 1.0;
  PriorFlags priors;
  bool intervals = false;
  double level = 0.95;
  bool json_output = false;
  int digits = 3;
};

void cmd_predict(const PredictFlags& f, std::ostream& out) {
  check_digits(f.digits);
  const LoadedModel model = load_model(fs::path(f.snapshot));
  const Stratum& roster = model.snapshot.roster;
  const SubjectiveSpec spec(f.priors.resolve(roster), f.omega);
  if (f.intervals && !model.posterior) {
    throw UsageError("--intervals needs a snapshot with posterior draws (run 'sample --snapshot')",
                     "intervals");
  }
  const json result = prediction_json(model, spec, f.intervals, f.level);
  if (f.json_output) {
    out << result.dump(2) << '\n';
    return;
  }
  out << "omega = " << exact(spec.omega()) << ", source = "
      << result["source"].get<std::string>() << '\n';
  out << std::left << std::setw(24) << "competitor" << std::right << std::setw(10) << "history"
      << std::setw(10) << "prior" << std::setw(10) << "blend";
  if (f.intervals) out << "  " << fixed(100 * f.level, 0) << "% interval";
  out << '\n';
  const auto probs = result["probabilities"].get<std::vector<double>>();
  for (std::size_t i = 0; i < roster.size(); ++i) {
    out << std::left << std::setw(24) << roster.competitor(i).label << std::right << std::setw(10)
        << fixed(model.historical[i], f.digits) << std::setw(10)
        << fixed(spec.priors()[i], f.digits) << std::setw(10) << fixed(probs[i], f.digits);
    if (f.intervals) {
      const json& row = result["intervals"][i];
      out << "  (" << fixed(row["lower"].get<double>(), f.digits) << ", "
          << fixed(row["upper"].get<double>(), f.digits) << ")";
    }
    out << '\n';
  }
}

// ---- sweep ----------------------------------------------------------------

struct SweepFlags {
  std::string snapshot;
  PriorFlags priors;
  std::size_t points = 101;
  std::string grid;
  std::string out;
};

void cmd_sweep(const SweepFlags& f, std::ostream& out) {
  const LoadedModel model = load_model(fs::path(f.snapshot));
  const Stratum& roster = model.snapshot.roster;
  const std::vector<double> priors = f.priors.resolve(roster);
  const std::vector<double> grid = f.grid.empty() ? linear_grid(f.points)
                                                  : parse_number_list(f.grid, "grid");
  const SweepCurves curves = omega_sweep(model.historical, priors, grid);

  std::ostringstream csv;
  csv << "omega";
  for (const auto& id : roster.ids()) csv << ',' << id;
  csv << '\n';
  for (std::size_t g = 0; g < curves.grid.size(); ++g) {
    csv << exact(curves.grid[g]);
    for (const auto& curve : curves.curves) csv << ',' << exact(curve[g]);
    csv << '\n';
  }
  if (f.out.empty()) {
    out << csv.str();
  } else {
    write_text(f.out, csv.str());
    out << "sweep: " << curves.grid.size() << " grid points x " << roster.size()
        << " competitors -> " << f.out << '\n';
  }
}

// ---- postmortem -----------------------------------------------------------

struct PostmortemFlags {
  std::string snapshot;
  std::string winner;
  double omega = 0.5;
  std::string spread = "uniform";
  bool json_output = false;
  int digits = 3;
};

void cmd_postmortem(const PostmortemFlags& f, std::ostream& out) {
  check_digits(f.digits);
  const LoadedModel model = load_model(fs::path(f.snapshot));
  const Stratum& roster = model.snapshot.roster;
  const auto winner = roster.index_of(f.winner);
  if (!winner) throw ValidationError("unknown competitor '" + f.winner + "'", "winner");
  const ThresholdReport r =
      post_mortem_threshold(model.historical, *winner, f.omega, parse_spread_rule(f.spread));
  if (f.json_output) {
    json doc = {{"winner", f.winner},
                {"omega", f.omega},
                {"spread", f.spread},
                {"status", to_string(r.status)},
                {"threshold", r.threshold},
                {"binding_competitor", r.binding_competitor
                                           ? json(roster.competitor(*r.binding_competitor).id)
                                           : json(nullptr)}};
    out << doc.dump(2) << '\n';
    return;
  }
  out << "winner: " << roster.competitor(*winner).label << " (historical "
      << fixed(model.historical[*winner], f.digits) << ")\n";
  out << "omega: " << exact(f.omega) << ", spread: " << f.spread << '\n';
  out << "status: " << to_string(r.status) << '\n';
  if (r.status == ThresholdReport::Status::kAttainable) {
    out << "minimal prior for the winner: " << fixed(r.threshold, f.digits) << " (exact "
        << exact(r.threshold) << ")\n";
  }
  if (r.binding_competitor) {
    out << "binding rival: " << roster.competitor(*r.binding_competitor).label << '\n';
  }
}

// ---- odds-ratio -----------------------------------------------------------

struct OddsRatioFlags {
  std::string data;
  std::string predictor;
  int reps = 10'000;
  std::uint64_t seed = 1;
  double level = 0.95;
};

void cmd_odds_ratio(const OddsRatioFlags& f, std::ostream& out) {
  const Dataset dataset = read_dataset_file(f.data);
  const OddsRatioReport r = odds_ratio_bootstrap(dataset, f.predictor, f.reps, f.seed, f.level);
  out << "predictor: " << r.predictor << '\n';
  out << "                 winner   other\n";
  out << "  " << std::left << std::setw(14) << "exposed" << std::right << std::setw(7)
      << r.table.exposed_winners << std::setw(8) << r.table.exposed_losers << '\n';
  out << "  " << std::left << std::setw(14) << "unexposed" << std::right << std::setw(7)
      << r.table.unexposed_winners << std::setw(8) << r.table.unexposed_losers << '\n';
  out << "odds ratio: " << fixed(r.estimate, 2) << '\n';
  out << fixed(100 * r.level, 0) << "% bootstrap CI: (" << fixed(r.ci_lower, 2) << ", "
      << fixed(r.ci_upper, 2) << ")  [" << r.bootstrap_reps << " stratum resamples, seed "
      << r.seed << "]\n";
}

// ---- simulate -------------------------------------------------------------

struct SimulateFlags {
  SimulationConfig config;
  std::string beta = "1.5,0.8,2.0";
  std::string out;
};

void cmd_simulate(SimulateFlags f, std::ostream& out) {
  f.config.beta = parse_number_list(f.beta, "beta");
  const std::string text = serialize_dataset(simulate_dataset(f.config));
  if (f.out.empty()) {
    out << text;
  } else {
    write_text(f.out, text);
    out << "wrote " << f.config.strata << " strata to " << f.out << '\n';
  }
}

// ---- spot-check -----------------------------------------------------------

struct SpotCheckFlags {
  std::string data;
  std::string stratum;
  std::string competitor;
  std::string fixture;
};

int cmd_spot_check(const SpotCheckFlags& f, std::ostream& out) {
  const Dataset dataset = read_dataset_file(f.data);
  const Stratum* stratum = nullptr;
  for (const Stratum& s : dataset.historical()) {
    if (s.key() == f.stratum) stratum = &s;
  }
  if (!stratum && dataset.prospective() && dataset.prospective()->key() == f.stratum) {
    stratum = &*dataset.prospective();
  }
  if (!stratum) throw ValidationError("no stratum '" + f.stratum + "'", "stratum");

  std::unique_ptr<RecordLookup> client;
  if (!f.fixture.empty()) {
    client = std::make_unique<FixtureLookup>(FixtureLookup::from_file(f.fixture));
  } else if (auto http = HttpLookup::from_environment()) {
    client = std::make_unique<HttpLookup>(std::move(*http));
  } else {
    throw UsageError("no lookup source: pass --fixture or set CLRMIX_LOOKUP_URL", "fixture");
  }

  std::size_t disagreeing = 0;
  bool matched = false;
  for (const Competitor& c : stratum->competitors()) {
    if (!f.competitor.empty() && c.id != f.competitor) continue;
    matched = true;
    const AgreementReport r =
        spot_check_record(stratum->key(), c, dataset.predictor_names(), *client);
    out << stratum->key() << '/' << c.id << ": " << to_string(r.status);
    if (!r.detail.empty()) out << " (" << r.detail << ")";
    out << '\n';
    for (const FieldCheck& check : r.checks) {
      if (check.observed && !check.agrees) {
        out << "  " << check.field << ": dataset " << check.expected << ", source "
            << *check.observed << '\n';
      }
    }
    if (r.status == AgreementReport::Status::kDisagree) ++disagreeing;
  }
  if (!matched) throw ValidationError("no competitor '" + f.competitor + "'", "competitor");
  return disagreeing == 0 ? kExitOk : kExitValidation;
}

// ---- serve ----------------------------------------------------------------

struct ServeFlags {
  std::string snapshot;
  std::string log = "elicitations.ndjson";
  ServerOptions server;
};

void cmd_serve(const ServeFlags& f, std::ostream& out) {
  std::shared_ptr<const LoadedModel> model;
  if (!f.snapshot.empty()) model = std::make_shared<LoadedModel>(load_model(fs::path(f.snapshot)));
  auto store = std::make_shared<FileElicitationStore>(f.log);
  PredictionService service(model, store);
  out << "listening on http://" << f.server.host << ':' << f.server.port
      << (model ? "" : " (no snapshot: model endpoints answer 503)") << std::endl;
  run_server(service, f.server);
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"clrmix: conditional logistic competition forecasts blended with elicited priors"};
  app.name("clrmix");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a dataset CSV and print a summary");
  validate->add_option("csv", validate_path, "Dataset CSV")->required();

  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "MAP fit; optionally write a snapshot");
  fit->add_option("--data", fit_flags.data, "Dataset CSV")->required();
  fit->add_option("--sigma", fit_flags.sigma, "Prior standard deviation")->capture_default_str();
  fit->add_option("--tol", fit_flags.tol, "Gradient-norm tolerance")->capture_default_str();
  fit->add_option("--max-iter", fit_flags.max_iter, "Iteration cap")->capture_default_str();
  fit->add_option("--out", fit_flags.out, "Snapshot JSON to write");
  fit->add_option("--digits", fit_flags.digits, "Display decimals")->capture_default_str();

  SampleFlags sample_flags;
  auto* sample = app.add_subcommand("sample", "Random-walk Metropolis over beta");
  sample->add_option("--data", sample_flags.data, "Dataset CSV")->required();
  sample->add_option("--sigma", sample_flags.sigma, "Prior standard deviation")
      ->capture_default_str();
  sample->add_option("--iterations", sample_flags.config.iterations)->capture_default_str();
  sample->add_option("--burn-in", sample_flags.config.burn_in)->capture_default_str();
  sample->add_option("--thin", sample_flags.config.thin)->capture_default_str();
  sample->add_option("--step-size", sample_flags.config.step_size, "Initial proposal sd")
      ->capture_default_str();
  sample->add_flag("--no-tune", sample_flags.no_tune, "Keep the step size fixed during burn-in");
  sample->add_option("--seed", sample_flags.seed)->capture_default_str();
  sample->add_option("--draws", sample_flags.draws, "Draws CSV to write");
  sample->add_option("--snapshot", sample_flags.snapshot,
                     "Snapshot to update with a reference to the draws");
  sample->add_option("--digits", sample_flags.digits, "Display decimals")->capture_default_str();

  PredictFlags predict_flags;
  auto* predict = app.add_subcommand("predict", "Blend historical and elicited probabilities");
  predict->add_option("--snapshot", predict_flags.snapshot, "Snapshot JSON")->required();
  predict->add_option("--omega", predict_flags.omega, "Mixing weight in [0, 1]")
      ->capture_default_str();
  predict_flags.priors.add_to(predict);
  predict->add_flag("--intervals", predict_flags.intervals, "Per-draw credible intervals");
  predict->add_option("--level", predict_flags.level, "Interval level")->capture_default_str();
  predict->add_flag("--json", predict_flags.json_output, "Emit the /predict JSON body");
  predict->add_option("--digits", predict_flags.digits, "Display decimals")->capture_default_str();

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Mixture curves over an omega grid, as CSV");
  sweep->add_option("--snapshot", sweep_flags.snapshot, "Snapshot JSON")->required();
  sweep_flags.priors.add_to(sweep);
  sweep->add_option("--points", sweep_flags.points, "Evenly spaced grid size")
      ->capture_default_str();
  sweep->add_option("--grid", sweep_flags.grid, "Explicit comma-separated grid");
  sweep->add_option("--out", sweep_flags.out, "CSV path (stdout if omitted)");

  PostmortemFlags pm_flags;
  auto* postmortem = app.add_subcommand("postmortem", "Minimal prior the winner would have needed");
  postmortem->add_option("--snapshot", pm_flags.snapshot, "Snapshot JSON")->required();
  postmortem->add_option("--winner", pm_flags.winner, "Competitor id")->required();
  postmortem->add_option("--omega", pm_flags.omega)->capture_default_str();
  postmortem->add_option("--spread", pm_flags.spread, "uniform | proportional")
      ->capture_default_str();
  postmortem->add_flag("--json", pm_flags.json_output);
  postmortem->add_option("--digits", pm_flags.digits)->capture_default_str();

  OddsRatioFlags or_flags;
  auto* odds = app.add_subcommand("odds-ratio", "Predictor x winner odds ratio, bootstrap CI");
  odds->add_option("--data", or_flags.data, "Dataset CSV")->required();
  odds->add_option("--predictor", or_flags.predictor, "Binary predictor column")->required();
  odds->add_option("--reps", or_flags.reps)->capture_default_str();
  odds->add_option("--seed", or_flags.seed)->capture_default_str();
  odds->add_option("--level", or_flags.level)->capture_default_str();

  SimulateFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--strata", sim_flags.config.strata)->capture_default_str();
  simulate->add_option("--size", sim_flags.config.stratum_size)->capture_default_str();
  simulate->add_option("--beta", sim_flags.beta, "True coefficients")->capture_default_str();
  simulate->add_option("--seed", sim_flags.config.seed)->capture_default_str();
  simulate->add_option("--out", sim_flags.out, "CSV path (stdout if omitted)");

  SpotCheckFlags spot_flags;
  auto* spot = app.add_subcommand("spot-check", "Compare records with an external source");
  spot->add_option("--data", spot_flags.data, "Dataset CSV")->required();
  spot->add_option("--stratum", spot_flags.stratum, "Stratum key")->required();
  spot->add_option("--competitor", spot_flags.competitor, "Competitor id (default: all)");
  spot->add_option("--fixture", spot_flags.fixture,
                   "JSON fixture (default: CLRMIX_LOOKUP_URL / CLRMIX_LOOKUP_KEY)");

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--snapshot", serve_flags.snapshot, "Snapshot JSON");
  serve->add_option("--log", serve_flags.log, "Elicitation log (NDJSON)")->capture_default_str();
  serve->add_option("--host", serve_flags.server.host)->capture_default_str();
  serve->add_option("--port", serve_flags.server.port)->capture_default_str();
  serve->add_option("--cors-origin", serve_flags.server.cors_origin)->capture_default_str();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*validate) cmd_validate(validate_path, out);
    else if (*fit) cmd_fit(fit_flags, out);
    else if (*sample) cmd_sample(sample_flags, out);
    else if (*predict) cmd_predict(predict_flags, out);
    else if (*sweep) cmd_sweep(sweep_flags, out);
    else if (*postmortem) cmd_postmortem(pm_flags, out);
    else if (*odds) cmd_odds_ratio(or_flags, out);
    else if (*simulate) cmd_simulate(sim_flags, out);
    else if (*spot) return cmd_spot_check(spot_flags, out);
    else if (*serve) cmd_serve(serve_flags, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what();
    if (!e.field().empty() && dynamic_cast<const ParseError*>(&e) == nullptr) {
      err << " [" << e.field() << "]";
    }
    err << '\n';
    return kExitValidation;
  } catch (const StorageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace clrmix::cli
