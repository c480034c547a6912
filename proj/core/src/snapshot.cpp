#include "clrmix/snapshot.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clrmix/dataset.h"
#include "clrmix/errors.h"
#include "digest.h"

namespace clrmix {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw ParseError(std::string("snapshot is missing '") + name + "'", 1, 0);
  }
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("snapshot field '") + name + "' has the wrong type", 1, 0);
  }
}

json roster_to_json(const Stratum& roster) {
  json competitors = json::array();
  for (const Competitor& c : roster.competitors()) {
    competitors.push_back({{"id", c.id}, {"label", c.label}, {"features", c.features}});
  }
  return {{"key", roster.key()}, {"competitors", std::move(competitors)}};
}

Stratum roster_from_json(const json& doc) {
  std::vector<Competitor> competitors;
  for (const json& c : field<json>(doc, "competitors")) {
    competitors.push_back(Competitor{field<std::string>(c, "id"), field<std::string>(c, "label"),
                                     field<std::vector<double>>(c, "features")});
  }
  return Stratum(field<std::string>(doc, "key"), std::move(competitors));
}

}  // namespace

ModelSnapshot make_snapshot(const Dataset& dataset, const MapResult& map, double prior_sd) {
  if (!dataset.prospective()) {
    throw UsageError("dataset has no prospective stratum to publish", "data");
  }
  return ModelSnapshot{
      dataset_fingerprint(dataset),
      std::vector<std::string>(dataset.predictor_names().begin(),
                               dataset.predictor_names().end()),
      prior_sd,
      map,
      *dataset.prospective(),
      std::nullopt,
  };
}

json snapshot_to_json(const ModelSnapshot& s) {
  json doc;
  doc["format"] = kSnapshotFormat;
  doc["dataset_fingerprint"] = s.dataset_fingerprint;
  doc["predictor_names"] = s.predictor_names;
  doc["prior_sd"] = s.prior_sd;
  doc["map"] = {
      {"beta_hat", std::vector<double>(s.map.beta_hat.data(),
                                       s.map.beta_hat.data() + s.map.beta_hat.size())},
      {"log_posterior", s.map.log_posterior},
      {"gradient_norm", s.map.gradient_norm},
      {"converged", s.map.converged},
      {"iterations", s.map.iterations},
  };
  doc["roster"] = roster_to_json(s.roster);
  if (s.posterior) {
    const PosteriorReference& p = *s.posterior;
    doc["posterior"] = {
        {"draws_path", p.draws_path.generic_string()},
        {"draw_count", p.draw_count},
        {"acceptance_rate", p.acceptance_rate},
        {"seed", p.seed},
        {"burn_in", p.burn_in},
        {"thin", p.thin},
        {"iterations", p.iterations},
    };
  } else {
    doc["posterior"] = nullptr;
  }
  return doc;
}

ModelSnapshot snapshot_from_json(const json& doc) {
  if (field<std::string>(doc, "format") != kSnapshotFormat) {
    throw ParseError("unsupported snapshot format (expected " + std::string(kSnapshotFormat) +
                         ")",
                     1, 0);
  }
  const json map_doc = field<json>(doc, "map");
  const auto beta = field<std::vector<double>>(map_doc, "beta_hat");
  MapResult map;
  map.beta_hat = Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                                   static_cast<Eigen::Index>(beta.size()));
  map.log_posterior = field<double>(map_doc, "log_posterior");
  map.gradient_norm = field<double>(map_doc, "gradient_norm");
  map.converged = field<bool>(map_doc, "converged");
  map.iterations = field<int>(map_doc, "iterations");

  ModelSnapshot out{
      field<std::string>(doc, "dataset_fingerprint"),
      field<std::vector<std::string>>(doc, "predictor_names"),
      field<double>(doc, "prior_sd"),
      std::move(map),
      roster_from_json(field<json>(doc, "roster")),
      std::nullopt,
  };
  validate_prior_sd(out.prior_sd);
  if (out.predictor_names.size() != beta.size() ||
      out.roster.predictor_count() != beta.size()) {
    throw ParseError("snapshot beta_hat, predictor names and roster disagree on p", 1, 0);
  }
  if (doc.contains("posterior") && !doc["posterior"].is_null()) {
    const json& p = doc["posterior"];
    out.posterior = PosteriorReference{
        field<std::string>(p, "draws_path"), field<std::size_t>(p, "draw_count"),
        field<double>(p, "acceptance_rate"), field<std::uint64_t>(p, "seed"),
        field<int>(p, "burn_in"),           field<int>(p, "thin"),
        field<int>(p, "iterations"),
    };
  }
  return out;
}

void write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write snapshot '" + path.string() + "'");
  out << snapshot_to_json(snapshot).dump(2) << '\n';
  if (!out) throw StorageError("failed writing snapshot '" + path.string() + "'");
}

ModelSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open snapshot '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("snapshot is not valid JSON: ") + e.what(), 1, 0);
  }
  return snapshot_from_json(doc);
}

void verify_snapshot(const ModelSnapshot& snapshot, const Dataset& dataset) {
  const std::string actual = dataset_fingerprint(dataset);
  if (actual != snapshot.dataset_fingerprint) {
    throw ValidationError("snapshot was fitted on a different dataset (fingerprint " +
                              snapshot.dataset_fingerprint.substr(0, 12) + "..., data " +
                              actual.substr(0, 12) + "...)",
                          "snapshot");
  }
}

std::vector<double> historical_probabilities(const ModelSnapshot& snapshot) {
  const Eigen::VectorXd p = stratum_win_probabilities(snapshot.roster, snapshot.map.beta_hat);
  return std::vector<double>(p.data(), p.data() + p.size());
}

std::string roster_fingerprint(std::span<const std::string> ids) {
  std::string joined;
  for (const auto& id : ids) {
    joined += id;
    joined += '\n';
  }
  return sha256_hex(joined);
}

LoadedModel load_model(ModelSnapshot snapshot, const std::filesystem::path& base_dir) {
  LoadedModel out{std::move(snapshot), {}, std::nullopt, {}};
  out.historical = historical_probabilities(out.snapshot);
  out.roster_fingerprint = roster_fingerprint(out.snapshot.roster.ids());
  if (out.snapshot.posterior) {
    const PosteriorReference& ref = *out.snapshot.posterior;
    std::filesystem::path draws = ref.draws_path;
    if (draws.is_relative()) draws = base_dir / draws;
    std::ifstream in(draws, std::ios::binary);
    if (!in) throw StorageError("cannot open draws file '" + draws.string() + "'");
    PosteriorSample sample;
    sample.draws = read_draws_csv(in, out.snapshot.predictor_names);
    if (sample.draws.rows() == 0) throw ParseError("draws file has no rows", 2, 0);
    if (static_cast<std::size_t>(sample.draws.rows()) != ref.draw_count) {
      throw ValidationError("draws file has " + std::to_string(sample.draws.rows()) +
                                " rows but the snapshot records " + std::to_string(ref.draw_count),
                            "snapshot");
    }
    sample.acceptance_rate = ref.acceptance_rate;
    sample.seed = ref.seed;
    sample.burn_in = ref.burn_in;
    sample.thin = ref.thin;
    sample.iterations = ref.iterations;
    out.posterior = std::move(sample);
  }
  return out;
}

LoadedModel load_model(const std::filesystem::path& snapshot_path) {
  return load_model(read_snapshot(snapshot_path), snapshot_path.parent_path());
}

}  // namespace clrmix
