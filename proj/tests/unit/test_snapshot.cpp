#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "clrmix/dataset.h"
#include "clrmix/errors.h"
#include "clrmix/inference.h"
#include "clrmix/snapshot.h"
#include "helpers.h"

using namespace clrmix;
using namespace clrmix::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("clrmix-snapshot-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const Dataset& oscars() {
  static const Dataset d = read_dataset_file(data_path("oscars_best_picture.csv"));
  return d;
}

ModelSnapshot oscars_snapshot() { return make_snapshot(oscars(), fit_map(oscars()), kDefaultPriorSd); }

}  // namespace

TEST_SUITE("snapshot") {

TEST_CASE("roster fingerprint is SHA-256 of newline-terminated ids") {
  const std::vector<std::string> ab = {"a", "b"};
  CHECK(roster_fingerprint(ab) == "911169ddaaf146aff539f58c26c489af3b892dff0fe283c1c264c65ae5aa59a2");
  CHECK(roster_fingerprint(kRosterIds) ==
        "86970f84776a42c360d6debdd867071c9291d4cac394d7418bf208def5657f25");
}

TEST_CASE("json round trip") {
  const ModelSnapshot s = oscars_snapshot();
  CHECK(s.dataset_fingerprint == dataset_fingerprint(oscars()));
  CHECK(s.roster.ids() == kRosterIds);
  CHECK_FALSE(s.roster.winner());

  const ModelSnapshot t = snapshot_from_json(snapshot_to_json(s));
  CHECK(t.dataset_fingerprint == s.dataset_fingerprint);
  CHECK(t.predictor_names == s.predictor_names);
  CHECK(t.prior_sd == s.prior_sd);
  CHECK(t.map.beta_hat == s.map.beta_hat);
  CHECK(t.map.converged == s.map.converged);
  CHECK(t.map.iterations == s.map.iterations);
  CHECK(t.roster.ids() == s.roster.ids());
  CHECK(historical_probabilities(t) == historical_probabilities(s));
  CHECK_FALSE(t.posterior);

  const auto h = historical_probabilities(s);
  double total = 0;
  for (double v : h) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("malformed snapshots") {
  nlohmann::json doc = snapshot_to_json(oscars_snapshot());
  SUBCASE("format tag") {
    doc["format"] = "clrmix-snapshot/0";
    CHECK_THROWS_AS(snapshot_from_json(doc), ParseError);
  }
  SUBCASE("missing field") {
    doc.erase("map");
    CHECK_THROWS_AS(snapshot_from_json(doc), ParseError);
  }
  SUBCASE("wrong type") {
    doc["prior_sd"] = "ten";
    CHECK_THROWS_AS(snapshot_from_json(doc), ParseError);
  }
  SUBCASE("dimension disagreement") {
    doc["map"]["beta_hat"] = {1.0, 2.0};
    CHECK_THROWS_AS(snapshot_from_json(doc), ParseError);
  }
}

TEST_CASE("no prospective stratum, nothing to publish") {
  const Dataset toy = read_dataset_file(fixture_path("toy.csv"));
  CHECK_THROWS_AS(make_snapshot(toy, fit_map(toy), 10.0), UsageError);
}

TEST_CASE("fingerprint mismatch is refused") {
  const ModelSnapshot s = oscars_snapshot();
  CHECK_NOTHROW(verify_snapshot(s, oscars()));
  std::vector<Stratum> fewer(oscars().historical().begin() + 1, oscars().historical().end());
  const std::vector<std::string> names(oscars().predictor_names().begin(),
                                       oscars().predictor_names().end());
  const Dataset other(names, std::move(fewer), oscars().prospective());
  CHECK_THROWS_AS(verify_snapshot(s, other), ValidationError);
}

TEST_CASE("files on disk, draws resolved next to the snapshot") {
  TempDir dir;
  ModelSnapshot s = oscars_snapshot();
  SamplerConfig config;
  config.iterations = 2'000;
  config.burn_in = 500;
  config.thin = 5;
  const PosteriorSample sample = sample_posterior(oscars(), s.prior_sd, config, 11);
  {
    std::ofstream out(dir.path / "draws.csv");
    write_draws_csv(out, sample.draws, s.predictor_names);
  }
  s.posterior = PosteriorReference{"draws.csv", static_cast<std::size_t>(sample.draws.rows()),
                                   sample.acceptance_rate, 11, 500, 5, 2'000};
  write_snapshot(dir.path / "model.json", s);

  const LoadedModel m = load_model(dir.path / "model.json");
  REQUIRE(m.posterior);
  CHECK(m.posterior->draws.rows() == sample.draws.rows());
  CHECK((m.posterior->draws - sample.draws).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.posterior->seed == 11);
  CHECK(m.roster_fingerprint == roster_fingerprint(kRosterIds));
  CHECK(m.historical == historical_probabilities(s));

  s.posterior->draw_count += 1;
  write_snapshot(dir.path / "stale.json", s);
  CHECK_THROWS_AS(load_model(dir.path / "stale.json"), ValidationError);

  s.posterior->draws_path = "elsewhere.csv";
  write_snapshot(dir.path / "dangling.json", s);
  CHECK_THROWS_AS(load_model(dir.path / "dangling.json"), StorageError);

  CHECK_THROWS_AS(read_snapshot(dir.path / "absent.json"), StorageError);
  std::ofstream(dir.path / "garbage.json") << "{not json";
  CHECK_THROWS_AS(read_snapshot(dir.path / "garbage.json"), ParseError);
}

}  // TEST_SUITE
