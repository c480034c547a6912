#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include "clrmix/dataset.h"
#include "clrmix/errors.h"
#include "clrmix/inference.h"
#include "clrmix/service.h"
#include "helpers.h"

using namespace clrmix;
using namespace clrmix::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempLog {
  fs::path path;
  TempLog() {
    path = fs::temp_directory_path() /
           ("clrmix-elicitation-" + std::to_string(std::random_device{}()) + ".ndjson");
  }
  ~TempLog() { fs::remove(path); }
};

std::shared_ptr<const LoadedModel> oscars_model(bool with_draws) {
  static const auto base = [] {
    const Dataset d = read_dataset_file(data_path("oscars_best_picture.csv"));
    auto m = std::make_shared<LoadedModel>(load_model(make_snapshot(d, fit_map(d), kDefaultPriorSd)));
    SamplerConfig config;
    config.iterations = 6'000;
    config.burn_in = 1'000;
    config.thin = 5;
    auto with = std::make_shared<LoadedModel>(*m);
    with->posterior = sample_posterior(d, kDefaultPriorSd, config, 2019);
    return std::make_pair(m, with);
  }();
  return with_draws ? base.second : base.first;
}

std::string fixed_clock() { return "2019-02-24T20:00:00.000Z"; }

class BrokenStore : public ElicitationStore {
 public:
  void append(const ElicitationRecord&) override { throw StorageError("disk full"); }
  std::vector<ElicitationRecord> read_all() const override { return {}; }
};

const std::vector<double> kUniform(8, 0.125);

// 0.3 on green-book, 0.1 elsewhere
const std::vector<double> kGreenBook = {0.1, 0.1, 0.1, 0.1, 0.3, 0.1, 0.1, 0.1};

ElicitationRecord record(double omega, std::vector<double> priors, std::string fingerprint) {
  return {"2019-01-01T00:00:00.000Z", "s", omega, std::move(priors), true, std::move(fingerprint)};
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("no model loaded") {
  PredictionService service(nullptr, std::make_shared<BrokenStore>());
  CHECK(service.get_model().status == 503);
  CHECK(service.predict("{}").status == 503);
  CHECK(service.sweep("{}").status == 503);
  CHECK(service.submit_elicitation("{}").status == 503);
  const Response summary = service.elicitation_summary();
  CHECK(summary.status == 200);
  CHECK(summary.body["competitors"].empty());
  CHECK(service.get_model().body["error"]["message"].is_string());
}

TEST_CASE("model description") {
  TempLog log;
  PredictionService service(oscars_model(true), std::make_shared<FileElicitationStore>(log.path));
  const Response r = service.get_model();
  REQUIRE(r.status == 200);
  CHECK(r.body["predictor_names"].size() == 3);
  CHECK(r.body["beta_hat"].size() == 3);
  CHECK(r.body["roster"]["key"] == "2019");
  CHECK(r.body["roster"]["competitors"].size() == 8);
  CHECK(r.body["roster"]["competitors"][5]["label"] == "Roma");
  CHECK(r.body["posterior"]["draws"] == 1'000);
  CHECK(r.body["roster_fingerprint"] == roster_fingerprint(kRosterIds));
  double total = 0;
  for (double v : r.body["historical"]) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("predict") {
  TempLog log;
  const auto model = oscars_model(true);
  PredictionService service(oscars_model(false), std::make_shared<FileElicitationStore>(log.path));
  PredictionService sampled(model, std::make_shared<FileElicitationStore>(log.path));

  SUBCASE("omega = 1 reproduces the plug-in") {
    const Response r = service.predict(json{{"omega", 1.0}, {"priors", kUniform}}.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["source"] == "map_plugin");
    CHECK(r.body["probabilities"].get<std::vector<double>>() == model->historical);
    CHECK(r.body["intervals"].is_null());
    CHECK(r.body["ids"].get<std::vector<std::string>>() == kRosterIds);
  }
  SUBCASE("mixture arithmetic") {
    const Response r = service.predict(json{{"omega", 0.5}, {"priors", kGreenBook}}.dump());
    REQUIRE(r.status == 200);
    const auto p = r.body["probabilities"].get<std::vector<double>>();
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(p[i] == doctest::Approx(0.5 * model->historical[i] + 0.5 * kGreenBook[i]).epsilon(1e-14));
    }
  }
  SUBCASE("slider totals are renormalized") {
    std::vector<double> raw = kGreenBook;
    for (double& v : raw) v *= 1.01;
    const Response r = service.predict(json{{"omega", 0.0}, {"priors", raw}}.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["priors"][4].get<double>() == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(r.body["source"] == "prior_only");
  }
  SUBCASE("intervals without draws are omitted") {
    const Response r =
        service.predict(json{{"omega", 0.5}, {"priors", kUniform}, {"intervals", true}}.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["intervals_available"] == false);
    CHECK(r.body["intervals"].is_null());
  }
  SUBCASE("intervals from draws") {
    const Response r = sampled.predict(
        json{{"omega", 0.5}, {"priors", kGreenBook}, {"intervals", true}, {"level", 0.9}}.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["source"] == "mcmc_mean");
    CHECK(r.body["level"] == 0.9);
    REQUIRE(r.body["intervals"].size() == 8);
    double total = 0;
    for (const auto& row : r.body["intervals"]) {
      CHECK(row["lower"].get<double>() <= row["point"].get<double>());
      CHECK(row["point"].get<double>() <= row["upper"].get<double>());
      CHECK(row["lower"].get<double>() >= 0.5 * 0.1 - 1e-12);
      total += row["point"].get<double>();
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.body["intervals"][4]["id"] == "green-book");

    const Response prior_only = sampled.predict(
        json{{"omega", 0.0}, {"priors", kGreenBook}, {"intervals", true}}.dump());
    CHECK(prior_only.body["source"] == "prior_only");
    CHECK(prior_only.body["intervals"][4]["lower"] == prior_only.body["intervals"][4]["upper"]);
  }
}

TEST_CASE("bad requests name the offending field") {
  TempLog log;
  PredictionService service(oscars_model(false), std::make_shared<FileElicitationStore>(log.path));
  auto field_of = [](const Response& r) {
    CHECK(r.status == 400);
    return r.body["error"].value("field", std::string());
  };
  CHECK(field_of(service.predict("not json")) == "body");
  CHECK(field_of(service.predict("[1]")) == "body");
  CHECK(field_of(service.predict(json{{"priors", kUniform}}.dump())) == "omega");
  CHECK(field_of(service.predict(json{{"omega", 1.5}, {"priors", kUniform}}.dump())) == "omega");
  CHECK(field_of(service.predict(json{{"omega", "high"}, {"priors", kUniform}}.dump())) == "omega");
  CHECK(field_of(service.predict(json{{"omega", 0.5}, {"priors", {0.5, 0.5}}}.dump())) == "priors");
  std::vector<double> short_total(8, 0.1);
  CHECK(field_of(service.predict(json{{"omega", 0.5}, {"priors", short_total}}.dump())) == "priors");
  std::vector<double> negative = kUniform;
  negative[0] = -0.125;
  negative[1] = 0.375;
  CHECK(field_of(service.predict(json{{"omega", 0.5}, {"priors", negative}}.dump())) == "priors");
  CHECK(field_of(service.predict(
            json{{"omega", 0.5}, {"priors", kUniform}, {"intervals", "yes"}}.dump())) == "intervals");
  CHECK(field_of(service.sweep(json{{"priors", kUniform}, {"grid", {0.5, 0.2}}}.dump())) == "grid");
  CHECK(field_of(service.sweep(json{{"priors", kUniform}}.dump())) == "grid");
}

TEST_CASE("sweep") {
  TempLog log;
  const auto model = oscars_model(false);
  PredictionService service(model, std::make_shared<FileElicitationStore>(log.path));
  const Response r = service.sweep(json{{"priors", kGreenBook}, {"grid", {0.0, 0.25, 1.0}}}.dump());
  REQUIRE(r.status == 200);
  CHECK(r.body["grid"].size() == 3);
  REQUIRE(r.body["series"].size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& values = r.body["series"][i]["values"];
    CHECK(values[0].get<double>() == kGreenBook[i]);
    CHECK(values[1].get<double>() ==
          doctest::Approx(0.25 * model->historical[i] + 0.75 * kGreenBook[i]).epsilon(1e-14));
    CHECK(values[2].get<double>() == model->historical[i]);
  }
  CHECK(r.body["series"][5]["label"] == "Roma");
}

TEST_CASE("elicitation consent") {
  TempLog log;
  auto store = std::make_shared<FileElicitationStore>(log.path);
  PredictionService service(oscars_model(false), store, fixed_clock);

  const json base = {{"omega", 0.4}, {"priors", kGreenBook}};
  json body = base;
  Response r = service.submit_elicitation(body.dump());
  CHECK(r.status == 400);
  CHECK(r.body["error"]["field"] == "consent");

  body["consent"] = "yes";
  CHECK(service.submit_elicitation(body.dump()).body["error"]["field"] == "consent");

  body["consent"] = false;
  r = service.submit_elicitation(body.dump());
  CHECK(r.status == 200);
  CHECK(r.body["stored"] == false);
  CHECK(store->read_all().empty());

  body["consent"] = true;
  body["omega"] = 2.0;
  CHECK(service.submit_elicitation(body.dump()).body["error"]["field"] == "omega");
  CHECK(store->read_all().empty());

  body["omega"] = 0.4;
  body["session_id"] = "abc";
  r = service.submit_elicitation(body.dump());
  CHECK(r.status == 201);
  CHECK(r.body["session_id"] == "abc");
  CHECK(r.body["timestamp"] == fixed_clock());

  body.erase("session_id");
  r = service.submit_elicitation(body.dump());
  CHECK(r.status == 201);
  CHECK(std::regex_match(r.body["session_id"].get<std::string>(), std::regex("[0-9a-f]{32}")));

  const auto records = store->read_all();
  REQUIRE(records.size() == 2);
  CHECK(records[0].session_id == "abc");
  CHECK(records[0].omega == 0.4);
  CHECK(records[0].priors == kGreenBook);
  CHECK(records[0].consent);
  CHECK(records[0].roster_fingerprint == roster_fingerprint(kRosterIds));

  PredictionService broken(oscars_model(false), std::make_shared<BrokenStore>());
  CHECK(broken.submit_elicitation(body.dump()).status == 500);
}

TEST_CASE("concurrent appends stay intact") {
  TempLog log;
  auto store = std::make_shared<FileElicitationStore>(log.path);
  PredictionService service(oscars_model(false), store);
  const std::string body = json{{"omega", 0.5}, {"priors", kUniform}, {"consent", true}}.dump();

  SUBCASE("two submissions") {
    std::thread a([&] { CHECK(service.submit_elicitation(body).status == 201); });
    std::thread b([&] { CHECK(service.submit_elicitation(body).status == 201); });
    a.join();
    b.join();
    CHECK(store->read_all().size() == 2);
  }
  SUBCASE("many writers, separate store objects") {
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&log, t] {
        FileElicitationStore own(log.path);
        for (int i = 0; i < 25; ++i) {
          own.append(record(0.01 * t, std::vector<double>(8, 0.125), "x"));
        }
      });
    }
    for (auto& th : threads) th.join();
    const auto records = store->read_all();
    CHECK(records.size() == 200);
  }
}

TEST_CASE("corrupt log") {
  TempLog log;
  std::ofstream(log.path) << to_json(record(0.5, kUniform, "x")).dump() << "\n{\"omega\": 0.\n";
  FileElicitationStore store(log.path);
  CHECK_THROWS_AS(store.read_all(), StorageError);
  PredictionService service(oscars_model(false), std::make_shared<FileElicitationStore>(log.path));
  CHECK(service.elicitation_summary().status == 500);
  CHECK_THROWS_AS(elicitation_record_from_json(json{{"omega", 0.5}}), ParseError);
}

TEST_CASE("summary aggregates") {
  const Stratum& roster = oscars_model(false)->snapshot.roster;
  const std::string fp = roster_fingerprint(kRosterIds);

  SUBCASE("empty") {
    const json s = summarize_elicitations({}, &roster);
    CHECK(s["count"] == 0);
    CHECK(s["omega"]["mean"].is_null());
    CHECK(s["matched_records"] == 0);
    CHECK(s["competitors"][0]["prior"].is_null());
  }
  SUBCASE("mean omega") {
    const json s = summarize_elicitations(
        {record(0.2, kUniform, fp), record(0.5, kUniform, fp), record(0.8, kUniform, fp)}, &roster);
    CHECK(s["omega"]["mean"].get<double>() == doctest::Approx(0.5).epsilon(1e-15));
    const auto counts = s["omega"]["histogram"]["counts"].get<std::vector<int>>();
    CHECK(counts == std::vector<int>{0, 0, 1, 0, 0, 1, 0, 0, 1, 0});
  }
  SUBCASE("histogram of uniform omegas") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ElicitationRecord> records;
    for (int i = 0; i < 1000; ++i) records.push_back(record(u(rng), kUniform, fp));
    records.push_back(record(1.0, kUniform, fp));
    records.push_back(record(0.0, kUniform, fp));
    const json s = summarize_elicitations(records, &roster);
    const auto edges = s["omega"]["histogram"]["edges"].get<std::vector<double>>();
    REQUIRE(edges.size() == kOmegaHistogramBins + 1);
    CHECK(edges.front() == 0.0);
    CHECK(edges.back() == 1.0);
    const auto counts = s["omega"]["histogram"]["counts"].get<std::vector<int>>();
    int total = 0;
    for (int c : counts) {
      total += c;
      // binomial(1000, 0.1): sd 9.5
      CHECK(c >= 60);
      CHECK(c <= 142);
    }
    CHECK(total == 1002);
  }
  SUBCASE("per-competitor priors and phi") {
    const json s = summarize_elicitations(
        {record(0.5, kGreenBook, fp), record(0.5, kGreenBook, fp), record(0.5, kUniform, "other")},
        &roster);
    CHECK(s["count"] == 3);
    CHECK(s["matched_records"] == 2);
    const json& gb = s["competitors"][4];
    CHECK(gb["id"] == "green-book");
    CHECK(gb["prior"]["mean"].get<double>() == doctest::Approx(0.3));
    CHECK(gb["prior"]["quantiles"]["q50"].get<double>() == doctest::Approx(0.3));
    CHECK(gb["phi"]["mean"].get<double>() == doctest::Approx(std::log(3.0)));
    CHECK(s["competitors"][0]["phi"]["median"].get<double>() == doctest::Approx(0.0));
    CHECK(s["competitors"][7]["phi"].is_null());
  }
  SUBCASE("zero priors leave phi undefined") {
    std::vector<double> zero = kUniform;
    zero[0] = 0.0;
    zero[1] = 0.25;
    const json s = summarize_elicitations({record(0.5, zero, fp)}, &roster);
    CHECK(s["competitors"][0]["prior"]["mean"] == 0.0);
    CHECK(s["competitors"][0]["phi"].is_null());
  }
}

TEST_CASE("timestamps are ISO 8601 UTC") {
  CHECK(std::regex_match(utc_timestamp_now(),
                         std::regex(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z)")));
}

}  // TEST_SUITE
