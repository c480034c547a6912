#include "clrmix/service.h"

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include "clrmix/errors.h"
#include "clrmix/inference.h"

namespace clrmix {

using nlohmann::json;

namespace {

Response error_response(int status, const std::string& message, const std::string& field = {}) {
  json err = {{"message", message}};
  if (!field.empty()) err["field"] = field;
  return {status, {{"error", std::move(err)}}};
}

Response not_ready() { return error_response(503, "no model snapshot loaded"); }

json parse_body(std::string_view body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ValidationError("request body is not valid JSON", "body");
  if (!doc.is_object()) throw ValidationError("request body must be a JSON object", "body");
  return doc;
}

double read_number(const json& doc, const char* name) {
  if (!doc.contains(name)) throw ValidationError(std::string("'") + name + "' is required", name);
  const json& v = doc[name];
  if (!v.is_number()) throw ValidationError(std::string("'") + name + "' must be a number", name);
  return v.get<double>();
}

std::vector<double> read_number_array(const json& doc, const char* name) {
  if (!doc.contains(name)) throw ValidationError(std::string("'") + name + "' is required", name);
  const json& v = doc[name];
  if (!v.is_array()) throw ValidationError(std::string("'") + name + "' must be an array", name);
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) {
      throw ValidationError(std::string("'") + name + "' entries must be numbers", name);
    }
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> read_priors(const json& doc, std::size_t roster_size) {
  const std::vector<double> raw = read_number_array(doc, "priors");
  if (raw.size() != roster_size) {
    throw ValidationError("priors has " + std::to_string(raw.size()) +
                              " entries but the roster has " + std::to_string(roster_size),
                          "priors");
  }
  return normalize_elicited_priors(raw);
}

bool read_optional_bool(const json& doc, const char* name, bool fallback) {
  if (!doc.contains(name) || doc[name].is_null()) return fallback;
  if (!doc[name].is_boolean()) {
    throw ValidationError(std::string("'") + name + "' must be a boolean", name);
  }
  return doc[name].get<bool>();
}

template <typename Fn>
Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    return error_response(400, e.what(), e.field());
  } catch (const StorageError& e) {
    return error_response(500, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

std::string random_session_id() {
  thread_local std::mt19937_64 rng(std::random_device{}());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (int word = 0; word < 2; ++word) {
    std::uint64_t bits = rng();
    for (int i = 0; i < 16; ++i, bits >>= 4) out.push_back(kHex[bits & 0xf]);
  }
  return out;
}

json roster_json(const Stratum& roster) {
  json competitors = json::array();
  for (const Competitor& c : roster.competitors()) {
    competitors.push_back({{"id", c.id}, {"label", c.label}});
  }
  return {{"key", roster.key()}, {"competitors", std::move(competitors)}};
}

}  // namespace

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() %
      1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

json prediction_json(const LoadedModel& model, const SubjectiveSpec& spec, bool intervals,
                     double level) {
  const Stratum& roster = model.snapshot.roster;
  json out;
  out["ids"] = roster.ids();
  json labels = json::array();
  for (const Competitor& c : roster.competitors()) labels.push_back(c.label);
  out["labels"] = std::move(labels);
  out["omega"] = spec.omega();
  out["priors"] = std::vector<double>(spec.priors().begin(), spec.priors().end());

  const bool have_draws = model.posterior.has_value();
  out["intervals_available"] = have_draws;
  if (intervals && have_draws) {
    const auto estimates = predictive_intervals(*model.posterior, roster, spec, level);
    std::vector<double> points;
    json rows = json::array();
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      points.push_back(estimates[i].point);
      rows.push_back({{"id", roster.competitor(i).id},
                      {"point", estimates[i].point},
                      {"lower", estimates[i].lower},
                      {"upper", estimates[i].upper}});
    }
    out["probabilities"] = std::move(points);
    out["source"] = spec.omega() == 0.0 ? to_string(PredictionSource::kPriorOnly)
                                        : to_string(PredictionSource::kMcmcMean);
    out["intervals"] = std::move(rows);
    out["level"] = level;
  } else {
    const PredictionSet set = mixture_probabilities(model.historical, spec);
    out["probabilities"] = set.probabilities;
    out["source"] = to_string(set.source);
    out["intervals"] = nullptr;
  }
  return out;
}

json summarize_elicitations(const std::vector<ElicitationRecord>& records, const Stratum* roster) {
  json out;
  out["count"] = records.size();

  std::vector<std::size_t> counts(kOmegaHistogramBins, 0);
  std::vector<double> edges;
  for (std::size_t b = 0; b <= kOmegaHistogramBins; ++b) {
    edges.push_back(static_cast<double>(b) / static_cast<double>(kOmegaHistogramBins));
  }
  double omega_total = 0.0;
  for (const auto& r : records) {
    const auto bin = std::min(static_cast<std::size_t>(std::floor(r.omega * kOmegaHistogramBins)),
                              kOmegaHistogramBins - 1);
    ++counts[bin];
    omega_total += r.omega;
  }
  out["omega"] = {
      {"mean", records.empty() ? json(nullptr) : json(omega_total / records.size())},
      {"histogram", {{"edges", edges}, {"counts", counts}}},
  };

  json competitors = json::array();
  std::size_t matched = 0;
  if (roster != nullptr) {
    const std::string fingerprint = roster_fingerprint(roster->ids());
    const std::size_t n = roster->size();
    std::vector<std::vector<double>> priors(n);
    std::vector<std::vector<double>> phis(n);
    for (const auto& r : records) {
      if (r.roster_fingerprint != fingerprint || r.priors.size() != n) continue;
      ++matched;
      bool phi_defined = true;
      for (std::size_t i = 0; i < n; ++i) {
        priors[i].push_back(r.priors[i]);
        phi_defined = phi_defined && r.priors[i] >= kMinimumElicitedPrior;
      }
      if (phi_defined) {
        const double log_base = std::log(r.priors[n - 1]);
        for (std::size_t i = 0; i + 1 < n; ++i) phis[i].push_back(std::log(r.priors[i]) - log_base);
      }
    }
    constexpr std::array<double, 5> kLevels{0.05, 0.25, 0.5, 0.75, 0.95};
    constexpr std::array<const char*, 5> kNames{"q05", "q25", "q50", "q75", "q95"};
    for (std::size_t i = 0; i < n; ++i) {
      json entry = {{"id", roster->competitor(i).id}, {"label", roster->competitor(i).label}};
      if (priors[i].empty()) {
        entry["prior"] = nullptr;
      } else {
        double total = 0.0;
        for (double v : priors[i]) total += v;
        json q = json::object();
        for (std::size_t l = 0; l < kLevels.size(); ++l) q[kNames[l]] = quantile(priors[i], kLevels[l]);
        entry["prior"] = {{"mean", total / priors[i].size()}, {"quantiles", std::move(q)}};
      }
      if (phis[i].empty()) {
        entry["phi"] = nullptr;  // baseline, or no record with every prior above the floor
      } else {
        double total = 0.0;
        for (double v : phis[i]) total += v;
        entry["phi"] = {{"mean", total / phis[i].size()}, {"median", quantile(phis[i], 0.5)}};
      }
      competitors.push_back(std::move(entry));
    }
  }
  out["matched_records"] = matched;
  out["competitors"] = std::move(competitors);
  return out;
}

PredictionService::PredictionService(std::shared_ptr<const LoadedModel> model,
                                     std::shared_ptr<ElicitationStore> store, Clock clock)
    : model_(std::move(model)), store_(std::move(store)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_timestamp_now;
}

Response PredictionService::get_model() const {
  if (!model_) return not_ready();
  const ModelSnapshot& s = model_->snapshot;
  json posterior = nullptr;
  if (model_->posterior) {
    posterior = {{"draws", model_->posterior->draws.rows()},
                 {"acceptance_rate", model_->posterior->acceptance_rate},
                 {"seed", model_->posterior->seed}};
  }
  return {200,
          {
              {"predictor_names", s.predictor_names},
              {"beta_hat", std::vector<double>(s.map.beta_hat.data(),
                                               s.map.beta_hat.data() + s.map.beta_hat.size())},
              {"prior_sd", s.prior_sd},
              {"converged", s.map.converged},
              {"dataset_fingerprint", s.dataset_fingerprint},
              {"roster", roster_json(s.roster)},
              {"roster_fingerprint", model_->roster_fingerprint},
              {"historical", model_->historical},
              {"posterior", std::move(posterior)},
          }};
}

Response PredictionService::predict(std::string_view body) const {
  if (!model_) return not_ready();
  return guarded([&] {
    const json doc = parse_body(body);
    const double omega = read_number(doc, "omega");
    std::vector<double> priors = read_priors(doc, model_->snapshot.roster.size());
    const bool intervals = read_optional_bool(doc, "intervals", false);
    double level = 0.95;
    if (doc.contains("level") && !doc["level"].is_null()) level = read_number(doc, "level");
    const SubjectiveSpec spec(std::move(priors), omega);
    return Response{200, prediction_json(*model_, spec, intervals, level)};
  });
}

Response PredictionService::sweep(std::string_view body) const {
  if (!model_) return not_ready();
  return guarded([&] {
    const json doc = parse_body(body);
    const std::vector<double> priors = read_priors(doc, model_->snapshot.roster.size());
    const std::vector<double> grid = read_number_array(doc, "grid");
    const SweepCurves curves = omega_sweep(model_->historical, priors, grid);
    json series = json::array();
    for (std::size_t i = 0; i < curves.curves.size(); ++i) {
      const Competitor& c = model_->snapshot.roster.competitor(i);
      series.push_back({{"id", c.id}, {"label", c.label}, {"values", curves.curves[i]}});
    }
    return Response{200, {{"grid", curves.grid}, {"series", std::move(series)}}};
  });
}

Response PredictionService::submit_elicitation(std::string_view body) {
  if (!model_) return not_ready();
  return guarded([&] {
    const json doc = parse_body(body);
    if (!doc.contains("consent")) {
      throw ValidationError("'consent' is required and must be true or false", "consent");
    }
    if (!doc["consent"].is_boolean()) throw ValidationError("'consent' must be a boolean", "consent");
    const bool consent = doc["consent"].get<bool>();
    const double omega = read_number(doc, "omega");
    std::vector<double> priors = read_priors(doc, model_->snapshot.roster.size());
    const SubjectiveSpec spec(std::move(priors), omega);
    if (!consent) return Response{200, {{"stored", false}}};

    ElicitationRecord record;
    record.timestamp = clock_();
    if (doc.contains("session_id") && doc["session_id"].is_string() &&
        !doc["session_id"].get<std::string>().empty()) {
      record.session_id = doc["session_id"].get<std::string>();
    } else {
      record.session_id = random_session_id();
    }
    record.omega = spec.omega();
    record.priors.assign(spec.priors().begin(), spec.priors().end());
    record.consent = true;
    record.roster_fingerprint = model_->roster_fingerprint;
    store_->append(record);
    return Response{201,
                    {{"stored", true},
                     {"session_id", record.session_id},
                     {"timestamp", record.timestamp}}};
  });
}

Response PredictionService::elicitation_summary() const {
  return guarded([&] {
    const auto records = store_->read_all();
    return Response{200,
                    summarize_elicitations(records, model_ ? &model_->snapshot.roster : nullptr)};
  });
}

}  // namespace clrmix
