#pragma once

// HTTP facade over a published model snapshot.
//
//   GET  /model                 predictor names, beta_hat, roster, omega = 1 probabilities
//   POST /predict               {omega, priors[], intervals?, level?}
//   POST /sweep                 {priors[], grid[]}
//   POST /elicitation           {omega, priors[], consent, session_id?}
//   GET  /elicitation/summary   count, omega histogram, per-competitor prior summaries
//
// Handlers are plain member functions returning (status, JSON body) so they
// can be exercised without a socket; mount_routes wires them to cpp-httplib.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clrmix/snapshot.h"
#include "clrmix/subjective.h"

namespace httplib {
class Server;
}

namespace clrmix {

struct ElicitationRecord {
  std::string timestamp;  // UTC, ISO 8601
  std::string session_id;
  double omega = 1.0;
  std::vector<double> priors;
  bool consent = false;
  std::string roster_fingerprint;
};

nlohmann::json to_json(const ElicitationRecord& record);
// Throws ParseError on a malformed record.
ElicitationRecord elicitation_record_from_json(const nlohmann::json& doc);

class ElicitationStore {
 public:
  virtual ~ElicitationStore() = default;
  // Durable on return; throws StorageError leaving the store unchanged.
  virtual void append(const ElicitationRecord& record) = 0;
  virtual std::vector<ElicitationRecord> read_all() const = 0;
};

// Newline-delimited JSON, one record per line. Appends are serialized by an
// in-process mutex and land with a single O_APPEND write followed by fsync;
// a failed write is truncated back off the file.
class FileElicitationStore : public ElicitationStore {
 public:
  explicit FileElicitationStore(std::filesystem::path path);

  void append(const ElicitationRecord& record) override;
  std::vector<ElicitationRecord> read_all() const override;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

inline constexpr std::size_t kOmegaHistogramBins = 10;

// Aggregates only; never echoes raw sessions. Per-competitor statistics use
// records whose roster fingerprint matches the roster passed in.
nlohmann::json summarize_elicitations(const std::vector<ElicitationRecord>& records,
                                      const Stratum* roster);

// The /predict response body. With intervals requested and draws available,
// probabilities are the per-draw mixture means (source "mcmc_mean");
// otherwise the MAP plug-in mixture.
nlohmann::json prediction_json(const LoadedModel& model, const SubjectiveSpec& spec,
                               bool intervals, double level = 0.95);

class PredictionService {
 public:
  using Clock = std::function<std::string()>;  // returns an ISO 8601 UTC timestamp

  // model may be null: model-dependent endpoints then answer 503.
  PredictionService(std::shared_ptr<const LoadedModel> model,
                    std::shared_ptr<ElicitationStore> store, Clock clock = {});

  Response get_model() const;
  Response predict(std::string_view body) const;
  Response sweep(std::string_view body) const;
  Response submit_elicitation(std::string_view body);
  Response elicitation_summary() const;

 private:
  std::shared_ptr<const LoadedModel> model_;
  std::shared_ptr<ElicitationStore> store_;
  Clock clock_;
};

std::string utc_timestamp_now();

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
};

void mount_routes(httplib::Server& server, PredictionService& service,
                  const ServerOptions& options);

// Blocks until the server stops. Throws StorageError if the address cannot be bound.
void run_server(PredictionService& service, const ServerOptions& options);

}  // namespace clrmix
