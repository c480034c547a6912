#pragma once

// Spot-checking dataset records against an external source (a film database
// API, or a local JSON file standing in for one). Read-only: a check never
// modifies the dataset.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clrmix/clr.h"

namespace clrmix {

using FieldMap = std::map<std::string, std::string, std::less<>>;

class RecordLookup {
 public:
  virtual ~RecordLookup() = default;

  // Field map for one record, or nullopt when the source has no such record.
  // May throw on transport failure.
  virtual std::optional<FieldMap> fetch(std::string_view stratum_key,
                                        const Competitor& competitor) = 0;
};

// JSON object keyed "<stratum_key>/<competitor_id>", each value an object of
// scalar fields, e.g. {"2018/roma": {"label": "Roma", "dga_win": 1}}.
class FixtureLookup : public RecordLookup {
 public:
  // Throws ParseError / StorageError on a malformed or unreadable file.
  static FixtureLookup from_file(const std::filesystem::path& path);
  static FixtureLookup from_json_text(std::string_view text);

  std::optional<FieldMap> fetch(std::string_view stratum_key,
                                const Competitor& competitor) override;

 private:
  std::map<std::string, FieldMap, std::less<>> records_;
};

// GET <base_url>?t=<label>&y=<stratum_key>&apikey=<key>; the response must be
// a JSON object. "Title" is accepted as an alias for "label". Plain http only.
class HttpLookup : public RecordLookup {
 public:
  HttpLookup(std::string base_url, std::string api_key, double timeout_seconds = 5.0);

  // Reads CLRMIX_LOOKUP_URL and CLRMIX_LOOKUP_KEY; nullopt if the URL is unset.
  static std::optional<HttpLookup> from_environment();

  std::optional<FieldMap> fetch(std::string_view stratum_key,
                                const Competitor& competitor) override;

 private:
  std::string base_url_;
  std::string api_key_;
  double timeout_seconds_;
};

struct FieldCheck {
  std::string field;
  std::string expected;               // value in the dataset
  std::optional<std::string> observed;  // nullopt: source has no such field
  bool agrees = false;
};

struct AgreementReport {
  enum class Status { kAgree, kDisagree, kUnverifiable };

  Status status = Status::kUnverifiable;
  std::string stratum_key;
  std::string competitor_id;
  std::vector<FieldCheck> checks;
  std::string detail;  // reason when unverifiable

  std::size_t disagreements() const;
};

std::string_view to_string(AgreementReport::Status status);

// Compares label (case-insensitive) and every predictor the source reports
// (numerically). Fields the source omits are listed but not judged. Lookup
// failures of any kind yield kUnverifiable instead of throwing.
AgreementReport spot_check_record(std::string_view stratum_key, const Competitor& competitor,
                                  std::span<const std::string> predictor_names,
                                  RecordLookup& client);

}  // namespace clrmix
