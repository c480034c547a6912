#include "clrmix/lookup.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "clrmix/errors.h"

namespace clrmix {

namespace {

std::string scalar_to_string(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "1" : "0";
  if (value.is_number()) return value.dump();
  return {};
}

FieldMap flatten(const nlohmann::json& object) {
  FieldMap out;
  for (const auto& [name, value] : object.items()) {
    if (value.is_primitive() && !value.is_null()) out[name] = scalar_to_string(value);
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> to_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s == "true" || s == "True" || s == "yes") return 1.0;
  if (s == "false" || s == "False" || s == "no") return 0.0;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_feature(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

FixtureLookup FixtureLookup::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("lookup fixture is not valid JSON: ") + e.what(), 1, 0);
  }
  if (!doc.is_object()) throw ParseError("lookup fixture must be a JSON object", 1, 0);
  FixtureLookup out;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_object()) {
      throw ParseError("lookup fixture entry '" + key + "' must be an object", 1, 0);
    }
    out.records_.emplace(key, flatten(value));
  }
  return out;
}

FixtureLookup FixtureLookup::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open lookup fixture '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::optional<FieldMap> FixtureLookup::fetch(std::string_view stratum_key,
                                             const Competitor& competitor) {
  std::string key(stratum_key);
  key += '/';
  key += competitor.id;
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

HttpLookup::HttpLookup(std::string base_url, std::string api_key, double timeout_seconds)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {
  if (base_url_.rfind("http://", 0) != 0) {
    throw ConfigError("lookup URL must start with http://", "CLRMIX_LOOKUP_URL");
  }
}

std::optional<HttpLookup> HttpLookup::from_environment() {
  const char* url = std::getenv("CLRMIX_LOOKUP_URL");
  if (url == nullptr || *url == '\0') return std::nullopt;
  const char* key = std::getenv("CLRMIX_LOOKUP_KEY");
  return HttpLookup(url, key ? key : "");
}

std::optional<FieldMap> HttpLookup::fetch(std::string_view stratum_key,
                                          const Competitor& competitor) {
  const std::size_t path_start = base_url_.find('/', std::string_view("http://").size());
  const std::string origin = base_url_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : base_url_.substr(path_start);

  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);

  httplib::Params params{{"t", competitor.label}, {"y", std::string(stratum_key)}};
  if (!api_key_.empty()) params.emplace("apikey", api_key_);
  auto result = client.Get(path, params, httplib::Headers{});
  if (!result) {
    throw StorageError("lookup request failed: " + httplib::to_string(result.error()));
  }
  if (result->status == 404) return std::nullopt;
  if (result->status != 200) {
    throw StorageError("lookup returned HTTP " + std::to_string(result->status));
  }
  const auto doc = nlohmann::json::parse(result->body);
  if (!doc.is_object()) throw StorageError("lookup response is not a JSON object");
  FieldMap fields = flatten(doc);
  if (!fields.contains("label") && fields.contains("Title")) fields["label"] = fields["Title"];
  return fields;
}

std::size_t AgreementReport::disagreements() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) {
    return c.observed.has_value() && !c.agrees;
  }));
}

std::string_view to_string(AgreementReport::Status status) {
  switch (status) {
    case AgreementReport::Status::kAgree:
      return "agree";
    case AgreementReport::Status::kDisagree:
      return "disagree";
    case AgreementReport::Status::kUnverifiable:
      return "unverifiable";
  }
  return "unknown";
}

AgreementReport spot_check_record(std::string_view stratum_key, const Competitor& competitor,
                                  std::span<const std::string> predictor_names,
                                  RecordLookup& client) {
  AgreementReport report;
  report.stratum_key = std::string(stratum_key);
  report.competitor_id = competitor.id;

  std::optional<FieldMap> fields;
  try {
    fields = client.fetch(stratum_key, competitor);
  } catch (const std::exception& e) {
    report.detail = e.what();
    return report;
  }
  if (!fields) {
    report.detail = "record not found in lookup source";
    return report;
  }

  std::size_t judged = 0;
  FieldCheck label{"label", competitor.label, std::nullopt, false};
  if (auto it = fields->find("label"); it != fields->end()) {
    label.observed = it->second;
    label.agrees = lower(it->second) == lower(competitor.label);
    ++judged;
  }
  report.checks.push_back(std::move(label));

  for (std::size_t j = 0; j < predictor_names.size() && j < competitor.features.size(); ++j) {
    FieldCheck check{predictor_names[j], format_feature(competitor.features[j]), std::nullopt,
                     false};
    if (auto it = fields->find(predictor_names[j]); it != fields->end()) {
      check.observed = it->second;
      const auto v = to_number(it->second);
      check.agrees = v && std::abs(*v - competitor.features[j]) <= 1e-9;
      ++judged;
    }
    report.checks.push_back(std::move(check));
  }

  if (judged == 0) {
    report.detail = "lookup source reported none of the dataset fields";
    return report;
  }
  report.status = report.disagreements() == 0 ? AgreementReport::Status::kAgree
                                              : AgreementReport::Status::kDisagree;
  return report;
}

}  // namespace clrmix
