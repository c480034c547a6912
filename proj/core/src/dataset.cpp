#include "clrmix/dataset.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "clrmix/errors.h"
#include "clrmix/inference.h"
#include "csv.h"
#include "digest.h"

namespace clrmix {

namespace {

constexpr std::size_t kKeyColumn = 1;
constexpr std::size_t kIdColumn = 2;
constexpr std::size_t kWinnerColumn = 4;
constexpr std::size_t kFirstPredictorColumn = 5;

struct PendingRow {
  std::size_t line = 0;
  Competitor competitor;
  std::optional<bool> winner;  // nullopt = empty cell
};

struct PendingStratum {
  std::string key;
  std::size_t first_line = 0;
  std::vector<PendingRow> rows;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> parse_header(const csv::Row& header) {
  const std::size_t required = std::size(kRequiredColumns);
  for (std::size_t c = 0; c < required; ++c) {
    if (c >= header.fields.size() || trim(header.fields[c]) != kRequiredColumns[c]) {
      throw ParseError("header column must be '" + std::string(kRequiredColumns[c]) + "'",
                       header.line, c + 1);
    }
  }
  if (header.fields.size() == required) {
    throw ParseError("header names no predictor columns", header.line, 0);
  }
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (std::size_t c = required; c < header.fields.size(); ++c) {
    std::string name = trim(header.fields[c]);
    if (name.empty()) throw ParseError("empty predictor name", header.line, c + 1);
    if (!seen.insert(name).second) {
      throw ParseError("duplicate predictor column '" + name + "'", header.line, c + 1);
    }
    names.push_back(std::move(name));
  }
  return names;
}

Stratum finish_stratum(const PendingStratum& pending, bool prospective) {
  if (pending.rows.size() < 2) {
    throw ParseError("stratum '" + pending.key + "' has a single competitor; at least 2 required",
                     pending.first_line, kKeyColumn);
  }
  std::optional<std::size_t> winner;
  std::vector<Competitor> competitors;
  competitors.reserve(pending.rows.size());
  for (std::size_t i = 0; i < pending.rows.size(); ++i) {
    const PendingRow& row = pending.rows[i];
    if (!prospective && *row.winner) {
      if (winner) {
        throw ParseError("stratum '" + pending.key + "' has more than one winner", row.line,
                         kWinnerColumn);
      }
      winner = i;
    }
    competitors.push_back(row.competitor);
  }
  if (!prospective && !winner) {
    throw ParseError("stratum '" + pending.key + "' has no winner", pending.first_line,
                     kWinnerColumn);
  }
  return Stratum(pending.key, std::move(competitors), winner);
}

}  // namespace

Dataset parse_dataset(std::string_view csv_text) {
  const std::vector<csv::Row> rows = csv::parse(csv_text);
  if (rows.empty()) throw ParseError("file is empty", 1, 0);

  std::vector<std::string> predictor_names = parse_header(rows.front());
  const std::size_t width = rows.front().fields.size();

  std::vector<PendingStratum> strata;
  std::unordered_map<std::string, std::size_t> stratum_index;
  std::unordered_map<std::string, std::unordered_set<std::string>> ids_seen;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " columns, found " +
                           std::to_string(row.fields.size()),
                       row.line, 0);
    }
    std::string key = trim(row.fields[0]);
    if (key.empty()) throw ParseError("empty stratum key", row.line, kKeyColumn);

    PendingRow pending;
    pending.line = row.line;
    pending.competitor.id = trim(row.fields[1]);
    if (pending.competitor.id.empty()) throw ParseError("empty competitor id", row.line, kIdColumn);
    pending.competitor.label = row.fields[2].empty() ? pending.competitor.id : row.fields[2];

    const std::string winner = trim(row.fields[3]);
    if (winner == "1") pending.winner = true;
    else if (winner == "0") pending.winner = false;
    else if (!winner.empty()) {
      throw ParseError("winner must be 0, 1 or empty (got '" + winner + "')", row.line,
                       kWinnerColumn);
    }

    pending.competitor.features.reserve(predictor_names.size());
    for (std::size_t c = 0; c < predictor_names.size(); ++c) {
      pending.competitor.features.push_back(
          csv::parse_double(row.fields[c + 4], row.line, kFirstPredictorColumn + c));
    }

    if (!ids_seen[key].insert(pending.competitor.id).second) {
      throw ParseError("duplicate competitor id '" + pending.competitor.id + "' in stratum '" +
                           key + "'",
                       row.line, kIdColumn);
    }

    auto [it, inserted] = stratum_index.try_emplace(key, strata.size());
    if (inserted) strata.push_back(PendingStratum{key, row.line, {}});
    PendingStratum& target = strata[it->second];
    if (!target.rows.empty() &&
        target.rows.front().winner.has_value() != pending.winner.has_value()) {
      throw ParseError("stratum '" + key + "' mixes empty and 0/1 winner cells", row.line,
                       kWinnerColumn);
    }
    target.rows.push_back(std::move(pending));
  }

  std::vector<Stratum> historical;
  std::optional<Stratum> prospective;
  for (const PendingStratum& pending : strata) {
    const bool is_prospective = !pending.rows.front().winner.has_value();
    if (is_prospective && prospective) {
      throw ParseError("more than one prospective stratum ('" + prospective->key() + "' and '" +
                           pending.key + "')",
                       pending.first_line, kWinnerColumn);
    }
    Stratum stratum = finish_stratum(pending, is_prospective);
    if (is_prospective) prospective.emplace(std::move(stratum));
    else historical.push_back(std::move(stratum));
  }
  return Dataset(std::move(predictor_names), std::move(historical), std::move(prospective));
}

Dataset read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open dataset file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

std::string serialize_dataset(const Dataset& dataset) {
  std::ostringstream out;
  std::vector<std::string> fields(kRequiredColumns, kRequiredColumns + std::size(kRequiredColumns));
  for (const auto& name : dataset.predictor_names()) fields.push_back(name);
  out << csv::format_row(fields) << '\n';

  auto write_stratum = [&](const Stratum& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Competitor& c = s.competitor(i);
      fields.clear();
      fields.push_back(s.key());
      fields.push_back(c.id);
      fields.push_back(c.label);
      fields.push_back(!s.winner() ? "" : (*s.winner() == i ? "1" : "0"));
      for (double v : c.features) fields.push_back(csv::format_double(v));
      out << csv::format_row(fields) << '\n';
    }
  };
  for (const Stratum& s : dataset.historical()) write_stratum(s);
  if (dataset.prospective()) write_stratum(*dataset.prospective());
  return out.str();
}

std::string dataset_fingerprint(const Dataset& dataset) {
  return sha256_hex(serialize_dataset(dataset));
}

DatasetSummary dataset_summary(const Dataset& dataset) {
  DatasetSummary out;
  out.historical_strata = dataset.historical().size();
  out.predictors = dataset.predictor_count();
  const std::size_t p = dataset.predictor_count();
  std::vector<double> winner_sum(p, 0.0);
  std::vector<double> other_sum(p, 0.0);
  std::size_t others = 0;
  for (const Stratum& s : dataset.historical()) {
    out.stratum_sizes.push_back(s.size());
    out.historical_competitors += s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto& target = (*s.winner() == i) ? winner_sum : other_sum;
      for (std::size_t j = 0; j < p; ++j) target[j] += s.competitor(i).features[j];
    }
    others += s.size() - 1;
  }
  if (!out.stratum_sizes.empty()) {
    out.min_stratum_size = *std::min_element(out.stratum_sizes.begin(), out.stratum_sizes.end());
    out.max_stratum_size = *std::max_element(out.stratum_sizes.begin(), out.stratum_sizes.end());
  }
  for (std::size_t j = 0; j < p; ++j) {
    PredictorPrevalence prev;
    prev.name = dataset.predictor_names()[j];
    if (out.historical_strata > 0) {
      prev.mean_among_winners = winner_sum[j] / static_cast<double>(out.historical_strata);
    }
    if (others > 0) prev.mean_among_others = other_sum[j] / static_cast<double>(others);
    out.prevalence.push_back(std::move(prev));
  }
  if (dataset.prospective()) {
    out.has_prospective = true;
    out.prospective_key = dataset.prospective()->key();
    out.prospective_size = dataset.prospective()->size();
  }
  return out;
}

namespace {

ContingencyTable stratum_table(const Stratum& s, std::size_t predictor) {
  ContingencyTable t;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool exposed = s.competitor(i).features[predictor] == 1.0;
    const bool won = *s.winner() == i;
    if (exposed && won) t.exposed_winners += 1;
    else if (exposed) t.exposed_losers += 1;
    else if (won) t.unexposed_winners += 1;
    else t.unexposed_losers += 1;
  }
  return t;
}

void add(ContingencyTable& into, const ContingencyTable& t) {
  into.exposed_winners += t.exposed_winners;
  into.exposed_losers += t.exposed_losers;
  into.unexposed_winners += t.unexposed_winners;
  into.unexposed_losers += t.unexposed_losers;
}

}  // namespace

ContingencyTable contingency_table(const Dataset& dataset, std::size_t predictor) {
  if (predictor >= dataset.predictor_count()) {
    throw ValidationError("predictor index out of range", "predictor");
  }
  const std::string& name = dataset.predictor_names()[predictor];
  ContingencyTable table;
  for (const Stratum& s : dataset.historical()) {
    for (const Competitor& c : s.competitors()) {
      const double v = c.features[predictor];
      if (v != 0.0 && v != 1.0) {
        throw DiagnosticError("predictor '" + name + "' is not binary (stratum '" + s.key() +
                              "', competitor '" + c.id + "')");
      }
    }
    add(table, stratum_table(s, predictor));
  }
  const double exposed = table.exposed_winners + table.exposed_losers;
  const double unexposed = table.unexposed_winners + table.unexposed_losers;
  const double winners = table.exposed_winners + table.unexposed_winners;
  const double losers = table.exposed_losers + table.unexposed_losers;
  if (exposed == 0 || unexposed == 0 || winners == 0 || losers == 0) {
    throw DiagnosticError("2x2 table for '" + name + "' is degenerate (an entire margin is empty)");
  }
  return table;
}

double odds_ratio(const ContingencyTable& t) {
  double a = t.exposed_winners;
  double b = t.exposed_losers;
  double c = t.unexposed_winners;
  double d = t.unexposed_losers;
  if (a == 0 || b == 0 || c == 0 || d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  }
  return (a * d) / (b * c);
}

OddsRatioReport odds_ratio_bootstrap(const Dataset& dataset, std::string_view predictor,
                                     int reps, std::uint64_t seed, double level) {
  const auto index = dataset.predictor_index(predictor);
  if (!index) {
    throw ValidationError("unknown predictor '" + std::string(predictor) + "'", "predictor");
  }
  if (reps < 1) throw ConfigError("bootstrap needs at least one replicate", "reps");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)", "level");

  OddsRatioReport report;
  report.predictor = std::string(predictor);
  report.table = contingency_table(dataset, *index);
  report.estimate = odds_ratio(report.table);
  report.level = level;
  report.bootstrap_reps = reps;
  report.seed = seed;

  std::vector<ContingencyTable> per_stratum;
  per_stratum.reserve(dataset.historical().size());
  for (const Stratum& s : dataset.historical()) per_stratum.push_back(stratum_table(s, *index));

  const std::size_t k = per_stratum.size();
  std::vector<double> replicates(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    ContingencyTable resample;
    for (std::size_t draw = 0; draw < k; ++draw) add(resample, per_stratum[pick(rng)]);
    replicates[static_cast<std::size_t>(r)] = odds_ratio(resample);
  }
  const double tail = (1.0 - level) / 2.0;
  report.ci_lower = quantile(replicates, tail);
  report.ci_upper = quantile(std::move(replicates), 1.0 - tail);
  return report;
}

}  // namespace clrmix
