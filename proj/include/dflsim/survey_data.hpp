#pragma once

// Survey microdata: the codebook schema, records, validation, and the
// delimited-text / JSON file formats.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dflsim/common.hpp"

namespace dflsim {

using json = nlohmann::json;

enum class Domain { Demographic, SocioEconomic, Digital, Financial, DigitalFinancial };
enum class FieldKind { Binary, Ordinal, Categorical, Numeric };

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::Demographic: return "Demographic";
    case Domain::SocioEconomic: return "SocioEconomic";
    case Domain::Digital: return "Digital";
    case Domain::Financial: return "Financial";
    case Domain::DigitalFinancial: return "DigitalFinancial";
  }
  return "?";
}

inline std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Binary: return "Binary";
    case FieldKind::Ordinal: return "Ordinal";
    case FieldKind::Categorical: return "Categorical";
    case FieldKind::Numeric: return "Numeric";
  }
  return "?";
}

inline Domain parse_domain(std::string_view s) {
  if (s == "Demographic") return Domain::Demographic;
  if (s == "SocioEconomic") return Domain::SocioEconomic;
  if (s == "Digital") return Domain::Digital;
  if (s == "Financial") return Domain::Financial;
  if (s == "DigitalFinancial") return Domain::DigitalFinancial;
  throw ValidationError("unknown domain '" + std::string(s) + "'");
}

inline FieldKind parse_kind(std::string_view s) {
  if (s == "Binary") return FieldKind::Binary;
  if (s == "Ordinal") return FieldKind::Ordinal;
  if (s == "Categorical") return FieldKind::Categorical;
  if (s == "Numeric") return FieldKind::Numeric;
  throw ValidationError("unknown field kind '" + std::string(s) + "'");
}

/// True for the three competency domains that make up the index.
constexpr bool is_scored_domain(Domain d) {
  return d == Domain::Digital || d == Domain::Financial || d == Domain::DigitalFinancial;
}

struct CodebookField {
  std::string name;
  Domain domain = Domain::Demographic;
  FieldKind kind = FieldKind::Categorical;
  int points = 0;
  bool modifiable = false;
  std::vector<std::string> categories;

  bool has_categories() const { return kind != FieldKind::Numeric; }

  std::optional<int> category_index(std::string_view label) const {
    for (std::size_t i = 0; i < categories.size(); ++i)
      if (categories[i] == label) return static_cast<int>(i);
    return std::nullopt;
  }

  /// Points earned at a given category level (Binary/Ordinal only).
  double points_at(int level) const {
    if (points == 0 || categories.size() < 2) return 0.0;
    return static_cast<double>(points) * level / static_cast<double>(categories.size() - 1);
  }
};

/// Immutable, validated schema for a survey.
class Codebook {
 public:
  Codebook() = default;

  Codebook(std::string name, std::vector<CodebookField> fields,
           std::string id_field = "record_id", std::string country_field = "country")
      : name_(std::move(name)),
        id_field_(std::move(id_field)),
        country_field_(std::move(country_field)),
        fields_(std::move(fields)) {
    validate_and_index();
  }

  const std::string& name() const { return name_; }
  const std::string& id_field() const { return id_field_; }
  const std::string& country_field() const { return country_field_; }
  const std::vector<CodebookField>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  const CodebookField& field(std::size_t i) const { return fields_.at(i); }
  std::size_t country_index() const { return country_index_; }
  const CodebookField& country() const { return fields_[country_index_]; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw ValidationError("unknown field '" + std::string(name) + "'");
    return *i;
  }

  /// Total scored points available in one competency domain.
  int domain_points(Domain d) const {
    int total = 0;
    for (const auto& f : fields_)
      if (f.domain == d) total += f.points;
    return total;
  }

  json to_json() const {
    json out;
    out["name"] = name_;
    out["id_field"] = id_field_;
    out["country_field"] = country_field_;
    out["max_points"] = static_cast<int>(kIndexMaxPoints);
    json fs = json::array();
    for (const auto& f : fields_) {
      json j;
      j["name"] = f.name;
      j["domain"] = to_string(f.domain);
      j["kind"] = to_string(f.kind);
      j["points"] = f.points;
      j["modifiable"] = f.modifiable;
      j["categories"] = f.categories;
      fs.push_back(std::move(j));
    }
    out["fields"] = std::move(fs);
    return out;
  }

  static Codebook from_json(const json& j) {
    try {
      std::vector<CodebookField> fields;
      for (const auto& fj : j.at("fields")) {
        CodebookField f;
        f.name = fj.at("name").get<std::string>();
        f.domain = parse_domain(fj.at("domain").get<std::string>());
        f.kind = parse_kind(fj.at("kind").get<std::string>());
        f.points = fj.value("points", 0);
        f.modifiable = fj.value("modifiable", false);
        if (fj.contains("categories")) f.categories = fj.at("categories").get<std::vector<std::string>>();
        fields.push_back(std::move(f));
      }
      return Codebook(j.value("name", std::string("codebook")), std::move(fields),
                      j.value("id_field", std::string("record_id")),
                      j.value("country_field", std::string("country")));
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed codebook: ") + e.what());
    }
  }

 private:
  void validate_and_index() {
    std::vector<std::string> errors;
    int scored_points = 0;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      const auto& f = fields_[i];
      if (f.name.empty()) errors.push_back("field #" + std::to_string(i) + " has an empty name");
      if (f.name == id_field_) errors.push_back("field '" + f.name + "' collides with the id field");
      if (!index_.emplace(f.name, i).second) errors.push_back("duplicate field name '" + f.name + "'");
      if (f.points < 0) errors.push_back("field '" + f.name + "' has negative points");
      if (f.modifiable && !is_scored_domain(f.domain))
        errors.push_back("field '" + f.name + "' is modifiable but its domain is " + to_string(f.domain));
      if (f.points > 0 && !is_scored_domain(f.domain))
        errors.push_back("field '" + f.name + "' carries points outside a competency domain");
      if (f.points > 0 && f.kind != FieldKind::Binary && f.kind != FieldKind::Ordinal)
        errors.push_back("field '" + f.name + "' carries points but is not Binary/Ordinal");
      if (f.kind == FieldKind::Binary && f.categories.size() != 2)
        errors.push_back("binary field '" + f.name + "' needs exactly 2 categories");
      if ((f.kind == FieldKind::Ordinal || f.kind == FieldKind::Categorical) && f.categories.empty())
        errors.push_back("field '" + f.name + "' has no categories");
      if (f.kind == FieldKind::Numeric && !f.categories.empty())
        errors.push_back("numeric field '" + f.name + "' lists categories");
      std::unordered_set<std::string> seen;
      for (const auto& c : f.categories)
        if (!seen.insert(c).second) errors.push_back("field '" + f.name + "' repeats category '" + c + "'");
      if (is_scored_domain(f.domain)) scored_points += f.points;
    }
    if (scored_points != static_cast<int>(kIndexMaxPoints))
      errors.push_back("points must sum to 52 (got " + std::to_string(scored_points) + ")");
    auto c = index_.find(country_field_);
    if (c == index_.end()) {
      errors.push_back("country field '" + country_field_ + "' is not defined");
    } else {
      country_index_ = c->second;
      if (fields_[country_index_].kind != FieldKind::Categorical)
        errors.push_back("country field must be Categorical");
    }
    if (errors.size() > 20) errors.resize(20);
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }

  std::string name_;
  std::string id_field_ = "record_id";
  std::string country_field_ = "country";
  std::vector<CodebookField> fields_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t country_index_ = 0;
};

/// One response. Category-bearing fields hold the category index, numeric
/// fields hold the value; `std::nullopt` is a missing answer.
using Cell = std::optional<double>;

struct SurveyRecord {
  std::string record_id;
  std::vector<Cell> responses;  // aligned with Codebook::fields()

  bool operator==(const SurveyRecord&) const = default;
};

enum class ProvenanceKind { Ingested, Synthetic };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Ingested;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Comma-separated text with RFC 4180 quoting. Returns rows of cells.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      if (!cell.empty()) throw ValidationError("malformed file: stray quote in row " + std::to_string(rows.size() + 1));
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("malformed file: unterminated quote");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// A validated collection of records. Immutable once built.
class Dataset {
 public:
  Dataset() = default;

  /// Validates every record against the codebook; throws ValidationError
  /// listing at most 20 violations.
  Dataset(Codebook codebook, std::vector<SurveyRecord> records, Provenance provenance = {})
      : codebook_(std::move(codebook)), records_(std::move(records)), provenance_(provenance) {
    std::vector<std::string> errors;
    std::unordered_set<std::string> ids;
    const std::size_t ci = codebook_.country_index();
    for (const auto& r : records_) {
      if (errors.size() >= 20) break;
      if (r.record_id.empty()) errors.push_back("record with empty record_id");
      if (!ids.insert(r.record_id).second) errors.push_back("duplicate record_id '" + r.record_id + "'");
      if (r.responses.size() != codebook_.size()) {
        errors.push_back("record '" + r.record_id + "': expected " + std::to_string(codebook_.size()) +
                         " responses, got " + std::to_string(r.responses.size()));
        continue;
      }
      for (std::size_t f = 0; f < codebook_.size() && errors.size() < 20; ++f) {
        const auto& cell = r.responses[f];
        const auto& field = codebook_.field(f);
        if (!cell) {
          if (f == ci) errors.push_back("record '" + r.record_id + "': field '" + field.name + "' is missing");
          continue;
        }
        if (!std::isfinite(*cell)) {
          errors.push_back("record '" + r.record_id + "': field '" + field.name + "' is not finite");
        } else if (field.has_categories()) {
          double idx = *cell;
          if (idx != std::floor(idx) || idx < 0 || idx >= static_cast<double>(field.categories.size()))
            errors.push_back("record '" + r.record_id + "': field '" + field.name + "' has category index out of vocabulary");
        }
      }
    }
    if (errors.size() > 20) errors.resize(20);
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }

  const Codebook& codebook() const { return codebook_; }
  const std::vector<SurveyRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const SurveyRecord& record(std::size_t i) const { return records_.at(i); }
  const Provenance& provenance() const { return provenance_; }

  int country_of(std::size_t i) const {
    return static_cast<int>(*records_[i].responses[codebook_.country_index()]);
  }
  const std::string& country_label(std::size_t i) const {
    return codebook_.country().categories[static_cast<std::size_t>(country_of(i))];
  }

  /// Label or number for a cell, empty when missing.
  std::string cell_text(std::size_t record, std::size_t field) const {
    const auto& cell = records_[record].responses[field];
    if (!cell) return {};
    const auto& f = codebook_.field(field);
    if (f.has_categories()) return f.categories[static_cast<std::size_t>(*cell)];
    return detail::format_number(*cell);
  }

  /// Canonical comma-separated rendering: id column, then codebook order.
  std::string to_csv() const {
    std::string out = detail::csv_escape(codebook_.id_field());
    for (const auto& f : codebook_.fields()) out += "," + detail::csv_escape(f.name);
    out += "\n";
    for (std::size_t r = 0; r < records_.size(); ++r) {
      out += detail::csv_escape(records_[r].record_id);
      for (std::size_t f = 0; f < codebook_.size(); ++f) out += "," + detail::csv_escape(cell_text(r, f));
      out += "\n";
    }
    return out;
  }

  std::string fingerprint() const {
    return hex64(fnv1a(to_csv(), fnv1a(codebook_.to_json().dump())));
  }

  /// Parses canonical or reordered comma-separated text against a codebook.
  static Dataset from_csv(const Codebook& codebook, std::string_view text, Provenance provenance = {}) {
    auto rows = parse_csv(text);
    if (rows.empty()) throw ValidationError("malformed file: no header row");
    const auto& header = rows.front();
    std::vector<std::optional<std::size_t>> column_field(header.size());
    std::optional<std::size_t> id_column;
    std::vector<std::string> errors;
    std::vector<bool> seen(codebook.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == codebook.id_field()) {
        id_column = c;
        continue;
      }
      auto f = codebook.find(header[c]);
      if (!f) {
        errors.push_back("unknown field '" + header[c] + "' in header");
        continue;
      }
      if (seen[*f]) errors.push_back("duplicate column '" + header[c] + "'");
      seen[*f] = true;
      column_field[c] = f;
    }
    if (!id_column) errors.push_back("header lacks id column '" + codebook.id_field() + "'");
    for (std::size_t f = 0; f < codebook.size(); ++f)
      if (!seen[f]) errors.push_back("header lacks field '" + codebook.field(f).name + "'");
    if (!errors.empty()) {
      if (errors.size() > 20) errors.resize(20);
      throw ValidationError(std::move(errors));
    }

    std::vector<SurveyRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size() && errors.size() < 20; ++r) {
      const auto& row = rows[r];
      if (row.size() != header.size()) {
        errors.push_back("malformed file: row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                         " cells, header has " + std::to_string(header.size()));
        continue;
      }
      SurveyRecord rec;
      rec.record_id = row[*id_column];
      rec.responses.assign(codebook.size(), std::nullopt);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (!column_field[c] || row[c].empty()) continue;
        const auto& field = codebook.field(*column_field[c]);
        if (field.has_categories()) {
          auto idx = field.category_index(row[c]);
          if (!idx) {
            errors.push_back("record '" + rec.record_id + "': field '" + field.name + "' has out-of-vocabulary category '" +
                             row[c] + "'");
            continue;
          }
          rec.responses[*column_field[c]] = *idx;
        } else {
          auto v = detail::parse_number(row[c]);
          if (!v) {
            errors.push_back("record '" + rec.record_id + "': field '" + field.name + "' is not a number: '" + row[c] + "'");
            continue;
          }
          rec.responses[*column_field[c]] = *v;
        }
      }
      records.push_back(std::move(rec));
    }
    if (!errors.empty()) {
      if (errors.size() > 20) errors.resize(20);
      throw ValidationError(std::move(errors));
    }
    return Dataset(codebook, std::move(records), provenance);
  }

 private:
  Codebook codebook_;
  std::vector<SurveyRecord> records_;
  Provenance provenance_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Codebook load_codebook(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed codebook file: ") + e.what());
  }
  return Codebook::from_json(j);
}

inline Dataset load_dataset(const std::string& codebook_path, const std::string& data_path) {
  return Dataset::from_csv(load_codebook(codebook_path), read_text_file(data_path));
}

inline void write_dataset(const Dataset& dataset, const std::string& codebook_path, const std::string& data_path) {
  write_text_file(codebook_path, dataset.codebook().to_json().dump(2) + "\n");
  write_text_file(data_path, dataset.to_csv());
}

struct DatasetSummary {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> per_country;  // codebook order
  std::vector<std::pair<std::string, double>> missingness;        // field -> fraction missing

  json to_json() const {
    json j;
    j["total"] = total;
    j["per_country"] = json::object();
    for (const auto& [c, n] : per_country) j["per_country"][c] = n;
    j["missingness"] = json::object();
    for (const auto& [f, m] : missingness) j["missingness"][f] = m;
    return j;
  }
};

inline DatasetSummary summarize(const Dataset& dataset) {
  const auto& cb = dataset.codebook();
  DatasetSummary s;
  s.total = dataset.size();
  std::vector<std::size_t> counts(cb.country().categories.size(), 0);
  std::vector<std::size_t> missing(cb.size(), 0);
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    ++counts[static_cast<std::size_t>(dataset.country_of(r))];
    const auto& resp = dataset.record(r).responses;
    for (std::size_t f = 0; f < cb.size(); ++f)
      if (!resp[f]) ++missing[f];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) s.per_country.emplace_back(cb.country().categories[c], counts[c]);
  for (std::size_t f = 0; f < cb.size(); ++f)
    s.missingness.emplace_back(cb.field(f).name,
                               s.total ? static_cast<double>(missing[f]) / static_cast<double>(s.total) : 0.0);
  return s;
}

}  // namespace dflsim
