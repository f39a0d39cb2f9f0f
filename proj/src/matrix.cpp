#include "tilechain/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "tilechain/error.hpp"

namespace tilechain {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::input_not_found: return "input-not-found";
    case ErrorCategory::invalid_input: return "invalid-input";
    case ErrorCategory::domain_conflict: return "domain-conflict";
    case ErrorCategory::unknown_domain: return "unknown-domain";
    case ErrorCategory::inconsistent_tiles: return "inconsistent-tiles";
    case ErrorCategory::degenerate_target: return "degenerate-target";
    case ErrorCategory::inference_failed: return "inference-failed";
    case ErrorCategory::not_found: return "not-found";
    case ErrorCategory::busy: return "busy";
  }
  return "unknown";
}

const char* to_string(ValueMode mode) noexcept {
  switch (mode) {
    case ValueMode::counts: return "counts";
    case ValueMode::binary: return "binary";
    case ValueMode::real: return "real";
  }
  return "unknown";
}

ValueMode value_mode_from_string(std::string_view text) {
  if (text == "binary") return ValueMode::binary;
  if (text == "real") return ValueMode::real;
  if (text == "counts") return ValueMode::counts;
  throw Error(ErrorCategory::invalid_input, "unknown mode '" + std::string(text) + "'");
}

TransactionMatrix::TransactionMatrix(Index n_rows, Index n_cols, ValueMode mode,
                                     std::vector<Triplet> triplets)
    : n_rows_(n_rows), n_cols_(n_cols), mode_(mode) {
  for (const auto& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw Error(ErrorCategory::invalid_input, "matrix entry (" + std::to_string(t.row) + "," +
                                                    std::to_string(t.col) + ") out of bounds");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  // Merge duplicates, drop zeros.
  std::vector<Triplet> merged;
  merged.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col) {
      merged.back().value += t.value;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Triplet& t) { return t.value == 0.0; });

  row_offsets_.assign(n_rows_ + 1, 0);
  col_offsets_.assign(n_cols_ + 1, 0);
  row_entries_.reserve(merged.size());
  for (const auto& t : merged) {
    row_offsets_[t.row + 1]++;
    col_offsets_[t.col + 1]++;
    row_entries_.push_back({t.col, t.value});
  }
  for (Index i = 0; i < n_rows_; ++i) row_offsets_[i + 1] += row_offsets_[i];
  for (Index j = 0; j < n_cols_; ++j) col_offsets_[j + 1] += col_offsets_[j];

  col_entries_.resize(merged.size());
  std::vector<std::size_t> cursor(col_offsets_.begin(), col_offsets_.end() - 1);
  for (const auto& t : merged) col_entries_[cursor[t.col]++] = {t.row, t.value};
}

double TransactionMatrix::value(Index row, Index col) const {
  auto entries = this->row(row);
  auto it = std::lower_bound(entries.begin(), entries.end(), col,
                             [](const RowEntry& e, Index c) { return e.col < c; });
  return it != entries.end() && it->col == col ? it->value : 0.0;
}

std::span<const TransactionMatrix::RowEntry> TransactionMatrix::row(Index i) const {
  return {row_entries_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
}

std::span<const TransactionMatrix::ColEntry> TransactionMatrix::column(Index j) const {
  return {col_entries_.data() + col_offsets_[j], col_offsets_[j + 1] - col_offsets_[j]};
}

double TransactionMatrix::max_value() const noexcept {
  double best = 0.0;
  for (const auto& e : row_entries_) best = std::max(best, e.value);
  return best;
}

std::vector<Triplet> TransactionMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(row_entries_.size());
  for (Index i = 0; i < n_rows_; ++i) {
    for (const auto& e : row(i)) out.push_back({i, e.col, e.value});
  }
  return out;
}

bool operator==(const TransactionMatrix& a, const TransactionMatrix& b) {
  if (a.n_rows_ != b.n_rows_ || a.n_cols_ != b.n_cols_ || a.mode_ != b.mode_) return false;
  if (a.row_offsets_ != b.row_offsets_) return false;
  return std::equal(a.row_entries_.begin(), a.row_entries_.end(), b.row_entries_.begin(),
                    b.row_entries_.end(), [](const auto& x, const auto& y) {
                      return x.col == y.col && x.value == y.value;
                    });
}

TransactionMatrix normalize(const TransactionMatrix& matrix) {
  const double max = matrix.max_value();
  if (max <= 0.0) {
    throw Error(ErrorCategory::invalid_input, "cannot normalize an all-zero matrix");
  }
  auto entries = matrix.triplets();
  for (auto& t : entries) t.value /= max;
  return TransactionMatrix(matrix.n_rows(), matrix.n_cols(), ValueMode::real, std::move(entries));
}

TransactionMatrix binarize(const TransactionMatrix& matrix) {
  auto entries = matrix.triplets();
  for (auto& t : entries) t.value = 1.0;
  return TransactionMatrix(matrix.n_rows(), matrix.n_cols(), ValueMode::binary,
                           std::move(entries));
}

std::optional<Index> Dataset::find_entity(std::string_view label) const {
  if (auto it = entity_index_.find(std::string(label)); it != entity_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<Index> Dataset::find_doc(std::string_view doc_id) const {
  if (auto it = doc_index_.find(std::string(doc_id)); it != doc_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<DomainId> Dataset::find_domain(std::string_view name) const {
  for (const auto& d : domains) {
    if (d.name == name) return d.id;
  }
  return std::nullopt;
}

Dataset Dataset::with_matrix(TransactionMatrix replacement) const {
  Dataset copy = *this;
  copy.matrix = std::move(replacement);
  return copy;
}

Dataset load_transactions(std::span<const Record> records) {
  if (records.empty()) throw Error(ErrorCategory::invalid_input, "no transaction records");

  Dataset ds;
  std::unordered_map<std::string, DomainId> domain_index;
  std::vector<Triplet> triplets;
  triplets.reserve(records.size());

  for (const auto& rec : records) {
    if (rec.count < 0) {
      throw Error(ErrorCategory::invalid_input,
                  "negative count for (" + rec.doc_id + ", " + rec.entity + ")");
    }
    auto [dom_it, new_domain] =
        domain_index.try_emplace(rec.domain, static_cast<DomainId>(ds.domains.size()));
    if (new_domain) ds.domains.push_back({dom_it->second, rec.domain, {}});

    auto [doc_it, new_doc] =
        ds.doc_index_.try_emplace(rec.doc_id, static_cast<Index>(ds.doc_ids.size()));
    if (new_doc) ds.doc_ids.push_back(rec.doc_id);

    auto [ent_it, new_entity] =
        ds.entity_index_.try_emplace(rec.entity, static_cast<Index>(ds.entity_labels.size()));
    if (new_entity) {
      ds.entity_labels.push_back(rec.entity);
      ds.entity_domain.push_back(dom_it->second);
      ds.domains[dom_it->second].entity_ids.push_back(ent_it->second);
    } else if (ds.entity_domain[ent_it->second] != dom_it->second) {
      throw Error(ErrorCategory::domain_conflict,
                  "entity '" + rec.entity + "' appears under domains '" +
                      ds.domains[ds.entity_domain[ent_it->second]].name + "' and '" + rec.domain +
                      "'");
    }
    if (rec.count > 0) {
      triplets.push_back({doc_it->second, ent_it->second, static_cast<double>(rec.count)});
    }
  }

  ds.matrix = TransactionMatrix(static_cast<Index>(ds.doc_ids.size()),
                                static_cast<Index>(ds.entity_labels.size()), ValueMode::counts,
                                std::move(triplets));
  return ds;
}

namespace {

// Splits one CSV line honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::int64_t parse_count(const std::string& text, std::size_t line_no) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || value < 0) {
    throw Error(ErrorCategory::invalid_input, "line " + std::to_string(line_no) +
                                                  ": count '" + text +
                                                  "' is not a nonnegative integer");
  }
  return value;
}

}  // namespace

std::vector<Record> read_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Record> out;

  auto strip = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  if (!std::getline(in, line)) throw Error(ErrorCategory::invalid_input, "empty CSV input");
  ++line_no;
  strip(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  int col_doc = -1, col_entity = -1, col_domain = -1, col_count = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "doc_id") col_doc = static_cast<int>(k);
    else if (header[k] == "entity") col_entity = static_cast<int>(k);
    else if (header[k] == "domain") col_domain = static_cast<int>(k);
    else if (header[k] == "count") col_count = static_cast<int>(k);
  }
  if (col_doc < 0 || col_entity < 0 || col_domain < 0 || col_count < 0) {
    throw Error(ErrorCategory::invalid_input,
                "CSV header must contain doc_id,entity,domain,count");
  }
  const auto width = static_cast<std::size_t>(std::max({col_doc, col_entity, col_domain, col_count}));

  while (std::getline(in, line)) {
    ++line_no;
    strip(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() <= width) {
      throw Error(ErrorCategory::invalid_input,
                  "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields");
    }
    out.push_back({fields[col_doc], fields[col_entity], fields[col_domain],
                   parse_count(fields[col_count], line_no)});
  }
  return out;
}

std::vector<Record> read_records_jsonl(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Record> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      const auto count = obj.at("count");
      if (!count.is_number_integer() || count.get<std::int64_t>() < 0) {
        throw Error(ErrorCategory::invalid_input,
                    "line " + std::to_string(line_no) + ": count must be a nonnegative integer");
      }
      out.push_back({obj.at("doc_id").get<std::string>(), obj.at("entity").get<std::string>(),
                     obj.at("domain").get<std::string>(), count.get<std::int64_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::invalid_input,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Record> read_records_file(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path) || fs::is_directory(path)) {
    throw Error(ErrorCategory::input_not_found, "no such input file: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::input_not_found, "cannot open input file: " + path);
  const auto ext = fs::path(path).extension().string();
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return read_records_jsonl(in);
  return read_records_csv(in);
}

}  // namespace tilechain
