#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tilechain {

using Index = std::uint32_t;
using DomainId = std::uint32_t;

// counts: raw summed occurrence counts straight from ingestion.
// binary: every stored value is 1.
// real:   every stored value lies in (0, 1].
enum class ValueMode { counts, binary, real };

const char* to_string(ValueMode mode) noexcept;
ValueMode value_mode_from_string(std::string_view text);

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Sparse N x M document-entity matrix. Absent cells are 0. Immutable once
/// built; stores both row-major and column-major views so row and column
/// tiles can be walked without searching.
class TransactionMatrix {
 public:
  struct RowEntry {
    Index col;
    double value;
  };
  struct ColEntry {
    Index row;
    double value;
  };

  TransactionMatrix() = default;

  // Duplicate (row, col) triplets are summed; zero values are dropped.
  TransactionMatrix(Index n_rows, Index n_cols, ValueMode mode,
                    std::vector<Triplet> triplets);

  Index n_rows() const noexcept { return n_rows_; }
  Index n_cols() const noexcept { return n_cols_; }
  ValueMode mode() const noexcept { return mode_; }
  std::size_t nonzeros() const noexcept { return row_entries_.size(); }

  double value(Index row, Index col) const;
  bool contains(Index row, Index col) const { return value(row, col) != 0.0; }

  std::span<const RowEntry> row(Index i) const;
  std::span<const ColEntry> column(Index j) const;

  double max_value() const noexcept;
  std::vector<Triplet> triplets() const;

  friend bool operator==(const TransactionMatrix& a, const TransactionMatrix& b);

 private:
  Index n_rows_ = 0;
  Index n_cols_ = 0;
  ValueMode mode_ = ValueMode::counts;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<RowEntry> row_entries_;
  std::vector<std::size_t> col_offsets_{0};
  std::vector<ColEntry> col_entries_;
};

/// Divides every value by the global maximum entry. The result is in real
/// mode with a maximum of exactly 1. Throws on an all-zero matrix.
TransactionMatrix normalize(const TransactionMatrix& matrix);

/// Replaces every nonzero by 1.
TransactionMatrix binarize(const TransactionMatrix& matrix);

struct EntityDomain {
  DomainId id = 0;
  std::string name;
  std::vector<Index> entity_ids;  // ascending column indices
};

struct Record {
  std::string doc_id;
  std::string entity;
  std::string domain;
  std::int64_t count = 0;
};

/// Ingested corpus: the count matrix plus the labels needed to talk about
/// rows and columns by name.
struct Dataset {
  TransactionMatrix matrix;
  std::vector<std::string> doc_ids;        // row -> doc id
  std::vector<std::string> entity_labels;  // col -> entity label
  std::vector<DomainId> entity_domain;     // col -> domain id
  std::vector<EntityDomain> domains;       // first-seen order

  std::optional<Index> find_entity(std::string_view label) const;
  std::optional<Index> find_doc(std::string_view doc_id) const;
  std::optional<DomainId> find_domain(std::string_view name) const;

  /// Same labels and domains over a different value matrix (e.g. binarized).
  Dataset with_matrix(TransactionMatrix replacement) const;

 private:
  friend Dataset load_transactions(std::span<const Record> records);
  std::unordered_map<std::string, Index> entity_index_;
  std::unordered_map<std::string, Index> doc_index_;
};

/// Builds a Dataset from flat records. Rows and columns are numbered in
/// first-seen order and repeated (doc, entity) counts are summed.
Dataset load_transactions(std::span<const Record> records);

// Record readers. CSV requires a header naming doc_id, entity, domain and
// count; JSON lines carry the same keys per object.
std::vector<Record> read_records_csv(std::istream& in);
std::vector<Record> read_records_jsonl(std::istream& in);
// Dispatches on extension: .jsonl/.ndjson/.json read as JSON lines, else CSV.
std::vector<Record> read_records_file(const std::string& path);

}  // namespace tilechain
