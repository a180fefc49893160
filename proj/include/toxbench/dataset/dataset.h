// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace toxbench::dataset {

inline constexpr std::size_t kEndpointCount = 12;

struct Endpoint {
  std::string_view name;
  std::string_view description;
};

// The twelve assays in their fixed column order.
const std::array<Endpoint, kEndpointCount> &endpoints();
std::optional<std::size_t> endpoint_index(std::string_view name);

using LabelRow = std::array<std::optional<std::uint8_t>, kEndpointCount>;

// Sparse binary label matrix. A label can only be read where it is present;
// there is no accessor that yields a value for an absent cell.
class LabelMatrix {
public:
  // Throws std::invalid_argument for a label outside {0, 1}.
  void add_row(std::string id, std::string smiles, const LabelRow &labels);

  std::size_t rows() const { return ids_.size(); }
  const std::string &id(std::size_t r) const { return ids_[r]; }
  const std::string &smiles(std::size_t r) const { return smiles_[r]; }
  const std::vector<std::string> &ids() const { return ids_; }
  const std::vector<std::string> &smiles_list() const { return smiles_; }

  bool present(std::size_t r, std::size_t e) const { return present_[r * kEndpointCount + e] != 0; }
  // Throws std::logic_error when the cell is absent.
  std::uint8_t label(std::size_t r, std::size_t e) const;
  std::optional<std::uint8_t> get(std::size_t r, std::size_t e) const;
  LabelRow row(std::size_t r) const;

  std::size_t present_count() const;
  std::size_t positive_count() const;

  // Rows [begin, end) as a new matrix.
  LabelMatrix slice(std::size_t begin, std::size_t end) const;
  LabelMatrix select(const std::vector<std::size_t> &rows) const;

private:
  std::vector<std::string> ids_;
  std::vector<std::string> smiles_;
  std::vector<std::uint8_t> values_;
  std::vector<std::uint8_t> present_;
};

class DatasetError: public std::runtime_error {
public:
  DatasetError(std::size_t line, std::string column, const std::string &message);
  std::size_t line() const { return line_; }
  const std::string &column() const { return column_; }

private:
  std::size_t line_;
  std::string column_;
};

struct ExcludedRow {
  std::size_t line;
  std::string id;
  std::string smiles;
  std::string reason;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::vector<ExcludedRow> excluded;
};

struct LoadedDataset {
  LabelMatrix matrix;
  LoadReport report;
  std::string content_hash;  // hash of the file bytes
};

// CSV with header `id,smiles,NR-AR,...,SR-p53`; labels "0", "1" or empty.
// Rows whose SMILES do not parse are excluded and reported. Throws
// DatasetError on a malformed header, a bad label cell or a duplicate id.
LoadedDataset parse_dataset(std::string_view text);
LoadedDataset load_dataset(const std::string &path);

// Canonical CSV form: LF line endings, fields quoted only when needed.
std::string format_dataset(const LabelMatrix &m);
void write_dataset(const std::string &path, const LabelMatrix &m);

struct ClassCounts {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_missing = 0;
};
ClassCounts endpoint_class_counts(const LabelMatrix &m, std::size_t endpoint);

struct EndpointAudit {
  std::string endpoint;
  std::size_t present = 0;
  std::size_t positives = 0;
  double labeled_pct = 0;
  double missing_pct = 0;
  double active_pct = 0;
};

struct SplitAudit {
  std::string split;
  std::size_t total_rows = 0;
  std::size_t unique_molecules = 0;
  std::size_t excluded_rows = 0;
  std::size_t present = 0;
  std::size_t positives = 0;
  double labeled_pct = 0;
  double missing_pct = 0;
  double active_pct = 0;
  std::vector<EndpointAudit> endpoints;
};

// Unique molecules are counted by labeled-graph isomorphism of the parsed
// SMILES, falling back to string equality when a SMILES does not parse.
SplitAudit audit(const LabelMatrix &m, std::string split = "data", std::size_t excluded_rows = 0);

std::string render_audit(const std::vector<SplitAudit> &audits);
nlohmann::json audit_to_json(const SplitAudit &a);

}  // namespace toxbench::dataset
