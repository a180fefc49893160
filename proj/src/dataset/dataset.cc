// SPDX-License-Identifier: Apache-2.0

#include "toxbench/dataset/dataset.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "toxbench/chem/smiles.h"
#include "toxbench/util/binary_io.h"
#include "toxbench/util/hash.h"

namespace toxbench::dataset {

namespace {

constexpr std::array<Endpoint, kEndpointCount> kEndpoints{{
    {"NR-AR", "Androgen Receptor - involved in male hormone signaling"},
    {"NR-AR-LBD", "Androgen Receptor Ligand Binding Domain - direct binding to androgen receptor"},
    {"NR-AhR", "Aryl Hydrocarbon Receptor - responds to environmental chemicals"},
    {"NR-Aromatase", "Aromatase enzyme - converts androgens to estrogens"},
    {"NR-ER", "Estrogen Receptor - involved in female hormone signaling"},
    {"NR-ER-LBD", "Estrogen Receptor Ligand Binding Domain - direct binding to estrogen receptor"},
    {"NR-PPAR-gamma", "Peroxisome Proliferator-Activated Receptor Gamma - regulates metabolism"},
    {"SR-ARE", "Antioxidant Response Element - responds to oxidative stress"},
    {"SR-ATAD5", "ATAD5 - involved in DNA replication and genome stability"},
    {"SR-HSE", "Heat Shock Response Element - responds to cellular stress"},
    {"SR-MMP", "Mitochondrial Membrane Potential - indicates mitochondrial function"},
    {"SR-p53", "p53 tumor suppressor - activated by DNA damage and stress"},
}};

// Splits one CSV record. Quoted fields may contain commas and doubled quotes
// but not newlines.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw DatasetError(line_no, "", "text after closing quote");
      cur.push_back(c);
    }
  }
  if (quoted) throw DatasetError(line_no, "", "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c: s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

const std::array<Endpoint, kEndpointCount> &endpoints() { return kEndpoints; }

std::optional<std::size_t> endpoint_index(std::string_view name) {
  for (std::size_t i = 0; i < kEndpointCount; ++i)
    if (kEndpoints[i].name == name) return i;
  return std::nullopt;
}

void LabelMatrix::add_row(std::string id, std::string smiles, const LabelRow &labels) {
  for (const auto &l: labels)
    if (l && *l > 1) throw std::invalid_argument("label must be 0 or 1");
  ids_.push_back(std::move(id));
  smiles_.push_back(std::move(smiles));
  for (const auto &l: labels) {
    present_.push_back(l ? 1 : 0);
    values_.push_back(l.value_or(0));
  }
}

std::uint8_t LabelMatrix::label(std::size_t r, std::size_t e) const {
  if (!present(r, e))
    throw std::logic_error("label read at absent cell (row " + std::to_string(r) + ", " +
                           std::string(kEndpoints[e].name) + ")");
  return values_[r * kEndpointCount + e];
}

std::optional<std::uint8_t> LabelMatrix::get(std::size_t r, std::size_t e) const {
  if (!present(r, e)) return std::nullopt;
  return values_[r * kEndpointCount + e];
}

LabelRow LabelMatrix::row(std::size_t r) const {
  LabelRow out;
  for (std::size_t e = 0; e < kEndpointCount; ++e) out[e] = get(r, e);
  return out;
}

std::size_t LabelMatrix::present_count() const {
  std::size_t n = 0;
  for (auto p: present_) n += p;
  return n;
}

std::size_t LabelMatrix::positive_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < present_.size(); ++i) n += present_[i] && values_[i];
  return n;
}

LabelMatrix LabelMatrix::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = begin; r < end && r < this->rows(); ++r) rows.push_back(r);
  return select(rows);
}

LabelMatrix LabelMatrix::select(const std::vector<std::size_t> &rows) const {
  LabelMatrix out;
  for (auto r: rows) out.add_row(ids_.at(r), smiles_.at(r), row(r));
  return out;
}

DatasetError::DatasetError(std::size_t line, std::string column, const std::string &message)
    : std::runtime_error("line " + std::to_string(line) + (column.empty() ? "" : ", column " + column) + ": " +
                         message),
      line_(line), column_(std::move(column)) {}

LoadedDataset parse_dataset(std::string_view text) {
  LoadedDataset out;
  out.content_hash = to_hex(fnv1a(text));
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::set<std::string> seen_ids;
  std::size_t line_no = 0;
  bool header_done = false;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_done) {
      auto header = split_csv(line, line_no);
      if (header.size() != 2 + kEndpointCount || header[0] != "id" || header[1] != "smiles")
        throw DatasetError(line_no, "", "header must be id,smiles followed by the 12 endpoint names");
      for (std::size_t e = 0; e < kEndpointCount; ++e)
        if (header[2 + e] != kEndpoints[e].name)
          throw DatasetError(line_no, header[2 + e],
                             "expected endpoint column '" + std::string(kEndpoints[e].name) + "'");
      header_done = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv(line, line_no);
    if (fields.size() != 2 + kEndpointCount)
      throw DatasetError(line_no, "", "expected " + std::to_string(2 + kEndpointCount) + " fields, got " +
                                          std::to_string(fields.size()));
    ++out.report.rows_read;
    const std::string &id = fields[0];
    if (id.empty()) throw DatasetError(line_no, "id", "empty id");
    if (!seen_ids.insert(id).second) throw DatasetError(line_no, "id", "duplicate id '" + id + "'");
    LabelRow labels;
    for (std::size_t e = 0; e < kEndpointCount; ++e) {
      const std::string &cell = fields[2 + e];
      if (cell.empty()) continue;
      if (cell == "0") labels[e] = 0;
      else if (cell == "1") labels[e] = 1;
      else throw DatasetError(line_no, std::string(kEndpoints[e].name), "label must be 0, 1 or empty, got '" + cell + "'");
    }
    auto parsed = chem::try_parse_smiles(fields[1]);
    if (parsed.error) {
      out.report.excluded.push_back({line_no, id, fields[1], parsed.error->what()});
      continue;
    }
    out.matrix.add_row(id, fields[1], labels);
  }
  if (!header_done) throw DatasetError(1, "", "missing header");
  return out;
}

LoadedDataset load_dataset(const std::string &path) { return parse_dataset(read_file(path)); }

std::string format_dataset(const LabelMatrix &m) {
  std::string out = "id,smiles";
  for (const auto &e: kEndpoints) out += "," + std::string(e.name);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += csv_field(m.id(r)) + "," + csv_field(m.smiles(r));
    for (std::size_t e = 0; e < kEndpointCount; ++e) {
      out += ",";
      if (auto v = m.get(r, e)) out += (*v ? "1" : "0");
    }
    out += "\n";
  }
  return out;
}

void write_dataset(const std::string &path, const LabelMatrix &m) { write_file(path, format_dataset(m)); }

ClassCounts endpoint_class_counts(const LabelMatrix &m, std::size_t endpoint) {
  ClassCounts c;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto v = m.get(r, endpoint);
    if (!v) ++c.n_missing;
    else if (*v) ++c.n_pos;
    else ++c.n_neg;
  }
  return c;
}

SplitAudit audit(const LabelMatrix &m, std::string split, std::size_t excluded_rows) {
  SplitAudit a;
  a.split = std::move(split);
  a.total_rows = m.rows();
  a.excluded_rows = excluded_rows;

  // Bucket by invariant hash, then resolve collisions by isomorphism.
  std::unordered_map<std::uint64_t, std::vector<chem::Molecule>> buckets;
  std::set<std::string> unparsed;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto parsed = chem::try_parse_smiles(m.smiles(r));
    if (!parsed.molecule) {
      if (unparsed.insert(m.smiles(r)).second) ++a.unique_molecules;
      continue;
    }
    auto &bucket = buckets[chem::graph_invariant_hash(*parsed.molecule)];
    bool found = false;
    for (const auto &other: bucket)
      if (chem::are_isomorphic(other, *parsed.molecule)) {
        found = true;
        break;
      }
    if (!found) {
      bucket.push_back(std::move(*parsed.molecule));
      ++a.unique_molecules;
    }
  }

  for (std::size_t e = 0; e < kEndpointCount; ++e) {
    auto c = endpoint_class_counts(m, e);
    EndpointAudit ea;
    ea.endpoint = std::string(kEndpoints[e].name);
    ea.present = c.n_pos + c.n_neg;
    ea.positives = c.n_pos;
    ea.labeled_pct = pct(ea.present, m.rows());
    ea.missing_pct = m.rows() == 0 ? 0.0 : 100.0 - ea.labeled_pct;
    ea.active_pct = pct(ea.positives, ea.present);
    a.present += ea.present;
    a.positives += ea.positives;
    a.endpoints.push_back(std::move(ea));
  }
  a.labeled_pct = pct(a.present, m.rows() * kEndpointCount);
  a.missing_pct = m.rows() == 0 ? 0.0 : 100.0 - a.labeled_pct;
  a.active_pct = pct(a.positives, a.present);
  return a;
}

std::string render_audit(const std::vector<SplitAudit> &audits) {
  std::string out;
  char buf[160];
  for (const auto &a: audits) {
    std::snprintf(buf, sizeof buf, "%s: total %zu, unique %zu, excluded %zu, labeled %s%%, missing %s%%, active %s%%\n",
                  a.split.c_str(), a.total_rows, a.unique_molecules, a.excluded_rows, fmt1(a.labeled_pct).c_str(),
                  fmt1(a.missing_pct).c_str(), fmt1(a.active_pct).c_str());
    out += buf;
    std::snprintf(buf, sizeof buf, "  %-14s %8s %8s %8s\n", "endpoint", "Lab.%", "Miss.%", "Act.%");
    out += buf;
    for (const auto &e: a.endpoints) {
      std::snprintf(buf, sizeof buf, "  %-14s %8s %8s %8s\n", e.endpoint.c_str(), fmt1(e.labeled_pct).c_str(),
                    fmt1(e.missing_pct).c_str(), fmt1(e.active_pct).c_str());
      out += buf;
    }
  }
  return out;
}

nlohmann::json audit_to_json(const SplitAudit &a) {
  auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
  nlohmann::json j;
  j["split"] = a.split;
  j["total_rows"] = a.total_rows;
  j["unique_molecules"] = a.unique_molecules;
  j["excluded_rows"] = a.excluded_rows;
  j["present"] = a.present;
  j["positives"] = a.positives;
  j["labeled_pct"] = round1(a.labeled_pct);
  j["missing_pct"] = round1(a.missing_pct);
  j["active_pct"] = round1(a.active_pct);
  auto &eps = j["endpoints"] = nlohmann::json::array();
  for (const auto &e: a.endpoints)
    eps.push_back({{"endpoint", e.endpoint},
                   {"present", e.present},
                   {"positives", e.positives},
                   {"labeled_pct", round1(e.labeled_pct)},
                   {"missing_pct", round1(e.missing_pct)},
                   {"active_pct", round1(e.active_pct)}});
  return j;
}

}  // namespace toxbench::dataset
