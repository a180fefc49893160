// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toxbench::protocol {

struct PredictRequest {
  std::vector<std::string> smiles;
};

struct PredictResponse {
  std::map<std::string, std::map<std::string, double>> predictions;
  std::map<std::string, std::string> model_info;
};

// A decode failure, located by a JSON pointer such as "/predictions/CCO/NR-AR".
class DecodeError: public std::runtime_error {
public:
  DecodeError(std::string path, const std::string &message);
  const std::string &path() const { return path_; }
  const std::string &message() const { return message_; }

private:
  std::string path_;
  std::string message_;
};

// Canonical form: keys sorted, no insignificant whitespace, reals in
// shortest round-trip decimal. Encoding a non-finite value throws
// std::invalid_argument.
std::string encode_request(const PredictRequest &req);
std::string encode_response(const PredictResponse &resp);

// Requests must be a non-empty list of non-empty, distinct strings.
// Response values may be bare NaN/Infinity tokens (decoded as non-finite so
// that validation can report them); anything else non-numeric is an error.
PredictRequest decode_request(std::string_view text);
PredictResponse decode_response(std::string_view text);

// {"error":{"message":...,"path":...}}
std::string encode_error(std::string_view path, std::string_view message);

enum class ViolationKind { kMissingMolecule, kMissingTarget, kExtraKey, kNonFinite, kOutOfRange, kMalformed };
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string smiles;
  std::string endpoint;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind k) const;
};

// Lists every violation: requested molecules or targets that are missing,
// unknown keys, and values that are non-finite or outside [0, 1].
ValidationReport validate_response(const PredictRequest &req, const PredictResponse &resp);

// JSON rendering of a report for result records.
std::string encode_report(const ValidationReport &r);

}  // namespace toxbench::protocol
