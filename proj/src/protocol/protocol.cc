// SPDX-License-Identifier: Apache-2.0

#include "toxbench/protocol/protocol.h"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"
#include "toxbench/dataset/dataset.h"

namespace toxbench::protocol {

namespace {

using nlohmann::json;

// Placeholder strings for non-finite tokens. They start with a control
// byte, which well-formed payloads never carry in a value position.
constexpr std::string_view kNanSentinel = "\x01toxbench-nan";
constexpr std::string_view kPosInfSentinel = "\x01toxbench-inf";
constexpr std::string_view kNegInfSentinel = "\x01toxbench-ninf";

std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

std::string number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot encode a non-finite number");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pointer_token(std::string_view s) {
  std::string out;
  for (char c: s) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out.push_back(c);
  }
  return out;
}

// Replaces bare NaN / Infinity / -Infinity tokens outside strings with
// sentinel strings so that the strict JSON parser accepts the document.
std::string rewrite_non_finite(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < text.size()) out.push_back(text[++i]);
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    auto match = [&](std::string_view tok) { return text.substr(i, tok.size()) == tok; };
    auto emit = [&](std::string_view sentinel, std::size_t len) {
      out += quote(sentinel);
      i += len - 1;
    };
    if (match("NaN")) emit(kNanSentinel, 3);
    else if (match("-Infinity")) emit(kNegInfSentinel, 9);
    else if (match("Infinity")) emit(kPosInfSentinel, 8);
    else if (match("-NaN")) emit(kNanSentinel, 4);
    else out.push_back(c);
  }
  return out;
}

json parse(std::string_view text, bool allow_non_finite) {
  try {
    return json::parse(allow_non_finite ? rewrite_non_finite(text) : std::string(text));
  } catch (const json::parse_error &e) {
    throw DecodeError("", std::string("invalid JSON: ") + e.what());
  }
}

std::string type_name(const json &j) { return j.type_name(); }

}  // namespace

DecodeError::DecodeError(std::string path, const std::string &message)
    : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)),
      message_(message) {}

std::string encode_request(const PredictRequest &req) {
  std::string out = "{\"smiles\":[";
  for (std::size_t i = 0; i < req.smiles.size(); ++i) {
    if (i) out += ",";
    out += quote(req.smiles[i]);
  }
  return out + "]}";
}

std::string encode_response(const PredictResponse &resp) {
  std::string out = "{\"model_info\":{";
  bool first = true;
  for (const auto &[k, v]: resp.model_info) {
    if (!first) out += ",";
    first = false;
    out += quote(k) + ":" + quote(v);
  }
  out += "},\"predictions\":{";
  first = true;
  for (const auto &[smiles, row]: resp.predictions) {
    if (!first) out += ",";
    first = false;
    out += quote(smiles) + ":{";
    bool inner_first = true;
    for (const auto &[ep, v]: row) {
      if (!inner_first) out += ",";
      inner_first = false;
      out += quote(ep) + ":" + number(v);
    }
    out += "}";
  }
  return out + "}}";
}

PredictRequest decode_request(std::string_view text) {
  json j = parse(text, false);
  if (!j.is_object()) throw DecodeError("", "request must be an object");
  for (const auto &[key, _]: j.items())
    if (key != "smiles") throw DecodeError("/" + pointer_token(key), "unknown field");
  if (!j.contains("smiles")) throw DecodeError("/smiles", "missing field");
  const json &list = j["smiles"];
  if (!list.is_array()) throw DecodeError("/smiles", "expected array, got " + type_name(list));
  if (list.empty()) throw DecodeError("/smiles", "must not be empty");
  PredictRequest req;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "/smiles/" + std::to_string(i);
    if (!list[i].is_string()) throw DecodeError(path, "expected string, got " + type_name(list[i]));
    auto s = list[i].get<std::string>();
    if (s.empty()) throw DecodeError(path, "empty SMILES");
    if (!seen.insert(s).second) throw DecodeError(path, "duplicate SMILES '" + s + "'");
    req.smiles.push_back(std::move(s));
  }
  return req;
}

PredictResponse decode_response(std::string_view text) {
  json j = parse(text, true);
  if (!j.is_object()) throw DecodeError("", "response must be an object");
  if (!j.contains("predictions")) throw DecodeError("/predictions", "missing field");
  if (!j.contains("model_info")) throw DecodeError("/model_info", "missing field");
  PredictResponse resp;
  const json &info = j["model_info"];
  if (!info.is_object()) throw DecodeError("/model_info", "expected object, got " + type_name(info));
  for (const auto &[k, v]: info.items()) {
    if (!v.is_string()) throw DecodeError("/model_info/" + pointer_token(k), "expected string, got " + type_name(v));
    resp.model_info[k] = v.get<std::string>();
  }
  for (const char *required: {"name", "version"})
    if (!resp.model_info.count(required)) throw DecodeError(std::string("/model_info/") + required, "missing field");

  const json &preds = j["predictions"];
  if (!preds.is_object()) throw DecodeError("/predictions", "expected object, got " + type_name(preds));
  for (const auto &[smiles, row]: preds.items()) {
    const std::string row_path = "/predictions/" + pointer_token(smiles);
    if (!row.is_object()) throw DecodeError(row_path, "expected object, got " + type_name(row));
    auto &out_row = resp.predictions[smiles];
    for (const auto &[ep, v]: row.items()) {
      const std::string path = row_path + "/" + pointer_token(ep);
      double value;
      if (v.is_number()) {
        value = v.get<double>();
      } else if (v.is_string() && v.get<std::string>() == kNanSentinel) {
        value = std::numeric_limits<double>::quiet_NaN();
      } else if (v.is_string() && v.get<std::string>() == kPosInfSentinel) {
        value = std::numeric_limits<double>::infinity();
      } else if (v.is_string() && v.get<std::string>() == kNegInfSentinel) {
        value = -std::numeric_limits<double>::infinity();
      } else {
        throw DecodeError(path, "expected number, got " + type_name(v));
      }
      out_row[ep] = value;
    }
  }
  return resp;
}

std::string encode_error(std::string_view path, std::string_view message) {
  json j = {{"error", {{"path", std::string(path)}, {"message", std::string(message)}}}};
  return j.dump();
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
  case ViolationKind::kMissingMolecule: return "missing_molecule";
  case ViolationKind::kMissingTarget: return "missing_target";
  case ViolationKind::kExtraKey: return "extra_key";
  case ViolationKind::kNonFinite: return "non_finite";
  case ViolationKind::kOutOfRange: return "out_of_range";
  case ViolationKind::kMalformed: return "malformed";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ViolationKind k) const {
  std::size_t n = 0;
  for (const auto &v: violations) n += v.kind == k;
  return n;
}

ValidationReport validate_response(const PredictRequest &req, const PredictResponse &resp) {
  ValidationReport report;
  auto add = [&](ViolationKind k, const std::string &smiles, std::string endpoint, std::string detail) {
    report.violations.push_back({k, smiles, std::move(endpoint), std::move(detail)});
  };
  std::set<std::string> requested(req.smiles.begin(), req.smiles.end());
  for (const auto &smiles: req.smiles) {
    auto it = resp.predictions.find(smiles);
    if (it == resp.predictions.end()) {
      add(ViolationKind::kMissingMolecule, smiles, "", "no predictions for requested molecule");
      continue;
    }
    const auto &row = it->second;
    for (const auto &ep: dataset::endpoints()) {
      auto v = row.find(std::string(ep.name));
      if (v == row.end()) {
        add(ViolationKind::kMissingTarget, smiles, std::string(ep.name), "target missing");
      } else if (!std::isfinite(v->second)) {
        add(ViolationKind::kNonFinite, smiles, std::string(ep.name), "value is not finite");
      } else if (v->second < 0 || v->second > 1) {
        add(ViolationKind::kOutOfRange, smiles, std::string(ep.name), "value " + number(v->second) + " outside [0, 1]");
      }
    }
    for (const auto &[ep, _]: row)
      if (!dataset::endpoint_index(ep)) add(ViolationKind::kExtraKey, smiles, ep, "unknown endpoint");
  }
  for (const auto &[smiles, _]: resp.predictions)
    if (!requested.count(smiles)) add(ViolationKind::kExtraKey, smiles, "", "molecule was not requested");
  return report;
}

std::string encode_report(const ValidationReport &r) {
  json j;
  j["ok"] = r.ok();
  j["violations"] = json::array();
  for (const auto &v: r.violations)
    j["violations"].push_back(
        {{"kind", std::string(to_string(v.kind))}, {"smiles", v.smiles}, {"endpoint", v.endpoint}, {"detail", v.detail}});
  return j.dump();
}

}  // namespace toxbench::protocol
