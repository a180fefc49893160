// SPDX-License-Identifier: Apache-2.0

#include "toxbench/models/llm.h"

#include <charconv>
#include <cctype>

#include "toxbench/dataset/dataset.h"

namespace toxbench::models {

namespace {

void replace_all(std::string &s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

const PromptSpec &PromptSpec::standard() {
  static const PromptSpec spec{
      "You are an expert in molecular toxicity prediction.\n"
      "Analyze molecules and provide probability scores between 0.000 and 1.000.\n"
      "Always respond with up to three decimal places.",
      "Analyze whether this molecule is likely to be toxic in the {target} assay.\n"
      "\n"
      "Target: {description}\n"
      "SMILES: {smiles}\n"
      "\n"
      "Provide only a probability between 0.000 and 1.000 indicating the likelihood of toxicity.\n"
      "Respond with only the number.",
  };
  return spec;
}

Prompt build_prompt(const PromptSpec &spec, std::size_t endpoint, std::string_view smiles) {
  if (endpoint >= dataset::kEndpointCount) throw std::out_of_range("endpoint index out of range");
  if (smiles.empty()) throw std::invalid_argument("build_prompt: empty SMILES");
  const auto &ep = dataset::endpoints()[endpoint];
  // Substitute the SMILES last so that braces inside it are never expanded.
  std::string user = spec.user_template;
  replace_all(user, "{target}", ep.name);
  replace_all(user, "{description}", ep.description);
  replace_all(user, "{smiles}", smiles);
  return {spec.system, user};
}

double parse_reply(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  auto reject = [&] { return ReplyParseError("reply is not a probability: '" + std::string(text) + "'"); };
  if (text.empty()) throw reject();
  // digits [. digits] or . digits; nothing else.
  std::size_t i = 0, int_digits = 0, frac_digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++int_digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++frac_digits;
  }
  if (i != text.size() || int_digits + frac_digits == 0) throw reject();
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::fixed);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw reject();
  if (v < 0 || v > 1) throw ReplyParseError("reply out of [0, 1]: " + std::string(text));
  return v;
}

double aggregate_rollouts(const std::vector<double> &values) {
  if (values.empty()) throw std::invalid_argument("aggregate_rollouts: no successful rollout");
  double s = 0;
  for (double v: values) {
    if (!(v >= 0 && v <= 1)) throw std::invalid_argument("aggregate_rollouts: value outside [0, 1]");
    s += v;
  }
  return s / static_cast<double>(values.size());
}

std::string ScriptedClient::complete(const Prompt &prompt, double) {
  seen_.push_back(prompt);
  if (replies_.empty()) throw std::runtime_error("scripted client exhausted");
  auto r = std::move(replies_.front());
  replies_.pop_front();
  return r;
}

LlmPrediction predict_with_llm(CompletionClient &client, const PromptSpec &spec, const RolloutConfig &cfg,
                               std::size_t endpoint, std::string_view smiles) {
  if (cfg.rollouts == 0) throw std::invalid_argument("rollouts must be >= 1");
  const Prompt prompt = build_prompt(spec, endpoint, smiles);
  std::vector<double> values;
  LlmPrediction out;
  for (std::size_t i = 0; i < cfg.rollouts; ++i) {
    try {
      values.push_back(parse_reply(client.complete(prompt, cfg.temperature)));
    } catch (const std::exception &) {
      ++out.failed_rollouts;
    }
  }
  if (!values.empty()) out.probability = aggregate_rollouts(values);
  return out;
}

}  // namespace toxbench::models
