// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toxbench::models {

struct PromptSpec {
  std::string system;
  // Slots: {target}, {description}, {smiles}.
  std::string user_template;

  static const PromptSpec &standard();
};

struct Prompt {
  std::string system;
  std::string user;
};

// Throws std::out_of_range for an endpoint index >= 12 and
// std::invalid_argument for an empty SMILES.
Prompt build_prompt(const PromptSpec &spec, std::size_t endpoint, std::string_view smiles);

class ReplyParseError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A single plain decimal in [0, 1] with optional surrounding whitespace.
double parse_reply(std::string_view text);

struct RolloutConfig {
  std::size_t rollouts = 5;
  double temperature = 0.7;  // forwarded to the client
};

// Arithmetic mean; throws std::invalid_argument when empty or when a value
// lies outside [0, 1].
double aggregate_rollouts(const std::vector<double> &values);

class CompletionClient {
public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const Prompt &prompt, double temperature) = 0;
};

// Replays canned replies in order; throws when exhausted.
class ScriptedClient: public CompletionClient {
public:
  explicit ScriptedClient(std::vector<std::string> replies): replies_(replies.begin(), replies.end()) {}
  std::string complete(const Prompt &prompt, double temperature) override;
  const std::vector<Prompt> &seen() const { return seen_; }

private:
  std::deque<std::string> replies_;
  std::vector<Prompt> seen_;
};

struct LlmPrediction {
  std::optional<double> probability;  // empty when every rollout failed
  std::size_t failed_rollouts = 0;
};

// Runs cfg.rollouts completions for one molecule/endpoint pair. Client
// exceptions and unparseable replies count as failed rollouts.
LlmPrediction predict_with_llm(CompletionClient &client, const PromptSpec &spec, const RolloutConfig &cfg,
                               std::size_t endpoint, std::string_view smiles);

}  // namespace toxbench::models
