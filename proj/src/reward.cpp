#include "asmopt/reward.hpp"

#include <string>

#include "asmopt/errors.hpp"

namespace asmopt {

std::string_view to_string(RewardKind kind) { return kind == RewardKind::CGS ? "CGS" : "SO"; }

RewardKind parse_reward_kind(std::string_view text) {
  if (text == "CGS" || text == "cgs") return RewardKind::CGS;
  if (text == "SO" || text == "so") return RewardKind::SO;
  throw ConfigError("unknown reward kind: " + std::string(text));
}

std::string_view to_string(RewardBranch branch) {
  switch (branch) {
    case RewardBranch::CompileFail: return "CompileFail";
    case RewardBranch::PartialPass: return "PartialPass";
    case RewardBranch::FullPass: return "FullPass";
  }
  return "?";
}

void RewardConfig::validate() const {
  if (kind == RewardKind::CGS && !(alpha > 0.0)) throw ConfigError("CGS alpha must be positive");
}

namespace {

RewardBranch classify(const RewardInput& input) {
  if (!input.compiled) return RewardBranch::CompileFail;
  if (input.pass_frac < 1.0) return RewardBranch::PartialPass;
  return RewardBranch::FullPass;
}

double require_ratio(const RewardInput& input) {
  if (!input.ratio) throw MissingRatio("all tests passed but no timing ratio was supplied");
  return *input.ratio;
}

}  // namespace

RewardValue reward_cgs(const RewardInput& input, double alpha) {
  const auto branch = classify(input);
  switch (branch) {
    case RewardBranch::CompileFail: return {-1.0, branch};
    case RewardBranch::PartialPass: return {input.pass_frac, branch};
    case RewardBranch::FullPass: return {1.0 + alpha * require_ratio(input), branch};
  }
  return {};
}

RewardValue reward_so(const RewardInput& input) {
  const auto branch = classify(input);
  if (branch != RewardBranch::FullPass) return {0.0, branch};
  return {require_ratio(input), branch};
}

RewardValue compute_reward(const RewardInput& input, const RewardConfig& config) {
  return config.kind == RewardKind::CGS ? reward_cgs(input, config.alpha) : reward_so(input);
}

}  // namespace asmopt
