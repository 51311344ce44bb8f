#pragma once

#include <optional>
#include <string_view>

namespace asmopt {

enum class RewardKind { CGS, SO };

std::string_view to_string(RewardKind kind);
RewardKind parse_reward_kind(std::string_view text);  // throws ConfigError

struct RewardConfig {
  RewardKind kind = RewardKind::CGS;
  double alpha = 5.0;  // CGS only

  void validate() const;  // alpha > 0
};

/// Evidence about one candidate. `ratio` is the unclamped t(baseline) /
/// t(candidate) and exists only for a compiled candidate that passed every
/// test and was timed.
struct RewardInput {
  bool compiled = false;
  double pass_frac = 0.0;
  std::optional<double> ratio;
};

enum class RewardBranch { CompileFail, PartialPass, FullPass };

std::string_view to_string(RewardBranch branch);

struct RewardValue {
  double value = 0.0;
  RewardBranch branch = RewardBranch::CompileFail;
};

/// Correctness-guided speedup: -1 on compile failure, the pass fraction on
/// partial correctness, 1 + alpha * ratio once every test passes.
/// Throws MissingRatio on a full pass without a ratio.
RewardValue reward_cgs(const RewardInput& input, double alpha);

/// Speedup only: 0 unless every test passes, then the unclamped ratio.
RewardValue reward_so(const RewardInput& input);

RewardValue compute_reward(const RewardInput& input, const RewardConfig& config);

}  // namespace asmopt
