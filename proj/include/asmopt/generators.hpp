#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "asmopt/corpus.hpp"
#include "asmopt/llm_client.hpp"
#include "asmopt/prompt.hpp"

namespace asmopt {

/// A proposed program. asm_text goes to the toolchain exactly as stored.
struct CandidateProgram {
  std::string asm_text;
  std::string generator_id;
  std::string instance_id;
  std::optional<std::string> raw_response;
};

/// Action source of the bandit loop. generate() may be called concurrently
/// from several threads.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;
  virtual CandidateProgram generate(const ProblemInstance& inst) const = 0;
};

/// Returns the baseline unchanged: the fallback whose speedup is 1 by
/// definition.
CandidateProgram identity_generator(const ProblemInstance& inst);

/// Applies `steps` seeded line-level edits to the baseline: swap two adjacent
/// instructions, delete an instruction, or duplicate one. Deterministic in
/// (instance, seed, steps).
CandidateProgram mutate_generator(const ProblemInstance& inst, std::uint64_t seed, unsigned steps);

class IdentityGenerator final : public Generator {
 public:
  std::string id() const override { return "identity"; }
  CandidateProgram generate(const ProblemInstance& inst) const override { return identity_generator(inst); }
};

class MutateGenerator final : public Generator {
 public:
  MutateGenerator(std::uint64_t seed, unsigned steps) : seed_(seed), steps_(steps) {}
  std::string id() const override;
  CandidateProgram generate(const ProblemInstance& inst) const override {
    return mutate_generator(inst, seed_, steps_);
  }

 private:
  std::uint64_t seed_;
  unsigned steps_;
};

/// Prompts a remote chat model and extracts the assembly from its reply.
/// Endpoint failures propagate as EndpointError / ResponseEmpty.
class LlmGenerator final : public Generator {
 public:
  LlmGenerator(std::shared_ptr<const llm::ChatClient> client, llm::SamplingParams sampling,
               bool includes_baseline = true, unsigned max_in_flight = 4);

  std::string id() const override;
  CandidateProgram generate(const ProblemInstance& inst) const override;

 private:
  std::shared_ptr<const llm::ChatClient> client_;
  llm::SamplingParams sampling_;
  bool includes_baseline_;
  mutable std::counting_semaphore<1024> in_flight_;
};

CandidateProgram llm_generator(const ProblemInstance& inst, const llm::ChatClient& client,
                               const llm::SamplingParams& sampling, bool includes_baseline = true);

/// Parses "identity", "mutate:SEED,STEPS" or "llm:BASE_URL,MODEL". The API
/// key for llm specs is read from the environment at request time.
/// Throws ConfigError.
std::unique_ptr<Generator> make_generator(const std::string& spec, bool includes_baseline = true,
                                          unsigned max_in_flight = 4, llm::SamplingParams sampling = {});

}  // namespace asmopt
