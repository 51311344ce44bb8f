#include <doctest.h>

#include <map>

#include "asmopt/bench.hpp"
#include "asmopt/generators.hpp"
#include "support.hpp"

using namespace asmopt;

// 1000 seeded mutants of real baselines, short timeouts and a one-run
// protocol: every outcome must be well formed and nothing may escape.
TEST_CASE("mutant fuzz campaign") {
  CorpusBuildConfig bcfg;
  bcfg.reference_policy.wall_timeout = Seconds(1);
  bcfg.timing = testing::quick_protocol();
  MonotonicClock clock;

  std::vector<ProblemInstance> insts;
  for (const auto& s : testing::load_sources(testing::fixtures_dir() / "mini")) {
    if (s.name == "triangle" || s.name == "digitsum" || s.name == "sieve") {
      insts.push_back(build_instance(s.name, s.c_source, s.test_inputs, bcfg, clock));
    }
  }
  REQUIRE(insts.size() == 3);

  EvaluationConfig cfg;
  cfg.exec.wall_timeout = Seconds(0.5);
  cfg.exec.max_output = 1 << 20;
  cfg.timing.warmup_runs = 0;
  cfg.timing.measured_runs = 1;
  cfg.timing.run_timeout = Seconds(0.5);

  std::map<std::string, int> stages;
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto& inst = insts[seed % insts.size()];
    const auto cand = mutate_generator(inst, seed, 1 + static_cast<unsigned>(seed % 4));
    identical += cand.asm_text == inst.baseline_asm;
    const auto o = evaluate_candidate(inst, cand, cfg, clock);
    const auto bad = check_outcome(o);
    CHECK_MESSAGE(bad.empty(), "seed " << seed << ": " << (bad.empty() ? "" : bad.front()));
    CHECK(o.speedup_clamped >= 1.0);
    CHECK((o.failure_stage.has_value() || o.all_pass));
    if (!o.compiled) CHECK(o.reward_cgs == -1.0);
    stages[o.failure_stage ? std::string(to_string(*o.failure_stage)) : "none"]++;
  }
  MESSAGE("stages: Build " << stages["Build"] << ", Tests " << stages["Tests"] << ", Timing " << stages["Timing"]
                           << ", passed " << stages["none"] << ", unchanged " << identical);
  CHECK(stages["Build"] + stages["Tests"] + stages["Timing"] + stages["none"] == 1000);
}
