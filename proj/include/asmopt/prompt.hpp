#pragma once

#include <string>
#include <string_view>

#include "asmopt/corpus.hpp"

namespace asmopt {

struct PromptBundle {
  std::string rendered_prompt;
  bool includes_baseline = true;
};

/// Fills the optimization prompt with the instance's C source and, unless
/// `includes_baseline` is false, its -O3 assembly. Test cases are never part
/// of a prompt.
PromptBundle render_prompt(const ProblemInstance& inst, bool includes_baseline = true);

/// Pulls the assembly out of a model response: the first region wrapped in
/// <assembly>...</assembly> or in a code fence labelled as assembly
/// (```asm, ```assembly, ```s, ```gas, ```x86asm, ...). Without such a region
/// the whole response is returned. Surrounding blank lines and trailing
/// whitespace are dropped; indentation is kept. Never fails.
std::string extract_assembly(std::string_view raw_response);

}  // namespace asmopt
