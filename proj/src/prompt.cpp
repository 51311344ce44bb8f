#include "asmopt/prompt.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace asmopt {
namespace {

constexpr std::string_view kIntroWithAsm =
    "Given the following C code and assembly code, your task is to generate highly\n"
    "optimized x86-64 assembly code.\n";
constexpr std::string_view kIntroCOnly =
    "Given the following C code, your task is to generate highly\n"
    "optimized x86-64 assembly code.\n";
constexpr std::string_view kInstructions =
    "Only output the optimized assembly code. Do not include any other text.\n"
    "Do not write any comments in the assembly code. Wrap the assembly code in\n"
    "assembly tags.\n"
    "Optimized Assembly Code:\n";

void append_block(std::string& out, std::string_view text) {
  out += text;
  if (text.empty() || text.back() != '\n') out += '\n';
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Drops surrounding blank lines and trailing whitespace but keeps the
// indentation of the first line.
std::string_view trim_block(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t first = 0;
  while (first < s.size() && is_space(s[first])) ++first;
  if (first == s.size()) return {};
  const auto nl = s.rfind('\n', first);
  s.remove_prefix(nl == std::string_view::npos ? 0 : nl + 1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_assembly_label(std::string_view label) {
  static constexpr std::array<std::string_view, 10> kLabels = {
      "asm", "assembly", "s", "gas", "x86asm", "nasm", "x86", "x86-64", "x86_64", "att"};
  const auto l = lower(trim(label));
  return std::find(kLabels.begin(), kLabels.end(), l) != kLabels.end();
}

struct Region {
  std::size_t begin = 0;  // position of the opening delimiter
  std::string_view content;
};

std::optional<Region> find_tag_region(std::string_view text) {
  constexpr std::string_view kOpen = "<assembly>";
  constexpr std::string_view kClose = "</assembly>";
  const auto open = text.find(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto start = open + kOpen.size();
  const auto close = text.find(kClose, start);
  const auto end = close == std::string_view::npos ? text.size() : close;
  return Region{open, text.substr(start, end - start)};
}

std::optional<Region> find_fence_region(std::string_view text) {
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) return std::nullopt;
    const auto label_start = open + 3;
    const auto nl = text.find('\n', label_start);
    if (nl == std::string_view::npos) return std::nullopt;
    const auto label = text.substr(label_start, nl - label_start);
    const auto close = text.find("```", nl + 1);
    if (is_assembly_label(label)) {
      const auto end = close == std::string_view::npos ? text.size() : close;
      return Region{open, text.substr(nl + 1, end - (nl + 1))};
    }
    if (close == std::string_view::npos) return std::nullopt;
    pos = close + 3;  // skip the whole unlabelled/other-language block
  }
}

}  // namespace

PromptBundle render_prompt(const ProblemInstance& inst, bool includes_baseline) {
  PromptBundle bundle;
  bundle.includes_baseline = includes_baseline;
  auto& out = bundle.rendered_prompt;
  out += includes_baseline ? kIntroWithAsm : kIntroCOnly;
  out += "\nC Code:\n";
  append_block(out, inst.c_source);
  out += '\n';
  if (includes_baseline) {
    out += "Assembly Code:\n";
    append_block(out, inst.baseline_asm);
    out += '\n';
  }
  out += kInstructions;
  return bundle;
}

std::string extract_assembly(std::string_view raw_response) {
  // Unwrap until no region is left, so nested wrappers (a fence inside a tag
  // pair) come off too and the result is a fixed point.
  std::string_view text = trim_block(raw_response);
  while (true) {
    const auto tag = find_tag_region(text);
    const auto fence = find_fence_region(text);
    std::optional<Region> first;
    if (tag && fence) {
      first = tag->begin < fence->begin ? tag : fence;
    } else {
      first = tag ? tag : fence;
    }
    if (!first) return std::string(text);
    text = trim_block(first->content);
  }
}

}  // namespace asmopt
