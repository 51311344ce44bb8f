#include "asmopt/generators.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <string_view>

#include "asmopt/errors.hpp"

namespace asmopt {
namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Instruction lines: not blank, not a directive, label or comment.
bool is_instruction(std::string_view line) {
  const auto t = trim_view(line);
  if (t.empty()) return false;
  if (t.front() == '.' || t.front() == '#') return false;
  if (t.starts_with("//") || t.starts_with("/*")) return false;
  if (t.back() == ':') return false;
  return true;
}

std::vector<std::string> split_lines(std::string_view text, bool& trailing_newline) {
  std::vector<std::string> lines;
  trailing_newline = !text.empty() && text.back() == '\n';
  if (trailing_newline) text.remove_suffix(1);
  if (text.empty() && !trailing_newline) return lines;
  std::size_t pos = 0;
  while (true) {
    const auto nl = text.find('\n', pos);
    lines.emplace_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines, bool trailing_newline) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  if (trailing_newline) out += '\n';
  return out;
}

enum class Edit { Swap, Delete, Duplicate };

std::uint64_t parse_u64(std::string_view text, const std::string& what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid " + what + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

CandidateProgram identity_generator(const ProblemInstance& inst) {
  return {inst.baseline_asm, "identity", inst.id, std::nullopt};
}

CandidateProgram mutate_generator(const ProblemInstance& inst, std::uint64_t seed, unsigned steps) {
  CandidateProgram cand{inst.baseline_asm, "mutate:" + std::to_string(seed) + "," + std::to_string(steps),
                        inst.id, std::nullopt};
  if (steps == 0) return cand;

  bool trailing_newline = false;
  auto lines = split_lines(inst.baseline_asm, trailing_newline);
  std::mt19937_64 rng(seed);

  for (unsigned step = 0; step < steps; ++step) {
    std::vector<std::size_t> instructions, swappable;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!is_instruction(lines[i])) continue;
      instructions.push_back(i);
      if (i + 1 < lines.size() && is_instruction(lines[i + 1])) swappable.push_back(i);
    }
    if (instructions.empty()) break;

    auto edit = static_cast<Edit>(std::uniform_int_distribution<int>(0, 2)(rng));
    if (edit == Edit::Swap && swappable.empty()) edit = Edit::Duplicate;
    const auto& pool = edit == Edit::Swap ? swappable : instructions;
    const auto at = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    switch (edit) {
      case Edit::Swap:
        std::swap(lines[at], lines[at + 1]);
        break;
      case Edit::Delete:
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at));
        break;
      case Edit::Duplicate:
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at) + 1, lines[at]);
        break;
    }
  }
  cand.asm_text = join_lines(lines, trailing_newline);
  return cand;
}

std::string MutateGenerator::id() const {
  return "mutate:" + std::to_string(seed_) + "," + std::to_string(steps_);
}

CandidateProgram llm_generator(const ProblemInstance& inst, const llm::ChatClient& client,
                               const llm::SamplingParams& sampling, bool includes_baseline) {
  const auto prompt = render_prompt(inst, includes_baseline);
  auto raw = client.complete(prompt.rendered_prompt, sampling);
  CandidateProgram cand;
  cand.asm_text = extract_assembly(raw);
  cand.generator_id = "llm:" + client.endpoint().model + (includes_baseline ? "" : ":no-baseline");
  cand.instance_id = inst.id;
  cand.raw_response = std::move(raw);
  return cand;
}

LlmGenerator::LlmGenerator(std::shared_ptr<const llm::ChatClient> client, llm::SamplingParams sampling,
                           bool includes_baseline, unsigned max_in_flight)
    : client_(std::move(client)),
      sampling_(sampling),
      includes_baseline_(includes_baseline),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp(max_in_flight, 1u, 1024u))) {}

std::string LlmGenerator::id() const {
  return "llm:" + client_->endpoint().model + (includes_baseline_ ? "" : ":no-baseline");
}

CandidateProgram LlmGenerator::generate(const ProblemInstance& inst) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  return llm_generator(inst, *client_, sampling_, includes_baseline_);
}

std::unique_ptr<Generator> make_generator(const std::string& spec, bool includes_baseline,
                                          unsigned max_in_flight, llm::SamplingParams sampling) {
  if (spec == "identity") return std::make_unique<IdentityGenerator>();
  const auto colon = spec.find(':');
  const std::string_view kind = std::string_view(spec).substr(0, colon);
  const std::string_view args =
      colon == std::string::npos ? std::string_view() : std::string_view(spec).substr(colon + 1);
  if (kind == "mutate") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) throw ConfigError("expected mutate:SEED,STEPS");
    const auto seed = parse_u64(args.substr(0, comma), "mutate seed");
    const auto steps = parse_u64(args.substr(comma + 1), "mutate steps");
    return std::make_unique<MutateGenerator>(seed, static_cast<unsigned>(steps));
  }
  if (kind == "llm") {
    const auto comma = args.rfind(',');
    if (comma == std::string_view::npos || comma == 0 || comma + 1 == args.size()) {
      throw ConfigError("expected llm:BASE_URL,MODEL");
    }
    llm::RemoteModelEndpoint endpoint;
    endpoint.base_url = std::string(args.substr(0, comma));
    endpoint.model = std::string(args.substr(comma + 1));
    auto client = std::make_shared<const llm::ChatClient>(endpoint, nullptr);
    return std::make_unique<LlmGenerator>(std::move(client), sampling, includes_baseline,
                                          max_in_flight);
  }
  throw ConfigError("unknown generator spec: " + spec);
}

}  // namespace asmopt
