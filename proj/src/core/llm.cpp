#include "core/llm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <thread>

#include "core/generators.hpp"
#include "core/json_scan.hpp"
#include "core/numeric.hpp"

namespace tell {

std::string to_string(FailureKind k) {
  switch (k) {
    case FailureKind::Timeout: return "Timeout";
    case FailureKind::RateLimited: return "RateLimited";
    case FailureKind::ServerError: return "ServerError";
    case FailureKind::MalformedReply: return "MalformedReply";
  }
  return "ServerError";
}

std::optional<MockMode> parse_mock_mode(std::string_view name) {
  if (name == "echo") return MockMode::Echo;
  if (name == "background") return MockMode::Background;
  if (name == "corrupt-answer") return MockMode::CorruptAnswer;
  if (name == "step-split") return MockMode::StepSplit;
  return std::nullopt;
}

std::string to_string(MockMode m) {
  switch (m) {
    case MockMode::Echo: return "echo";
    case MockMode::Background: return "background";
    case MockMode::CorruptAnswer: return "corrupt-answer";
    case MockMode::StepSplit: return "step-split";
  }
  return "echo";
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr std::string_view kParaphraseCue = "Please rewrite the following problem";
constexpr std::string_view kEnrichCue = "Rewrite the solution as an illustrative step-by-step solution";
constexpr std::string_view kAugmentCue = "This is an demonstration for ";
constexpr std::string_view kSolutionCue = "\nSolution:\n";

const char* const kScenes[] = {
    "A group of students gathered this information for a class project.",
    "The school newsletter printed the following data last week.",
    "Ms. Alvarez shared this table with her class during a math lesson.",
    "A local club kept careful records to plan its next event.",
    "While helping at the community center, Jordan organized these numbers.",
    "A store manager looked over the records at the end of the day.",
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// One more than the stated value, keeping its written form.
std::string bump_answer(const std::string& answer, const Json& choices) {
  if (auto d = Decimal::parse(answer); d && answer.find('/') == std::string::npos) {
    Decimal up{d->units + pow10(d->scale), d->scale};
    return up.to_string();
  }
  if (auto r = Rational::parse(answer)) return (*r + Rational(1)).to_string();
  if (choices.is_array()) {
    for (const auto& c : choices)
      if (c.is_string() && c.get<std::string>() != answer) return c.get<std::string>();
  }
  return answer + " and more";
}

std::string replace_terminal(const std::string& solution, const std::string& answer) {
  std::string lower = solution;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  auto at = lower.rfind("the answer is");
  std::string head = at == std::string::npos ? solution + "\n" : solution.substr(0, at);
  return head + terminal_line(TextVal{answer});
}

std::vector<std::string> sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool boundary = false;
    if (c == '\n') {
      boundary = true;
    } else {
      cur += c;
      if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
        boundary = true;
    }
    if (boundary) {
      auto t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

std::string step_split(const std::string& s0) {
  static const std::regex number(R"([-$]?\d[\d,]*(?:\.\d+)?(?:/\d+)?)");
  static const std::regex numbering(R"(^\d+\.\s+)");
  std::string answer;
  if (auto t = extract_terminal_answer(s0)) answer = *t;
  std::vector<std::string> steps;
  for (auto& s : sentences(s0)) {
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.rfind("the answer is", 0) == 0) continue;
    steps.push_back(std::regex_replace(s, numbering, ""));
  }
  if (answer.empty()) {
    for (auto it = std::sregex_iterator(s0.begin(), s0.end(), number); it != std::sregex_iterator(); ++it)
      answer = it->str();
    while (!answer.empty() && answer.back() == ',') answer.pop_back();
  }
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) out += std::to_string(i + 1) + ". " + steps[i] + "\n";
  return out + terminal_line(TextVal{answer});
}

}  // namespace

std::string MockProvider::complete(const std::string& prompt, const Decoding& decoding) {
  std::uint64_t h = fnv1a64(prompt) ^ (seed_ * 0x9e3779b97f4a7c15ULL) ^ decoding.seed.value_or(0);

  if (auto at = prompt.rfind(kParaphraseCue); at != std::string::npos) {
    auto obj = find_json_object(prompt, at);
    if (!obj) throw ProviderError(FailureKind::MalformedReply, "mock could not find the problem in the prompt", false);
    Json out = *obj;
    switch (mode_) {
      case MockMode::Echo:
      case MockMode::StepSplit: break;
      case MockMode::Background:
        out["question"] = std::string(kScenes[h % std::size(kScenes)]) + " " + out["question"].get<std::string>();
        break;
      case MockMode::CorruptAnswer: {
        std::string wrong = bump_answer(out["answer"].get<std::string>(), out.value("choices", Json()));
        out["answer"] = wrong;
        out["solution"] = replace_terminal(out["solution"].get<std::string>(), wrong);
        break;
      }
    }
    return out.dump(1);
  }

  if (prompt.find(kEnrichCue) != std::string::npos) {
    auto at = prompt.rfind(kSolutionCue);
    if (at == std::string::npos) throw ProviderError(FailureKind::MalformedReply, "mock found no solution", false);
    std::string s0 = trim(std::string_view(prompt).substr(at + kSolutionCue.size()));
    return mode_ == MockMode::Echo ? s0 : step_split(s0);
  }

  if (auto at = prompt.find(kAugmentCue); at != std::string::npos) {
    auto obj = find_json_object(prompt, at);
    if (!obj) return "I could not find a demonstration to follow.";
    return "Here is the exercise template.\n```json\n" + obj->dump(1) + "\n```\n";
  }

  return "I am not sure what to do with this request.";
}

std::string complete_with_retry(LlmProvider& provider, const std::string& prompt, const Decoding& decoding,
                                const RetryPolicy& policy) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return provider.complete(prompt, decoding);
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
      if (policy.sleep) policy.sleep(delay);
      else std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, policy.max_delay);
    }
  }
}

ReplyCache::ReplyCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    // A torn last line from an interrupted run is skipped.
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("reply")) continue;
    replies_[j["key"].get<std::string>()] = j["reply"].get<std::string>();
  }
}

std::string ReplyCache::key(const LlmProvider& provider, const std::string& prompt, const Decoding& decoding,
                            int attempt) {
  std::string material = provider.model_id();
  material += '\0';
  material += prompt;
  material += '\0';
  material += std::to_string(decoding.temperature) + "/" + std::to_string(decoding.max_tokens) + "/" +
              (decoding.seed ? std::to_string(*decoding.seed) : "-") + "/" + std::to_string(attempt);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(material)));
  return buf;
}

std::optional<std::string> ReplyCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = replies_.find(key);
  if (it == replies_.end()) return std::nullopt;
  return it->second;
}

void ReplyCache::put(const std::string& key, const std::string& sample_id, const std::string& reply) {
  std::lock_guard lock(mu_);
  replies_[key] = reply;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to cache '" + path_ + "'");
  out << Json{{"key", key}, {"id", sample_id}, {"reply", reply}}.dump() << '\n';
  out.flush();
}

std::size_t ReplyCache::size() const {
  std::lock_guard lock(mu_);
  return replies_.size();
}

std::string cached_completion(LlmProvider& provider, ReplyCache* cache, const std::string& sample_id,
                              const std::string& prompt, const Decoding& decoding, const RetryPolicy& policy,
                              int attempt) {
  std::string k;
  if (cache) {
    k = ReplyCache::key(provider, prompt, decoding, attempt);
    if (auto hit = cache->get(k)) return *hit;
  }
  std::string reply = complete_with_retry(provider, prompt, decoding, policy);
  if (cache) cache->put(k, sample_id, reply);
  return reply;
}

}  // namespace tell
