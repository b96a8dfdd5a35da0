#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "episodekit/corpus.hpp"
#include "episodekit/llm/annotator.hpp"

namespace testsupport {

using episodekit::AnnotatedCorpus;
using episodekit::Level;
using episodekit::llm::ChatClient;
using episodekit::llm::ChatRequest;

// The unit text of a rendered user message.
inline std::string target_of(const ChatRequest& r) {
  const std::string& user = r.messages.at(1).content;
  const std::string marker = " to label\n\n";
  const auto start = user.find(marker) + marker.size();
  return user.substr(start, user.find("\n\n", start) - start);
}

// Answers with the gold label of whatever unit it is asked about.
class OracleClient : public ChatClient {
 public:
  explicit OracleClient(const AnnotatedCorpus& corpus, Level level) {
    for (const auto& t : corpus.traces)
      for (const auto& p : t.paragraphs) {
        if (level == Level::Paragraph) answers_[episodekit::paragraph_text(t, p)] = episodekit::to_string(*p.label);
        for (const auto& s : p.sentences)
          if (level == Level::Sentence) answers_[s.text] = std::string(episodekit::to_string(*s.label));
      }
  }
  std::string complete(const ChatRequest& r) override {
    ++calls;
    // Out-of-order completion on purpose.
    std::this_thread::sleep_for(std::chrono::microseconds(std::hash<std::string>{}(target_of(r)) % 3000));
    return answers_.at(target_of(r));
  }
  std::atomic<int> calls{0};

 private:
  std::map<std::string, std::string> answers_;
};

class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const ChatRequest& r) override {
    std::lock_guard lock(mu_);
    requests.push_back(r);
    const auto i = std::min(requests.size() - 1, replies_.size() - 1);
    return replies_[i];
  }
  std::vector<ChatRequest> requests;

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
};

}  // namespace testsupport
