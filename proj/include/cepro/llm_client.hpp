#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cepro/io.hpp"

namespace cepro::orch {

enum class Role { System, User, Assistant, Tool };

std::string role_name(Role role);

struct ContentPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;        // Kind::Text
  std::string data;        // Kind::Image, base64
  std::string media_type;  // Kind::Image
};

struct Message {
  Role role = Role::User;
  std::vector<ContentPart> parts;
  std::string sender;
  int turn = 0;

  static Message make(Role role, std::string content, std::string sender = "", int turn = 0);
  std::string text() const;  // concatenated text parts
};

struct Usage {
  int calls = 0;
  int retries = 0;
  std::int64_t prompt_chars = 0;
  std::int64_t completion_chars = 0;
};

struct CompletionOptions {
  std::string agent_name;
  std::string model;  // overrides the client default when nonempty
  double temperature = 0.0;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual Message complete(const std::vector<Message>& messages,
                           const CompletionOptions& options) = 0;
  const Usage& usage() const { return usage_; }

 protected:
  Usage usage_;
};

// Deterministic stub replaying responses from a script. Each entry is keyed
// by agent name and that agent's 1-based call index.
class ScriptedClient : public LlmClient {
 public:
  struct Entry {
    std::string agent;
    int turn = 0;
    std::string content;
  };

  explicit ScriptedClient(std::vector<Entry> entries);
  static ScriptedClient from_file(const std::string& path);

  Message complete(const std::vector<Message>& messages, const CompletionOptions& options) override;

 private:
  std::vector<Entry> entries_;
  std::vector<bool> used_;
  std::map<std::string, int> next_turn_;
};

struct RemoteConfig {
  std::string base_url;  // e.g. http://host:port or http://host:port/v1
  std::string model;
  std::string api_key;
  int max_retries = 3;
  int initial_backoff_ms = 1000;
};

// POST {base_url}/chat/completions speaker. Retries transient failures
// (connect errors, 429, 5xx) with exponential backoff.
class RemoteClient : public LlmClient {
 public:
  explicit RemoteClient(RemoteConfig config);
  Message complete(const std::vector<Message>& messages, const CompletionOptions& options) override;

 private:
  RemoteConfig config_;
  std::string host_;
  std::string path_prefix_;
};

OJson message_to_json(const Message& m);

}  // namespace cepro::orch
