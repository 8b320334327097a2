#include "cepro/llm_client.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"

#include "cepro/error.hpp"

namespace cepro::orch {

std::string role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

Message Message::make(Role role, std::string content, std::string sender, int turn) {
  Message m;
  m.role = role;
  m.parts.push_back({ContentPart::Kind::Text, std::move(content), "", ""});
  m.sender = std::move(sender);
  m.turn = turn;
  return m;
}

std::string Message::text() const {
  std::string out;
  for (const auto& p : parts)
    if (p.kind == ContentPart::Kind::Text) out += p.text;
  return out;
}

OJson message_to_json(const Message& m) {
  OJson j;
  j["role"] = role_name(m.role);
  j["sender"] = m.sender;
  j["turn"] = m.turn;
  bool pure_text = true;
  for (const auto& p : m.parts)
    if (p.kind != ContentPart::Kind::Text) pure_text = false;
  if (pure_text) {
    j["content"] = m.text();
  } else {
    OJson parts = OJson::array();
    for (const auto& p : m.parts) {
      if (p.kind == ContentPart::Kind::Text) {
        parts.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        parts.push_back({{"type", "image"}, {"data", p.data}, {"media_type", p.media_type}});
      }
    }
    j["content"] = std::move(parts);
  }
  return j;
}

ScriptedClient::ScriptedClient(std::vector<Entry> entries)
    : entries_(std::move(entries)), used_(entries_.size(), false) {}

ScriptedClient ScriptedClient::from_file(const std::string& path) {
  std::vector<Entry> entries;
  for (const auto& row : io::read_jsonl(path)) {
    Entry e;
    if (!row.contains("agent") || !row.contains("turn") || !row.contains("content"))
      throw ParseError(path + ": script entry needs agent, turn, content");
    e.agent = row.at("agent").get<std::string>();
    e.turn = row.at("turn").get<int>();
    e.content = row.at("content").get<std::string>();
    entries.push_back(std::move(e));
  }
  return ScriptedClient(std::move(entries));
}

Message ScriptedClient::complete(const std::vector<Message>& messages,
                                 const CompletionOptions& options) {
  const int turn = ++next_turn_[options.agent_name];
  usage_.calls++;
  for (const auto& m : messages) usage_.prompt_chars += static_cast<std::int64_t>(m.text().size());

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (used_[i]) continue;
    if (entries_[i].agent == options.agent_name && entries_[i].turn == turn) {
      used_[i] = true;
      usage_.completion_chars += static_cast<std::int64_t>(entries_[i].content.size());
      return Message::make(Role::Assistant, entries_[i].content, options.agent_name);
    }
  }
  throw ScriptError("script exhausted: no response for agent '" + options.agent_name + "' turn " +
                    std::to_string(turn));
}

namespace {

// Splits "http://host:port/prefix" into origin and path prefix.
void split_base_url(const std::string& base_url, std::string& origin, std::string& prefix) {
  auto scheme_end = base_url.find("://");
  std::size_t path_start =
      scheme_end == std::string::npos ? base_url.find('/') : base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin = base_url;
    prefix = "";
  } else {
    origin = base_url.substr(0, path_start);
    prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
}

OJson wire_content(const Message& m) {
  bool pure_text = true;
  for (const auto& p : m.parts)
    if (p.kind != ContentPart::Kind::Text) pure_text = false;
  if (pure_text) return m.text();
  OJson parts = OJson::array();
  for (const auto& p : m.parts) {
    if (p.kind == ContentPart::Kind::Text)
      parts.push_back({{"type", "text"}, {"text", p.text}});
    else
      parts.push_back({{"type", "image"}, {"data", p.data}, {"media_type", p.media_type}});
  }
  return parts;
}

}  // namespace

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("remote client requires a base url");
  split_base_url(config_.base_url, host_, path_prefix_);
}

Message RemoteClient::complete(const std::vector<Message>& messages,
                               const CompletionOptions& options) {
  OJson body;
  body["model"] = options.model.empty() ? config_.model : options.model;
  body["messages"] = OJson::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", role_name(m.role)}, {"content", wire_content(m)}});
    usage_.prompt_chars += static_cast<std::int64_t>(m.text().size());
  }
  body["temperature"] = options.temperature;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  int backoff_ms = config_.initial_backoff_ms;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      usage_.retries++;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    usage_.calls++;
    httplib::Client cli(host_);
    cli.set_connection_timeout(30);
    cli.set_read_timeout(120);
    auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed to " + host_;
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "endpoint returned status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw EndpointError("endpoint returned status " + std::to_string(res->status) + ": " +
                              res->body,
                          false);
    OJson j = io::parse_json(res->body, "chat completion response");
    if (!j.contains("choices") || j.at("choices").empty())
      throw EndpointError("response has no choices", false);
    const auto& msg = j.at("choices").at(0).at("message");
    std::string content;
    if (msg.at("content").is_string()) {
      content = msg.at("content").get<std::string>();
    } else if (msg.at("content").is_array()) {
      for (const auto& part : msg.at("content"))
        if (part.contains("text")) content += part.at("text").get<std::string>();
    }
    usage_.completion_chars += static_cast<std::int64_t>(content.size());
    return Message::make(Role::Assistant, content, options.agent_name);
  }
  throw EndpointError("endpoint unreachable after " + std::to_string(config_.max_retries) +
                          " retries: " + last_error,
                      true);
}

}  // namespace cepro::orch
