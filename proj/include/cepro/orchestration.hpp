#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepro/llm_client.hpp"

namespace cepro::orch {

// Marker a terminator agent emits to close a chat-group session.
inline constexpr const char* kFinalMarker = "<<FINAL>>";

struct AgentSpec {
  std::string name;
  std::string model;      // empty = client default
  std::string objective;  // system prompt
  std::vector<std::string> tools;
};

struct ToolCall {
  std::string tool;
  std::map<std::string, std::string> arguments;
  std::string result;
  std::string caller;
};

class ToolRegistry {
 public:
  using Fn = std::function<std::string(const std::map<std::string, std::string>&)>;

  void add(const std::string& name, Fn fn);
  bool contains(const std::string& name) const;
  std::string invoke(const std::string& name,
                     const std::map<std::string, std::string>& args) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Fn> tools_;
};

struct Transcript {
  std::vector<Message> messages;
  std::vector<ToolCall> tool_calls;
  OJson outcome;
  Usage usage;

  int next_turn() const { return messages.empty() ? 1 : messages.back().turn + 1; }
  OJson to_json() const;
};

// Fenced tool directive inside assistant text:
//   @@tool <name>
//   key: value
//   @@end
struct ToolDirective {
  std::string tool;
  std::map<std::string, std::string> arguments;
};
std::optional<ToolDirective> parse_tool_directive(const std::string& content);

// Lines of the first fenced block opened by `marker` (e.g. "@@graph"),
// closed by "@@end" or the start of another block.
std::optional<std::vector<std::string>> fenced_block(const std::string& content,
                                                     const std::string& marker);
// Raw text inside the block (for blocks that carry verbatim payloads).
std::optional<std::string> fenced_text(const std::string& content, const std::string& marker);

struct AgentResult {
  Message output;
  std::vector<ToolCall> calls;
  bool truncated = false;
};

// One agent exchange with an optional tool loop. `context` carries prior
// conversation turns; `input` the user payload for this call.
AgentResult run_agent(const AgentSpec& agent, const std::vector<Message>& context,
                      const std::string& input, LlmClient& client, const ToolRegistry* tools,
                      int max_tool_rounds, Transcript& transcript);

struct ChatGroupSpec {
  std::vector<AgentSpec> agents;
  // Empty = one broadcast channel containing every agent.
  std::vector<std::vector<std::string>> channels;
  int max_turns = 16;
  std::string terminator;
  // Field names the terminator's final payload promises to carry.
  std::vector<std::string> output_fields;

  void validate() const;
};

struct GroupResult {
  Transcript transcript;
  OJson outcome;
  bool terminated = false;
};

GroupResult run_chat_group(const ChatGroupSpec& group, const std::string& task, LlmClient& client,
                           const ToolRegistry* tools = nullptr, int max_tool_rounds = 3);

struct Payload {
  std::string kind;
  OJson value;
};

struct StageContext {
  LlmClient* client = nullptr;
  const ToolRegistry* tools = nullptr;
  Transcript* transcript = nullptr;
};

struct WorkflowStage {
  std::string name;
  std::string input_kind;
  std::string output_kind;
  std::function<Payload(const Payload&, StageContext&)> op;
};

class WorkflowSpec {
 public:
  WorkflowSpec() = default;
  // Throws ConfigError when consecutive stage kinds do not line up.
  static WorkflowSpec make(std::vector<WorkflowStage> stages);
  const std::vector<WorkflowStage>& stages() const { return stages_; }

 private:
  std::vector<WorkflowStage> stages_;
};

struct WorkflowResult {
  Transcript transcript;
  Payload output;
  bool ok = true;
  std::string error;
  std::size_t completed_stages = 0;
};

WorkflowResult run_workflow(const WorkflowSpec& workflow, Payload input,
                            LlmClient* client = nullptr, const ToolRegistry* tools = nullptr);
// Variant appending into an existing transcript (used by cohorts).
WorkflowResult run_workflow_into(const WorkflowSpec& workflow, Payload input, LlmClient* client,
                                 const ToolRegistry* tools, Transcript& transcript);

struct CohortSpec {
  ChatGroupSpec group;
  WorkflowSpec workflow;
  std::string bridge_field;

  void validate() const;  // bridge field must be a declared group output
};

struct CohortResult {
  Transcript transcript;
  OJson group_outcome;
  Payload result;
  bool ok = true;
  std::string error;
};

CohortResult run_cohort(const CohortSpec& cohort, const std::string& objective, LlmClient& client,
                        const ToolRegistry* tools = nullptr);

// Payload of a terminator message: the final marker is stripped and any
// trailing JSON object parsed; otherwise {"text": <content>}.
OJson extract_payload(const std::string& content);

}  // namespace cepro::orch
