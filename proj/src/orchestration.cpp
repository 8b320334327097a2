#include "cepro/orchestration.hpp"

#include <algorithm>
#include <set>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::orch {

void ToolRegistry::add(const std::string& name, Fn fn) { tools_[name] = std::move(fn); }

bool ToolRegistry::contains(const std::string& name) const { return tools_.count(name) != 0; }

std::string ToolRegistry::invoke(const std::string& name,
                                 const std::map<std::string, std::string>& args) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) throw ToolError("tool not registered: " + name);
  return it->second(args);
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, fn] : tools_) out.push_back(name);
  return out;
}

OJson Transcript::to_json() const {
  OJson j;
  j["messages"] = OJson::array();
  for (const auto& m : messages) j["messages"].push_back(message_to_json(m));
  j["tool_calls"] = OJson::array();
  for (const auto& c : tool_calls) {
    OJson call;
    call["tool"] = c.tool;
    call["caller"] = c.caller;
    call["arguments"] = OJson::object();
    for (const auto& [k, v] : c.arguments) call["arguments"][k] = v;
    call["result"] = c.result;
    j["tool_calls"].push_back(std::move(call));
  }
  j["outcome"] = outcome;
  j["usage"] = {{"calls", usage.calls},
                {"retries", usage.retries},
                {"prompt_chars", usage.prompt_chars},
                {"completion_chars", usage.completion_chars}};
  return j;
}

std::optional<ToolDirective> parse_tool_directive(const std::string& content) {
  auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = text::trim(lines[i]);
    if (!text::starts_with(line, "@@tool")) continue;
    ToolDirective d;
    d.tool = text::trim(line.substr(6));
    for (std::size_t k = i + 1; k < lines.size(); ++k) {
      std::string arg_line = text::trim(lines[k]);
      if (arg_line == "@@end") break;
      if (arg_line.empty()) continue;
      auto colon = arg_line.find(':');
      if (colon == std::string::npos) continue;
      d.arguments[text::trim(arg_line.substr(0, colon))] = text::trim(arg_line.substr(colon + 1));
    }
    if (d.tool.empty()) return std::nullopt;
    return d;
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> fenced_block(const std::string& content,
                                                     const std::string& marker) {
  auto lines = text::split_lines(content);
  std::vector<std::string> block;
  bool open = false;
  for (const auto& raw : lines) {
    std::string line = text::trim(raw);
    if (!open) {
      if (line == marker) open = true;
      continue;
    }
    if (line == "@@end" || text::starts_with(line, "@@")) return block;
    if (!line.empty()) block.push_back(line);
  }
  if (open) return block;  // unterminated block still usable
  return std::nullopt;
}

std::optional<std::string> fenced_text(const std::string& content, const std::string& marker) {
  auto lines = text::split_lines(content);
  std::string out;
  bool open = false;
  for (const auto& raw : lines) {
    std::string trimmed = text::trim(raw);
    if (!open) {
      if (trimmed == marker) open = true;
      continue;
    }
    if (trimmed == "@@end") return out;
    out += raw;
    out += '\n';
  }
  if (open) return out;
  return std::nullopt;
}

AgentResult run_agent(const AgentSpec& agent, const std::vector<Message>& context,
                      const std::string& input, LlmClient& client, const ToolRegistry* tools,
                      int max_tool_rounds, Transcript& transcript) {
  std::vector<Message> msgs;
  msgs.push_back(Message::make(Role::System, agent.objective, agent.name));
  if (!input.empty()) msgs.push_back(Message::make(Role::User, input));
  msgs.insert(msgs.end(), context.begin(), context.end());

  AgentResult result;
  CompletionOptions options;
  options.agent_name = agent.name;
  options.model = agent.model;

  int executed = 0;
  int unknown_strikes = 0;
  while (true) {
    Message reply = client.complete(msgs, options);
    reply.turn = transcript.next_turn();
    transcript.messages.push_back(reply);

    auto directive = parse_tool_directive(reply.text());
    if (!directive) {
      result.output = reply;
      return result;
    }
    if (executed >= max_tool_rounds) {
      result.output = reply;
      result.truncated = true;
      return result;
    }
    if (std::find(agent.tools.begin(), agent.tools.end(), directive->tool) == agent.tools.end())
      throw ToolError("agent '" + agent.name + "' is not authorized for tool '" +
                      directive->tool + "'");
    if (!tools || !tools->contains(directive->tool)) {
      if (++unknown_strikes > 1)
        throw ToolError("tool '" + directive->tool + "' unknown (repeated)");
      Message err = Message::make(Role::Tool, "error: unknown tool '" + directive->tool + "'",
                                  directive->tool, transcript.next_turn());
      transcript.messages.push_back(err);
      msgs.push_back(reply);
      msgs.push_back(err);
      continue;
    }

    std::string tool_result = tools->invoke(directive->tool, directive->arguments);
    ToolCall call{directive->tool, directive->arguments, tool_result, agent.name};
    result.calls.push_back(call);
    transcript.tool_calls.push_back(call);

    Message tool_msg =
        Message::make(Role::Tool, tool_result, directive->tool, transcript.next_turn());
    transcript.messages.push_back(tool_msg);
    msgs.push_back(reply);
    msgs.push_back(tool_msg);
    ++executed;
  }
}

void ChatGroupSpec::validate() const {
  if (agents.empty()) throw ConfigError("chat group needs at least one agent");
  std::set<std::string> names;
  for (const auto& a : agents)
    if (!names.insert(a.name).second) throw ConfigError("duplicate agent name: " + a.name);
  if (!names.count(terminator)) throw ConfigError("terminator '" + terminator + "' not in group");
  for (const auto& channel : channels)
    for (const auto& member : channel)
      if (!names.count(member))
        throw ConfigError("channel member '" + member + "' not in group");
  if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
}

namespace {

bool share_channel(const ChatGroupSpec& group, const std::string& a, const std::string& b) {
  if (a == b) return true;
  if (group.channels.empty()) return true;  // broadcast default
  for (const auto& channel : group.channels) {
    bool has_a = std::find(channel.begin(), channel.end(), a) != channel.end();
    bool has_b = std::find(channel.begin(), channel.end(), b) != channel.end();
    if (has_a && has_b) return true;
  }
  return false;
}

}  // namespace

OJson extract_payload(const std::string& content) {
  std::string stripped = content;
  auto pos = stripped.find(kFinalMarker);
  if (pos != std::string::npos) stripped.erase(pos, std::string(kFinalMarker).size());
  stripped = text::trim(stripped);

  auto open = stripped.find('{');
  auto close = stripped.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    try {
      OJson j = OJson::parse(stripped.substr(open, close - open + 1));
      if (j.is_object()) return j;
    } catch (const nlohmann::json::parse_error&) {
      // fall through to plain text payload
    }
  }
  OJson j;
  j["text"] = stripped;
  return j;
}

GroupResult run_chat_group(const ChatGroupSpec& group, const std::string& task, LlmClient& client,
                           const ToolRegistry* tools, int max_tool_rounds) {
  group.validate();

  GroupResult result;
  const Message* terminator_last = nullptr;
  int spoken = 0;
  std::size_t next_agent = 0;

  while (spoken < group.max_turns) {
    const AgentSpec& agent = group.agents[next_agent];
    next_agent = (next_agent + 1) % group.agents.size();

    // Visible context: assistant turns from shared channels plus the
    // agent's own tool exchanges.
    std::vector<Message> context;
    for (const auto& m : result.transcript.messages) {
      if (m.role == Role::Assistant && share_channel(group, agent.name, m.sender)) {
        if (m.sender == agent.name) {
          context.push_back(m);
        } else {
          context.push_back(
              Message::make(Role::User, m.sender + ": " + m.text(), m.sender, m.turn));
        }
      }
    }

    AgentResult agent_result =
        run_agent(agent, context, task, client, tools, max_tool_rounds, result.transcript);
    ++spoken;

    if (agent.name == group.terminator) {
      terminator_last = &result.transcript.messages.back();
      if (text::contains(agent_result.output.text(), kFinalMarker)) {
        result.terminated = true;
        break;
      }
    }
  }

  if (terminator_last) {
    result.outcome = extract_payload(terminator_last->text());
  } else {
    result.outcome = OJson{{"text", ""}};
  }
  result.transcript.usage = client.usage();
  result.transcript.outcome = result.outcome;
  return result;
}

WorkflowSpec WorkflowSpec::make(std::vector<WorkflowStage> stages) {
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    if (stages[i].output_kind != stages[i + 1].input_kind)
      throw ConfigError("workflow stage '" + stages[i].name + "' outputs '" +
                        stages[i].output_kind + "' but stage '" + stages[i + 1].name +
                        "' expects '" + stages[i + 1].input_kind + "'");
  }
  WorkflowSpec w;
  w.stages_ = std::move(stages);
  return w;
}

WorkflowResult run_workflow_into(const WorkflowSpec& workflow, Payload input, LlmClient* client,
                                 const ToolRegistry* tools, Transcript& transcript) {
  WorkflowResult result;
  if (workflow.stages().empty()) {
    result.output = std::move(input);
    return result;
  }
  if (input.kind != workflow.stages().front().input_kind)
    throw ConfigError("workflow input kind '" + input.kind + "' does not match stage '" +
                      workflow.stages().front().name + "' expecting '" +
                      workflow.stages().front().input_kind + "'");

  StageContext ctx{client, tools, &transcript};
  Payload current = std::move(input);
  for (const auto& stage : workflow.stages()) {
    try {
      current = stage.op(current, ctx);
      current.kind = stage.output_kind;
      ++result.completed_stages;
    } catch (const Error& e) {
      result.ok = false;
      result.error = "stage '" + stage.name + "': " + e.what();
      result.output = std::move(current);
      return result;
    }
  }
  result.output = std::move(current);
  return result;
}

WorkflowResult run_workflow(const WorkflowSpec& workflow, Payload input, LlmClient* client,
                            const ToolRegistry* tools) {
  Transcript transcript;
  WorkflowResult result = run_workflow_into(workflow, std::move(input), client, tools, transcript);
  if (client) transcript.usage = client->usage();
  result.transcript = std::move(transcript);
  return result;
}

void CohortSpec::validate() const {
  group.validate();
  if (std::find(group.output_fields.begin(), group.output_fields.end(), bridge_field) ==
      group.output_fields.end())
    throw ConfigError("bridge field '" + bridge_field +
                      "' is not a declared output of the chat group");
}

CohortResult run_cohort(const CohortSpec& cohort, const std::string& objective, LlmClient& client,
                        const ToolRegistry* tools) {
  cohort.validate();

  CohortResult result;
  GroupResult group = run_chat_group(cohort.group, objective, client, tools);
  result.transcript = std::move(group.transcript);
  result.group_outcome = group.outcome;

  if (!group.outcome.is_object() || !group.outcome.contains(cohort.bridge_field))
    throw ConfigError("bridge field '" + cohort.bridge_field + "' absent from group outcome");

  Payload input;
  input.kind =
      cohort.workflow.stages().empty() ? "" : cohort.workflow.stages().front().input_kind;
  input.value = group.outcome.at(cohort.bridge_field);

  WorkflowResult wf = run_workflow_into(cohort.workflow, std::move(input),
                                        &client, tools, result.transcript);
  result.result = std::move(wf.output);
  result.ok = wf.ok;
  result.error = wf.error;
  result.transcript.usage = client.usage();
  result.transcript.outcome = result.group_outcome;
  return result;
}

}  // namespace cepro::orch
