#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dscd/remote.hpp"

using namespace dscd;
using nlohmann::json;

namespace {

// Loopback chat-completion stub with a scripted list of responses.
class MockBackend {
 public:
  struct Reply {
    int status = 200;
    std::string content;  // assistant message content (when status == 200)
  };

  explicit MockBackend(std::vector<Reply> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      requests_.push_back(json::parse(req.body));
      const std::size_t i = std::min(hits_.fetch_add(1), replies_.size() - 1);
      const Reply& r = replies_[i];
      if (r.status != 200) {
        res.status = r.status;
        res.set_content("busy", "text/plain");
        return;
      }
      const json envelope{{"choices", {{{"message", {{"content", r.content}}}}}}};
      res.set_content(envelope.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockBackend() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int hits() const { return static_cast<int>(hits_.load()); }
  const std::vector<json>& requests() const { return requests_; }

 private:
  std::vector<Reply> replies_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> hits_{0};
  std::vector<json> requests_;
};

RemoteBackendConfig fast_config(const std::string& endpoint) {
  RemoteBackendConfig cfg;
  cfg.endpoint = endpoint;
  cfg.model = "mock-model";
  cfg.timeout_s = 5.0;
  cfg.max_retries = 3;
  cfg.backoff_s = 0.01;
  return cfg;
}

ContextPacket small_context() {
  ContextPacket ctx;
  ctx.goal_text = "lamp";
  ctx.cards = package_candidates({{1.0, 0.0}, {0.8, 0.4}}, false);
  return ctx;
}

EnvView small_view(const ContextPacket& ctx) {
  EnvView v;
  v.goal_bearing = 0.1;
  v.goal_distance = 4.0;
  for (const auto& c : ctx.cards) {
    v.clearance[c.id] = 2.0;
    v.new_area[c.id] = 10.0;
  }
  v.local_sketch = {"###", "#@#", "###"};
  return v;
}

}  // namespace

TEST_CASE("remote TSU parses a well-formed reply") {
  MockBackend mock({{200, json{{"id", "c1"},
                               {"why", "open route"},
                               {"evidence",
                                json::array({{{"about", "c1"},
                                              {"relation", "supports"},
                                              {"text", "visible corridor"}}})}}
                             .dump()}});
  RemotePolicy tsu(Role::TSU, fast_config(mock.endpoint()), HeuristicWeights{});
  const auto ctx = small_context();
  const auto prop = tsu.propose(ctx, small_view(ctx), {});
  CHECK(prop.candidate_id == "c1");
  CHECK(prop.why == "open route");
  REQUIRE(prop.evidence.size() == 1);
  CHECK(prop.evidence[0].about_candidate == "c1");
  CHECK_FALSE(tsu.consumed_fallback());
  CHECK(mock.hits() == 1);

  // request body carries the rendered context
  const json& req = mock.requests()[0];
  CHECK(req.at("model") == "mock-model");
  const std::string user = req.at("messages").at(1).at("content").get<std::string>();
  CHECK(user.find("lamp") != std::string::npos);
  CHECK(user.find("c0") != std::string::npos);
  CHECK(user.find("#@#") != std::string::npos);
}

TEST_CASE("unknown id triggers one reprompt, then success") {
  MockBackend mock({{200, json{{"id", "c9"}, {"why", "?"}}.dump()},
                    {200, json{{"id", "c0"}, {"why", "fixed"}}.dump()}});
  RemotePolicy tsu(Role::TSU, fast_config(mock.endpoint()), HeuristicWeights{});
  const auto ctx = small_context();
  const auto prop = tsu.propose(ctx, small_view(ctx), {});
  CHECK(prop.candidate_id == "c0");
  CHECK_FALSE(tsu.consumed_fallback());
  CHECK(mock.hits() == 2);
}

TEST_CASE("persistently invalid replies fall back to the heuristic") {
  MockBackend mock({{200, "not json at all"}});
  RemotePolicy tsu(Role::TSU, fast_config(mock.endpoint()), HeuristicWeights{});
  const auto ctx = small_context();
  tsu.begin_step(1);
  const auto prop = tsu.propose(ctx, small_view(ctx), {});
  CHECK(find_card(ctx.cards, prop.candidate_id) != nullptr);
  CHECK(tsu.consumed_fallback());
  tsu.begin_step(2);
  CHECK_FALSE(tsu.consumed_fallback());  // latch resets per step
}

TEST_CASE("429 responses back off and retry") {
  MockBackend mock({{429, ""}, {429, ""}, {200, json{{"id", "c0"}, {"why", "ok"}}.dump()}});
  RemotePolicy tsu(Role::TSU, fast_config(mock.endpoint()), HeuristicWeights{});
  const auto ctx = small_context();
  const auto prop = tsu.propose(ctx, small_view(ctx), {});
  CHECK(prop.candidate_id == "c0");
  CHECK(mock.hits() == 3);
  CHECK_FALSE(tsu.consumed_fallback());
}

TEST_CASE("exhausted retries raise when fallback is disabled") {
  MockBackend mock({{500, ""}});
  auto cfg = fast_config(mock.endpoint());
  cfg.fallback_to_heuristic = false;
  cfg.max_retries = 1;
  RemotePolicy tsu(Role::TSU, cfg, HeuristicWeights{});
  const auto ctx = small_context();
  CHECK_THROWS_AS(tsu.propose(ctx, small_view(ctx), {}), BackendError);
  CHECK(mock.hits() == 2);  // first try + one retry
}

TEST_CASE("exhausted retries fall back when enabled") {
  MockBackend mock({{500, ""}});
  auto cfg = fast_config(mock.endpoint());
  cfg.max_retries = 1;
  RemotePolicy sib(Role::SIB, cfg, HeuristicWeights{});
  const auto ctx = small_context();
  const auto resp = sib.respond(ctx, small_view(ctx), "c0", {});
  CHECK(sib.consumed_fallback());
  CHECK((resp.decision == Decision::agree || resp.decision == Decision::counter));
}

TEST_CASE("remote SIB and NCA schemas") {
  MockBackend mock({{200, json{{"dec", "counter"}, {"id", "c1"}, {"why", "risk"}}.dump()},
                    {200, json{{"id", "c0"}, {"why", "balanced"}}.dump()}});
  auto cfg = fast_config(mock.endpoint());
  RemotePolicy sib(Role::SIB, cfg, HeuristicWeights{});
  const auto ctx = small_context();
  const auto resp = sib.respond(ctx, small_view(ctx), "c0", {});
  CHECK(resp.decision == Decision::counter);
  CHECK(resp.candidate_id == "c1");

  RemotePolicy nca(Role::NCA, cfg, HeuristicWeights{});
  DebateTrace trace;
  DebateRound r;
  r.k = 1;
  r.tsu.candidate_id = "c0";
  r.sib.decision = Decision::counter;
  r.sib.candidate_id = "c1";
  trace.rounds = {r};
  trace.final_tsu_id = "c0";
  trace.final_sib_id = "c1";
  const auto arb = nca.arbitrate("lamp", ctx.cards, trace);
  CHECK(arb.id == "c0");
  CHECK(arb.why == "balanced");
}

TEST_CASE("rate limiter spaces requests") {
  auto limiter = std::make_shared<RateLimiter>(0.05);
  const auto t0 = std::chrono::steady_clock::now();
  limiter->acquire();
  limiter->acquire();
  limiter->acquire();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed >= 0.09);
}

TEST_CASE("prompt rendering is deterministic and complete") {
  const auto ctx = small_context();
  const auto view = small_view(ctx);
  const std::string a = render_context_prompt(ctx, view);
  const std::string b = render_context_prompt(ctx, view);
  CHECK(a == b);
  CHECK(a.find("forward 1.00 m") != std::string::npos);
  CHECK(a.find("Goal: lamp") != std::string::npos);

  const std::string table = render_card_table(ctx.cards);
  CHECK(table.find("c0") != std::string::npos);
  CHECK(table.find("c1") != std::string::npos);

  DebateRound r;
  r.k = 1;
  r.tsu.candidate_id = "c0";
  r.tsu.why = "w";
  r.sib.decision = Decision::counter;
  r.sib.candidate_id = "c1";
  r.sib.why = "x";
  std::vector<DebateRound> rounds{r};
  const std::string hist = render_history(DebateHistory{rounds});
  CHECK(hist.find("Round 1") != std::string::npos);
  CHECK(hist.find("countered with c1") != std::string::npos);
}

TEST_CASE("remote config validation") {
  RemoteBackendConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // endpoint missing
  cfg.endpoint = "http://x/y";
  cfg.model = "m";
  cfg.timeout_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.timeout_s = 1.0;
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.max_retries = 0;
  CHECK_NOTHROW(cfg.validate());
}
