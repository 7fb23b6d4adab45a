#include <gtest/gtest.h>

#include <thread>

#include "ilgen/genpipe/golden.hpp"
#include "ilgen/genpipe/http_client.hpp"
#include "ilgen/genpipe/pipeline.hpp"
#include "support.hpp"

using namespace ilgen;
using namespace ilgen::genpipe;
using test::TempDir;

namespace {

// Error messages are implementation text; only status and error code are part
// of the contract.
void expect_same_reply(const GoldenCase& g, int status, const Json& body) {
  EXPECT_EQ(status, g.status) << g.name;
  if (g.status == 200) {
    EXPECT_EQ(body.dump(), g.response.dump()) << g.name;
  } else {
    ASSERT_TRUE(body.contains("error")) << g.name;
    EXPECT_EQ(body["error"]["code"], g.response["error"]["code"]) << g.name;
    EXPECT_TRUE(body["error"]["message"].is_string()) << g.name;
  }
}

// In-process protocol server on an ephemeral port.
class TestServer {
 public:
  explicit TestServer(StageClients clients) {
    install_protocol_routes(server_, std::move(clients));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  TestServer(const TestServer&) = delete;
  TestServer& operator=(const TestServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

class FailingRelighter final : public Relighter {
 public:
  std::string id() const override { return "failing"; }
  Bytes relight(const Bytes&, const std::string&, std::uint64_t) override {
    fail(Errc::io_error, "out of GPU memory");
  }
};

std::string stage_of_failure(const std::function<void()>& f) {
  try {
    f();
  } catch (const ClientError& e) {
    return e.stage();
  } catch (const std::exception& e) {
    return std::string("wrong exception: ") + e.what();
  }
  return "no exception";
}

GenerationConfig small_config() {
  GenerationConfig cfg;
  cfg.master_seed = 5;
  cfg.image_size = kGoldenImageSize;
  DomainSpec d;
  d.name = "generic";
  d.categories = 3;
  d.instances = 2;
  d.backgrounds = 2;
  cfg.domains.push_back(d);
  return cfg;
}

}  // namespace

TEST(Golden, FilesMatchInProcessMocks) {
  const auto cases = read_golden_cases(ILGEN_GOLDEN_DIR);
  ASSERT_EQ(cases.size(), 11u);
  MockClients mocks(kGoldenImageSize);
  for (const auto& g : cases) {
    const auto r = dispatch_request(g.path, g.request, mocks.stage_clients());
    expect_same_reply(g, r.status, r.body);
  }
  // the recorded suite is exactly what the generator produces today
  MockClients fresh(kGoldenImageSize);
  auto rebuilt = build_golden_cases(fresh.stage_clients());
  std::sort(rebuilt.begin(), rebuilt.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  ASSERT_EQ(rebuilt.size(), cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(rebuilt[i].name, cases[i].name);
    EXPECT_EQ(rebuilt[i].request, cases[i].request);
    expect_same_reply(cases[i], rebuilt[i].status, rebuilt[i].response);
  }
}

TEST(Golden, ServedOverHttp) {
  MockClients mocks(kGoldenImageSize);
  TestServer server(mocks.stage_clients());
  httplib::Client cli("127.0.0.1", server.port());
  for (const auto& g : read_golden_cases(ILGEN_GOLDEN_DIR)) {
    const auto res = cli.Post(g.path, g.request, "application/json");
    ASSERT_TRUE(res) << g.name;
    expect_same_reply(g, res->status, Json::parse(res->body));
  }
  const auto health = cli.Get(std::string(kPathHealth));
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->body, "ok");
}

TEST(Protocol, MalformedRequestsAreStructured400s) {
  MockClients mocks(32);
  const auto clients = mocks.stage_clients();
  for (const auto& [path, body] : std::vector<std::pair<std::string_view, std::string>>{
           {kPathGenerate, ""},
           {kPathGenerate, "[1,2]"},
           {kPathGenerate, R"({"prompt": 3, "seed": 1})"},
           {kPathGenerate, R"({"prompt": "a", "seed": -1})"},
           {kPathCategories, R"({"domain": "generic", "prompt": "x"})"},
           {kPathRemoveBg, R"({"png": "x"})"},
           {kPathRelight, R"({"png_base64": "@@", "prompt": "t", "seed": 1})"}}) {
    const auto r = dispatch_request(path, body, clients);
    EXPECT_EQ(r.status, 400) << path << " " << body;
    EXPECT_EQ(r.body["error"]["code"], "BAD_REQUEST") << body;
  }
}

TEST(Protocol, RemoteClientsReproduceMockBytes) {
  MockClients served(kGoldenImageSize);
  TestServer server(served.stage_clients());
  const auto remote = remote_clients(server.url());
  MockClients local(kGoldenImageSize);

  EXPECT_EQ(remote.category_source->categories("generic", "p", 7), local.categories->categories("generic", "p", 7));
  const auto img = remote.instance_source->generate("a lamp in a clean background", 42, 1);
  EXPECT_EQ(img, local.instances->generate("a lamp in a clean background", 42, 1));
  const auto fg = remote.background_remover->remove_background(img);
  EXPECT_EQ(fg, local.remover->remove_background(img));
  EXPECT_EQ(remote.relighter->relight(fg, "lamp", 9), local.relighter->relight(fg, "lamp", 9));

  const auto cfg = small_config();
  TempDir a, b;
  const auto via_http = run_pipeline(cfg, remote, ContentStore(a / "s")).manifest;
  const auto in_process = run_pipeline(cfg, local.stage_clients(), ContentStore(b / "s")).manifest;
  EXPECT_EQ(via_http.image_hashes(), in_process.image_hashes());
  EXPECT_EQ(via_http.classes.size(), 6u);
}

TEST(Protocol, ClientErrorsCarryTheStage) {
  const auto bad = remote_clients("ftp://example.org");
  EXPECT_EQ(stage_of_failure([&] { bad.instance_source->generate("a x in a clean background", 1, 1); }),
            kStageGenerate);
  EXPECT_EQ(stage_of_failure([&] { bad.category_source->categories("generic", "p", 2); }), kStageCategories);
  EXPECT_EQ(stage_of_failure([] { parse_endpoint("http://host:80?q=1", kStageRelight); }), kStageRelight);
  EXPECT_NO_THROW(parse_endpoint("http://127.0.0.1:8080/prefix/", kStagePad));
  EXPECT_EQ(parse_endpoint("http://127.0.0.1:8080/prefix/", kStagePad).base_path, "/prefix");

  // tcpmux; nothing listens there in a test environment
  const auto down = remote_clients("http://127.0.0.1:1");
  const Bytes png = encode_png(Image(8, 8, 4, 255));
  EXPECT_EQ(stage_of_failure([&] { down.background_remover->remove_background(png); }), kStageRemoveBg);
  EXPECT_EQ(stage_of_failure([&] { down.relighter->relight(png, "x", 1); }), kStageRelight);

  MockClients mocks(32);
  auto clients = mocks.stage_clients();
  clients.relighter = std::make_shared<FailingRelighter>();
  TestServer server(clients);
  const auto remote = remote_clients(server.url());
  try {
    remote.relighter->relight(png, "x", 1);
    ADD_FAILURE() << "expected a ClientError";
  } catch (const ClientError& e) {
    EXPECT_EQ(e.stage(), kStageRelight);
    EXPECT_NE(std::string(e.what()).find("GENERATION_FAILED"), std::string::npos) << e.what();
  }

  // a dead category endpoint aborts the pipeline with the stage tag intact
  TempDir dir;
  EXPECT_EQ(stage_of_failure([&] { run_pipeline(small_config(), down, ContentStore(dir / "s")); }),
            kStageCategories);
}
