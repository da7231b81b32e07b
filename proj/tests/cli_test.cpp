#include <gtest/gtest.h>

#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <vmeval/cli.hpp>

#include "support/temp_dir.hpp"

using namespace vmeval;
using testing_support::TempDir;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome vm(std::vector<std::string> args) {
    args.insert(args.begin(), "vmeval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

/// Relative path -> contents for every file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text(e.path());
    return files;
}

/// Clears an env var for one test and restores it afterwards.
class EnvGuard {
public:
    explicit EnvGuard(std::string name) : name_(std::move(name)) {
        if (const char* v = std::getenv(name_.c_str())) old_ = v;
        ::unsetenv(name_.c_str());
    }
    ~EnvGuard() {
        if (old_) ::setenv(name_.c_str(), old_->c_str(), 1);
        else ::unsetenv(name_.c_str());
    }
    void set(const std::string& v) const { ::setenv(name_.c_str(), v.c_str(), 1); }

private:
    std::string name_;
    std::optional<std::string> old_;
};

std::string seeds_in(const fs::path& root) {
    std::set<std::string> seeds;
    for (const auto& id : pipeline::list_task_ids(root)) seeds.insert(id.substr(id.find('_') + 1, id.rfind('_') - id.find('_') - 1));
    std::string out;
    for (const auto& s : seeds) out += (out.empty() ? "" : ",") + s;
    return out;
}

const char* kCatalog = R"({"models": [
  {"name": "sharp", "endpoint": "mock://oracle", "poll_interval_s": 0.001, "max_wait_s": 5},
  {"name": "still", "endpoint": "mock://lazy", "poll_interval_s": 0.001, "max_wait_s": 5}
]})";

} // namespace

TEST(CliGenerate, TwoRunsGiveByteIdenticalTreesForEveryDomain) {
    TempDir a, b;
    const auto ra = vm({"generate", "--domain", "all", "--count", "3", "--seed", "42", "--out", a.path().string()});
    const auto rb = vm({"generate", "--domain", "all", "--count", "3", "--seed", "42", "--out", b.path().string()});
    ASSERT_EQ(ra.code, 0) << ra.err;
    ASSERT_EQ(rb.code, 0) << rb.err;
    EXPECT_EQ(ra.out, rb.out);
    const auto sa = snapshot(a.path()), sb = snapshot(b.path());
    EXPECT_EQ(sa.size(), 15u * 5u); // five files per task
    EXPECT_TRUE(sa == sb);
    std::set<std::string> domains;
    for (const auto& id : pipeline::list_task_ids(a.path())) domains.insert(id.substr(0, id.find('_')));
    EXPECT_EQ(domains.size(), 5u);
}

TEST(CliGenerate, ArgumentErrors) {
    TempDir d;
    auto r = vm({"generate", "--domain", "chess", "--count", "0", "--out", d.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("--count"), std::string::npos);
    r = vm({"generate", "--domain", "knight", "--count", "1", "--out", d.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("knight"), std::string::npos);
    EXPECT_EQ(vm({"generate", "--count", "1"}).code, cli::kExitConfig);
    EXPECT_EQ(vm({"generate", "--count", "abc", "--out", d.path().string()}).code, cli::kExitConfig);
    EXPECT_EQ(vm({"frobnicate"}).code, cli::kExitConfig);
    EXPECT_EQ(vm({}).code, cli::kExitConfig);
    EXPECT_TRUE(fs::is_empty(d.path()));
    const auto help = vm({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("generate"), std::string::npos);
}

TEST(CliGenerate, RerunSkipsExistingTasks) {
    TempDir d;
    ASSERT_EQ(vm({"generate", "--domain", "sudoku,maze", "--count", "2", "--out", d.path().string()}).code, 0);
    const auto before = snapshot(d.path());
    const auto r = vm({"generate", "--domain", "sudoku,maze", "--count", "3", "--out", d.path().string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("sudoku  1        2"), std::string::npos) << r.out;
    auto after = snapshot(d.path());
    EXPECT_EQ(after.size(), before.size() + 2 * 5);
    for (const auto& [k, v] : before) EXPECT_EQ(after[k], v);
}

TEST(CliConfig, FlagBeatsEnvBeatsConfigFile) {
    TempDir root;
    EnvGuard seed_env("VMEVAL_GENERATE_SEED");
    EnvGuard config_env("VMEVAL_CONFIG");
    const fs::path cfg = root.path() / "config.json";
    io::write_text(cfg, R"({"seed": 9, "count": 1, "generate": {"seed": 7, "domain": "sudoku"}})");
    auto gen = [&](const std::string& dir, std::vector<std::string> extra) {
        std::vector<std::string> args{"--config", cfg.string(), "generate", "--out", (root.path() / dir).string()};
        args.insert(args.end(), extra.begin(), extra.end());
        const auto r = vm(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return seeds_in(root.path() / dir);
    };
    EXPECT_EQ(gen("config", {}), "7"); // section beats top level
    EXPECT_EQ(pipeline::list_task_ids(root.path() / "config").size(), 1u);
    seed_env.set("5");
    EXPECT_EQ(gen("env", {}), "5");
    EXPECT_EQ(gen("flag", {"--seed", "3"}), "3");

    // config file named by env instead of flag
    config_env.set(cfg.string());
    seed_env.set("");
    EXPECT_EQ(vm({"generate", "--out", (root.path() / "via-env").string()}).code, 0);
    EXPECT_EQ(seeds_in(root.path() / "via-env"), "7");

    seed_env.set("not-a-number");
    EXPECT_EQ(vm({"generate", "--out", (root.path() / "bad").string()}).code, cli::kExitConfig);
}

TEST(CliConfig, BrokenConfigFileIsAConfigError) {
    TempDir root;
    EnvGuard config_env("VMEVAL_CONFIG");
    io::write_text(root.path() / "c.json", "{ nope");
    auto r = vm({"--config", (root.path() / "c.json").string(), "generate", "--out", root.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    io::write_text(root.path() / "c.json", R"({"generate": {"count": "many"}})");
    r = vm({"--config", (root.path() / "c.json").string(), "generate", "--out", root.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("count"), std::string::npos);
    r = vm({"--config", (root.path() / "missing.json").string(), "generate", "--out", root.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
}

class CliPipeline : public ::testing::Test {
protected:
    void SetUp() override {
        ASSERT_EQ(vm({"generate", "--domain", "maze,rpm", "--count", "3", "--seed", "5", "--out", tasks()}).code, 0);
        io::write_text(root.path() / "catalog.json", kCatalog);
    }
    std::string tasks() const { return (root.path() / "tasks").string(); }
    std::string runs() const { return (root.path() / "runs").string(); }
    std::string catalog() const { return (root.path() / "catalog.json").string(); }
    TempDir root;
};

TEST_F(CliPipeline, MockModelsEndToEnd) {
    auto r = vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", runs(), "--concurrency", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("sharp  6"), std::string::npos) << r.out;
    r = vm({"judge", "--runs", runs()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string judgments = runs() + "/" + judge::kJudgmentsFile;
    const fs::path out = root.path() / "report";
    r = vm({"stats", "--judgments", judgments, "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("| sharp | 100.0% |"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("| still | 0.0% |"), std::string::npos) << r.out;
    for (const char* f : {"report.md", "report.csv", "report.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto first = snapshot(out);

    // rerun everything: resumed inference, same judgments, same report
    ASSERT_EQ(vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", runs()}).code, 0);
    ASSERT_EQ(vm({"judge", "--runs", runs(), "--concurrency", "1"}).code, 0);
    ASSERT_EQ(vm({"stats", "--judgments", judgments, "--out", out.string()}).code, 0);
    EXPECT_TRUE(snapshot(out) == first);

    r = vm({"stats", "--judgments", judgments, "--out", (root.path() / "json-only").string(), "--format", "json"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(snapshot(root.path() / "json-only").size(), 1u);
    EXPECT_EQ(vm({"stats", "--judgments", judgments, "--out", out.string(), "--format", "pdf"}).code, cli::kExitConfig);
}

TEST_F(CliPipeline, FailedJobsGiveExitTwo) {
    io::write_text(catalog(), R"({"models": [
      {"name": "flaky", "endpoint": "mock://oracle", "poll_interval_s": 0.001, "max_wait_s": 5, "options": {"fail_job": true}}
    ]})");
    const auto r = vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", runs()});
    EXPECT_EQ(r.code, cli::kExitPartial) << r.err;
    EXPECT_NE(r.out.find("flaky  0          6"), std::string::npos) << r.out;
}

TEST_F(CliPipeline, MissingInputsNameThePath) {
    auto r = vm({"infer", "--catalog", (root.path() / "nope.json").string(), "--tasks", tasks(), "--out", runs()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("nope.json"), std::string::npos);
    r = vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", tasks()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    r = vm({"judge", "--runs", (root.path() / "no-runs").string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("no-runs"), std::string::npos);
    r = vm({"stats", "--judgments", (root.path() / "none.json").string(), "--out", root.path().string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("none.json"), std::string::npos);
    io::write_text(catalog(), R"({"models": []})");
    EXPECT_EQ(vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", runs()}).code, cli::kExitConfig);
}

TEST_F(CliPipeline, AiJudgeWithoutEndpointIsAConfigError) {
    EnvGuard endpoint("VMEVAL_JUDGE_ENDPOINT");
    ASSERT_EQ(vm({"infer", "--catalog", catalog(), "--tasks", tasks(), "--out", runs()}).code, 0);
    const auto r = vm({"judge", "--runs", runs(), "--judge", "ai"});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("VMEVAL_JUDGE_ENDPOINT"), std::string::npos);
    EXPECT_FALSE(fs::exists(fs::path(runs()) / judge::kJudgmentsFile));
    EXPECT_EQ(vm({"judge", "--runs", runs(), "--judge", "crystal-ball"}).code, cli::kExitConfig);
}

// Five items with hand-worked statistics:
//   ai    1 2 3 4 5, human 2 2 3 5 5
//   r = 9 / sqrt(10 * 9.2) = 9 / sqrt(92)
//   binary: both raters succeed on the last two items only, so kappa = 1
//   5-class: p_o = 3/5; marginals give p_e = (2 + 1 + 2) / 25 = 1/5;
//   kappa = (3/5 - 1/5) / (4/5) = 1/2
TEST(CliStats, HumanFileAddsAgreement) {
    TempDir root;
    const int ai[] = {1, 2, 3, 4, 5}, human[] = {2, 2, 3, 5, 5};
    std::string ai_text, human_text;
    for (int i = 0; i < 5; ++i) {
        const std::string task = "maze_1_" + std::to_string(i);
        ai_text += judge::judgment_to_json(judge::make_judgment(task, "m", "ai:judge", ai[i], "")).dump() + "\n";
        human_text += judge::judgment_to_json(judge::make_judgment(task, "m", "human:pat", human[i], "")).dump() + "\n";
    }
    // a second rater in the machine file must be selected away
    const std::string other = judge::judgment_to_json(judge::make_judgment("maze_1_0", "m", "oracle", 5, "")).dump() + "\n";
    io::write_text(root.path() / "ai.jsonl", ai_text + other);
    io::write_text(root.path() / "human_scores.jsonl", human_text);
    const std::string out = (root.path() / "report").string();

    auto r = vm({"stats", "--judgments", (root.path() / "ai.jsonl").string(), "--human",
                 (root.path() / "human_scores.jsonl").string(), "--out", out});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("rater"), std::string::npos) << r.err;

    r = vm({"stats", "--judgments", (root.path() / "ai.jsonl").string(), "--rater", "ai:judge", "--human",
            (root.path() / "human_scores.jsonl").string(), "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rep = Json::parse(io::read_text(fs::path(out) / "report.json"));
    const Json& a = rep.at("agreement");
    EXPECT_EQ(a.at("n"), 5);
    EXPECT_NEAR(a.at("pearson_r").get<double>(), 9.0 / std::sqrt(92.0), 1e-15);
    EXPECT_EQ(a.at("kappa_binary").get<double>(), 1.0);
    EXPECT_EQ(a.at("kappa_5class").get<double>(), 0.5);
    EXPECT_NE(r.out.find("Agreement"), std::string::npos) << r.out;

    r = vm({"stats", "--judgments", (root.path() / "ai.jsonl").string(), "--rater", "ai:nobody", "--out", out});
    EXPECT_EQ(r.code, cli::kExitConfig);
}

#ifdef VMEVAL_CLI_PATH
// The built binary serves until SIGTERM and then exits cleanly.
TEST(CliBinary, MockServerStopsOnSigterm) {
    TempDir root;
    ASSERT_EQ(vm({"generate", "--domain", "sudoku", "--count", "1", "--out", root.path().string()}).code, 0);
    int pipefd[2];
    ASSERT_EQ(::pipe(pipefd), 0);
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::close(pipefd[0]);
        ::execl(VMEVAL_CLI_PATH, "vmeval", "mock-server", "--tasks", root.path().c_str(), "--port", "0",
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(pipefd[1]);
    FILE* f = ::fdopen(pipefd[0], "r");
    char line[256] = {};
    ASSERT_NE(std::fgets(line, sizeof line, f), nullptr);
    const std::string banner = line;
    const auto colon = banner.rfind(':', banner.find(" (modes"));
    const int port = std::stoi(banner.substr(colon + 1));
    httplib::Client c("127.0.0.1", port);
    auto res = c.Get("/oracle/v1/jobs/unknown");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    std::fclose(f);
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
}
#endif
