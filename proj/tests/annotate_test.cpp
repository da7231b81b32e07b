#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>
#include <vmeval/annotate/server.hpp>
#include <vmeval/annotate/session.hpp>
#include <vmeval/generate.hpp>
#include <vmeval/judge/run.hpp>
#include <vmeval/pipeline/run.hpp>
#include <vmeval/raster/png.hpp>
#include <vmeval/stats/report.hpp>

#include "support/temp_dir.hpp"

using namespace vmeval;
using namespace vmeval::annotate;
using testing_support::TempDir;

namespace {

pipeline::ModelSpec mock_model(const std::string& name, const std::string& mode, Json options = Json::object()) {
    pipeline::ModelSpec m;
    m.name = name;
    m.endpoint = "mock://" + mode;
    m.poll_interval_s = 0.001;
    m.max_wait_s = 5;
    m.options = std::move(options);
    return m;
}

class AnnotateTest : public ::testing::Test {
protected:
    void SetUp() override {
        generate_tasks({Domain::sudoku, Domain::rpm}, 3, 4, tasks.path());
        manifest = pipeline::run_suite({mock_model("good", "oracle"), mock_model("idle", "lazy"),
                                        mock_model("broken", "oracle", {{"fail_job", true}})},
                                       tasks.path(), run.path());
    }

    struct Client {
        explicit Client(int port) : http("127.0.0.1", port) {}
        httplib::Result post(const std::string& path, const Json& body) {
            return http.Post(path, body.dump(), "application/json");
        }
        Json get_json(const std::string& path) {
            auto r = http.Get(path);
            EXPECT_TRUE(r);
            EXPECT_EQ(r->status, 200) << path << ": " << r->body;
            return Json::parse(r->body);
        }
        httplib::Client http;
    };

    TempDir tasks{"vmeval-tasks"};
    TempDir run{"vmeval-run"};
    pipeline::RunManifest manifest;
};

std::string session_path(const std::string& id) { return "/api/sessions/" + id; }

} // namespace

TEST_F(AnnotateTest, RatableItemsSkipFailedGenerations) {
    const auto items = ratable_items(manifest);
    EXPECT_EQ(items.size(), 12u);
    for (const auto& [m, t] : items) EXPECT_NE(m, "broken");
}

TEST_F(AnnotateTest, ProtocolWalk) {
    AnnotationServer server(run.path());
    Client c(server.start());

    auto r = c.post("/api/sessions", {{"annotator_id", "alice"}, {"run_id", manifest.run_id}});
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 201) << r->body;
    const Json created = Json::parse(r->body);
    const std::string id = created["session_id"];
    EXPECT_EQ(id, make_session_id("alice", manifest.run_id));
    EXPECT_EQ(created["total"], 12);
    EXPECT_EQ(created["scored"], 0);

    Json next = c.get_json(session_path(id) + "/next");
    EXPECT_FALSE(next["done"].get<bool>());
    EXPECT_EQ(next["index"], 0);
    EXPECT_FALSE(next.contains("final_frame_url"));
    EXPECT_FALSE(next["prompt"].get<std::string>().empty());

    // media for the pending item
    auto img = c.http.Get(next["first_frame_url"].get<std::string>());
    ASSERT_TRUE(img);
    EXPECT_EQ(img->status, 200);
    const std::vector<std::uint8_t> png(img->body.begin(), img->body.end());
    const auto frame = raster::decode_png(png);
    EXPECT_GT(frame.width(), 0);
    auto vid = c.http.Get(next["video_url"].get<std::string>());
    ASSERT_TRUE(vid);
    EXPECT_EQ(vid->status, 200);
    EXPECT_EQ(vid->body.substr(0, 4), "RIFF");
    const std::string item_base = "/media/" + next["model_name"].get<std::string>() + "/" + next["task_id"].get<std::string>();
    EXPECT_EQ(c.http.Get(item_base + "/final_frame")->status, 404);
    EXPECT_EQ(c.http.Get(item_base + "/thumbnail")->status, 404);
    EXPECT_EQ(c.http.Get("/media/broken/" + next["task_id"].get<std::string>() + "/video")->status, 404);
    EXPECT_EQ(c.http.Get("/media/good/..%2F..%2Fetc/video")->status, 404);

    const Json pending{{"model_name", next["model_name"]}, {"task_id", next["task_id"]}};
    auto with_score = [&](Json s) {
        Json b = pending;
        b["score"] = std::move(s);
        return b;
    };
    EXPECT_EQ(c.post(session_path(id) + "/scores", with_score(0))->status, 422);
    EXPECT_EQ(c.post(session_path(id) + "/scores", with_score(6))->status, 422);
    EXPECT_EQ(c.post(session_path(id) + "/scores", with_score(4.5))->status, 422);
    EXPECT_EQ(c.post(session_path(id) + "/scores", with_score("4"))->status, 422);
    EXPECT_EQ(c.post(session_path("s-0000000000000000") + "/scores", with_score(3))->status, 404);
    EXPECT_EQ(c.post(session_path("nonsense") + "/scores", with_score(3))->status, 404);
    EXPECT_EQ(c.http.Get(session_path("s-0000000000000000") + "/next")->status, 404);
    EXPECT_EQ(c.http.Post(session_path(id) + "/scores", "{not json", "application/json")->status, 400);

    // an item later in the order is not accepted yet
    const Session s = server.store().get(id);
    Json later{{"model_name", s.items[3].first}, {"task_id", s.items[3].second}, {"score", 2}};
    EXPECT_EQ(c.post(session_path(id) + "/scores", later)->status, 409);

    r = c.post(session_path(id) + "/scores", with_score(4));
    ASSERT_EQ(r->status, 201) << r->body;
    EXPECT_EQ(Json::parse(r->body)["scored"], 1);
    EXPECT_EQ(c.post(session_path(id) + "/scores", with_score(5))->status, 409);

    // walk the rest
    for (int i = 1; i < 12; ++i) {
        next = c.get_json(session_path(id) + "/next");
        ASSERT_EQ(next["index"], i);
        r = c.post(session_path(id) + "/scores",
                   {{"model_name", next["model_name"]}, {"task_id", next["task_id"]}, {"score", 1 + i % 5}, {"note", "n" + std::to_string(i)}});
        ASSERT_EQ(r->status, 201) << r->body;
    }
    next = c.get_json(session_path(id) + "/next");
    EXPECT_TRUE(next["done"].get<bool>());
    const Json progress = c.get_json(session_path(id) + "/progress");
    EXPECT_EQ(progress["scored"], 12);
    EXPECT_TRUE(progress["done"].get<bool>());

    auto exported = c.http.Get("/api/export");
    ASSERT_EQ(exported->status, 200);
    const TempDir out;
    io::write_text(out.path() / kHumanScoresFile, exported->body);
    const auto js = judge::load_judgments(out.path() / kHumanScoresFile);
    ASSERT_EQ(js.size(), 12u);
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& j : js) {
        EXPECT_EQ(j.rater, "human:alice");
        keys.insert({j.model, j.task_id});
    }
    EXPECT_EQ(keys.size(), 12u);
}

TEST_F(AnnotateTest, SessionRequestValidation) {
    AnnotationServer server(run.path());
    Client c(server.start());
    EXPECT_EQ(c.post("/api/sessions", {{"annotator_id", "bob"}, {"run_id", "other-run"}})->status, 404);
    EXPECT_EQ(c.post("/api/sessions", {{"annotator_id", "../bob"}})->status, 422);
    EXPECT_EQ(c.post("/api/sessions", {{"annotator_id", ""}})->status, 422);
    EXPECT_EQ(c.post("/api/sessions", Json::object())->status, 422);
    EXPECT_EQ(c.post("/api/sessions", Json::array())->status, 422);
    // run_id may be omitted; it defaults to the served run
    auto r = c.post("/api/sessions", {{"annotator_id", "bob"}});
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(Json::parse(r->body)["run_id"], manifest.run_id);
    EXPECT_EQ(c.get_json("/api/run")["items"], 12);
}

TEST_F(AnnotateTest, RevealFinalServesExpectedFrame) {
    AnnotationServer server(run.path(), {true, {}});
    Client c(server.start());
    const std::string id = Json::parse(c.post("/api/sessions", {{"annotator_id", "carol"}})->body)["session_id"];
    const Json next = c.get_json(session_path(id) + "/next");
    ASSERT_TRUE(next.contains("final_frame_url"));
    auto img = c.http.Get(next["final_frame_url"].get<std::string>());
    ASSERT_EQ(img->status, 200);
    const auto expected = io::read_bytes(tasks.path() / next["task_id"].get<std::string>() / task_files::final_frame);
    EXPECT_EQ(img->body, std::string(expected.begin(), expected.end()));
}

TEST_F(AnnotateTest, RestartResumesWhereItStopped) {
    std::string id;
    std::vector<Item> order;
    {
        SessionStore store(run.path(), manifest);
        const Session s = store.create("dave", manifest.run_id);
        id = s.session_id;
        order = s.items;
        for (int i = 0; i < 5; ++i) store.submit(id, s.items[static_cast<std::size_t>(i)], 3, "");
    }
    AnnotationServer server(run.path());
    Client c(server.start());
    auto r = c.post("/api/sessions", {{"annotator_id", "dave"}});
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(Json::parse(r->body)["session_id"], id);
    EXPECT_EQ(Json::parse(r->body)["scored"], 5);
    const Json next = c.get_json(session_path(id) + "/next");
    EXPECT_EQ(next["index"], 5);
    EXPECT_EQ(next["model_name"], order[5].first);
    EXPECT_EQ(next["task_id"], order[5].second);
}

TEST_F(AnnotateTest, TornLastLineIsDropped) {
    SessionStore store(run.path(), manifest);
    Session s = store.create("erin", manifest.run_id);
    store.submit(s.session_id, s.items[0], 5, "fine");
    store.submit(s.session_id, s.items[1], 2, "");
    const fs::path file = store.dir() / (s.session_id + ".jsonl");
    const std::string intact = io::read_text(file);
    {
        std::ofstream f(file, std::ios::app | std::ios::binary);
        f << R"({"type":"score","index":2,"model_na)";
    }
    s = store.get(s.session_id);
    EXPECT_EQ(s.cursor(), 2u);
    EXPECT_EQ(io::read_text(file), intact);
    s = store.submit(s.session_id, s.items[2], 4, "");
    EXPECT_EQ(load_session(file).cursor(), 3u);
    EXPECT_EQ(load_session(file).scores[2].score, 4);
}

TEST_F(AnnotateTest, CorruptSessionFileIsAnInvariantError) {
    SessionStore store(run.path(), manifest);
    const Session s = store.create("fred", manifest.run_id);
    const fs::path file = store.dir() / (s.session_id + ".jsonl");
    // a score for item 1 while item 0 is pending
    io::write_text(file, io::read_text(file) + Json{{"type", "score"},
                                                    {"index", 0},
                                                    {"model_name", s.items[1].first},
                                                    {"task_id", s.items[1].second},
                                                    {"score", 3}}
                                                       .dump() +
                             "\n");
    EXPECT_THROW(load_session(file), InvariantError);
    io::write_text(file, "{\"type\":\"score\"}\n");
    EXPECT_THROW(load_session(file), ParseError);
}

TEST_F(AnnotateTest, AnnotatorsGetOwnPermutationsOfOneItemSet) {
    SessionStore store(run.path(), manifest);
    std::vector<Session> sessions;
    for (const char* who : {"ann1", "ann2", "ann3"}) sessions.push_back(store.create(who, manifest.run_id));
    auto sorted = [](std::vector<Item> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    for (const auto& s : sessions) {
        EXPECT_EQ(sorted(s.items), ratable_items(manifest));
        EXPECT_EQ(s.items, item_order(ratable_items(manifest), s.annotator_id)); // reproducible
    }
    EXPECT_NE(sessions[0].items, sessions[1].items);
    EXPECT_NE(sessions[0].items, sessions[2].items);
    EXPECT_NE(sessions[1].items, sessions[2].items);
    std::set<std::string> ids;
    for (const auto& s : sessions) ids.insert(s.session_id);
    EXPECT_EQ(ids.size(), 3u);
}

TEST_F(AnnotateTest, ConcurrentDoubleSubmitAcceptsOne) {
    AnnotationServer server(run.path());
    const int port = server.start();
    const Session s = server.store().create("gina", manifest.run_id);
    std::atomic<int> created{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 6; ++t)
        threads.emplace_back([&] {
            Client c(port);
            auto r = c.post(session_path(s.session_id) + "/scores",
                            {{"model_name", s.items[0].first}, {"task_id", s.items[0].second}, {"score", 3}});
            if (r && r->status == 201) ++created;
            if (r && r->status == 409) ++conflicts;
        });
    for (auto& t : threads) t.join();
    EXPECT_EQ(created.load(), 1);
    EXPECT_EQ(conflicts.load(), 5);
    EXPECT_EQ(server.store().get(s.session_id).cursor(), 1u);
}

TEST_F(AnnotateTest, ExportFeedsStatsWithPerfectAgreement) {
    const auto ai = judge::judge_run(run.path()).judgments;
    std::map<Item, int> score_of;
    for (const auto& j : ai) score_of[{j.model, j.task_id}] = j.score;

    SessionStore store(run.path(), manifest);
    Session s = store.create("henk", manifest.run_id);
    for (const auto& it : s.items) s = store.submit(s.session_id, it, score_of.at(it), "");
    const TempDir out;
    io::write_text(out.path() / kHumanScoresFile, export_jsonl(store.export_judgments()));
    const auto human = judge::load_judgments(out.path() / kHumanScoresFile);
    ASSERT_EQ(human.size(), 12u);

    const auto report = stats::build_report(ai, &human);
    ASSERT_TRUE(report.agreement);
    EXPECT_EQ(report.agreement->n, 12u);
    EXPECT_EQ(report.agreement->kappa_binary.value_or(0), 1.0);
    EXPECT_EQ(report.agreement->kappa_5class.value_or(0), 1.0);
    ASSERT_TRUE(report.agreement->pearson_r);
    EXPECT_DOUBLE_EQ(*report.agreement->pearson_r, 1.0);
}
