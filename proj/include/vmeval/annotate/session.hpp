#pragma once

// Human annotation sessions over one run.
//
// Each session is a JSON-lines file <run_root>/annotations/<session_id>.jsonl:
//   line 1: {"type": "session", "session_id", "annotator_id", "run_id", "items": [[model, task_id], ...]}
//   then  : {"type": "score", "index": i, "model_name", "task_id", "score", "note", "at_ms"}
// Score lines are appended with one write() and fsync'd. A torn last line
// (crash mid-write) is dropped when the file is next opened, so stored
// scores are always a prefix of the item order.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../judge/judgment.hpp"
#include "../pipeline/run.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::annotate {

inline constexpr const char* kAnnotationsDir = "annotations";
inline constexpr const char* kHumanScoresFile = "human_scores.jsonl";

/// Error with the HTTP status the service reports for it.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

inline ApiError not_found(const std::string& what) { return {404, what}; }
inline ApiError conflict(const std::string& what) { return {409, what}; }
inline ApiError invalid(const std::string& what) { return {422, what}; }

using Item = std::pair<std::string, std::string>; // (model, task_id)

struct ScoreRecord {
    std::size_t index = 0;
    Item item;
    int score = 0;
    std::string note;
};

struct Session {
    std::string session_id;
    std::string annotator_id;
    std::string run_id;
    std::vector<Item> items;
    std::vector<ScoreRecord> scores; ///< scores[i] belongs to items[i]

    std::size_t cursor() const { return scores.size(); }
    bool done() const { return scores.size() == items.size(); }
};

inline bool valid_annotator_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
}

inline std::string make_session_id(const std::string& annotator, const std::string& run_id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(fnv1a(annotator + "\n" + run_id)));
    return buf;
}

/// Items an annotator can rate: results that produced a video.
inline std::vector<Item> ratable_items(const pipeline::RunManifest& m) {
    std::vector<Item> items;
    for (const auto& r : m.results)
        if (r.status == pipeline::GenerationStatus::succeeded && r.video) items.emplace_back(r.model, r.task_id);
    std::sort(items.begin(), items.end());
    return items;
}

/// Per-annotator order: a shuffle seeded by the annotator id alone.
inline std::vector<Item> item_order(std::vector<Item> items, const std::string& annotator) {
    Rng rng(fnv1a(annotator), "annotation-order");
    rng.shuffle(items);
    return items;
}

/// Checks the session invariants; throws InvariantError.
inline void check_session(const Session& s) {
    if (s.scores.size() > s.items.size()) throw InvariantError(s.session_id + ": more scores than items");
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
        if (s.scores[i].index != i) throw InvariantError(s.session_id + ": score records out of order at " + std::to_string(i));
        if (s.scores[i].item != s.items[i]) throw InvariantError(s.session_id + ": score " + std::to_string(i) + " is for another item");
        if (!judge::valid_score(s.scores[i].score)) throw InvariantError(s.session_id + ": score outside 1..5");
    }
    std::vector<Item> sorted = s.items;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvariantError(s.session_id + ": repeated item");
}

namespace detail {

inline void append_line_synced(const fs::path& p, const std::string& line) {
    const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND);
    if (fd < 0) throw IoError("cannot open " + p.string() + ": " + std::strerror(errno));
    const std::string data = line + "\n";
    const ssize_t n = ::write(fd, data.data(), data.size());
    const int sync = ::fsync(fd);
    ::close(fd);
    if (n != static_cast<ssize_t>(data.size()) || sync != 0)
        throw IoError("could not persist score to " + p.string());
}

inline std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace detail

inline std::string header_line(const Session& s) {
    Json items = Json::array();
    for (const auto& [m, t] : s.items) items.push_back({m, t});
    return Json{{"type", "session"},
                {"session_id", s.session_id},
                {"annotator_id", s.annotator_id},
                {"run_id", s.run_id},
                {"items", items}}
        .dump();
}

/// Reads a session file, dropping a torn final line from disk.
inline Session load_session(const fs::path& p) {
    std::string text = io::read_text(p);
    // Everything after the last newline is an interrupted write.
    const auto last_nl = text.rfind('\n');
    const std::size_t good = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (good != text.size()) {
        text.resize(good);
        fs::resize_file(p, good);
    }
    Session s;
    std::size_t at = 0, line_no = 0;
    while (at < text.size()) {
        const auto nl = text.find('\n', at);
        const std::string line = text.substr(at, nl - at);
        at = nl + 1;
        ++line_no;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error&) {
            throw ParseError(p.string() + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        try {
            if (line_no == 1) {
                if (j.at("type") != "session") throw ParseError(p.string() + ": first line is not a session header");
                s.session_id = j.at("session_id").get<std::string>();
                s.annotator_id = j.at("annotator_id").get<std::string>();
                s.run_id = j.at("run_id").get<std::string>();
                for (const auto& it : j.at("items")) s.items.emplace_back(it.at(0).get<std::string>(), it.at(1).get<std::string>());
            } else {
                ScoreRecord r;
                r.index = j.at("index").get<std::size_t>();
                r.item = {j.at("model_name").get<std::string>(), j.at("task_id").get<std::string>()};
                r.score = j.at("score").get<int>();
                r.note = j.value("note", std::string{});
                s.scores.push_back(std::move(r));
            }
        } catch (const Json::exception& e) {
            throw ParseError(p.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (line_no == 0) throw ParseError(p.string() + ": empty session file");
    check_session(s);
    return s;
}

inline judge::Judgment to_judgment(const Session& s, const ScoreRecord& r) {
    return judge::make_judgment(r.item.second, r.item.first, "human:" + s.annotator_id, r.score, r.note);
}

/// Sessions of one run. Sessions are independent; writes to one session
/// are serialized by its own lock.
class SessionStore {
public:
    SessionStore(fs::path run_root, pipeline::RunManifest manifest)
        : run_root_(std::move(run_root)), manifest_(std::move(manifest)), items_(ratable_items(manifest_)) {
        fs::create_directories(dir());
    }

    const pipeline::RunManifest& manifest() const { return manifest_; }
    const fs::path& run_root() const { return run_root_; }
    fs::path dir() const { return run_root_ / kAnnotationsDir; }
    bool has_item(const Item& it) const { return std::binary_search(items_.begin(), items_.end(), it); }

    /// Creates a session, or resumes the stored one for the same
    /// (annotator, run) pair.
    Session create(const std::string& annotator, const std::string& run_id) {
        if (!valid_annotator_id(annotator))
            throw invalid("annotator_id must be 1-64 characters of letters, digits, '-', '_' or '.'");
        if (run_id != manifest_.run_id) throw not_found("unknown run '" + run_id + "'");
        const std::string id = make_session_id(annotator, run_id);
        auto entry = slot(id);
        std::lock_guard lock(entry->mu);
        const fs::path p = path(id);
        if (!fs::exists(p)) {
            Session s{id, annotator, run_id, item_order(items_, annotator), {}};
            io::write_text_atomic(p, header_line(s) + "\n");
        }
        return load_session(p);
    }

    Session get(const std::string& id) {
        auto entry = slot(id);
        std::lock_guard lock(entry->mu);
        return load_locked(id);
    }

    /// Records the score for the pending item and returns the updated session.
    Session submit(const std::string& id, const Item& item, const Json& score, const std::string& note) {
        if (!score.is_number_integer()) throw invalid("score must be an integer from 1 to 5");
        const auto value = score.get<std::int64_t>();
        if (value < judge::kMinScore || value > judge::kMaxScore)
            throw invalid("score " + std::to_string(value) + " is outside 1..5");
        auto entry = slot(id);
        std::lock_guard lock(entry->mu);
        Session s = load_locked(id);
        const auto pos = std::find(s.items.begin(), s.items.end(), item);
        if (pos == s.items.end()) throw not_found("item " + item.first + "/" + item.second + " is not in this session");
        const auto index = static_cast<std::size_t>(pos - s.items.begin());
        if (index < s.cursor()) throw conflict("item " + item.first + "/" + item.second + " is already scored");
        if (index > s.cursor()) throw conflict("item " + item.first + "/" + item.second + " is not the pending item");
        ScoreRecord r{index, item, static_cast<int>(value), note};
        detail::append_line_synced(path(id), Json{{"type", "score"},
                                                  {"index", index},
                                                  {"model_name", item.first},
                                                  {"task_id", item.second},
                                                  {"score", r.score},
                                                  {"note", note},
                                                  {"at_ms", detail::now_ms()}}
                                                 .dump());
        s.scores.push_back(std::move(r));
        return s;
    }

    /// Every stored human score of this run, sorted like judgments.json.
    std::vector<judge::Judgment> export_judgments() {
        std::vector<judge::Judgment> out;
        std::vector<std::string> ids;
        for (const auto& e : fs::directory_iterator(dir()))
            if (e.path().extension() == ".jsonl") ids.push_back(e.path().stem().string());
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            const Session s = get(id);
            for (const auto& r : s.scores) out.push_back(to_judgment(s, r));
        }
        std::sort(out.begin(), out.end(), judge::judgment_less);
        return out;
    }

private:
    struct Slot {
        std::mutex mu;
    };

    fs::path path(const std::string& id) const { return dir() / (id + ".jsonl"); }

    std::shared_ptr<Slot> slot(const std::string& id) {
        std::lock_guard lock(mu_);
        auto& s = slots_[id];
        if (!s) s = std::make_shared<Slot>();
        return s;
    }

    Session load_locked(const std::string& id) {
        const bool well_formed = id.size() == 18 && id.rfind("s-", 0) == 0 &&
                                 std::all_of(id.begin() + 2, id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
        if (!well_formed || !fs::exists(path(id))) throw not_found("unknown session '" + id + "'");
        return load_session(path(id));
    }

    fs::path run_root_;
    pipeline::RunManifest manifest_;
    std::vector<Item> items_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

} // namespace vmeval::annotate
