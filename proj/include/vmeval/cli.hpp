#pragma once

// The vmeval command line: generate, infer, judge, stats, serve, mock-server.
//
// A setting comes from, in order: its flag, the env var
// VMEVAL_<SUBCOMMAND>_<OPTION> (e.g. VMEVAL_GENERATE_SEED), the config file
// (--config or VMEVAL_CONFIG), then the built-in default. The config file is
// a JSON object; keys in a subcommand section beat top-level keys:
//   {"concurrency": 2, "generate": {"count": 15, "seed": 1}}
//
// Exit codes: 0 ok, 1 configuration or input error, 2 some items failed.

#include <CLI11.hpp>
#include <signal.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "annotate/server.hpp"
#include "error.hpp"
#include "generate.hpp"
#include "io.hpp"
#include "judge/ai.hpp"
#include "judge/run.hpp"
#include "pipeline/catalog.hpp"
#include "pipeline/mock_server.hpp"
#include "pipeline/run.hpp"
#include "stats/report.hpp"

namespace vmeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitPartial = 2;

/// Left-aligned text table for summaries on stdout.
inline std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < cells.size() ? cells[c] : "";
            os << cell;
            if (c + 1 < width.size()) os << std::string(width[c] - cell.size() + 2, ' ');
        }
        os << "\n";
    };
    line(header);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& r : rows) line(r);
    return os.str();
}

namespace detail {

inline std::string env_name(const std::string& sub, const std::string& opt) {
    std::string out = "VMEVAL_" + sub + "_" + opt;
    for (char& c : out) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

/// Fills unset flags from env, then config. Bound after parsing.
class Layers {
public:
    Layers(std::string sub, Json config) : sub_(std::move(sub)), config_(std::move(config)) {}

    template <class T>
    void apply(const CLI::Option* opt, T& value, const std::string& name) const {
        if (opt->count() > 0) return;
        const std::string env = env_name(sub_, name);
        if (const char* v = std::getenv(env.c_str()); v && *v) {
            if (!CLI::detail::lexical_cast(std::string(v), value))
                throw ArgumentError(env + ": cannot read '" + v + "'");
            return;
        }
        const Json* j = nullptr;
        if (config_.contains(sub_) && config_[sub_].is_object() && config_[sub_].contains(name))
            j = &config_[sub_][name];
        else if (config_.contains(name))
            j = &config_[name];
        if (!j) return;
        try {
            value = j->get<T>();
        } catch (const Json::exception&) {
            throw ArgumentError("config key '" + name + "' has the wrong type");
        }
    }

private:
    std::string sub_;
    Json config_;
};

inline Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    Json j;
    try {
        j = Json::parse(io::read_text(path));
    } catch (const Json::parse_error& e) {
        throw ::vmeval::ParseError(path + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    if (!j.is_object()) throw ArgumentError(path + ": config must be a JSON object");
    return j;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

inline void require_dir(const std::string& path, const char* what) {
    if (path.empty()) throw ArgumentError(std::string("missing ") + what);
    if (!fs::is_directory(path)) throw IoError(std::string(what) + " is not a directory: " + path);
}

inline void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ArgumentError(std::string("missing ") + what);
    if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

inline bool same_path(const std::string& a, const std::string& b) {
    return fs::weakly_canonical(a) == fs::weakly_canonical(b);
}

/// Blocks until SIGINT or SIGTERM. The mask is set before any server
/// thread starts so that only this thread receives them.
class SignalWait {
public:
    SignalWait() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, &old_);
    }
    ~SignalWait() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
    void wait() {
        int sig = 0;
        sigwait(&set_, &sig);
    }

private:
    sigset_t set_{}, old_{};
};

} // namespace detail

struct GenerateArgs {
    std::string domain = "all";
    std::size_t count = 15;
    std::uint64_t seed = 1;
    std::string out;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (a.count == 0) throw ArgumentError("--count must be at least 1");
    if (a.out.empty()) throw ArgumentError("missing --out");
    std::vector<Domain> domains;
    if (a.domain == "all") {
        domains.assign(kAllDomains.begin(), kAllDomains.end());
    } else {
        for (const auto& name : detail::split_list(a.domain)) {
            const auto d = parse_domain(name);
            if (!d) throw ArgumentError("unknown domain '" + name + "' (chess, maze, rotation, rpm, sudoku or all)");
            domains.push_back(*d);
        }
    }
    if (domains.empty()) throw ArgumentError("--domain selects nothing");
    fs::create_directories(a.out);
    std::vector<std::vector<std::string>> rows;
    for (Domain d : domains) {
        try {
            const auto s = generate_tasks({d}, a.count, a.seed, a.out).front();
            rows.push_back({std::string(to_string(d)), std::to_string(s.written), std::to_string(s.skipped)});
        } catch (const GenerationError& e) {
            throw GenerationError(std::string(to_string(d)) + ": " + e.what());
        }
    }
    out << format_table({"domain", "written", "skipped"}, rows);
    return kExitOk;
}

struct InferArgs {
    std::string catalog;
    std::string tasks;
    std::string out;
    std::size_t concurrency = 4;
    double duration = 8.0;
    double temperature = 0.7;
    std::int64_t seed = -1;
    bool fresh = false;
};

inline int cmd_infer(const InferArgs& a, std::ostream& out) {
    detail::require_file(a.catalog, "--catalog");
    detail::require_dir(a.tasks, "--tasks");
    if (a.out.empty()) throw ArgumentError("missing --out");
    if (detail::same_path(a.tasks, a.out)) throw ArgumentError("--tasks and --out must be different directories");
    pipeline::RunOptions opt;
    opt.concurrency = a.concurrency;
    opt.params = {a.duration, a.temperature, a.seed};
    opt.params.validate();
    opt.resume = !a.fresh;
    const auto models = pipeline::load_catalog(a.catalog);
    const auto m = pipeline::run_suite(models, a.tasks, a.out, opt);
    std::vector<std::vector<std::string>> rows;
    bool partial = false;
    for (const auto& model : m.models) {
        std::size_t ok = 0, failed = 0, timeout = 0;
        for (const auto& r : m.results) {
            if (r.model != model.name) continue;
            ok += r.status == pipeline::GenerationStatus::succeeded;
            failed += r.status == pipeline::GenerationStatus::failed;
            timeout += r.status == pipeline::GenerationStatus::timeout;
        }
        partial = partial || failed + timeout > 0;
        rows.push_back({model.name, std::to_string(ok), std::to_string(failed), std::to_string(timeout)});
    }
    out << "run " << m.run_id << "\n" << format_table({"model", "succeeded", "failed", "timeout"}, rows);
    return partial ? kExitPartial : kExitOk;
}

struct JudgeArgs {
    std::string runs;
    std::string judge = "oracle";
    std::size_t concurrency = 4;
};

inline int cmd_judge(const JudgeArgs& a, std::ostream& out) {
    detail::require_dir(a.runs, "--runs");
    judge::JudgeOptions opt;
    opt.kind = judge::parse_judge_kind(a.judge);
    opt.concurrency = a.concurrency;
    if (opt.kind == judge::JudgeKind::ai) opt.endpoint = judge::judge_endpoint_from_env();
    const auto r = judge::judge_run(a.runs, opt);
    std::map<std::string, std::array<std::size_t, 3>> per_model; // judged, successes, errors
    for (const auto& j : r.judgments) {
        auto& row = per_model[j.model];
        ++row[0];
        row[1] += j.success();
    }
    for (const auto& e : r.errors) ++per_model[e.model][2];
    std::vector<std::vector<std::string>> rows;
    for (const auto& [model, c] : per_model)
        rows.push_back({model, std::to_string(c[0]), std::to_string(c[1]), std::to_string(c[2])});
    out << format_table({"model", "judged", "successes", "errors"}, rows);
    out << "wrote " << r.judgments_path.string() << "\n";
    return r.errors.empty() ? kExitOk : kExitPartial;
}

struct StatsArgs {
    std::string judgments;
    std::string human;
    std::string rater;
    std::string out;
    std::string format = "md,csv,json";
};

inline int cmd_stats(const StatsArgs& a, std::ostream& out) {
    detail::require_file(a.judgments, "--judgments");
    if (!a.human.empty()) detail::require_file(a.human, "--human");
    if (a.out.empty()) throw ArgumentError("missing --out");
    std::vector<stats::ReportFormat> formats;
    for (const auto& f : detail::split_list(a.format)) {
        if (f == "md" || f == "markdown") formats.push_back(stats::ReportFormat::markdown);
        else if (f == "csv") formats.push_back(stats::ReportFormat::csv);
        else if (f == "json") formats.push_back(stats::ReportFormat::json);
        else throw ArgumentError("unknown report format '" + f + "' (md, csv, json)");
    }
    if (formats.empty()) throw ArgumentError("--format selects nothing");
    auto js = judge::load_judgments(a.judgments);
    if (!a.rater.empty()) {
        std::erase_if(js, [&](const judge::Judgment& j) { return j.rater != a.rater; });
        if (js.empty()) throw ArgumentError("no judgments by rater '" + a.rater + "' in " + a.judgments);
    }
    std::optional<std::vector<judge::Judgment>> human;
    if (!a.human.empty()) human = judge::load_judgments(a.human);
    const auto report = stats::build_report(js, human ? &*human : nullptr);
    stats::emit_report(report, a.out, formats);
    out << stats::report_markdown(report);
    return kExitOk;
}

struct ServeArgs {
    std::string runs;
    std::string host = "127.0.0.1";
    int port = 8080;
    bool reveal_final = false;
    std::string ui;
};

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
    detail::require_dir(a.runs, "--runs");
    if (!a.ui.empty()) detail::require_dir(a.ui, "--ui");
    detail::SignalWait signals;
    annotate::AnnotationServer server(a.runs, {a.reveal_final, a.ui});
    const int port = server.start(a.host, a.port);
    out << "annotation service on http://" << a.host << ":" << port << "\n" << std::flush;
    signals.wait();
    server.stop();
    return kExitOk;
}

struct MockServerArgs {
    std::string tasks;
    std::string host = "127.0.0.1";
    int port = 8765;
    std::string token;
};

inline int cmd_mock_server(const MockServerArgs& a, std::ostream& out) {
    detail::require_dir(a.tasks, "--tasks");
    detail::SignalWait signals;
    pipeline::MockHttpServer server(a.tasks, a.token);
    const int port = server.start(a.host, a.port);
    out << "mock video service on http://" << a.host << ":" << port << " (modes: oracle, lazy, noisy)\n" << std::flush;
    signals.wait();
    server.stop();
    return kExitOk;
}

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate reasoning tasks, run video models on them, judge the results and report."};
    app.name("vmeval");
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (default: $VMEVAL_CONFIG)");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write task directories");
    auto* g_domain = g->add_option("--domain", gen.domain, "chess, maze, rotation, rpm, sudoku, a comma list, or all");
    auto* g_count = g->add_option("--count", gen.count, "Tasks per domain");
    auto* g_seed = g->add_option("--seed", gen.seed, "Run seed");
    auto* g_out = g->add_option("--out", gen.out, "Task root");

    InferArgs inf;
    auto* i = app.add_subcommand("infer", "Run every catalog model on every task");
    auto* i_catalog = i->add_option("--catalog", inf.catalog, "Model catalog (JSON)");
    auto* i_tasks = i->add_option("--tasks", inf.tasks, "Task root");
    auto* i_out = i->add_option("--out", inf.out, "Run root");
    auto* i_conc = i->add_option("--concurrency", inf.concurrency, "Jobs in flight");
    auto* i_dur = i->add_option("--duration", inf.duration, "Requested clip length in seconds");
    auto* i_temp = i->add_option("--temperature", inf.temperature, "Sampling temperature, where supported");
    auto* i_seed = i->add_option("--seed", inf.seed, "Generation seed sent to the model (-1: unset)");
    auto* i_fresh = i->add_flag("--fresh", inf.fresh, "Re-run items that already have results");

    JudgeArgs jud;
    auto* j = app.add_subcommand("judge", "Score a run's videos");
    auto* j_runs = j->add_option("--runs", jud.runs, "Run root");
    auto* j_kind = j->add_option("--judge", jud.judge, "oracle or ai");
    auto* j_conc = j->add_option("--concurrency", jud.concurrency, "Judgments in flight");

    StatsArgs st;
    auto* s = app.add_subcommand("stats", "Success tables and rater agreement");
    auto* s_js = s->add_option("--judgments", st.judgments, "judgments.json or JSONL");
    auto* s_human = s->add_option("--human", st.human, "Human scores (JSONL) for agreement");
    auto* s_rater = s->add_option("--rater", st.rater, "Use only this rater's judgments");
    auto* s_out = s->add_option("--out", st.out, "Report directory");
    auto* s_fmt = s->add_option("--format", st.format, "Comma list of md, csv, json");

    ServeArgs sv;
    auto* v = app.add_subcommand("serve", "Human annotation service for one run");
    auto* v_runs = v->add_option("--runs", sv.runs, "Run root");
    auto* v_host = v->add_option("--host", sv.host, "Bind address");
    auto* v_port = v->add_option("--port", sv.port, "Port (0: any free port)");
    auto* v_reveal = v->add_flag("--reveal-final", sv.reveal_final, "Show annotators the expected final frame");
    auto* v_ui = v->add_option("--ui", sv.ui, "Directory with a built UI to serve at /");

    MockServerArgs ms;
    auto* m = app.add_subcommand("mock-server", "Serve the mock video models over HTTP");
    auto* m_tasks = m->add_option("--tasks", ms.tasks, "Task root the mock answers from");
    auto* m_host = m->add_option("--host", ms.host, "Bind address");
    auto* m_port = m->add_option("--port", ms.port, "Port (0: any free port)");
    auto* m_token = m->add_option("--token", ms.token, "Required bearer token");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (config_path.empty())
            if (const char* c = std::getenv("VMEVAL_CONFIG"); c && *c) config_path = c;
        const Json config = detail::load_config(config_path);
        if (g->parsed()) {
            detail::Layers l("generate", config);
            l.apply(g_domain, gen.domain, "domain");
            l.apply(g_count, gen.count, "count");
            l.apply(g_seed, gen.seed, "seed");
            l.apply(g_out, gen.out, "out");
            return cmd_generate(gen, out);
        }
        if (i->parsed()) {
            detail::Layers l("infer", config);
            l.apply(i_catalog, inf.catalog, "catalog");
            l.apply(i_tasks, inf.tasks, "tasks");
            l.apply(i_out, inf.out, "out");
            l.apply(i_conc, inf.concurrency, "concurrency");
            l.apply(i_dur, inf.duration, "duration");
            l.apply(i_temp, inf.temperature, "temperature");
            l.apply(i_seed, inf.seed, "seed");
            l.apply(i_fresh, inf.fresh, "fresh");
            return cmd_infer(inf, out);
        }
        if (j->parsed()) {
            detail::Layers l("judge", config);
            l.apply(j_runs, jud.runs, "runs");
            l.apply(j_kind, jud.judge, "judge");
            l.apply(j_conc, jud.concurrency, "concurrency");
            return cmd_judge(jud, out);
        }
        if (s->parsed()) {
            detail::Layers l("stats", config);
            l.apply(s_js, st.judgments, "judgments");
            l.apply(s_human, st.human, "human");
            l.apply(s_rater, st.rater, "rater");
            l.apply(s_out, st.out, "out");
            l.apply(s_fmt, st.format, "format");
            return cmd_stats(st, out);
        }
        if (v->parsed()) {
            detail::Layers l("serve", config);
            l.apply(v_runs, sv.runs, "runs");
            l.apply(v_host, sv.host, "host");
            l.apply(v_port, sv.port, "port");
            l.apply(v_reveal, sv.reveal_final, "reveal-final");
            l.apply(v_ui, sv.ui, "ui");
            return cmd_serve(sv, out);
        }
        detail::Layers l("mock-server", config);
        l.apply(m_tasks, ms.tasks, "tasks");
        l.apply(m_host, ms.host, "host");
        l.apply(m_port, ms.port, "port");
        l.apply(m_token, ms.token, "token");
        return cmd_mock_server(ms, out);
    } catch (const GenerationError& e) {
        err << "error: generation failed: " << e.what() << "\n";
        return kExitPartial;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace vmeval::cli
