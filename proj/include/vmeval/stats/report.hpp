#pragma once

// Success tables and rater agreement, written as report.md, report.csv and
// report.json.
//
// Rates are kept as integer counts and rounded once, half up, when
// formatted: 51 of 75 is "68.0", a mean score of 289/75 is "3.853".
//
// CSV columns: section,name,successes,total,score_sum,value
//   section is model, domain, model_domain or agreement; for the first
//   three, value is the success rate in percent; for agreement rows the
//   count columns are empty and value is the metric (empty when undefined).

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../judge/judgment.hpp"
#include "../task.hpp"
#include "agreement.hpp"

namespace vmeval::stats {

using judge::Judgment;

struct Tally {
    std::uint64_t successes = 0;
    std::uint64_t total = 0;
    std::uint64_t score_sum = 0;

    void add(const Judgment& j) {
        ++total;
        score_sum += static_cast<std::uint64_t>(j.score);
        if (j.success()) ++successes;
    }
    friend bool operator==(const Tally&, const Tally&) = default;
};

/// round(num / den * scale), halves rounded up.
inline std::uint64_t round_half_up(std::uint64_t num, std::uint64_t den, std::uint64_t scale) {
    if (den == 0) throw ArgumentError("division by an empty group");
    return (2 * num * scale + den) / (2 * den);
}

/// Fixed-point text of value/10^digits.
inline std::string fixed_text(std::uint64_t scaled, int digits) {
    std::uint64_t p = 1;
    for (int i = 0; i < digits; ++i) p *= 10;
    std::string frac = std::to_string(scaled % p);
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    return std::to_string(scaled / p) + "." + frac;
}

/// Success rate in percent with one decimal: 51/75 -> "68.0".
inline std::string percent_text(std::uint64_t successes, std::uint64_t total) {
    return fixed_text(round_half_up(successes, total, 1000), 1);
}

/// Mean score with three decimals: 289/75 -> "3.853".
inline std::string mean_text(std::uint64_t score_sum, std::uint64_t total) {
    return fixed_text(round_half_up(score_sum, total, 1000), 3);
}

struct TableRow {
    std::string name;
    Tally tally;
    std::string rate_percent() const { return percent_text(tally.successes, tally.total); }
    std::string mean_score() const { return mean_text(tally.score_sum, tally.total); }
};

enum class GroupBy { model, domain, model_domain };

inline std::string domain_label(const std::string& task_id) {
    const auto d = domain_of_task_id(task_id);
    return d ? std::string(to_string(*d)) : std::string("unknown");
}

inline std::string group_key(const Judgment& j, GroupBy g) {
    switch (g) {
    case GroupBy::model: return j.model;
    case GroupBy::domain: return domain_label(j.task_id);
    case GroupBy::model_domain: return j.model + "/" + domain_label(j.task_id);
    }
    return {};
}

/// One row per non-empty group, sorted by name.
inline std::vector<TableRow> success_table(const std::vector<Judgment>& js, GroupBy g) {
    if (js.empty()) throw ArgumentError("no judgments to tabulate");
    std::map<std::string, Tally> groups;
    for (const auto& j : js) groups[group_key(j, g)].add(j);
    std::vector<TableRow> rows;
    for (auto& [name, t] : groups) rows.push_back({name, t});
    return rows;
}

struct Agreement {
    std::size_t n = 0; ///< items scored by both raters
    std::optional<double> pearson_r;
    std::optional<double> kappa_binary;
    std::optional<double> kappa_5class;
    std::string note; ///< why a metric is missing
};

/// Human score per item when several annotators rated it: the lower median.
inline int lower_median(std::vector<int> scores) {
    if (scores.empty()) throw ArgumentError("lower_median of nothing");
    std::sort(scores.begin(), scores.end());
    return scores[(scores.size() - 1) / 2];
}

using ItemKey = std::pair<std::string, std::string>; // (model, task_id)

/// Fails when a file holds more than one judgment for an item, which means
/// several raters were mixed together.
inline std::map<ItemKey, int> scores_by_item(const std::vector<Judgment>& js, const char* what) {
    std::map<ItemKey, int> out;
    for (const auto& j : js)
        if (!out.emplace(ItemKey{j.model, j.task_id}, j.score).second)
            throw ArgumentError(std::string(what) + " has more than one judgment for " + j.model + "/" + j.task_id +
                                "; select a single rater");
    return out;
}

inline Agreement compute_agreement(const std::vector<Judgment>& machine, const std::vector<Judgment>& human) {
    const auto m = scores_by_item(machine, "judgment file");
    std::map<ItemKey, std::vector<int>> h;
    for (const auto& j : human) h[{j.model, j.task_id}].push_back(j.score);

    std::vector<double> xs, ys;
    std::vector<int> a5, b5, a2, b2;
    for (const auto& [key, score] : m) {
        auto it = h.find(key);
        if (it == h.end()) continue;
        const int hs = lower_median(it->second);
        xs.push_back(score);
        ys.push_back(hs);
        a5.push_back(score);
        b5.push_back(hs);
        a2.push_back(judge::is_success(score) ? 1 : 0);
        b2.push_back(judge::is_success(hs) ? 1 : 0);
    }
    Agreement ag;
    ag.n = xs.size();
    if (ag.n == 0) {
        ag.note = "no item was scored by both raters";
        return ag;
    }
    static constexpr int kBinary[] = {0, 1};
    static constexpr int kFive[] = {1, 2, 3, 4, 5};
    ag.kappa_binary = cohen_kappa(a2, b2, kBinary);
    ag.kappa_5class = cohen_kappa(a5, b5, kFive);
    try {
        ag.pearson_r = pearson(xs, ys);
    } catch (const ArgumentError&) {
        ag.note = std::string("Pearson r undefined: ") + (ag.n < 2 ? "fewer than two paired items" : "constant scores");
    }
    return ag;
}

struct Report {
    std::size_t judgments = 0;
    std::vector<TableRow> per_model;
    std::vector<TableRow> per_domain;
    std::vector<TableRow> per_model_domain;
    std::optional<Agreement> agreement;
};

inline Report build_report(const std::vector<Judgment>& js, const std::vector<Judgment>* human = nullptr) {
    if (js.empty()) throw ArgumentError("no judgments: refusing to write an empty report");
    scores_by_item(js, "judgment file");
    Report r;
    r.judgments = js.size();
    r.per_model = success_table(js, GroupBy::model);
    r.per_domain = success_table(js, GroupBy::domain);
    r.per_model_domain = success_table(js, GroupBy::model_domain);
    if (human) r.agreement = compute_agreement(js, *human);
    return r;
}

/// Shortest text that reads back as the same double.
inline std::string exact_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string report_csv(const Report& r) {
    std::string out = "section,name,successes,total,score_sum,value\n";
    auto rows = [&](const char* section, const std::vector<TableRow>& t) {
        for (const auto& row : t)
            out += std::string(section) + "," + csv_field(row.name) + "," + std::to_string(row.tally.successes) + "," +
                   std::to_string(row.tally.total) + "," + std::to_string(row.tally.score_sum) + "," +
                   row.rate_percent() + "\n";
    };
    rows("model", r.per_model);
    rows("domain", r.per_domain);
    rows("model_domain", r.per_model_domain);
    if (r.agreement) {
        const Agreement& a = *r.agreement;
        auto metric = [&](const char* name, const std::optional<double>& v) {
            out += std::string("agreement,") + name + ",,,," + (v ? exact_double(*v) : "") + "\n";
        };
        out += "agreement,n,,,," + std::to_string(a.n) + "\n";
        metric("pearson_r", a.pearson_r);
        metric("kappa_binary", a.kappa_binary);
        metric("kappa_5class", a.kappa_5class);
    }
    return out;
}

inline Json report_json(const Report& r) {
    auto rows = [](const std::vector<TableRow>& t) {
        Json arr = Json::array();
        for (const auto& row : t) {
            arr.push_back({{"name", row.name},
                           {"successes", row.tally.successes},
                           {"total", row.tally.total},
                           {"score_sum", row.tally.score_sum},
                           {"success_rate_percent", row.rate_percent()},
                           {"mean_score", row.mean_score()}});
        }
        return arr;
    };
    Json j = {{"judgments", r.judgments},
              {"models", rows(r.per_model)},
              {"domains", rows(r.per_domain)},
              {"model_domains", rows(r.per_model_domain)},
              {"agreement", nullptr}};
    if (r.agreement) {
        const Agreement& a = *r.agreement;
        auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
        j["agreement"] = {{"n", a.n},
                          {"pearson_r", opt(a.pearson_r)},
                          {"kappa_binary", opt(a.kappa_binary)},
                          {"kappa_5class", opt(a.kappa_5class)},
                          {"note", a.note}};
    }
    return j;
}

inline std::string report_markdown(const Report& r) {
    std::string out = "# Evaluation report\n\n" + std::to_string(r.judgments) + " judgments.\n";
    auto table = [&](const char* title, const char* key, const std::vector<TableRow>& t) {
        out += std::string("\n## ") + title + "\n\n| " + key + " | success rate | successes | total | mean score |\n" +
               "|---|---:|---:|---:|---:|\n";
        for (const auto& row : t)
            out += "| " + row.name + " | " + row.rate_percent() + "% | " + std::to_string(row.tally.successes) + " | " +
                   std::to_string(row.tally.total) + " | " + row.mean_score() + " |\n";
    };
    table("Success by model", "model", r.per_model);
    table("Success by domain", "domain", r.per_domain);
    table("Success by model and domain", "model/domain", r.per_model_domain);
    if (r.agreement) {
        const Agreement& a = *r.agreement;
        auto fmt = [](const std::optional<double>& v) {
            if (!v) return std::string("n/a");
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", *v);
            return std::string(buf);
        };
        out += "\n## Agreement with human ratings\n\n| metric | value |\n|---|---:|\n";
        out += "| paired items (n) | " + std::to_string(a.n) + " |\n";
        out += "| Pearson r (scores) | " + fmt(a.pearson_r) + " |\n";
        out += "| Cohen's kappa (success, 2 classes) | " + fmt(a.kappa_binary) + " |\n";
        out += "| Cohen's kappa (score, 5 classes) | " + fmt(a.kappa_5class) + " |\n";
        if (!a.note.empty()) out += "\n" + a.note + "\n";
    }
    return out;
}

enum class ReportFormat { markdown, csv, json };

inline constexpr std::array<ReportFormat, 3> kAllReportFormats{ReportFormat::markdown, ReportFormat::csv,
                                                               ReportFormat::json};

inline std::string report_file_name(ReportFormat f) {
    switch (f) {
    case ReportFormat::markdown: return "report.md";
    case ReportFormat::csv: return "report.csv";
    case ReportFormat::json: return "report.json";
    }
    return {};
}

inline std::string render_report(const Report& r, ReportFormat f) {
    switch (f) {
    case ReportFormat::markdown: return report_markdown(r);
    case ReportFormat::csv: return report_csv(r);
    case ReportFormat::json: return report_json(r).dump(2) + "\n";
    }
    return {};
}

/// Writes the requested formats into dir; returns the paths written.
inline std::vector<fs::path> emit_report(const Report& r, const fs::path& dir,
                                         std::span<const ReportFormat> formats = kAllReportFormats) {
    fs::create_directories(dir);
    std::vector<fs::path> out;
    for (ReportFormat f : formats) {
        out.push_back(dir / report_file_name(f));
        io::write_text_atomic(out.back(), render_report(r, f));
    }
    return out;
}

} // namespace vmeval::stats
