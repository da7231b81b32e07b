#include <gtest/gtest.h>

#include <sstream>
#include <vmeval/rng.hpp>
#include <vmeval/stats/agreement.hpp>
#include <vmeval/stats/report.hpp>

#include "support/stats_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace vmeval;
using namespace vmeval::stats;
using judge::make_judgment;
using testing_support::TempDir;

namespace {

using stats_oracle::kappa_oracle;
using stats_oracle::pearson_oracle;

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform_real(-1000, 1000);
    return v;
}

std::vector<judge::Judgment> fixture(const std::string& model, const std::string& domain, int n, int successes) {
    std::vector<judge::Judgment> js;
    for (int i = 0; i < n; ++i)
        js.push_back(make_judgment(domain + "_1_" + std::to_string(i), model, "oracle", i < successes ? 5 : 2, ""));
    return js;
}

} // namespace

// ---- pearson ----

TEST(Pearson, SmallFixtureByHand) {
    // (1..5) vs (2,2,3,5,5): sxy = 9, sxx = 10, syy = 9.2 -> 9 / sqrt(92)
    const std::vector<double> xs{1, 2, 3, 4, 5}, ys{2, 2, 3, 5, 5};
    EXPECT_NEAR(pearson(xs, ys), 9.0 / std::sqrt(92.0), 1e-15);
    EXPECT_NEAR(pearson(xs, ys), pearson_oracle(xs, ys), 1e-12);
    EXPECT_NEAR(pearson(xs, ys), 0.93831486325683642, 1e-12);
}

TEST(Pearson, MatchesHighPrecisionOracle) {
    Rng rng(2024, "pearson-fixtures");
    for (int f = 0; f < 100; ++f) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
        const auto xs = random_vector(rng, n);
        auto ys = random_vector(rng, n);
        // Mix in some correlation so r spans the whole range.
        const double w = rng.uniform_real(-1, 1);
        for (std::size_t i = 0; i < n; ++i) ys[i] = w * xs[i] + (1 - std::abs(w)) * ys[i];
        ASSERT_NEAR(pearson(xs, ys), pearson_oracle(xs, ys), 1e-12) << "fixture " << f;
    }
}

TEST(Pearson, IdentityAntisymmetryAffine) {
    Rng rng(7, "pearson-props");
    for (int f = 0; f < 100; ++f) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 100));
        const auto xs = random_vector(rng, n), ys = random_vector(rng, n);
        EXPECT_NEAR(pearson(xs, xs), 1.0, 1e-12);
        double mean = 0;
        for (double x : xs) mean += x / static_cast<double>(n);
        std::vector<double> neg(n);
        for (std::size_t i = 0; i < n; ++i) neg[i] = -(xs[i] - mean);
        EXPECT_NEAR(pearson(xs, neg), -1.0, 1e-12);
        const double a = rng.uniform_real(0.1, 10), b = rng.uniform_real(-100, 100);
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = a * xs[i] + b;
        EXPECT_NEAR(pearson(t, ys), pearson(xs, ys), 1e-12);
        EXPECT_NEAR(pearson(ys, xs), pearson(xs, ys), 1e-15);
    }
}

TEST(Pearson, Errors) {
    const std::vector<double> a{1, 2, 3}, b{1, 2}, flat{4, 4, 4}, one{1};
    EXPECT_THROW(pearson(a, b), ArgumentError);
    EXPECT_THROW(pearson(a, flat), ArgumentError);
    EXPECT_THROW(pearson(one, one), ArgumentError);
}

// ---- kappa ----

TEST(Kappa, HandComputedFixtures) {
    // 10 items: 4 yes/yes, 3 no/no, 3 disagreements -> p_o = 0.7;
    // both raters say yes 5 times out of 10 -> p_e = 0.5; kappa = 0.2 / 0.5 = 0.4.
    const std::vector<int> yes_no{0, 1};
    const std::vector<int> a3{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<int> b3{1, 1, 1, 1, 0, 1, 0, 0, 0, 1};
    EXPECT_EQ(cohen_kappa(a3, b3, yes_no), 0.4);
    EXPECT_EQ(kappa_oracle(a3, b3, yes_no), 0.4);

    const std::vector<int> same{0, 1, 0, 1, 1};
    EXPECT_EQ(cohen_kappa(same, same, yes_no), 1.0);
    const std::vector<int> x{0, 0, 1, 1}, y{1, 1, 0, 0};
    EXPECT_EQ(cohen_kappa(x, y, yes_no), -1.0);
    const std::vector<int> all_yes{1, 1, 1};
    EXPECT_EQ(cohen_kappa(all_yes, all_yes, yes_no), 1.0);
}

TEST(Kappa, MatchesRationalOracleAndIsSymmetric) {
    Rng rng(11, "kappa-fixtures");
    const std::vector<int> five{1, 2, 3, 4, 5};
    for (int f = 0; f < 100; ++f) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 150));
        const int k = static_cast<int>(rng.uniform_int(2, 5));
        const std::vector<int> classes(five.begin(), five.begin() + k);
        std::vector<int> a(n), b(n);
        const double agree = rng.uniform01();
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = classes[rng.below(static_cast<std::uint64_t>(k))];
            b[i] = rng.bernoulli(agree) ? a[i] : classes[rng.below(static_cast<std::uint64_t>(k))];
        }
        ASSERT_NEAR(cohen_kappa(a, b, classes), kappa_oracle(a, b, classes), 1e-12) << "fixture " << f;
        ASSERT_EQ(cohen_kappa(a, b, classes), cohen_kappa(b, a, classes));
    }
}

TEST(Kappa, Errors) {
    const std::vector<int> a{1, 2}, b{1}, c{1, 7}, classes{1, 2}, dup{1, 1};
    EXPECT_THROW(cohen_kappa(a, b, classes), ArgumentError);
    EXPECT_THROW(cohen_kappa(a, c, classes), ArgumentError);
    EXPECT_THROW(cohen_kappa(std::vector<int>{}, std::vector<int>{}, classes), ArgumentError);
    EXPECT_THROW(cohen_kappa(a, a, dup), ArgumentError);
}

// ---- success tables ----

TEST(SuccessTable, OneDecimalGranularity) {
    EXPECT_EQ(percent_text(51, 75), "68.0");
    // 51 is the only success count out of 75 that shows as 68.0
    for (std::uint64_t s = 0; s <= 75; ++s) EXPECT_EQ(percent_text(s, 75) == "68.0", s == 51) << s;
    EXPECT_EQ(mean_text(289, 75), "3.853");
    EXPECT_EQ(percent_text(9, 15), "60.0");
    EXPECT_EQ(percent_text(1, 16), "6.3"); // 6.25 rounds half up
    EXPECT_EQ(percent_text(1, 8), "12.5");
    EXPECT_EQ(percent_text(0, 3), "0.0");
    EXPECT_EQ(percent_text(2, 3), "66.7");
    EXPECT_EQ(mean_text(5, 1), "5.000");
    EXPECT_THROW(percent_text(0, 0), ArgumentError);
}

TEST(SuccessTable, GroupsAndPartitionTotals) {
    auto js = fixture("alpha", "maze", 15, 9);
    for (auto& j : fixture("beta", "chess", 75, 51)) js.push_back(j);
    for (auto& j : fixture("beta", "maze", 4, 4)) {
        j.task_id = "maze_2_" + j.task_id; // distinct ids from alpha's
        js.push_back(j);
    }
    const auto by_model = success_table(js, GroupBy::model);
    ASSERT_EQ(by_model.size(), 2u);
    EXPECT_EQ(by_model[0].name, "alpha");
    EXPECT_EQ(by_model[0].rate_percent(), "60.0");
    const auto by_md = success_table(js, GroupBy::model_domain);
    ASSERT_EQ(by_md.size(), 3u);
    EXPECT_EQ(by_md[1].name, "beta/chess");
    EXPECT_EQ(by_md[1].rate_percent(), "68.0");
    for (GroupBy g : {GroupBy::model, GroupBy::domain, GroupBy::model_domain}) {
        std::uint64_t s = 0, t = 0;
        for (const auto& row : success_table(js, g)) {
            s += row.tally.successes;
            t += row.tally.total;
        }
        EXPECT_EQ(s, 9u + 51u + 4u);
        EXPECT_EQ(t, js.size());
    }
    const auto fives = fixture("m", "rpm", 10, 10);
    const auto row = success_table(fives, GroupBy::model)[0];
    EXPECT_EQ(row.rate_percent(), "100.0");
    EXPECT_EQ(row.mean_score(), "5.000");
    EXPECT_THROW(success_table({}, GroupBy::model), ArgumentError);
}

// ---- agreement and reports ----

TEST(Report, AgreementWithHumans) {
    std::vector<judge::Judgment> ai, human;
    const int ai_scores[] = {5, 4, 1, 2, 5, 3, 4, 1};
    const int hu_scores[] = {5, 5, 1, 1, 4, 2, 4, 3};
    for (int i = 0; i < 8; ++i) {
        const std::string id = "sudoku_1_" + std::to_string(i);
        ai.push_back(make_judgment(id, "m", "ai:x", ai_scores[i], ""));
        human.push_back(make_judgment(id, "m", "human:a", hu_scores[i], ""));
    }
    human.push_back(make_judgment("sudoku_9_9", "m", "human:a", 3, "")); // unpaired
    const Report r = build_report(ai, &human);
    ASSERT_TRUE(r.agreement);
    EXPECT_EQ(r.agreement->n, 8u);
    const std::vector<double> xs(ai_scores, ai_scores + 8), ys(hu_scores, hu_scores + 8);
    EXPECT_NEAR(*r.agreement->pearson_r, pearson_oracle(xs, ys), 1e-12);
    // success labels: ai 1,1,0,0,1,0,1,0 / human 1,1,0,0,1,0,1,0 -> perfect
    EXPECT_EQ(*r.agreement->kappa_binary, 1.0);
    const std::vector<int> a5(ai_scores, ai_scores + 8), b5(hu_scores, hu_scores + 8);
    EXPECT_NEAR(*r.agreement->kappa_5class, kappa_oracle(a5, b5, {1, 2, 3, 4, 5}), 1e-12);

    // identical files: both kappas and r are 1
    const Report same = build_report(ai, &ai);
    EXPECT_EQ(*same.agreement->kappa_binary, 1.0);
    EXPECT_EQ(*same.agreement->kappa_5class, 1.0);
    EXPECT_NEAR(*same.agreement->pearson_r, 1.0, 1e-15);
}

TEST(Report, SeveralAnnotatorsUseLowerMedian) {
    EXPECT_EQ(lower_median({5, 1}), 1);
    EXPECT_EQ(lower_median({4, 2, 5}), 4);
    EXPECT_EQ(lower_median({3, 5, 1, 4}), 3);
    std::vector<judge::Judgment> ai{make_judgment("maze_1_0", "m", "oracle", 5, ""),
                                    make_judgment("maze_1_1", "m", "oracle", 1, "")};
    std::vector<judge::Judgment> human{make_judgment("maze_1_0", "m", "human:a", 5, ""),
                                       make_judgment("maze_1_0", "m", "human:b", 3, ""),
                                       make_judgment("maze_1_1", "m", "human:a", 1, "")};
    const auto ag = compute_agreement(ai, human);
    EXPECT_EQ(ag.n, 2u);
    EXPECT_EQ(*ag.kappa_binary, 0.0); // 3 is a failure, so labels are (1,0) vs (0,0)
}

TEST(Report, RejectsMixedRatersAndEmptyInput) {
    std::vector<judge::Judgment> js{make_judgment("maze_1_0", "m", "oracle", 5, ""),
                                    make_judgment("maze_1_0", "m", "ai:x", 4, "")};
    EXPECT_THROW(build_report(js), ArgumentError);
    EXPECT_THROW(build_report({}), ArgumentError);
}

TEST(Report, ConstantScoresLeavePearsonUndefined) {
    const auto js = fixture("m", "rpm", 4, 4);
    const Report r = build_report(js, &js);
    EXPECT_FALSE(r.agreement->pearson_r);
    EXPECT_EQ(*r.agreement->kappa_5class, 1.0);
    EXPECT_NE(r.agreement->note.find("constant"), std::string::npos);
    EXPECT_NE(report_markdown(r).find("n/a"), std::string::npos);
}

TEST(Report, CsvRoundTrip) {
    auto js = fixture("good,model", "maze", 15, 9);
    for (auto& j : fixture("lazy", "rpm", 7, 0)) js.push_back(j);
    std::vector<judge::Judgment> human = js;
    human[0].score = 1;
    human[3].score = 3;
    const Report r = build_report(js, &human);
    const std::string csv = report_csv(r);

    // Minimal CSV reader with quote support.
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells(1);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted && c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = !quoted;
            } else if (c == ',' && !quoted) {
                cells.emplace_back();
            } else {
                cells.back() += c;
            }
        }
        rows.push_back(cells);
    }
    ASSERT_EQ(rows[0], (std::vector<std::string>{"section", "name", "successes", "total", "score_sum", "value"}));
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_key;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 6u) << i;
        by_key[{rows[i][0], rows[i][1]}] = rows[i];
    }
    auto check = [&](const char* section, const std::vector<TableRow>& t) {
        for (const auto& row : t) {
            const auto& c = by_key.at({section, row.name});
            EXPECT_EQ(std::stoull(c[2]), row.tally.successes);
            EXPECT_EQ(std::stoull(c[3]), row.tally.total);
            EXPECT_EQ(std::stoull(c[4]), row.tally.score_sum);
            EXPECT_EQ(c[5], row.rate_percent());
        }
    };
    check("model", r.per_model);
    check("domain", r.per_domain);
    check("model_domain", r.per_model_domain);
    EXPECT_EQ(by_key.size(), r.per_model.size() + r.per_domain.size() + r.per_model_domain.size() + 4);
    EXPECT_EQ(std::stoull(by_key.at({"agreement", "n"})[5]), r.agreement->n);
    EXPECT_EQ(std::strtod(by_key.at({"agreement", "pearson_r"})[5].c_str(), nullptr), *r.agreement->pearson_r);
    EXPECT_EQ(std::strtod(by_key.at({"agreement", "kappa_binary"})[5].c_str(), nullptr), *r.agreement->kappa_binary);
    EXPECT_EQ(std::strtod(by_key.at({"agreement", "kappa_5class"})[5].c_str(), nullptr), *r.agreement->kappa_5class);
}

TEST(Report, EmitsAllFormatsDeterministically) {
    TempDir dir;
    const auto js = fixture("m", "chess", 75, 51);
    const Report r = build_report(js);
    const auto paths = emit_report(r, dir.path());
    ASSERT_EQ(paths.size(), 3u);
    const std::string md = io::read_text(dir.path() / "report.md");
    EXPECT_NE(md.find("| m | 68.0% | 51 | 75 |"), std::string::npos) << md;
    const Json j = Json::parse(io::read_text(dir.path() / "report.json"));
    EXPECT_EQ(j["models"][0]["success_rate_percent"], "68.0");
    EXPECT_TRUE(j["agreement"].is_null());
    const std::string csv = io::read_text(dir.path() / "report.csv");
    emit_report(build_report(js), dir.path());
    EXPECT_EQ(io::read_text(dir.path() / "report.csv"), csv);
    EXPECT_EQ(io::read_text(dir.path() / "report.md"), md);
}
