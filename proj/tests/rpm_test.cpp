#include <gtest/gtest.h>

#include <set>

#include "support/rpm_oracle.hpp"
#include "vmeval/tasks/rpm.hpp"

using namespace vmeval;
using namespace vmeval::rpm;

using rpm_oracle::shape_pos;

namespace {

bool oracle_valid(const std::set<Rule>& active, const CellAttrs& x, const CellAttrs& y, const CellAttrs& z) {
    return rpm_oracle::row_valid(active, x, y, z);
}

int oracle_count(const RpmSpec& s) { return rpm_oracle::completion_count(s); }

} // namespace

TEST(RpmRule, WorkedExamples) {
    EXPECT_EQ(apply_rule({Shape::triangle, 1, 0, Hue::red}, Rule::shape_prog, 1).shape, Shape::square);
    EXPECT_EQ(apply_rule({Shape::triangle, 1, 0, Hue::red}, Rule::number_prog, 2).count, 3);
    EXPECT_EQ(apply_rule({Shape::triangle, 1, 0, Hue::red}, Rule::rotation_prog, 0).rotation, 0);
    EXPECT_EQ(apply_rule({Shape::triangle, 1, 0, Hue::red}, Rule::rotation_prog, 2).rotation, 180);
}

TEST(RpmRule, CombinationIsNotPrimitive) {
    EXPECT_THROW(apply_rule({}, Rule::combination, 1), ArgumentError);
    EXPECT_THROW(parse_rule("mirror"), ArgumentError);
    EXPECT_EQ(parse_rule("color_seq"), Rule::color_seq);
    EXPECT_THROW(expand_rules({}), ArgumentError);
    EXPECT_THROW(expand_rules({Rule::rotation_prog, Rule::shape_prog}), ArgumentError);
    EXPECT_EQ(expand_rules({Rule::combination}).size(), 2u);
}

TEST(RpmRule, Cyclicity) {
    for (const auto& a : attribute_domain()) {
        for (Rule r : {Rule::shape_prog, Rule::number_prog, Rule::color_seq}) {
            CellAttrs x = a;
            for (int i = 0; i < 3; ++i) x = apply_rule(x, r, 1);
            ASSERT_EQ(x, a);
        }
        CellAttrs x = a;
        for (int i = 0; i < 4; ++i) x = apply_rule(x, Rule::rotation_prog, 1);
        ASSERT_EQ(x, a);
        ASSERT_EQ(apply_rule(apply_rule(a, Rule::shape_prog, 1), Rule::shape_prog, 1), apply_rule(a, Rule::shape_prog, 2));
    }
    EXPECT_EQ(attribute_domain().size(), 108u);
}

TEST(Rpm, ExactlyOneCompletionPerSpec) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const Rule r = rule_for_index(seed);
        const RpmSpec s = gen_rpm({r}, seed);
        ASSERT_EQ(oracle_count(s), 1) << seed;
        ASSERT_EQ(valid_completions(s).size(), 1u);
        for (const auto& row : s.grid)
            ASSERT_TRUE(oracle_valid({s.active.begin(), s.active.end()}, row[0], row[1], row[2]));
    }
}

TEST(Rpm, RowsAreIndependent) {
    RpmSpec s = gen_rpm({Rule::number_prog}, 4);
    std::swap(s.grid[0], s.grid[2]);
    s.answer = s.grid[2][2];
    EXPECT_EQ(oracle_count(s), 1);
}

TEST(Rpm, ShapeRuleEndsTwoStepsOn) {
    const RpmSpec s = gen_rpm({Rule::shape_prog}, 8);
    EXPECT_EQ(shape_pos(s.answer.shape), (shape_pos(s.grid[2][0].shape) + 2) % 3);
}

TEST(Rpm, RotationRowsUseTriangles) {
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        for (const auto& row : gen_rpm({Rule::rotation_prog}, seed).grid)
            for (const auto& c : row) ASSERT_EQ(c.shape, Shape::triangle);
}

TEST(Rpm, CombinationDiffersFromSingleRuleAnswers) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const RpmSpec s = gen_rpm({Rule::combination}, seed);
        const CellAttrs start = s.grid[2][0];
        const CellAttrs shape_only = apply_rule(start, Rule::shape_prog, 2);
        const CellAttrs color_only = apply_rule(start, Rule::color_seq, 2);
        EXPECT_EQ(s.answer.shape, shape_only.shape);
        EXPECT_EQ(s.answer.color, color_only.color);
        EXPECT_NE(s.answer.shape, color_only.shape);
        EXPECT_NE(s.answer.color, shape_only.color);
    }
}

TEST(RpmRender, FramesDifferOnlyInAnswerTile) {
    const TaskUnit t = generate_rpm_task(3, 2);
    ASSERT_EQ(t.first_frame.width(), 450);
    ASSERT_EQ(t.first_frame.height(), 450);
    int diffs = 0;
    for (int y = 0; y < 450; ++y)
        for (int x = 0; x < 450; ++x)
            if (t.first_frame.at(x, y) != t.final_frame.at(x, y)) {
                ++diffs;
                ASSERT_GE(x, 300);
                ASSERT_GE(y, 300);
            }
    EXPECT_GT(diffs, 0);
}

TEST(RpmRender, QuarterTurnTriangleDiffers) {
    raster::Image a(150, 150), b(150, 150);
    draw_shape(a, Shape::triangle, 75, 75, 0, raster::colors::red);
    draw_shape(b, Shape::triangle, 75, 75, 90, raster::colors::red);
    EXPECT_GT(raster::count_differing(a, b, 0), 100u);
}

TEST(Rpm, TaskCyclesRuleCategories) {
    for (std::uint64_t i = 0; i < 10; ++i) {
        const TaskUnit t = generate_rpm_task(1, i);
        EXPECT_EQ(t.ground_truth["rules"][0], to_string(kAllRules[i % 5]));
    }
}
