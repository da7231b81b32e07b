#include <gtest/gtest.h>

#include <set>

#include "support/chess_oracle.hpp"
#include "vmeval/tasks/chess.hpp"

using namespace vmeval::chess;

namespace {

constexpr const char* kStart = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
constexpr const char* kBackRank = "6k1/5ppp/8/8/8/8/8/4R2K w - - 0 1";

Square sq(const char* name) { return *parse_square(name); }

std::set<std::string> uci_set(const std::vector<Move>& moves) {
    std::set<std::string> s;
    for (const auto& m : moves) s.insert(m.uci());
    return s;
}

/// Random legal positions: playouts from the start plus sparse piece
/// scatters, with castling rights and en passant cleared so the brute-force
/// oracle applies.
std::vector<Position> random_positions(std::size_t count, std::uint64_t seed) {
    vmeval::Rng rng(seed, "chess-test/random");
    std::vector<Position> out;
    const Position start = parse_fen(kStart);
    while (out.size() < count) {
        Position p;
        if (out.size() % 2 == 0) {
            p = start;
            const auto plies = rng.uniform_int(0, 60);
            for (int i = 0; i < plies; ++i) {
                auto moves = legal_moves(p);
                if (moves.empty()) break;
                p = make_move(p, moves[rng.below(moves.size())]);
            }
        } else {
            p.side_to_move = rng.bernoulli(0.5) ? Color::white : Color::black;
            p.put(static_cast<Square>(rng.below(64)), Piece{PieceKind::king, Color::white});
            Square bk = static_cast<Square>(rng.below(64));
            if (p.at(bk)) continue;
            p.put(bk, Piece{PieceKind::king, Color::black});
            const auto extra = rng.uniform_int(1, 5);
            for (int i = 0; i < extra; ++i) {
                Square s = static_cast<Square>(rng.below(64));
                if (p.at(s)) continue;
                auto kind = static_cast<PieceKind>(rng.below(5));
                p.put(s, Piece{kind, rng.bernoulli(0.6) ? p.side_to_move : opposite(p.side_to_move)});
            }
        }
        p.castling = {};
        p.en_passant.reset();
        if (position_violation(p)) continue;
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST(Fen, StartPositionRoundTrips) {
    const Position p = parse_fen(kStart);
    EXPECT_EQ(to_fen(p), kStart);
    EXPECT_EQ(p.at(sq("e1")), (Piece{PieceKind::king, Color::white}));
    EXPECT_EQ(p.at(sq("d8")), (Piece{PieceKind::queen, Color::black}));
    EXPECT_TRUE(p.castling.white_king && p.castling.black_queen);
}

TEST(Fen, BackRankExampleParses) {
    const Position p = parse_fen(kBackRank);
    EXPECT_EQ(p.at(sq("e1")), (Piece{PieceKind::rook, Color::white}));
    EXPECT_EQ(p.at(sq("g8")), (Piece{PieceKind::king, Color::black}));
    EXPECT_FALSE(position_violation(p).has_value());
    EXPECT_EQ(to_fen(p), kBackRank);
}

TEST(Fen, ErrorKindsAreDistinct) {
    auto kind_of = [](const char* fen) {
        try {
            parse_fen(fen);
        } catch (const FenError& e) {
            return e.kind();
        }
        ADD_FAILURE() << "accepted " << fen;
        return FenError::Kind::bad_counter;
    };
    EXPECT_EQ(kind_of("8/8/9/8/8/8/8/8 w - - 0 1"), FenError::Kind::rank_overflow);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/8 w - - 0"), FenError::Kind::field_count);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/7X w - - 0 1"), FenError::Kind::illegal_character);
    EXPECT_EQ(kind_of("K6K/8/8/8/8/8/8/k7 w - - 0 1"), FenError::Kind::too_many_kings);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8 w - - 0 1"), FenError::Kind::rank_count);
    EXPECT_EQ(kind_of("7/8/8/8/8/8/8/8 w - - 0 1"), FenError::Kind::rank_underflow);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/8 x - - 0 1"), FenError::Kind::bad_side);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/8 w KX - 0 1"), FenError::Kind::bad_castling);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/8 w - e4 0 1"), FenError::Kind::bad_en_passant);
    EXPECT_EQ(kind_of("8/8/8/8/8/8/8/8 w - - x 1"), FenError::Kind::bad_counter);
}

TEST(MoveGen, StartPositionHasTwentyMovesMatchingOracle) {
    const Position p = parse_fen(kStart);
    const auto moves = legal_moves(p);
    EXPECT_EQ(moves.size(), 20u);
    Position no_castle = p;
    no_castle.castling = {};
    EXPECT_EQ(uci_set(moves), uci_set(oracle::brute_force_moves(no_castle)));
}

TEST(MoveGen, PerftStartPosition) {
    const Position p = parse_fen(kStart);
    EXPECT_EQ(perft(p, 1), 20u);
    EXPECT_EQ(perft(p, 2), 400u);
    EXPECT_EQ(perft(p, 3), 8902u);
}

// Reference node counts for well-known perft suites exercising castling,
// en passant and promotion.
TEST(MoveGen, PerftReferencePositions) {
    const Position kiwipete = parse_fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1");
    EXPECT_EQ(perft(kiwipete, 1), 48u);
    EXPECT_EQ(perft(kiwipete, 2), 2039u);
    EXPECT_EQ(perft(kiwipete, 3), 97862u);

    const Position endgame = parse_fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1");
    EXPECT_EQ(perft(endgame, 1), 14u);
    EXPECT_EQ(perft(endgame, 2), 191u);
    EXPECT_EQ(perft(endgame, 3), 2812u);
    EXPECT_EQ(perft(endgame, 4), 43238u);

    const Position promos = parse_fen("r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1");
    EXPECT_EQ(perft(promos, 1), 6u);
    EXPECT_EQ(perft(promos, 2), 264u);
    EXPECT_EQ(perft(promos, 3), 9467u);

    const Position tricky = parse_fen("rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8");
    EXPECT_EQ(perft(tricky, 1), 44u);
    EXPECT_EQ(perft(tricky, 2), 1486u);
    EXPECT_EQ(perft(tricky, 3), 62379u);
}

TEST(MoveGen, LoneKingsOnlyStepAwayFromEnemyKing) {
    const Position p = parse_fen("8/8/8/8/8/8/8/K6k w - - 0 1");
    EXPECT_EQ(uci_set(legal_moves(p)), (std::set<std::string>{"a1a2", "a1b1", "a1b2"}));
    const Position close = parse_fen("8/8/8/8/8/8/8/K1k5 w - - 0 1");
    EXPECT_EQ(uci_set(legal_moves(close)), (std::set<std::string>{"a1a2"}));
}

TEST(MoveGen, MatchesBruteForceOracleOnRandomPositions) {
    for (const auto& p : random_positions(300, 11)) {
        ASSERT_EQ(uci_set(legal_moves(p)), uci_set(oracle::brute_force_moves(p))) << to_fen(p);
    }
}

TEST(MateInOne, BackRankRookMate) {
    const auto m = mate_in_one(parse_fen(kBackRank));
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->uci(), "e1e8");
    EXPECT_EQ(uci_set(oracle::all_mates(parse_fen(kBackRank))), std::set<std::string>{"e1e8"});
}

TEST(MateInOne, StartPositionHasNone) { EXPECT_FALSE(mate_in_one(parse_fen(kStart)).has_value()); }

TEST(MateInOne, StalemateIsNotMate) {
    // Knight and king against a cornered king: Ng5 stalemates, nothing mates.
    const Position p = parse_fen("7k/5K2/8/8/4N3/8/8/8 w - - 0 1");
    EXPECT_FALSE(mate_in_one(p).has_value());
    EXPECT_TRUE(oracle::all_mates(p).empty());
    bool stalemate_found = false;
    for (const auto& m : legal_moves(p)) stalemate_found |= is_stalemate(make_move(p, m));
    EXPECT_TRUE(stalemate_found);

    // Queen version: Qg6 stalemates (Qh1 would mate, so only equivalence is checked).
    const Position q = parse_fen("7k/5K2/8/8/8/8/8/1Q6 w - - 0 1");
    bool q_stalemate = false;
    for (const auto& m : legal_moves(q)) q_stalemate |= is_stalemate(make_move(q, m));
    EXPECT_TRUE(q_stalemate);
    EXPECT_EQ(mate_in_one(q).has_value(), !oracle::all_mates(q).empty());
}

TEST(MateInOne, LexicographicTieBreak) {
    // Two rooks can mate on the back rank; the smaller (from, to) wins.
    const Position p = parse_fen("6k1/5ppp/8/8/8/8/8/R3R2K w - - 0 1");
    const auto mates = oracle::all_mates(p);
    ASSERT_GE(mates.size(), 2u);
    auto best = *std::min_element(mates.begin(), mates.end(), move_less);
    EXPECT_EQ(mate_in_one(p)->uci(), best.uci());
    EXPECT_EQ(best.uci(), "a1a8");
}

TEST(MateInOne, OracleEquivalenceOnRandomPositions) {
    int mates = 0;
    for (const auto& p : random_positions(1000, 29)) {
        const auto got = mate_in_one(p);
        auto expected = oracle::all_mates(p);
        ASSERT_EQ(got.has_value(), !expected.empty()) << to_fen(p);
        if (got) {
            ++mates;
            EXPECT_EQ(got->uci(), std::min_element(expected.begin(), expected.end(), move_less)->uci());
        }
    }
    EXPECT_GT(mates, 0);
}

TEST(Enumerate, BackRankFamily) {
    const auto positions = enumerate_backrank();
    EXPECT_GE(positions.size(), 50u);
    std::set<std::uint64_t> hashes;
    for (const auto& p : positions) {
        EXPECT_TRUE(mate_in_one(p).has_value());
        hashes.insert(position_hash(p));
    }
    EXPECT_EQ(hashes.size(), positions.size());
    EXPECT_GE(backrank_pawn_barriers().size(), 20u);
}

TEST(Enumerate, QueenCornerGridIs200) {
    EXPECT_EQ(queen_corner_grid().size(), 200u);
    const auto positions = enumerate_queen_corner();
    EXPECT_FALSE(positions.empty());
    std::set<std::uint64_t> hashes;
    for (const auto& p : positions) {
        const auto m = mate_in_one(p);
        ASSERT_TRUE(m.has_value());
        EXPECT_EQ(p.at(m->from)->kind, PieceKind::queen);
        hashes.insert(position_hash(p));
    }
    EXPECT_EQ(hashes.size(), positions.size());
}

TEST(Enumerate, SmotheredMateTemplateSurvives) {
    const Position smothered = parse_fen("6rk/6pp/8/6N1/8/8/8/K7 w - - 0 1");
    const auto rep = validate_position(smothered);
    EXPECT_TRUE(rep.passed());
    ASSERT_TRUE(rep.mate.has_value());
    EXPECT_EQ(rep.mate->uci(), "g5f7");
    EXPECT_EQ(uci_set(oracle::all_mates(smothered)), std::set<std::string>{"g5f7"});

    const auto tactical = enumerate_tactical();
    EXPECT_NE(std::find(tactical.begin(), tactical.end(), smothered), tactical.end());
}

TEST(Enumerate, PoolIsLargeUniqueAndLegal) {
    const auto& pool = position_pool();
    EXPECT_GE(pool.size(), 100u);
    std::set<std::uint64_t> hashes;
    for (const auto& p : pool) {
        EXPECT_FALSE(position_violation(p).has_value());
        EXPECT_FALSE(in_check(p, opposite(p.side_to_move)));
        EXPECT_FALSE(oracle::all_mates(p).empty()) << to_fen(p);
        hashes.insert(position_hash(p));
    }
    EXPECT_EQ(hashes.size(), pool.size());
}

TEST(Validate, AllStagesPassForMate) {
    const auto rep = validate_position(parse_fen(kBackRank));
    for (const auto& s : rep.stages) EXPECT_TRUE(s.passed) << s.name << ": " << s.detail;
}

TEST(Validate, TwoWhiteKingsFailsLegality) {
    Position p = parse_fen(kBackRank);
    p.put(sq("a1"), Piece{PieceKind::king, Color::white});
    const auto rep = validate_position(p);
    EXPECT_FALSE(rep.stages[1].passed);
    EXPECT_FALSE(rep.passed());
}

TEST(Validate, DuplicateFailsUniqueness) {
    PositionValidator v;
    EXPECT_TRUE(v.validate(parse_fen(kBackRank)).passed());
    const auto again = v.validate(parse_fen(kBackRank));
    EXPECT_TRUE(again.stages[2].passed);
    EXPECT_FALSE(again.stages[3].passed);
}

TEST(Validate, NoMateFailsStageThree) {
    const auto rep = validate_position(parse_fen(kStart));
    EXPECT_TRUE(rep.stages[1].passed);
    EXPECT_FALSE(rep.stages[2].passed);
}

namespace {

int differing_tiles(const vmeval::raster::Image& a, const vmeval::raster::Image& b) {
    int n = 0;
    for (Square s = 0; s < 64; ++s) {
        const auto [x0, y0] = square_origin(s);
        bool diff = false;
        for (int y = y0; y < y0 + kSquarePixels && !diff; ++y)
            for (int x = x0; x < x0 + kSquarePixels && !diff; ++x) diff = a.at(x, y) != b.at(x, y);
        n += diff;
    }
    return n;
}

int piece_count(const Position& p) {
    int n = 0;
    for (const auto& c : p.board) n += c.has_value();
    return n;
}

} // namespace

TEST(ChessTask, FinalFrameShowsMateMove) {
    const Position p = parse_fen(kBackRank);
    const auto t = make_chess_task(p, 7, 0);
    EXPECT_EQ(t.id, "chess_7_0");
    EXPECT_EQ(t.ground_truth["mate_move"], "e1e8");
    const Position after = parse_fen(t.ground_truth["final_fen"].get<std::string>());
    EXPECT_EQ(after.at(sq("e8")), (Piece{PieceKind::rook, Color::white}));
    EXPECT_EQ(after.at(sq("g8")), (Piece{PieceKind::king, Color::black}));
    EXPECT_EQ(t.final_frame, render_board(after));
    EXPECT_EQ(differing_tiles(t.first_frame, t.final_frame), 2);
    EXPECT_NE(t.prompt.find("White"), std::string::npos);
}

TEST(ChessTask, CaptureMateReducesPieceCount) {
    const Position p = parse_fen("4r1k1/5ppp/8/8/8/8/8/4R2K w - - 0 1");
    const auto m = mate_in_one(p);
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->uci(), "e1e8");
    const auto t = make_chess_task(p, 1, 0);
    EXPECT_EQ(differing_tiles(t.first_frame, t.final_frame), 2);
    EXPECT_EQ(piece_count(make_move(p, *m)), piece_count(p) - 1);
}

TEST(ChessTask, NoMateIsAnError) {
    EXPECT_THROW(make_chess_task(parse_fen(kStart), 1, 0), vmeval::ArgumentError);
}

TEST(ChessTask, GeneratedTasksAreVerified) {
    std::set<std::string> fens;
    for (std::uint64_t i = 0; i < 15; ++i) {
        const auto t = generate_chess_task(3, i);
        const Position p = parse_fen(t.ground_truth["fen"].get<std::string>());
        const auto mates = uci_set(oracle::all_mates(p));
        EXPECT_TRUE(mates.contains(t.ground_truth["mate_move"].get<std::string>()));
        fens.insert(t.ground_truth["fen"].get<std::string>());
    }
    EXPECT_EQ(fens.size(), 15u);
}
