#pragma once

// Mate-in-one task generation: FEN, legal move generation, mate search,
// template enumeration and the five-stage position validator.
//
// Squares are indexed 0..63 with a1 = 0, b1 = 1, ..., h8 = 63.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "../error.hpp"
#include "../raster/draw.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::chess {

enum class Color : std::uint8_t { white, black };
enum class PieceKind : std::uint8_t { pawn, knight, bishop, rook, queen, king };

inline constexpr Color opposite(Color c) { return c == Color::white ? Color::black : Color::white; }

struct Piece {
    PieceKind kind;
    Color color;
    friend constexpr bool operator==(Piece, Piece) = default;
};

using Square = int;

inline constexpr Square make_square(int file, int rank) { return rank * 8 + file; }
inline constexpr int file_of(Square s) { return s % 8; }
inline constexpr int rank_of(Square s) { return s / 8; }
inline constexpr bool on_board(int file, int rank) { return file >= 0 && file < 8 && rank >= 0 && rank < 8; }

inline std::string square_name(Square s) {
    return {static_cast<char>('a' + file_of(s)), static_cast<char>('1' + rank_of(s))};
}

inline std::optional<Square> parse_square(std::string_view s) {
    if (s.size() != 2 || s[0] < 'a' || s[0] > 'h' || s[1] < '1' || s[1] > '8') return std::nullopt;
    return make_square(s[0] - 'a', s[1] - '1');
}

inline constexpr char piece_char(Piece p) {
    constexpr std::string_view letters = "pnbrqk";
    const char c = letters[static_cast<std::size_t>(p.kind)];
    return p.color == Color::white ? static_cast<char>(c - 'a' + 'A') : c;
}

inline std::optional<Piece> piece_from_char(char c) {
    constexpr std::string_view letters = "pnbrqk";
    const bool white = c >= 'A' && c <= 'Z';
    const char lower = white ? static_cast<char>(c - 'A' + 'a') : c;
    const auto at = letters.find(lower);
    if (at == std::string_view::npos) return std::nullopt;
    return Piece{static_cast<PieceKind>(at), white ? Color::white : Color::black};
}

struct CastlingRights {
    bool white_king = false;
    bool white_queen = false;
    bool black_king = false;
    bool black_queen = false;
    friend constexpr bool operator==(CastlingRights, CastlingRights) = default;
};

struct Position {
    std::array<std::optional<Piece>, 64> board{};
    Color side_to_move = Color::white;
    CastlingRights castling;
    std::optional<Square> en_passant;
    int halfmove = 0;
    int fullmove = 1;

    friend bool operator==(const Position&, const Position&) = default;

    std::optional<Piece> at(Square s) const { return board[static_cast<std::size_t>(s)]; }
    void put(Square s, std::optional<Piece> p) { board[static_cast<std::size_t>(s)] = p; }
};

struct Move {
    Square from = 0;
    Square to = 0;
    std::optional<PieceKind> promotion;

    friend bool operator==(const Move&, const Move&) = default;

    /// Long algebraic, e.g. "e1e8" or "e7e8q".
    std::string uci() const {
        std::string s = square_name(from) + square_name(to);
        if (promotion) s.push_back(piece_char(Piece{*promotion, Color::black}));
        return s;
    }
};

/// Total order used for tie-breaking: (from, to), then queen, rook,
/// bishop, knight promotions.
inline bool move_less(const Move& a, const Move& b) {
    auto promo_rank = [](const Move& m) {
        if (!m.promotion) return 0;
        switch (*m.promotion) {
        case PieceKind::queen: return 1;
        case PieceKind::rook: return 2;
        case PieceKind::bishop: return 3;
        default: return 4;
        }
    };
    return std::tuple(a.from, a.to, promo_rank(a)) < std::tuple(b.from, b.to, promo_rank(b));
}

// ---------------------------------------------------------------------------
// FEN

class FenError : public ParseError {
public:
    enum class Kind {
        field_count,
        rank_count,
        rank_overflow,
        rank_underflow,
        illegal_character,
        too_many_kings,
        bad_side,
        bad_castling,
        bad_en_passant,
        bad_counter,
    };

    FenError(Kind kind, const std::string& what) : ParseError("FEN: " + what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline Position parse_fen(std::string_view text) {
    using K = FenError::Kind;
    std::vector<std::string> fields;
    {
        std::istringstream in{std::string(text)};
        std::string f;
        while (in >> f) fields.push_back(f);
    }
    if (fields.size() != 6)
        throw FenError(K::field_count, "expected 6 fields, got " + std::to_string(fields.size()));

    Position pos;
    int rank = 7, file = 0;
    int ranks_seen = 1;
    std::array<int, 2> kings{0, 0};
    for (char c : fields[0]) {
        if (c == '/') {
            if (file < 8) throw FenError(K::rank_underflow, "rank " + std::to_string(rank + 1) + " has fewer than 8 squares");
            if (++ranks_seen > 8) throw FenError(K::rank_count, "more than 8 ranks");
            --rank;
            file = 0;
        } else if (c >= '1' && c <= '9') {
            file += c - '0';
            if (file > 8) throw FenError(K::rank_overflow, "rank " + std::to_string(rank + 1) + " has more than 8 squares");
        } else if (auto p = piece_from_char(c)) {
            if (file >= 8) throw FenError(K::rank_overflow, "rank " + std::to_string(rank + 1) + " has more than 8 squares");
            if (p->kind == PieceKind::king && ++kings[static_cast<std::size_t>(p->color)] > 1)
                throw FenError(K::too_many_kings,
                               std::string("more than one ") + (p->color == Color::white ? "white" : "black") + " king");
            pos.put(make_square(file, rank), p);
            ++file;
        } else {
            throw FenError(K::illegal_character, std::string("illegal character '") + c + "' in board field");
        }
    }
    if (ranks_seen != 8) throw FenError(K::rank_count, "expected 8 ranks, got " + std::to_string(ranks_seen));
    if (file < 8) throw FenError(K::rank_underflow, "rank 1 has fewer than 8 squares");

    if (fields[1] == "w") pos.side_to_move = Color::white;
    else if (fields[1] == "b") pos.side_to_move = Color::black;
    else throw FenError(K::bad_side, "side to move must be 'w' or 'b'");

    if (fields[2] != "-") {
        for (char c : fields[2]) {
            switch (c) {
            case 'K': pos.castling.white_king = true; break;
            case 'Q': pos.castling.white_queen = true; break;
            case 'k': pos.castling.black_king = true; break;
            case 'q': pos.castling.black_queen = true; break;
            default: throw FenError(K::bad_castling, std::string("bad castling flag '") + c + "'");
            }
        }
    }

    if (fields[3] != "-") {
        auto sq = parse_square(fields[3]);
        if (!sq || (rank_of(*sq) != 2 && rank_of(*sq) != 5))
            throw FenError(K::bad_en_passant, "bad en passant square '" + fields[3] + "'");
        pos.en_passant = sq;
    }

    auto counter = [&](const std::string& s, int min) {
        if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw FenError(K::bad_counter, "bad move counter '" + s + "'");
        const int v = std::stoi(s);
        if (v < min) throw FenError(K::bad_counter, "move counter out of range '" + s + "'");
        return v;
    };
    pos.halfmove = counter(fields[4], 0);
    pos.fullmove = counter(fields[5], 1);
    return pos;
}

inline std::string to_fen(const Position& pos) {
    std::string s;
    for (int rank = 7; rank >= 0; --rank) {
        int empty = 0;
        for (int file = 0; file < 8; ++file) {
            auto p = pos.at(make_square(file, rank));
            if (!p) {
                ++empty;
                continue;
            }
            if (empty) s += std::to_string(empty);
            empty = 0;
            s.push_back(piece_char(*p));
        }
        if (empty) s += std::to_string(empty);
        if (rank) s.push_back('/');
    }
    s += pos.side_to_move == Color::white ? " w " : " b ";
    std::string c;
    if (pos.castling.white_king) c += 'K';
    if (pos.castling.white_queen) c += 'Q';
    if (pos.castling.black_king) c += 'k';
    if (pos.castling.black_queen) c += 'q';
    s += c.empty() ? "-" : c;
    s += ' ';
    s += pos.en_passant ? square_name(*pos.en_passant) : "-";
    s += ' ' + std::to_string(pos.halfmove) + ' ' + std::to_string(pos.fullmove);
    return s;
}

// ---------------------------------------------------------------------------
// Attacks and move generation

namespace detail {
inline constexpr std::array<std::array<int, 2>, 8> kKnightSteps{
    {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}};
inline constexpr std::array<std::array<int, 2>, 8> kKingSteps{
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
inline constexpr std::array<std::array<int, 2>, 4> kRookDirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
inline constexpr std::array<std::array<int, 2>, 4> kBishopDirs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
} // namespace detail

inline std::optional<Square> find_king(const Position& pos, Color c) {
    for (Square s = 0; s < 64; ++s)
        if (pos.at(s) == Piece{PieceKind::king, c}) return s;
    return std::nullopt;
}

/// True if any piece of colour `by` attacks `target`.
inline bool is_attacked(const Position& pos, Square target, Color by) {
    const int tf = file_of(target), tr = rank_of(target);
    auto is = [&](int f, int r, PieceKind k) { return on_board(f, r) && pos.at(make_square(f, r)) == Piece{k, by}; };

    const int pawn_rank = by == Color::white ? tr - 1 : tr + 1;
    if (is(tf - 1, pawn_rank, PieceKind::pawn) || is(tf + 1, pawn_rank, PieceKind::pawn)) return true;
    for (auto [df, dr] : detail::kKnightSteps)
        if (is(tf + df, tr + dr, PieceKind::knight)) return true;
    for (auto [df, dr] : detail::kKingSteps)
        if (is(tf + df, tr + dr, PieceKind::king)) return true;

    auto ray = [&](const auto& dirs, PieceKind slider) {
        for (auto [df, dr] : dirs) {
            int f = tf + df, r = tr + dr;
            while (on_board(f, r)) {
                if (auto p = pos.at(make_square(f, r))) {
                    if (p->color == by && (p->kind == slider || p->kind == PieceKind::queen)) return true;
                    break;
                }
                f += df;
                r += dr;
            }
        }
        return false;
    };
    return ray(detail::kRookDirs, PieceKind::rook) || ray(detail::kBishopDirs, PieceKind::bishop);
}

inline bool in_check(const Position& pos, Color c) {
    auto k = find_king(pos, c);
    return k && is_attacked(pos, *k, opposite(c));
}

/// Applies a move assumed to be pseudo-legal for the side to move.
inline Position make_move(const Position& pos, const Move& m) {
    Position next = pos;
    const auto moving = pos.at(m.from);
    if (!moving) throw ArgumentError("no piece on " + square_name(m.from));
    const Color us = moving->color;
    const bool capture = pos.at(m.to).has_value();

    next.put(m.from, std::nullopt);
    if (moving->kind == PieceKind::pawn && pos.en_passant && m.to == *pos.en_passant && !capture &&
        file_of(m.from) != file_of(m.to)) {
        next.put(make_square(file_of(m.to), rank_of(m.from)), std::nullopt);
    }
    if (moving->kind == PieceKind::king && std::abs(file_of(m.to) - file_of(m.from)) == 2) {
        const int r = rank_of(m.from);
        if (file_of(m.to) == 6) {
            next.put(make_square(5, r), next.at(make_square(7, r)));
            next.put(make_square(7, r), std::nullopt);
        } else {
            next.put(make_square(3, r), next.at(make_square(0, r)));
            next.put(make_square(0, r), std::nullopt);
        }
    }
    next.put(m.to, m.promotion ? Piece{*m.promotion, us} : *moving);

    if (moving->kind == PieceKind::king) {
        if (us == Color::white) next.castling.white_king = next.castling.white_queen = false;
        else next.castling.black_king = next.castling.black_queen = false;
    }
    for (Square s : {m.from, m.to}) {
        if (s == make_square(0, 0)) next.castling.white_queen = false;
        if (s == make_square(7, 0)) next.castling.white_king = false;
        if (s == make_square(0, 7)) next.castling.black_queen = false;
        if (s == make_square(7, 7)) next.castling.black_king = false;
    }

    next.en_passant.reset();
    if (moving->kind == PieceKind::pawn && std::abs(rank_of(m.to) - rank_of(m.from)) == 2)
        next.en_passant = make_square(file_of(m.from), (rank_of(m.from) + rank_of(m.to)) / 2);

    next.halfmove = (moving->kind == PieceKind::pawn || capture) ? 0 : pos.halfmove + 1;
    if (us == Color::black) ++next.fullmove;
    next.side_to_move = opposite(us);
    return next;
}

inline std::vector<Move> pseudo_legal_moves(const Position& pos) {
    std::vector<Move> out;
    const Color us = pos.side_to_move;
    auto enemy_or_empty = [&](Square s) {
        auto p = pos.at(s);
        return !p || p->color != us;
    };

    for (Square from = 0; from < 64; ++from) {
        const auto p = pos.at(from);
        if (!p || p->color != us) continue;
        const int f = file_of(from), r = rank_of(from);

        switch (p->kind) {
        case PieceKind::pawn: {
            const int dir = us == Color::white ? 1 : -1;
            const int start = us == Color::white ? 1 : 6;
            const int last = us == Color::white ? 7 : 0;
            auto add = [&](Square to) {
                if (rank_of(to) == last) {
                    for (auto k : {PieceKind::queen, PieceKind::rook, PieceKind::bishop, PieceKind::knight})
                        out.push_back({from, to, k});
                } else {
                    out.push_back({from, to, std::nullopt});
                }
            };
            if (on_board(f, r + dir) && !pos.at(make_square(f, r + dir))) {
                add(make_square(f, r + dir));
                if (r == start && !pos.at(make_square(f, r + 2 * dir))) out.push_back({from, make_square(f, r + 2 * dir), {}});
            }
            for (int df : {-1, 1}) {
                if (!on_board(f + df, r + dir)) continue;
                const Square to = make_square(f + df, r + dir);
                auto target = pos.at(to);
                if ((target && target->color != us) || (!target && pos.en_passant == to)) add(to);
            }
            break;
        }
        case PieceKind::knight:
        case PieceKind::king: {
            const auto& steps = p->kind == PieceKind::knight ? detail::kKnightSteps : detail::kKingSteps;
            for (auto [df, dr] : steps) {
                if (!on_board(f + df, r + dr)) continue;
                const Square to = make_square(f + df, r + dr);
                if (enemy_or_empty(to)) out.push_back({from, to, {}});
            }
            break;
        }
        default: {
            auto slide = [&](const auto& dirs) {
                for (auto [df, dr] : dirs) {
                    int tf = f + df, tr = r + dr;
                    while (on_board(tf, tr)) {
                        const Square to = make_square(tf, tr);
                        auto target = pos.at(to);
                        if (target && target->color == us) break;
                        out.push_back({from, to, {}});
                        if (target) break;
                        tf += df;
                        tr += dr;
                    }
                }
            };
            if (p->kind != PieceKind::bishop) slide(detail::kRookDirs);
            if (p->kind != PieceKind::rook) slide(detail::kBishopDirs);
        }
        }
    }

    // Castling: king and rook on home squares, path empty, king never
    // passes through or lands on an attacked square.
    const int home = us == Color::white ? 0 : 7;
    const Color them = opposite(us);
    const bool can_k = us == Color::white ? pos.castling.white_king : pos.castling.black_king;
    const bool can_q = us == Color::white ? pos.castling.white_queen : pos.castling.black_queen;
    const Square king_sq = make_square(4, home);
    if ((can_k || can_q) && pos.at(king_sq) == Piece{PieceKind::king, us} && !is_attacked(pos, king_sq, them)) {
        auto empty = [&](int file) { return !pos.at(make_square(file, home)); };
        auto safe = [&](int file) { return !is_attacked(pos, make_square(file, home), them); };
        if (can_k && pos.at(make_square(7, home)) == Piece{PieceKind::rook, us} && empty(5) && empty(6) && safe(5) &&
            safe(6))
            out.push_back({king_sq, make_square(6, home), {}});
        if (can_q && pos.at(make_square(0, home)) == Piece{PieceKind::rook, us} && empty(1) && empty(2) && empty(3) &&
            safe(3) && safe(2))
            out.push_back({king_sq, make_square(2, home), {}});
    }
    return out;
}

/// All legal moves, ordered by move_less.
inline std::vector<Move> legal_moves(const Position& pos) {
    std::vector<Move> out;
    for (const Move& m : pseudo_legal_moves(pos)) {
        const Position next = make_move(pos, m);
        if (!in_check(next, pos.side_to_move)) out.push_back(m);
    }
    std::sort(out.begin(), out.end(), move_less);
    return out;
}

inline std::uint64_t perft(const Position& pos, int depth) {
    if (depth == 0) return 1;
    const auto moves = legal_moves(pos);
    if (depth == 1) return moves.size();
    std::uint64_t n = 0;
    for (const Move& m : moves) n += perft(make_move(pos, m), depth - 1);
    return n;
}

inline bool is_checkmate(const Position& pos) {
    return in_check(pos, pos.side_to_move) && legal_moves(pos).empty();
}

inline bool is_stalemate(const Position& pos) {
    return !in_check(pos, pos.side_to_move) && legal_moves(pos).empty();
}

/// Smallest mating move under move_less, or nullopt when none exists.
inline std::optional<Move> mate_in_one(const Position& pos) {
    for (const Move& m : legal_moves(pos)) {
        const Position next = make_move(pos, m);
        if (!in_check(next, next.side_to_move)) continue;
        bool has_reply = false;
        for (const Move& reply : pseudo_legal_moves(next)) {
            if (!in_check(make_move(next, reply), next.side_to_move)) {
                has_reply = true;
                break;
            }
        }
        if (!has_reply) return m;
    }
    return std::nullopt;
}

/// Reason the position is illegal, or nullopt if it satisfies every
/// structural invariant.
inline std::optional<std::string> position_violation(const Position& pos) {
    std::array<int, 2> kings{0, 0}, pawns{0, 0};
    for (Square s = 0; s < 64; ++s) {
        auto p = pos.at(s);
        if (!p) continue;
        const auto c = static_cast<std::size_t>(p->color);
        if (p->kind == PieceKind::king) ++kings[c];
        if (p->kind == PieceKind::pawn) {
            ++pawns[c];
            if (rank_of(s) == 0 || rank_of(s) == 7) return "pawn on first or last rank at " + square_name(s);
        }
    }
    if (kings[0] != 1 || kings[1] != 1) return std::string("each side needs exactly one king");
    if (pawns[0] > 8 || pawns[1] > 8) return std::string("more than 8 pawns for one side");
    const Square wk = *find_king(pos, Color::white);
    const Square bk = *find_king(pos, Color::black);
    if (std::abs(file_of(wk) - file_of(bk)) <= 1 && std::abs(rank_of(wk) - rank_of(bk)) <= 1)
        return std::string("kings are adjacent");
    if (in_check(pos, opposite(pos.side_to_move))) return std::string("side not to move is in check");
    return std::nullopt;
}

/// FNV-1a over the placement, side, castling and en-passant FEN fields.
inline std::uint64_t position_hash(const Position& pos) {
    const std::string fen = to_fen(pos);
    std::size_t cut = 0;
    for (int spaces = 0; cut < fen.size(); ++cut)
        if (fen[cut] == ' ' && ++spaces == 4) break;
    return fnv1a(std::string_view(fen).substr(0, cut));
}

// ---------------------------------------------------------------------------
// Rendering

inline constexpr int kBoardPixels = 480;
inline constexpr int kSquarePixels = kBoardPixels / 8;

/// Pixel rectangle of a square with white at the bottom.
inline std::array<int, 2> square_origin(Square s) {
    return {file_of(s) * kSquarePixels, (7 - rank_of(s)) * kSquarePixels};
}

/// Pieces are round tokens in the owner's colour carrying the piece letter,
/// so a move visibly clears one square and fills another.
inline raster::Image render_board(const Position& pos) {
    using namespace raster;
    constexpr Rgb light{240, 217, 181};
    constexpr Rgb dark{181, 136, 99};
    constexpr Rgb white_token{250, 250, 250};
    constexpr Rgb black_token{25, 25, 25};
    constexpr int token_radius = 26;
    Image img(kBoardPixels, kBoardPixels, light);
    for (Square s = 0; s < 64; ++s) {
        const auto [x, y] = square_origin(s);
        if ((file_of(s) + rank_of(s)) % 2 == 0) fill_rect(img, x, y, kSquarePixels, kSquarePixels, dark);
        const auto p = pos.at(s);
        if (!p) continue;
        const bool white = p->color == Color::white;
        const int cx = x + kSquarePixels / 2, cy = y + kSquarePixels / 2;
        fill_circle(img, cx, cy, token_radius, white ? white_token : black_token);
        stroke_circle(img, cx, cy, token_radius, 2, colors::black);
        const std::string letter(1, piece_char(Piece{p->kind, Color::white}));
        TextStyle style{.size = 32, .color = white ? colors::black : colors::white, .bold = true, .anchor = Anchor::center};
        draw_text(img, letter, cx, cy, style);
    }
    return img;
}

// ---------------------------------------------------------------------------
// Validation

struct StageResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::array<StageResult, 5> stages;
    std::optional<Move> mate;

    bool passed() const {
        return std::all_of(stages.begin(), stages.end(), [](const StageResult& s) { return s.passed; });
    }
};

/// Runs the five validation stages in order: FEN correctness, legal
/// position, mate-in-one, uniqueness and rendering. Stages after a failed
/// legality check are reported as skipped. The validator remembers the
/// hashes of positions that passed, so feeding it a duplicate fails stage 4.
class PositionValidator {
public:
    ValidationReport validate(const Position& pos) {
        ValidationReport rep;
        rep.stages = {StageResult{"fen", false, ""}, StageResult{"legal_position", false, ""},
                      StageResult{"mate_in_one", false, ""}, StageResult{"unique", false, ""},
                      StageResult{"render", false, ""}};

        const std::string fen = to_fen(pos);
        try {
            rep.stages[0].passed = parse_fen(fen) == pos;
            if (!rep.stages[0].passed) rep.stages[0].detail = "FEN does not round-trip";
        } catch (const FenError& e) {
            rep.stages[0].detail = e.what();
        }

        if (auto why = position_violation(pos)) {
            rep.stages[1].detail = *why;
        } else {
            rep.stages[1].passed = true;
        }
        if (!rep.stages[0].passed || !rep.stages[1].passed) {
            for (std::size_t i = 2; i < 5; ++i) rep.stages[i].detail = "skipped";
            return rep;
        }

        rep.mate = mate_in_one(pos);
        rep.stages[2].passed = rep.mate.has_value();
        rep.stages[2].detail = rep.mate ? rep.mate->uci() : "no mate in one";

        const auto h = position_hash(pos);
        rep.stages[3].passed = !seen_.contains(h);
        if (!rep.stages[3].passed) rep.stages[3].detail = "duplicate position";

        const auto img = render_board(pos);
        bool varied = false;
        const auto first = img.at(0, 0);
        for (int y = 0; y < img.height() && !varied; y += 3)
            for (int x = 0; x < img.width() && !varied; x += 3) varied = img.at(x, y) != first;
        rep.stages[4].passed = img.width() == kBoardPixels && img.height() == kBoardPixels && varied;
        if (!rep.stages[4].passed) rep.stages[4].detail = "blank or mis-sized board image";

        if (rep.passed()) seen_.insert(h);
        return rep;
    }

private:
    std::unordered_set<std::uint64_t> seen_;
};

inline ValidationReport validate_position(const Position& pos) {
    PositionValidator v;
    return v.validate(pos);
}

// ---------------------------------------------------------------------------
// Template enumeration

namespace detail {

inline Position empty_position() {
    Position p;
    p.side_to_move = Color::white;
    return p;
}

inline std::vector<Position> keep_valid(const std::vector<Position>& candidates, PositionValidator& v) {
    std::vector<Position> out;
    for (const auto& c : candidates)
        if (v.validate(c).passed()) out.push_back(c);
    return out;
}

} // namespace detail

/// Pawn shields on the 7th rank: three-wide and two-wide windows plus
/// three-wide windows with one pawn advanced to the 6th rank.
inline std::vector<std::vector<Square>> backrank_pawn_barriers() {
    std::vector<std::vector<Square>> out;
    for (int s = 0; s <= 5; ++s) out.push_back({make_square(s, 6), make_square(s + 1, 6), make_square(s + 2, 6)});
    for (int s = 0; s <= 6; ++s) out.push_back({make_square(s, 6), make_square(s + 1, 6)});
    for (int s = 0; s <= 5; ++s)
        for (int j = 0; j < 3; ++j) {
            std::vector<Square> b;
            for (int k = 0; k < 3; ++k) b.push_back(make_square(s + k, k == j ? 5 : 6));
            out.push_back(b);
        }
    return out;
}

/// Raw back-rank template product before validation.
inline std::vector<Position> backrank_candidates() {
    std::vector<Position> out;
    const auto barriers = backrank_pawn_barriers();
    for (int king_file = 0; king_file < 8; ++king_file)
        for (const auto& barrier : barriers)
            for (auto attacker : {PieceKind::rook, PieceKind::queen})
                for (int attacker_file = 0; attacker_file < 7; ++attacker_file) {
                    Position p = detail::empty_position();
                    p.put(make_square(king_file, 7), Piece{PieceKind::king, Color::black});
                    for (Square s : barrier) p.put(s, Piece{PieceKind::pawn, Color::black});
                    p.put(make_square(7, 0), Piece{PieceKind::king, Color::white});
                    p.put(make_square(attacker_file, 0), Piece{attacker, Color::white});
                    out.push_back(p);
                }
    return out;
}

inline std::vector<Position> enumerate_backrank(PositionValidator& v) {
    return detail::keep_valid(backrank_candidates(), v);
}
inline std::vector<Position> enumerate_backrank() {
    PositionValidator v;
    return enumerate_backrank(v);
}

struct QueenCornerCell {
    Square queen;
    Square enemy_king;
    Square support_king;
};

/// The 10 x 4 x 5 grid of (queen square, cornered king, supporting king).
/// Canonical squares assume the black king on a8 and are mirrored for the
/// other corners.
inline std::vector<QueenCornerCell> queen_corner_grid() {
    constexpr std::array<std::array<int, 2>, 10> queens{
        {{1, 0}, {2, 1}, {3, 3}, {4, 4}, {7, 1}, {7, 4}, {6, 5}, {5, 6}, {4, 6}, {3, 5}}};
    constexpr std::array<std::array<int, 2>, 5> supports{{{0, 5}, {1, 5}, {2, 5}, {2, 6}, {2, 7}}};
    std::vector<QueenCornerCell> out;
    for (auto [qf, qr] : queens)
        for (int corner = 0; corner < 4; ++corner) {
            const bool flip_file = corner & 1;
            const bool flip_rank = corner & 2;
            auto map = [&](int f, int r) { return make_square(flip_file ? 7 - f : f, flip_rank ? 7 - r : r); };
            for (auto [sf, sr] : supports) out.push_back({map(qf, qr), map(0, 7), map(sf, sr)});
        }
    return out;
}

inline std::vector<Position> queen_corner_candidates() {
    std::vector<Position> out;
    for (const auto& cell : queen_corner_grid()) {
        if (cell.queen == cell.support_king) continue;
        Position p = detail::empty_position();
        p.put(cell.enemy_king, Piece{PieceKind::king, Color::black});
        p.put(cell.support_king, Piece{PieceKind::king, Color::white});
        p.put(cell.queen, Piece{PieceKind::queen, Color::white});
        out.push_back(p);
    }
    return out;
}

inline std::vector<Position> enumerate_queen_corner(PositionValidator& v) {
    return detail::keep_valid(queen_corner_candidates(), v);
}
inline std::vector<Position> enumerate_queen_corner() {
    PositionValidator v;
    return enumerate_queen_corner(v);
}

/// Smothered-mate shells (knight to f7 against a boxed-in king on h8, and
/// the mirror) followed by king-and-rook edge mates.
inline std::vector<Position> tactical_candidates() {
    std::vector<Position> out;
    constexpr std::array<std::array<int, 2>, 5> knight_origins{{{3, 5}, {3, 7}, {4, 4}, {6, 4}, {7, 5}}};
    for (bool mirror : {false, true}) {
        auto m = [&](int f, int r) { return make_square(mirror ? 7 - f : f, r); };
        for (auto [nf, nr] : knight_origins)
            for (int wk_file = 0; wk_file < 8; ++wk_file) {
                Position p = detail::empty_position();
                p.put(m(7, 7), Piece{PieceKind::king, Color::black});
                p.put(m(6, 7), Piece{PieceKind::rook, Color::black});
                p.put(m(6, 6), Piece{PieceKind::pawn, Color::black});
                p.put(m(7, 6), Piece{PieceKind::pawn, Color::black});
                p.put(m(nf, nr), Piece{PieceKind::knight, Color::white});
                p.put(make_square(wk_file, 0), Piece{PieceKind::king, Color::white});
                out.push_back(p);
            }
    }
    for (int bk_file = 0; bk_file < 8; ++bk_file)
        for (int rook_rank = 0; rook_rank < 4; ++rook_rank)
            for (int rook_file = 0; rook_file < 8; ++rook_file) {
                Position p = detail::empty_position();
                p.put(make_square(bk_file, 7), Piece{PieceKind::king, Color::black});
                p.put(make_square(bk_file, 5), Piece{PieceKind::king, Color::white});
                p.put(make_square(rook_file, rook_rank), Piece{PieceKind::rook, Color::white});
                out.push_back(p);
            }
    return out;
}

inline std::vector<Position> enumerate_tactical(PositionValidator& v) {
    return detail::keep_valid(tactical_candidates(), v);
}
inline std::vector<Position> enumerate_tactical() {
    PositionValidator v;
    return enumerate_tactical(v);
}

/// Every template family, validated through one shared validator so the
/// pool is free of duplicates. Order: back-rank, queen corner, tactical.
inline const std::vector<Position>& position_pool() {
    static const std::vector<Position> pool = [] {
        PositionValidator v;
        std::vector<Position> all = enumerate_backrank(v);
        for (auto&& p : enumerate_queen_corner(v)) all.push_back(std::move(p));
        for (auto&& p : enumerate_tactical(v)) all.push_back(std::move(p));
        return all;
    }();
    return pool;
}

// ---------------------------------------------------------------------------
// Task assembly

inline std::string chess_prompt(const Position& pos) {
    const char* side = pos.side_to_move == Color::white ? "White" : "Black";
    return std::string(side) + " to move. Find the move that delivers checkmate in one and show it being played on "
                               "the board. Pieces are round tokens marked with a letter (K king, Q queen, R rook, B bishop, "
                               "N knight, P pawn); white pieces are white tokens, black pieces are black tokens.";
}

inline TaskUnit make_chess_task(const Position& pos, std::uint64_t seed, std::uint64_t index = 0) {
    const auto mate = mate_in_one(pos);
    if (!mate) throw ArgumentError("position has no mate in one: " + to_fen(pos));
    TaskUnit t;
    t.domain = Domain::chess;
    t.seed = seed;
    t.index = index;
    t.id = make_task_id(t.domain, seed, index);
    t.first_frame = render_board(pos);
    t.final_frame = render_board(make_move(pos, *mate));
    t.prompt = chess_prompt(pos);
    t.ground_truth = {{"fen", to_fen(pos)},
                      {"mate_move", mate->uci()},
                      {"final_fen", to_fen(make_move(pos, *mate))}};
    return t;
}

/// Task `index` under `seed`: a seeded permutation of the pool, so the
/// first pool-size indices of one seed never repeat a position.
inline TaskUnit generate_chess_task(std::uint64_t seed, std::uint64_t index) {
    const auto& pool = position_pool();
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed, "chess/pool-order");
    rng.shuffle(order);
    return make_chess_task(pool[order[index % order.size()]], seed, index);
}

} // namespace vmeval::chess
