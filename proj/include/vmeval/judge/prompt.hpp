#pragma once

// Judge instructions per domain. The judge sees five images in this order:
// the first frame given to the video model, the expected final frame, and
// the first, middle and last frames of the generated video.

#include <string>

#include "../task.hpp"

namespace vmeval::judge {

inline const char* domain_criteria(Domain d) {
    switch (d) {
    case Domain::chess:
        return "The video must play exactly one legal move for the side to move, and that move must deliver "
               "checkmate. Only the moving piece may change square, apart from a captured piece leaving the board. "
               "Pieces that teleport, duplicate, change type or move illegally make the answer wrong even if the "
               "end position looks close.";
    case Domain::maze:
        return "The green dot must travel along open corridors to the cell with the red flag. Crossing or "
               "breaking a black wall, jumping between cells, or stopping short of the flag is wrong. The walls "
               "themselves must not change.";
    case Domain::rpm:
        return "The empty cell in the bottom-right corner must be filled with the figure that continues the "
               "pattern of its row: same shape, count, orientation and colour as the expected final frame. The "
               "eight given cells must stay as they are.";
    case Domain::rotation:
        return "The camera must orbit the cube structure by 180 degrees horizontally at constant height and tilt, "
               "ending on the view from the opposite side. The structure itself must keep its shape: no cubes "
               "added, removed or moved.";
    case Domain::sudoku:
        return "The gray cell must be filled with the only digit that makes every row and every column contain "
               "1, 2 and 3 exactly once. The other digits must stay unchanged.";
    }
    return "";
}

inline constexpr const char* kRubric =
    "Score the video on this 5-point scale:\n"
    "5 - correct: the final frame shows the expected solution and the way there is valid.\n"
    "4 - correct with small visual flaws (blur, slight drift, minor artifacts) that do not change the answer.\n"
    "3 - partly right: the video moves toward the solution but the final state is wrong, incomplete or unclear.\n"
    "2 - mostly wrong: some relevant change, but the result contradicts the task.\n"
    "1 - no meaningful attempt, a static video, or an invalid or illegal solution.\n"
    "Scores 4 and 5 mean the task was solved. Scores 1, 2 and 3 mean it was not.\n";

inline constexpr const char* kReplyFormat =
    "Reply in exactly this layout:\n"
    "Score: <one integer from 1 to 5>\n"
    "Explanation: <one short paragraph>\n";

inline std::string build_judge_prompt(const TaskUnit& task) {
    std::string p;
    p += "You are grading a video produced by a video generation model for a visual reasoning task (";
    p += to_string(task.domain);
    p += ").\n\nThe model received the first image below and this instruction:\n\"";
    p += task.prompt;
    p += "\"\n\nYou will receive five images in order: (1) the first frame given to the model, (2) the expected "
         "final frame, (3) the first, (4) the middle and (5) the last frame of the generated video.\n\n";
    p += "What counts as correct: ";
    p += domain_criteria(task.domain);
    p += "\n\n";
    p += kRubric;
    p += "\n";
    p += kReplyFormat;
    return p;
}

} // namespace vmeval::judge
