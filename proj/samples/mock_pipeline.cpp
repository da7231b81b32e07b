// Whole pipeline in one process: tasks, two mock models, oracle judge, report.
//   mock_pipeline <work-dir> [count-per-domain]

#include <iostream>

#include <vmeval/generate.hpp>
#include <vmeval/judge/run.hpp>
#include <vmeval/pipeline/run.hpp>
#include <vmeval/stats/report.hpp>

using namespace vmeval;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: mock_pipeline <work-dir> [count-per-domain]\n";
        return 1;
    }
    const fs::path work = argv[1];
    const std::size_t count = argc > 2 ? std::stoul(argv[2]) : 3;
    fs::create_directories(work / "tasks");
    generate_tasks({kAllDomains.begin(), kAllDomains.end()}, count, 7, work / "tasks");

    std::vector<pipeline::ModelSpec> models(2);
    models[0].name = "oracle-mock";
    models[0].endpoint = "mock://oracle";
    models[1].name = "lazy-mock";
    models[1].endpoint = "mock://lazy";
    for (auto& m : models) m.poll_interval_s = 0.01;
    pipeline::run_suite(models, work / "tasks", work / "runs");

    const auto judged = judge::judge_run(work / "runs");
    const auto report = stats::build_report(judged.judgments);
    std::cout << stats::report_markdown(report);
}
