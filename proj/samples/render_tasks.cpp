// Writes the first and final frame of one task per domain as PNG files.
//   render_tasks <out-dir> [seed]

#include <iostream>

#include <vmeval/generate.hpp>
#include <vmeval/io.hpp>
#include <vmeval/raster/png.hpp>

using namespace vmeval;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: render_tasks <out-dir> [seed]\n";
        return 1;
    }
    const fs::path out = argv[1];
    const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;
    fs::create_directories(out);
    for (Domain d : kAllDomains) {
        const TaskUnit t = generate_task(d, seed, 0);
        io::write_bytes(out / (t.id + "_first.png"), raster::encode_png(t.first_frame));
        io::write_bytes(out / (t.id + "_final.png"), raster::encode_png(t.final_frame));
        std::cout << t.id << ": " << t.prompt << "\n";
    }
}
