// Writes a procedural box-and-ground scene (camera images, config, labels).

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "melidar/tensor_io.hpp"
#include "melidar/toy_scene.hpp"

namespace fs = std::filesystem;
using namespace melidar;

int main(int argc, char** argv) {
    CLI::App app{"generate a toy scene"};
    std::string out_dir;
    std::uint64_t variant = 0;
    bool frontal = false;
    app.add_option("--out-dir", out_dir, "output directory")->required();
    app.add_option("--variant", variant, "0 is the bundled layout");
    app.add_flag("--frontal", frontal, "1920x960 camera covering the frontal sensor array");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        ToySceneOptions opt = frontal ? frontal_scene_options(variant) : ToySceneOptions{};
        opt.variant = variant;
        const ToyScene scene = make_toy_scene(opt);
        const SimConfig cfg = frontal ? frontal_sim_config(scene.camera) : toy_sim_config(scene.camera);
        fs::create_directories(out_dir);
        write_tensor(fs::path(out_dir) / "rgb.melt", scene.inputs.rgb.at(0));
        write_tensor(fs::path(out_dir) / "depth.melt", scene.inputs.depth.at(0));
        write_tensor(fs::path(out_dir) / "normals.melt", scene.inputs.normals.at(0));
        std::ofstream(fs::path(out_dir) / "config.json") << sim_config_to_json(cfg).dump(2) << "\n";
        write_labels(fs::path(out_dir) / "labels.jsonl", scene.objects);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
