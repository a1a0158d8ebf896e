// melidar: multi-echo LiDAR simulation and detection preprocessing tool.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "melidar/box_codec.hpp"
#include "melidar/echo_ops.hpp"
#include "melidar/eval_metrics.hpp"
#include "melidar/simulator.hpp"
#include "melidar/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace melidar;

namespace {

struct SimulateArgs {
    std::string rgb, depth, normals, config, out_dir;
    std::optional<double> sbr;
    std::optional<std::uint32_t> bins;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

int run_simulate(const SimulateArgs& a) {
    SimConfig cfg = load_sim_config(a.config);
    if (a.sbr) cfg.sbr = *a.sbr;
    if (a.bins) cfg.bins = *a.bins;
    if (a.seed) cfg.seed = *a.seed;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();

    SceneInputs in;
    in.rgb = split_views(read_tensor(a.rgb), 3);
    in.depth = split_views(read_tensor(a.depth), 2);
    in.normals = split_views(read_tensor(a.normals), 3);
    const auto res = simulate(in, cfg);
    write_simulation(a.out_dir, res);
    std::cout << "frame " << res.frame.height << "x" << res.frame.width << ", " << res.frame.total_points()
              << " points, threshold " << res.threshold << "\n";
    return 0;
}

MultiEchoFrame load_frame(const std::string& cloud, const std::string& ambient) {
    const Tensor c = read_tensor(cloud);
    if (ambient.empty()) return frame_from_tensors(c, nullptr);
    const Tensor amb = read_tensor(ambient);
    return frame_from_tensors(c, &amb);
}

int run_reassign(const std::string& cloud, const std::string& out) {
    const auto frame = load_frame(cloud, "");
    const auto sets = reassign(frame);
    fs::create_directories(out);
    write_tensor(fs::path(out) / "penetrable.melt", point_set_tensor(sets.penetrable, "penetrable"));
    write_tensor(fs::path(out) / "impenetrable.melt", point_set_tensor(sets.impenetrable, "impenetrable"));
    std::cout << "penetrable " << sets.penetrable.size() << ", impenetrable " << sets.impenetrable.size() << "\n";
    return 0;
}

std::vector<Box2D> read_boxes2d(const std::string& path) {
    std::vector<Box2D> out;
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Box2D b{j.at("u_min").get<double>(), j.at("v_min").get<double>(), j.at("u_max").get<double>(),
                    j.at("v_max").get<double>(), 0};
            const auto cls = class_from_name(j.at("class").get<std::string>());
            if (!cls) throw ParseError(lineno, "unknown class");
            b.class_id = *cls;
            out.push_back(b);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, std::string("bad 2D box: ") + e.what());
        }
    }
    return out;
}

int run_encode_image(const std::string& cloud, const std::string& ambient, const std::string& boxes2d,
                     std::size_t classes, const std::string& out_dir) {
    const auto frame = load_frame(cloud, ambient);
    const auto image = to_lidar_image(frame);
    const auto points = frame_points(frame);
    const auto pix = paint_pixel(points, image);
    std::vector<PixelIndex> pixels;
    pixels.reserve(points.size());
    for (const auto& p : points) pixels.push_back(p.pixel);
    std::vector<Box2D> boxes;
    if (!boxes2d.empty()) boxes = read_boxes2d(boxes2d);
    const auto cls = paint_class(pixels, boxes, classes);

    const std::size_t width = 5 + classes;
    auto feat = Tensor::zeros<float>({points.size(), width});
    auto f = feat.as<float>();
    nlohmann::json channels = {"x", "y", "z", "ambient", "reflectance"};
    for (std::size_t c = 0; c < classes; ++c) channels.push_back("class_" + std::to_string(c));
    for (std::size_t i = 0; i < points.size(); ++i) {
        float* row = &f[i * width];
        row[0] = static_cast<float>(points[i].point.x);
        row[1] = static_cast<float>(points[i].point.y);
        row[2] = static_cast<float>(points[i].point.z);
        row[3] = pix[i][0];
        row[4] = pix[i][1];
        for (std::size_t c = 0; c < classes; ++c) row[5 + c] = cls[i * classes + c];
    }
    feat.meta = {{"kind", "point_features"}, {"layout", "M,C"}, {"channels", channels}};
    fs::create_directories(out_dir);
    write_tensor(fs::path(out_dir) / "lidar_image.melt", lidar_image_tensor(image));
    write_tensor(fs::path(out_dir) / "point_features.melt", feat);
    std::cout << "lidar image " << image.height << "x" << image.width << "x" << image.channels << ", "
              << points.size() << " painted points\n";
    return 0;
}

int run_encode_targets(const std::string& labels, const std::string& cloud, const std::string& codec,
                       const std::string& out_dir) {
    const BinCodecConfig cfg = codec.empty() ? BinCodecConfig{} : load_codec_config(codec);
    cfg.validate();
    const auto boxes = read_labels(labels);
    const auto frame = load_frame(cloud, "");
    const auto points = frame_points(frame);

    std::vector<float> rows;
    auto fg = Tensor::zeros<std::uint8_t>({points.size()});
    auto fgv = fg.as<std::uint8_t>();
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            if (!boxes[b].contains(points[i].point)) continue;
            fgv[i] = 1;
            try {
                const auto t = encode(boxes[b], points[i].point, cfg);
                const float r[] = {static_cast<float>(i),       static_cast<float>(b),       static_cast<float>(t.bin_x),
                                   static_cast<float>(t.bin_y), static_cast<float>(t.bin_yaw), static_cast<float>(t.res_x),
                                   static_cast<float>(t.res_y), static_cast<float>(t.res_yaw), static_cast<float>(t.res_z),
                                   static_cast<float>(t.res_h), static_cast<float>(t.res_w),   static_cast<float>(t.res_l)};
                rows.insert(rows.end(), std::begin(r), std::end(r));
            } catch (const OutOfRangeError&) {
                ++skipped;
            }
            break;
        }
    }
    constexpr std::size_t kCols = 12;
    auto targets = Tensor::zeros<float>({rows.size() / kCols, kCols});
    std::copy(rows.begin(), rows.end(), targets.as<float>().begin());
    targets.meta = {{"kind", "box_targets"},
                    {"layout", "M,C"},
                    {"channels",
                     {"point", "box", "bin_x", "bin_y", "bin_yaw", "res_x", "res_y", "res_yaw", "res_z", "res_h", "res_w",
                      "res_l"}}};
    fg.meta = {{"kind", "foreground"}, {"layout", "M"}};
    fs::create_directories(out_dir);
    write_tensor(fs::path(out_dir) / "targets.melt", targets);
    write_tensor(fs::path(out_dir) / "foreground.melt", fg);
    std::cout << rows.size() / kCols << " foreground targets";
    if (skipped) std::cout << " (" << skipped << " outside the search range)";
    std::cout << "\n";
    return 0;
}

struct EvalArgs {
    std::vector<std::string> gt, det;
    std::string cls, difficulty, report, mode = "depth";
    std::optional<double> iou;
};

int run_eval(const EvalArgs& a) {
    if (a.gt.size() != a.det.size()) throw ConfigError("--gt and --det must be given the same number of times");
    std::vector<EvalFrame> frames;
    for (std::size_t i = 0; i < a.gt.size(); ++i) frames.push_back({read_labels(a.gt[i]), read_labels(a.det[i])});

    std::vector<int> classes;
    if (a.cls.empty()) {
        classes = {0, 1, 2};
    } else {
        const auto c = class_from_name(a.cls);
        if (!c) throw ConfigError("unknown class '" + a.cls + "'");
        classes = {*c};
    }
    std::vector<Difficulty> levels = {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard};
    if (!a.difficulty.empty()) levels = {difficulty_from_name(a.difficulty)};
    DifficultyMode mode = DifficultyMode::Depth;
    if (a.mode == "kitti") mode = DifficultyMode::Kitti;
    else if (a.mode != "depth") throw ConfigError("unknown difficulty mode '" + a.mode + "'");

    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (int c : classes) {
        const std::vector<double> ious = a.iou ? std::vector<double>{*a.iou} : default_iou_thresholds(c);
        for (double iou : ious) {
            for (auto lvl : levels) {
                const auto r = average_precision(frames, c, iou, lvl, mode);
                nlohmann::ordered_json e;
                e["class"] = class_name(c);
                e["iou"] = iou;
                e["difficulty"] = difficulty_name(lvl);
                e["ap"] = std::isnan(r.ap) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.ap);
                e["num_gt"] = r.num_gt;
                e["num_det"] = r.num_det;
                e["tp"] = r.true_positives;
                e["fp"] = r.false_positives;
                e["ignored"] = r.ignored;
                results.push_back(e);
                if (a.report != "json") {
                    std::printf("%-8s iou=%.2f %-9s AP=%s gt=%zu det=%zu tp=%zu fp=%zu\n", class_name(c).c_str(), iou,
                                difficulty_name(lvl).c_str(),
                                std::isnan(r.ap) ? "n/a" : std::to_string(r.ap).c_str(), r.num_gt, r.num_det,
                                r.true_positives, r.false_positives);
                }
            }
        }
    }
    if (a.report == "json") {
        nlohmann::ordered_json doc;
        doc["frames"] = frames.size();
        doc["mode"] = a.mode;
        doc["results"] = results;
        std::cout << doc.dump(2) << "\n";
    }
    return 0;
}

int run_inspect(const std::string& path) {
    const Tensor t = read_tensor(path);
    std::cout << "file   " << path << "\n";
    std::cout << "dtype  " << dtype_name(t.dtype()) << "\n";
    std::cout << "dims   [";
    for (std::size_t i = 0; i < t.ndim(); ++i) std::cout << (i ? ", " : "") << t.dims()[i];
    std::cout << "]\n";
    std::cout << "meta   " << t.meta.dump() << "\n";

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    std::size_t finite = 0;
    std::size_t nonzero = 0;
    auto add = [&](double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++finite;
        if (v != 0.0) ++nonzero;
    };
    switch (t.dtype()) {
        case DType::F32: for (float v : t.as<float>()) add(v); break;
        case DType::U32: for (auto v : t.as<std::uint32_t>()) add(v); break;
        case DType::U8: for (auto v : t.as<std::uint8_t>()) add(v); break;
    }
    std::cout << "count  " << t.numel() << " (" << finite << " finite, " << nonzero << " nonzero)\n";
    if (finite) std::cout << "range  [" << lo << ", " << hi << "], mean " << sum / static_cast<double>(finite) << "\n";

    if (t.ndim() == 4 && t.dims()[3] == 5 && t.dtype() == DType::F32) {
        const auto frame = frame_from_tensors(t, nullptr);
        std::cout << "frame  " << frame.height << "x" << frame.width << ", " << frame.total_points() << " points\n";
        for (std::size_t k = 0; k < frame.max_echoes; ++k) {
            std::cout << "echo " << k + 1 << " " << frame.echo_count(k) << "\n";
        }
        const auto bad = validate_frame(frame);
        std::cout << "valid  " << (bad.empty() ? "yes" : "no (" + std::to_string(bad.size()) + " violations)") << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-echo LiDAR simulation and preprocessing"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "simulate a multi-echo frame from camera images");
    s->add_option("--rgb", sim.rgb, "RGB image tensor [h,w,3] or [V,h,w,3]")->required();
    s->add_option("--depth", sim.depth, "depth tensor [h,w] or [V,h,w]")->required();
    s->add_option("--normals", sim.normals, "normal tensor [h,w,3] or [V,h,w,3]")->required();
    s->add_option("--config", sim.config, "simulation config JSON")->required();
    s->add_option("--out-dir", sim.out_dir, "output directory")->required();
    s->add_option("--sbr", sim.sbr, "signal-background ratio");
    s->add_option("--bins", sim.bins, "number of time bins");
    s->add_option("--seed", sim.seed, "random seed");
    s->add_option("--threads", sim.threads, "worker threads, 0 = all cores");

    std::string cloud, out, ambient, boxes2d, labels, codec;
    std::size_t classes = 3;
    auto* r = app.add_subcommand("reassign", "split a point cloud into penetrable and impenetrable sets");
    r->add_option("--cloud", cloud, "point cloud tensor [H,W,K,5]")->required();
    r->add_option("--out,--out-dir", out, "output directory")->required();

    auto* ei = app.add_subcommand("encode-image", "build the LiDAR image and painted point features");
    ei->add_option("--cloud", cloud, "point cloud tensor [H,W,K,5]")->required();
    ei->add_option("--ambient", ambient, "ambient tensor [H,W]");
    ei->add_option("--boxes2d", boxes2d, "2D boxes on the LiDAR image (JSON lines)");
    ei->add_option("--classes", classes, "class vector length");
    ei->add_option("--out-dir", out, "output directory")->required();

    auto* et = app.add_subcommand("encode-targets", "encode per-point box regression targets");
    et->add_option("--labels", labels, "ground-truth boxes (JSON lines)")->required();
    et->add_option("--cloud", cloud, "point cloud tensor [H,W,K,5]")->required();
    et->add_option("--codec", codec, "codec config JSON");
    et->add_option("--out-dir", out, "output directory")->required();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "average precision of detections against ground truth");
    e->add_option("--gt", ev.gt, "ground-truth labels, one file per frame")->required();
    e->add_option("--det", ev.det, "detections, one file per frame")->required();
    e->add_option("--class", ev.cls, "Car, Person or Cyclist (default: all)");
    e->add_option("--iou", ev.iou, "IoU threshold (default: per-class thresholds)");
    e->add_option("--difficulty", ev.difficulty, "easy, moderate or hard (default: all)")
        ->check(CLI::IsMember({"easy", "moderate", "hard"}));
    e->add_option("--mode", ev.mode, "difficulty mode")->check(CLI::IsMember({"depth", "kitti"}));
    e->add_option("--report", ev.report, "report format")->check(CLI::IsMember({"text", "json"}));

    std::string inspect_path;
    auto* in = app.add_subcommand("inspect", "print a tensor container header and statistics");
    in->add_option("file", inspect_path, "tensor file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*s) return run_simulate(sim);
        if (*r) return run_reassign(cloud, out);
        if (*ei) return run_encode_image(cloud, ambient, boxes2d, classes, out);
        if (*et) return run_encode_targets(labels, cloud, codec, out);
        if (*e) return run_eval(ev);
        if (*in) return run_inspect(inspect_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 2;
}
