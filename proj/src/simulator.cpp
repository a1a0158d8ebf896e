#include "melidar/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "melidar/parallel.hpp"

namespace melidar {

std::vector<Tensor> split_views(const Tensor& t, std::size_t image_rank) {
    if (t.ndim() == image_rank) return {t};
    if (t.ndim() != image_rank + 1) {
        throw ConfigError("expected a rank-" + std::to_string(image_rank) + " image or a stack of them");
    }
    std::vector<std::uint64_t> dims(t.dims().begin() + 1, t.dims().end());
    const auto views = static_cast<std::size_t>(t.dims()[0]);
    std::vector<Tensor> out;
    for (std::size_t v = 0; v < views; ++v) {
        Tensor part(dims, t.dtype());
        const std::size_t n = part.bytes().size();
        std::copy_n(t.bytes().begin() + static_cast<std::ptrdiff_t>(v * n), n, part.bytes().begin());
        part.meta = t.meta;
        out.push_back(std::move(part));
    }
    return out;
}

double effective_threshold(const SimConfig& cfg, const RateField& rates) {
    if (cfg.threshold) return *cfg.threshold;
    return ambient_tail_threshold(rates.max_ambient(), cfg.kernel_size * cfg.kernel_size, cfg.bins,
                                  cfg.ambient_tail_probability);
}

namespace {

struct PreparedScene {
    SensorRig rig;
    std::vector<CameraModel> cams;
    PositionalMap map;
    Raster red;
    RateField rates;
};

PreparedScene prepare(const SceneInputs& in, const SimConfig& cfg) {
    cfg.validate();
    PreparedScene s;
    std::vector<SensorArray> arrays;
    for (const auto& v : cfg.views) {
        arrays.push_back(build_sensor_array(v));
        s.cams.push_back(v.camera);
    }
    if (in.rgb.size() != s.cams.size() || in.depth.size() != s.cams.size() || in.normals.size() != s.cams.size()) {
        throw ConfigError("need one rgb, depth and normal image per configured camera");
    }
    for (std::size_t k = 0; k < s.cams.size(); ++k) {
        const auto& c = s.cams[k];
        const auto& d = in.rgb[k].dims();
        if (d.size() != 3 || d[2] != 3 || d[0] != c.height || d[1] != c.width) {
            throw ConfigError("rgb image " + std::to_string(k) + " does not match its camera size");
        }
        if (in.depth[k].ndim() != 2 || in.depth[k].dims()[0] != c.height || in.depth[k].dims()[1] != c.width) {
            throw ConfigError("depth image " + std::to_string(k) + " does not match its camera size");
        }
        const auto& nd = in.normals[k].dims();
        if (nd.size() != 3 || nd[2] != 3 || nd[0] != c.height || nd[1] != c.width) {
            throw ConfigError("normal image " + std::to_string(k) + " does not match its camera size");
        }
    }

    s.rig = build_rig(arrays);
    s.map = project_to_cameras(s.rig, s.cams);
    s.red = resample_image(in.rgb, s.map);
    const Raster zdepth = resample_image(in.depth, s.map, TapPolicy::RejectNonPositive);
    const Raster range = depth_to_range(zdepth, s.map, s.cams);

    Raster normals = resample_image(in.normals, s.map);
    for (std::size_t i = 0; i < s.map.size(); ++i) {
        if (!normals.valid[i]) continue;
        const Vec3 nc{normals.data[3 * i], normals.data[3 * i + 1], normals.data[3 * i + 2]};
        const Vec3 ns = s.cams[s.map.camera[i]].rotation * nc;
        normals.data[3 * i] = ns.x;
        normals.data[3 * i + 1] = ns.y;
        normals.data[3 * i + 2] = ns.z;
    }
    const Raster cos_inc = incidence_cosine(normals, s.rig.directions);

    s.rates = RateField(s.rig.rows, s.rig.cols);
    for (std::size_t r = 0; r < s.rig.rows; ++r) {
        for (std::size_t c = 0; c < s.rig.cols; ++c) s.rates.view[r * s.rig.cols + c] = s.rig.column_view[c];
    }
    compute_ambient_rate(s.rates, s.red);
    compute_signal_rate(s.rates, s.red, cos_inc, range, cfg.sbr, cfg.bin_width(), cfg.bins);
    return s;
}

/// Sorted distinct signal bins of pixels within `radius` of (row, col).
void signal_bins_near(const RateField& rates, int row, int col, int radius, std::vector<std::uint32_t>& out) {
    out.clear();
    const auto nr = static_cast<int>(rates.rows);
    const auto nc = static_cast<int>(rates.cols);
    for (int r = std::max(0, row - radius); r <= std::min(nr - 1, row + radius); ++r) {
        for (int c = std::max(0, col - radius); c <= std::min(nc - 1, col + radius); ++c) {
            const auto q = static_cast<std::size_t>(r) * rates.cols + static_cast<std::size_t>(c);
            if (rates.has_signal[q]) out.push_back(rates.signal_bin[q]);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

std::vector<std::vector<EchoCandidate>> extract_sparse(const RateField& rates, const SimConfig& cfg,
                                                       const AggregationKernel& kernel, double tau) {
    const std::size_t n = rates.size();
    const int radius = kernel.radius();
    const std::size_t threads = resolve_threads(cfg.threads);

    // Candidate bins of each pixel: the signal bins its neighborhood can
    // contribute. Everything else is ambient-only and stays below tau.
    std::vector<std::vector<std::uint32_t>> candidates(n);
    // Bins each pixel must be drawn at: the union of the candidate bins of
    // every pixel whose neighborhood contains it.
    std::vector<SparseHistogram> drawn(n);

    parallel_for(rates.rows, threads, [&](std::size_t rb, std::size_t re) {
        std::vector<std::uint32_t> bins;
        for (std::size_t r = rb; r < re; ++r) {
            for (std::size_t c = 0; c < rates.cols; ++c) {
                const std::size_t q = r * rates.cols + c;
                signal_bins_near(rates, static_cast<int>(r), static_cast<int>(c), radius, candidates[q]);

                const bool ambient = rates.ambient_rate[q] > 0.0;
                const bool signal = rates.has_signal[q] && rates.signal_rate[q] > 0.0;
                if (!ambient && !signal) continue;
                auto& h = drawn[q];
                if (ambient) {
                    signal_bins_near(rates, static_cast<int>(r), static_cast<int>(c), 2 * radius, bins);
                    h.reserve(bins.size());
                    for (std::uint32_t b : bins) {
                        const auto count = sample_bin(rates, cfg.seed, q, b);
                        if (count > 0) h.push_back({b, static_cast<double>(count)});
                    }
                } else {
                    const auto b = rates.signal_bin[q];
                    const auto count = sample_bin(rates, cfg.seed, q, b);
                    if (count > 0) h.push_back({b, static_cast<double>(count)});
                }
            }
        }
    });

    auto aggregated = aggregate_neighborhood(drawn, rates.rows, rates.cols, kernel, candidates, threads);
    drawn.clear();
    drawn.shrink_to_fit();

    std::vector<std::vector<EchoCandidate>> picked(n);
    parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            picked[p] = select_topk(aggregated[p], cfg.max_echoes, tau, cfg.nms_window);
        }
    });
    return picked;
}

std::vector<std::vector<EchoCandidate>> extract_dense(const RateField& rates, const SimConfig& cfg,
                                                      const AggregationKernel& kernel, double tau) {
    const std::size_t n = rates.size();
    const std::size_t bins = cfg.bins;
    const std::size_t threads = resolve_threads(cfg.threads);
    std::vector<std::uint32_t> counts(n * bins, 0);
    parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t q = b; q < e; ++q) {
            for (std::size_t k = 0; k < bins; ++k) {
                counts[q * bins + k] = sample_bin(rates, cfg.seed, q, static_cast<std::uint32_t>(k));
            }
        }
    });

    const int radius = kernel.radius();
    const auto nr = static_cast<int>(rates.rows);
    const auto nc = static_cast<int>(rates.cols);
    std::vector<std::vector<EchoCandidate>> picked(n);
    parallel_for(rates.rows, threads, [&](std::size_t rb, std::size_t re) {
        std::vector<double> acc(bins);
        for (int pr = static_cast<int>(rb); pr < static_cast<int>(re); ++pr) {
            for (int pc = 0; pc < nc; ++pc) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int dr = -radius; dr <= radius; ++dr) {
                    for (int dc = -radius; dc <= radius; ++dc) {
                        const int qr = pr + dr;
                        const int qc = pc + dc;
                        if (qr < 0 || qc < 0 || qr >= nr || qc >= nc) continue;
                        const double w = kernel.at(dr, dc);
                        const std::uint32_t* src = &counts[(static_cast<std::size_t>(qr) * rates.cols +
                                                            static_cast<std::size_t>(qc)) * bins];
                        for (std::size_t k = 0; k < bins; ++k) {
                            if (src[k] != 0) acc[k] = accumulate_weighted(acc[k], w, static_cast<double>(src[k]));
                        }
                    }
                }
                const std::size_t p = static_cast<std::size_t>(pr) * rates.cols + static_cast<std::size_t>(pc);
                picked[p] = select_topk_dense(acc, cfg.max_echoes, tau, cfg.nms_window);
            }
        }
    });
    return picked;
}

}  // namespace

SimulationResult simulate(const SceneInputs& inputs, const SimConfig& cfg, HistogramPath path) {
    PreparedScene s = prepare(inputs, cfg);
    const AggregationKernel kernel = AggregationKernel::gaussian(cfg.kernel_size, cfg.kernel_sigma);
    const double tau = effective_threshold(cfg, s.rates);

    const auto picked = path == HistogramPath::Sparse ? extract_sparse(s.rates, cfg, kernel, tau)
                                                      : extract_dense(s.rates, cfg, kernel, tau);

    std::vector<double> ambient(s.red.rows * s.red.cols, 0.0);
    for (std::size_t i = 0; i < ambient.size(); ++i) {
        if (s.red.valid[i]) ambient[i] = std::max(0.0, s.red.data[i * s.red.channels]);
    }

    SimulationResult res;
    res.frame = assemble_frame(picked, ambient, s.rig.directions, s.rig.rows, s.rig.cols, cfg.max_echoes,
                               cfg.bin_width());
    res.image = to_lidar_image(res.frame);
    res.ambient = Raster(s.red.rows, s.red.cols, 1);
    res.ambient.data = std::move(ambient);
    res.ambient.valid = s.red.valid;
    res.rates = std::move(s.rates);
    res.threshold = tau;
    res.rig = std::move(s.rig);
    return res;
}

// ---------------------------------------------------------------------------

Tensor ambient_tensor(const MultiEchoFrame& frame) {
    auto t = Tensor::zeros<float>({frame.height, frame.width});
    auto px = t.as<float>();
    for (std::size_t i = 0; i < frame.groups.size(); ++i) px[i] = static_cast<float>(frame.groups[i].ambient);
    t.meta = {{"kind", "ambient"}, {"layout", "H,W"}, {"units", "relative"}};
    return t;
}

Tensor reflectance_tensor(const MultiEchoFrame& frame) {
    const std::size_t k = frame.max_echoes;
    auto t = Tensor::zeros<float>({frame.height, frame.width, k});
    auto px = t.as<float>();
    for (std::size_t i = 0; i < frame.groups.size(); ++i) {
        const auto& g = frame.groups[i];
        for (std::size_t e = 0; e < std::min(k, g.echoes.size()); ++e) {
            px[i * k + e] = static_cast<float>(g.echoes[e].reflectance);
        }
    }
    t.meta = {{"kind", "reflectance"}, {"layout", "H,W,K"}, {"units", "relative"}};
    return t;
}

Tensor point_cloud_tensor(const MultiEchoFrame& frame) {
    const std::size_t k = frame.max_echoes;
    auto t = Tensor::zeros<float>({frame.height, frame.width, k, 5});
    auto px = t.as<float>();
    for (std::size_t i = 0; i < frame.groups.size(); ++i) {
        const auto& g = frame.groups[i];
        for (std::size_t e = 0; e < std::min(k, g.echoes.size()); ++e) {
            float* dst = &px[(i * k + e) * 5];
            dst[0] = static_cast<float>(g.echoes[e].point.x);
            dst[1] = static_cast<float>(g.echoes[e].point.y);
            dst[2] = static_cast<float>(g.echoes[e].point.z);
            dst[3] = static_cast<float>(g.echoes[e].reflectance);
            dst[4] = 1.0f;
        }
    }
    t.meta = {{"kind", "point_cloud"},
              {"layout", "H,W,K,C"},
              {"channels", {"x", "y", "z", "reflectance", "valid"}},
              {"units", "m"},
              {"bin_width", frame.bin_width}};
    return t;
}

Tensor lidar_image_tensor(const LidarImage& image) {
    auto t = Tensor::zeros<float>({image.height, image.width, image.channels});
    std::copy(image.data.begin(), image.data.end(), t.as<float>().begin());
    t.meta = {{"kind", "lidar_image"}, {"layout", "H,W,C"}, {"channels", "ambient,reflectance_1..K"}};
    return t;
}

MultiEchoFrame frame_from_tensors(const Tensor& cloud, const Tensor* ambient) {
    if (cloud.ndim() != 4 || cloud.dims()[3] != 5) throw FormatError("point cloud must be [H, W, K, 5]");
    MultiEchoFrame f;
    f.height = static_cast<std::size_t>(cloud.dims()[0]);
    f.width = static_cast<std::size_t>(cloud.dims()[1]);
    f.max_echoes = static_cast<std::size_t>(cloud.dims()[2]);
    if (cloud.meta.contains("bin_width") && cloud.meta["bin_width"].is_number()) {
        f.bin_width = cloud.meta["bin_width"].get<double>();
    }
    if (ambient && (ambient->ndim() != 2 || ambient->dims()[0] != f.height || ambient->dims()[1] != f.width)) {
        throw FormatError("ambient image must be [H, W] matching the point cloud");
    }
    const auto px = cloud.as<float>();
    f.groups.resize(f.height * f.width);
    for (std::size_t i = 0; i < f.groups.size(); ++i) {
        auto& g = f.groups[i];
        g.pixel = {static_cast<std::uint32_t>(i / f.width), static_cast<std::uint32_t>(i % f.width)};
        if (ambient) g.ambient = ambient->as<float>()[i];
        for (std::size_t e = 0; e < f.max_echoes; ++e) {
            const float* src = &px[(i * f.max_echoes + e) * 5];
            if (src[4] == 0.0f) continue;
            Echo echo;
            echo.point = {src[0], src[1], src[2]};
            echo.reflectance = src[3];
            if (f.bin_width > 0.0) {
                echo.bin = static_cast<std::uint32_t>(std::max(0.0, std::floor(echo.point.norm() / f.bin_width)));
            }
            g.echoes.push_back(echo);
        }
    }
    return f;
}

void write_simulation(const std::filesystem::path& out_dir, const SimulationResult& result) {
    std::filesystem::create_directories(out_dir);
    write_tensor(out_dir / "ambient.melt", ambient_tensor(result.frame));
    write_tensor(out_dir / "reflectance.melt", reflectance_tensor(result.frame));
    write_tensor(out_dir / "points.melt", point_cloud_tensor(result.frame));
    write_tensor(out_dir / "lidar_image.melt", lidar_image_tensor(result.image));
}

// ---------------------------------------------------------------------------

namespace {

Mat3 rotation_from_json(const nlohmann::json& j) {
    if (j.contains("rotation")) {
        const auto& r = j.at("rotation");
        if (!r.is_array() || r.size() != 3) throw ConfigError("camera rotation must be a 3x3 array");
        Mat3 m;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!r[i].is_array() || r[i].size() != 3) throw ConfigError("camera rotation must be a 3x3 array");
            for (std::size_t k = 0; k < 3; ++k) m.m[i * 3 + k] = r[i][k].get<double>();
        }
        return m;
    }
    Mat3 m = Mat3::rot_z(deg2rad(j.value("yaw_deg", 0.0)));
    if (j.value("flip_image", false)) m = m * Mat3::rot_x(kPi);
    return m;
}

nlohmann::json rotation_to_json(const Mat3& m) {
    auto out = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) out.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return out;
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig cfg) {
    try {
        cfg.bins = j.value("bins", cfg.bins);
        cfg.depth_range = j.value("depth_range", cfg.depth_range);
        cfg.sbr = j.value("sbr", cfg.sbr);
        cfg.kernel_size = j.value("kernel_size", cfg.kernel_size);
        cfg.kernel_sigma = j.value("kernel_sigma", cfg.kernel_sigma);
        if (j.contains("threshold")) {
            if (j["threshold"].is_null()) cfg.threshold.reset();
            else cfg.threshold = j["threshold"].get<double>();
        }
        cfg.ambient_tail_probability = j.value("ambient_tail_probability", cfg.ambient_tail_probability);
        cfg.nms_window = j.value("nms_window", cfg.nms_window);
        cfg.max_echoes = j.value("max_echoes", cfg.max_echoes);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("views")) {
            cfg.views.clear();
            for (const auto& v : j.at("views")) {
                ViewConfig vc;
                if (v.contains("fov_v_deg")) {
                    vc.fov_v_min_deg = v.at("fov_v_deg").at(0).get<double>();
                    vc.fov_v_max_deg = v.at("fov_v_deg").at(1).get<double>();
                }
                if (v.contains("fov_h_deg")) {
                    vc.fov_h_min_deg = v.at("fov_h_deg").at(0).get<double>();
                    vc.fov_h_max_deg = v.at("fov_h_deg").at(1).get<double>();
                }
                vc.step_v_deg = v.value("step_v_deg", vc.step_v_deg);
                vc.step_h_deg = v.value("step_h_deg", vc.step_h_deg);
                const auto& c = v.contains("camera") ? v.at("camera") : nlohmann::json::object();
                vc.camera.fx = c.value("fx", vc.camera.fx);
                vc.camera.fy = c.value("fy", vc.camera.fy);
                vc.camera.cx = c.value("cx", vc.camera.cx);
                vc.camera.cy = c.value("cy", vc.camera.cy);
                vc.camera.width = c.value("width", vc.camera.width);
                vc.camera.height = c.value("height", vc.camera.height);
                vc.camera.rotation = rotation_from_json(c);
                cfg.views.push_back(vc);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
    return cfg;
}

nlohmann::json sim_config_to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["bins"] = cfg.bins;
    j["depth_range"] = cfg.depth_range;
    j["sbr"] = cfg.sbr;
    j["kernel_size"] = cfg.kernel_size;
    j["kernel_sigma"] = cfg.kernel_sigma;
    j["threshold"] = cfg.threshold ? nlohmann::json(*cfg.threshold) : nlohmann::json(nullptr);
    j["ambient_tail_probability"] = cfg.ambient_tail_probability;
    j["nms_window"] = cfg.nms_window;
    j["max_echoes"] = cfg.max_echoes;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["views"] = nlohmann::json::array();
    for (const auto& v : cfg.views) {
        j["views"].push_back({{"fov_v_deg", {v.fov_v_min_deg, v.fov_v_max_deg}},
                              {"fov_h_deg", {v.fov_h_min_deg, v.fov_h_max_deg}},
                              {"step_v_deg", v.step_v_deg},
                              {"step_h_deg", v.step_h_deg},
                              {"camera",
                               {{"fx", v.camera.fx},
                                {"fy", v.camera.fy},
                                {"cx", v.camera.cx},
                                {"cy", v.camera.cy},
                                {"width", v.camera.width},
                                {"height", v.camera.height},
                                {"rotation", rotation_to_json(v.camera.rotation)}}}});
    }
    return j;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return sim_config_from_json(j);
}

ViewConfig frontal_view(const CameraModel& camera) {
    ViewConfig v;
    v.camera = camera;
    return v;
}

}  // namespace melidar
