#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "covct/image_io.hpp"
#include "covct/infer.hpp"
#include "covct/metrics.hpp"
#include "covct/model.hpp"
#include "covct/scorecam.hpp"
#include "covct/segmentation.hpp"

using nlohmann::json;
using namespace covct;

namespace {

constexpr int kExitUnreadable = 2;
constexpr int kExitUnsupportedTiff = 3;
constexpr int kExitNoLung = 4;
constexpr int kExitNotSquare = 5;
constexpr int kExitCorruptModel = 6;
constexpr int kExitBadCsv = 7;

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void emit_json(const json& j, const std::string& dest) {
    if (dest == "-") {
        std::cout << j.dump(2) << "\n";
    } else if (!dest.empty()) {
        std::ofstream out(dest);
        if (!out) throw IoError("cannot write " + dest);
        out << j.dump(2) << "\n";
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

int cmd_convert(const std::string& in, const std::string& out) {
    Raster tiff;
    try {
        tiff = read_tiff16(in);
    } catch (const UnsupportedTiff& e) {
        std::cerr << "unsupported TIFF: " << e.what() << "\n";
        return kExitUnsupportedTiff;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitUnreadable;
    }
    Raster norm = minmax_normalize(tiff, observed_range(tiff));
    write_png(out, quantize_to_8bit(norm));
    return 0;
}

Raster load_square_gray(const std::string& path, int& rc) {
    rc = 0;
    Raster img;
    try {
        img = read_png(path);
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        rc = kExitUnreadable;
        return img;
    }
    if (img.width != img.height) {
        std::cerr << "input must be square, got " << img.width << "x" << img.height << "\n";
        rc = kExitNotSquare;
        return img;
    }
    return to_grayscale(img);
}

int cmd_segment(const std::string& in, const std::string& prefix) {
    int rc = 0;
    Raster gray = load_square_gray(in, rc);
    if (rc) return rc;
    gray = resize_bilinear(gray, 512, 512);
    SegmentationResult seg;
    try {
        seg = segment_lungs(gray);
    } catch (const NoLungFound& e) {
        std::cerr << e.what() << "\n";
        return kExitNoLung;
    }
    write_png(prefix + "_mask.png", seg.mask);
    write_png(prefix + "_segmented.png", seg.segmented);
    write_png(prefix + "_enlarged.png", seg.enlarged);
    return 0;
}

struct AnalyzeOpts {
    std::string input;
    std::string model_path;
    std::string out_prefix = "analysis";
    std::string json_dest;
    int stride = 4;
    int workers = 8;
    int threads = 6;
    double blend_c = 0.5;
    double hue = 0.0;
    bool full_image = false;
    bool force_cam = false;
};

int cmd_analyze(const AnalyzeOpts& opt) {
    int rc = 0;
    Raster gray = load_square_gray(opt.input, rc);
    if (rc) return rc;

    ModelBundle model;
    try {
        model = load_model(opt.model_path);
    } catch (const CorruptModel& e) {
        std::cerr << "corrupt model: " << e.what() << "\n";
        return kExitCorruptModel;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitCorruptModel;
    }

    Raster ct = resize_bilinear(gray, 512, 512);
    auto t0 = std::chrono::steady_clock::now();
    SegmentationResult seg;
    try {
        seg = segment_lungs(ct);
    } catch (const NoLungFound& e) {
        std::cerr << e.what() << "\n";
        return kExitNoLung;
    }
    double t_segment = ms_since(t0);
    std::string mask_path = opt.out_prefix + "_mask.png";
    write_png(mask_path, seg.mask);

    Raster net_input = resize_bilinear(gray, model.input_w, model.input_h);
    t0 = std::chrono::steady_clock::now();
    ActivationOutput out = forward(model, net_input, ForwardOptions{opt.threads});
    double t_infer = ms_since(t0);
    int label = out.probs[0] >= out.probs[1] ? 0 : 1;

    json report;
    report["input"] = opt.input;
    report["covid_probability"] = out.probs[0];
    report["no_covid_probability"] = out.probs[1];
    report["label"] = label == 0 ? "covid" : "no-covid";
    report["mask_path"] = mask_path;
    report["config"] = {{"stride", opt.stride}, {"workers", opt.workers},
                        {"threads", opt.threads}, {"blend", opt.blend_c}, {"hue", opt.hue}};

    double t_cam = 0, t_overlay = 0;
    bool run_cam = label == 0 || opt.force_cam;
    if (run_cam) {
        CamConfig cfg;
        cfg.stride = opt.stride;
        cfg.workers = opt.workers;
        t0 = std::chrono::steady_clock::now();
        CamMap cam = scorecam(model, net_input, cfg);
        t_cam = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        // bring the relevance map up to the display resolution
        CamMap display = cam;
        display.values = resize_bilinear(cam.values, 512, 512);
        display.width = display.height = 512;
        Raster heat = colorize(display);
        Raster overlay = compose_overlay(ct, heat, seg.mask, opt.blend_c, opt.hue, opt.full_image);
        t_overlay = ms_since(t0);

        std::string heat_path = opt.out_prefix + "_heatmap.png";
        std::string overlay_path = opt.out_prefix + "_overlay.png";
        write_png(heat_path, heat);
        write_png(overlay_path, overlay);
        report["heatmap_path"] = heat_path;
        report["overlay_path"] = overlay_path;
        report["cam_skipped"] = false;

        json sidecar;
        sidecar["selected_indices"] = cam.selected_indices;
        sidecar["weights"] = cam.weights;
        sidecar["stride"] = cfg.stride;
        sidecar["workers"] = cfg.workers;
        sidecar["elapsed_ms"] = t_cam;
        std::ofstream sc(opt.out_prefix + "_cam.json");
        sc << sidecar.dump(2) << "\n";
    } else {
        report["heatmap_path"] = nullptr;
        report["overlay_path"] = nullptr;
        report["cam_skipped"] = true;
    }
    report["timings_ms"] = {{"segment", t_segment}, {"inference", t_infer},
                            {"cam", t_cam}, {"overlay", t_overlay}};
    emit_json(report, opt.json_dest.empty() ? opt.out_prefix + "_report.json" : opt.json_dest);
    return 0;
}

int cmd_metrics(const std::string& in, bool with_ci, const std::string& out_prefix,
                const std::string& json_dest) {
    std::ifstream f(in);
    if (!f) {
        std::cerr << "cannot open " << in << "\n";
        return kExitBadCsv;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    std::vector<PredictionRow> rows;
    try {
        rows = parse_predictions_csv(ss.str());
    } catch (const MalformedCsv& e) {
        std::cerr << e.what() << "\n";
        return kExitBadCsv;
    }

    std::vector<int> preds, labels;
    std::vector<double> scores;
    for (const auto& r : rows) {
        preds.push_back(r.predicted_class);
        labels.push_back(r.true_class);
        scores.push_back(r.score_covid);
    }
    ConfusionMatrix cm = confusion(preds, labels, 0);
    DerivedMetrics dm = derive_metrics(cm);

    json j;
    j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v) j[name] = *v;
        else j[name] = nullptr;
    };
    put("accuracy", dm.accuracy);
    put("specificity", dm.specificity);
    put("sensitivity", dm.sensitivity);
    put("precision", dm.precision);
    put("f1", dm.f1);

    try {
        RocCurve roc = roc_auc(scores, labels, 0);
        j["auc"] = roc.auc;
        std::ofstream rc(out_prefix + "_roc.csv");
        rc << "fpr,tpr\n";
        for (auto [fpr, tpr] : roc.points) rc << fpr << "," << tpr << "\n";
    } catch (const SingleClass&) {
        j["auc"] = nullptr;
        j["roc_unavailable"] = true;
    }

    if (with_ci && dm.accuracy) {
        json ci = json::array();
        for (ConfidenceLevel lvl : {ConfidenceLevel::P90, ConfidenceLevel::P95, ConfidenceLevel::P99}) {
            auto [lo, hi] = accuracy_ci(*dm.accuracy, static_cast<long long>(rows.size()), lvl);
            ci.push_back({{"confidence", static_cast<int>(lvl)}, {"n", rows.size()},
                          {"low", lo}, {"high", hi}});
        }
        j["confidence_intervals"] = ci;
    }
    emit_json(j, json_dest.empty() ? "-" : json_dest);
    return 0;
}

struct BenchOpts {
    std::string model_path;
    std::vector<int> threads_grid{4, 6, 8};
    std::vector<int> stride_grid{1, 4};
    std::vector<int> workers_grid{1, 8};
    int runs = 3;
    std::string out_prefix = "bench";
};

int cmd_bench(const BenchOpts& opt) {
    ModelBundle model;
    try {
        model = load_model(opt.model_path);
    } catch (const CorruptModel& e) {
        std::cerr << "corrupt model: " << e.what() << "\n";
        return kExitCorruptModel;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitCorruptModel;
    }
    Raster img(model.input_w, model.input_h, PixelFormat::Gray8);
    for (std::size_t i = 0; i < img.samples.size(); ++i)
        img.samples[i] = static_cast<std::uint16_t>((i * 13) % 256);

    json rows = json::array();
    std::ostringstream csv;
    csv << "kind,threads,stride,workers,median_ms,runs\n";

    for (int threads : opt.threads_grid) {
        forward(model, img, ForwardOptions{threads}); // warm-up
        std::vector<double> times;
        for (int r = 0; r < std::max(3, opt.runs); ++r) {
            auto t0 = std::chrono::steady_clock::now();
            forward(model, img, ForwardOptions{threads});
            times.push_back(ms_since(t0));
        }
        double med = median(times);
        rows.push_back({{"kind", "forward"}, {"threads", threads}, {"median_ms", med},
                        {"runs", times.size()}});
        csv << "forward," << threads << ",,," << med << "," << times.size() << "\n";
    }

    for (int stride : opt.stride_grid)
        for (int workers : opt.workers_grid) {
            CamConfig cfg;
            cfg.stride = stride;
            cfg.workers = workers;
            scorecam(model, img, cfg); // warm-up
            std::vector<double> times;
            for (int r = 0; r < std::max(3, opt.runs); ++r) {
                auto t0 = std::chrono::steady_clock::now();
                scorecam(model, img, cfg);
                times.push_back(ms_since(t0));
            }
            double med = median(times);
            rows.push_back({{"kind", "scorecam"}, {"stride", stride}, {"workers", workers},
                            {"median_ms", med}, {"runs", times.size()}});
            csv << "scorecam,," << stride << "," << workers << "," << med << ","
                << times.size() << "\n";
        }

    std::ofstream cf(opt.out_prefix + ".csv");
    cf << csv.str();
    json j;
    j["rows"] = rows;
    emit_json(j, opt.out_prefix + ".json");
    std::cout << csv.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CT analysis pipeline: conversion, lung segmentation, classification, "
                 "heatmaps and evaluation metrics"};
    app.require_subcommand(1);

    std::string default_model;
    if (const char* env = std::getenv("COVCT_MODEL")) default_model = env;

    std::string conv_in, conv_out;
    auto* conv = app.add_subcommand("convert", "convert a 16-bit TIFF to an 8-bit PNG");
    conv->add_option("input", conv_in, "16-bit TIFF path")->required();
    conv->add_option("output", conv_out, "output PNG path")->required();

    std::string seg_in, seg_prefix = "segmentation";
    auto* seg = app.add_subcommand("segment", "segment the lung parenchyma");
    seg->add_option("input", seg_in, "square 8-bit PNG")->required();
    seg->add_option("--out-prefix", seg_prefix, "output file prefix");

    AnalyzeOpts an;
    an.model_path = default_model;
    auto* ana = app.add_subcommand("analyze", "full pipeline: segment, classify, heatmap");
    ana->add_option("input", an.input, "square 8-bit PNG")->required();
    ana->add_option("--model", an.model_path, "model bundle path (default: $COVCT_MODEL)");
    ana->add_option("--stride", an.stride, "activation-map selection stride");
    ana->add_option("--workers", an.workers, "heatmap worker threads");
    ana->add_option("--threads", an.threads, "inference threads");
    ana->add_option("--blend", an.blend_c, "overlay blending fraction");
    ana->add_option("--hue", an.hue, "overlay hue shift in degrees");
    ana->add_flag("--full-image", an.full_image, "overlay on the full CT instead of the mask");
    ana->add_flag("--force-cam", an.force_cam, "generate the heatmap even for no-covid output");
    ana->add_option("--json", an.json_dest, "report destination ('-' for stdout)");
    ana->add_option("--out-prefix", an.out_prefix, "output file prefix");

    std::string met_in, met_prefix = "metrics", met_json;
    bool met_ci = false;
    auto* met = app.add_subcommand("metrics", "evaluate a predictions CSV");
    met->add_option("input", met_in, "CSV of id,score_covid,predicted_class,true_class")->required();
    met->add_flag("--ci", met_ci, "include accuracy confidence intervals");
    met->add_option("--json", met_json, "metrics destination ('-' for stdout)");
    met->add_option("--out-prefix", met_prefix, "output file prefix for the ROC CSV");

    BenchOpts be;
    be.model_path = default_model;
    auto* ben = app.add_subcommand("bench", "inference and heatmap timing grids");
    ben->add_option("--model", be.model_path, "model bundle path (default: $COVCT_MODEL)");
    ben->add_option("--threads-grid", be.threads_grid, "forward-pass thread counts");
    ben->add_option("--stride-grid", be.stride_grid, "heatmap selection strides");
    ben->add_option("--workers-grid", be.workers_grid, "heatmap worker counts");
    ben->add_option("--runs", be.runs, "repetitions per cell (min 3)");
    ben->add_option("--out-prefix", be.out_prefix, "output file prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (conv->parsed()) return cmd_convert(conv_in, conv_out);
        if (seg->parsed()) return cmd_segment(seg_in, seg_prefix);
        if (ana->parsed()) return cmd_analyze(an);
        if (met->parsed()) return cmd_metrics(met_in, met_ci, met_prefix, met_json);
        if (ben->parsed()) return cmd_bench(be);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
