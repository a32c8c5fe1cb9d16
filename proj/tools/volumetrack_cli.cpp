// volumetrack command line: dataset generation, model training, tracking and
// hand localization, the multiple-view baseline, and evaluation.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "volumetrack/pipeline.hpp"

using namespace volumetrack;

namespace {

// Plain key=value run configuration ('#' comments); command-line flags win
// over file values. Unknown keys are rejected.
void apply_run_config_file(const std::string& path, CLI::App* track, RunConfig& cfg,
                           std::string& results_path, std::string& track_log) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        static const std::vector<std::string> known{
            "detector",      "verifier", "segmenter", "lambda-d", "lambda-a", "lambda-p",
            "gating-radius", "tau-kill", "probation", "p-min",    "out",      "track-log"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key '" + key + "' in " + path);
        const bool overridden = track->count("--" + key) > 0;

        auto as_double = [&] {
            try {
                return std::stod(value);
            } catch (...) {
                throw ConfigError("config key '" + key + "' needs a number, got '" + value +
                                  "'");
            }
        };
        if (key == "detector") {
            if (!overridden) cfg.detector_model = value;
        } else if (key == "verifier") {
            if (!overridden) cfg.verifier = value;
        } else if (key == "segmenter") {
            if (!overridden) cfg.segmenter = value;
        } else if (key == "lambda-d") {
            if (!overridden) cfg.weights.dist = as_double();
        } else if (key == "lambda-a") {
            if (!overridden) cfg.weights.app = as_double();
        } else if (key == "lambda-p") {
            if (!overridden) cfg.weights.cover = as_double();
        } else if (key == "gating-radius") {
            if (!overridden) cfg.gating_radius = as_double();
        } else if (key == "tau-kill") {
            if (!overridden) cfg.tau_kill = as_double();
        } else if (key == "probation") {
            if (!overridden) cfg.probation = int(as_double());
        } else if (key == "p-min") {
            if (!overridden) cfg.p_min = float(as_double());
        } else if (key == "out") {
            if (!overridden) results_path = value;
        } else if (key == "track-log") {
            if (!overridden) track_log = value;
        } else {
            throw ConfigError("unknown config key '" + key + "' in " + path);
        }
    }
}

void validate_run_config(const RunConfig& cfg) {
    if (cfg.detector_model.empty())
        throw ConfigError("a detector model is required (--detector or config key)");
    if (!std::filesystem::exists(cfg.detector_model))
        throw ConfigError("detector model does not exist: " + cfg.detector_model);
    if (cfg.verifier != "oracle" && !std::filesystem::exists(cfg.verifier))
        throw ConfigError("verifier model does not exist: " + cfg.verifier);
    if (cfg.segmenter != "oracle" && cfg.segmenter != "heuristic")
        throw ConfigError("segmenter must be 'oracle' or 'heuristic', got: " + cfg.segmenter);
    if (cfg.probation < 0) throw ConfigError("probation must be >= 0");
    if (cfg.gating_radius <= 0) throw ConfigError("gating radius must be positive");
}

SceneScript load_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scene script: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("scene script is not valid JSON: " + std::string(e.what()));
    }
    try {
        return scene_script_from_json(j);
    } catch (const std::exception& e) {
        throw DataError("scene script " + path + ": " + e.what());
    }
}

int cmd_generate(const std::string& script_path, const std::string& out_dir,
                 std::int64_t seed_override) {
    SceneScript script = load_script_file(script_path);
    if (seed_override >= 0) script.seed = std::uint64_t(seed_override);
    generate_dataset(script, out_dir);
    std::printf("generated %d frames into %s\n", script.num_frames, out_dir.c_str());
    return 0;
}

int cmd_train(const std::vector<std::string>& dataset_dirs, const std::string& out_detector,
              const std::string& out_verifier, TrainConfig cfg) {
    std::vector<Dataset> sets;
    for (const auto& dir : dataset_dirs) sets.push_back(open_dataset(dir));
    const TrainedModels models = train_models(sets, cfg);
    save_linear_detector(out_detector, models.detector);
    save_logistic_verifier(out_verifier, models.verifier);
    std::printf("trained on %zu positives / %zu negatives\n", models.positives,
                models.negatives);
    std::printf("detector delta %.4f, training recall %.4f\n", models.detector.delta,
                models.train_recall);
    std::printf("verifier training accuracy %.4f\n", models.verifier_accuracy);
    std::printf("wrote %s and %s\n", out_detector.c_str(), out_verifier.c_str());
    return 0;
}

int cmd_track(const std::string& dataset_dir, const RunConfig& cfg,
              const std::string& results_path, const std::string& track_log) {
    const Dataset ds = open_dataset(dataset_dir, cfg.verifier == "oracle" ||
                                                     cfg.segmenter == "oracle");
    const TrackingStats stats = run_tracking(ds, cfg, results_path, track_log);
    std::printf("tracked %d frames, %zu person results -> %s\n", stats.frames,
                stats.results, results_path.c_str());
    std::printf("throughput %.1f frames/s, localize_hands median %.2f ms over %zu calls\n",
                stats.fps, stats.hands_ms_median, stats.person_frames_localized);
    return 0;
}

int cmd_baseline(const std::string& dataset_dir, const std::string& rig_path,
                 const BaselineConfig& cfg, const std::string& results_path) {
    const Dataset ds = open_dataset(dataset_dir);
    const auto cams = load_camera_rig(rig_path);
    run_baseline(ds, cams, cfg, results_path);
    std::printf("baseline wrote %s\n", results_path.c_str());
    return 0;
}

int cmd_eval(const std::string& results_path, const std::string& gt_path,
             const std::string& out_dir, const EvalConfig& cfg) {
    const EvalOutcome out = run_eval(results_path, gt_path, out_dir, cfg);
    std::printf("joined %zu person results (%zu unmatched)\n", out.joined, out.unmatched);
    std::printf("%s: mean %.3f voxels, std %.3f, gross rate %.4f, n %lld\n",
                cfg.method.c_str(), out.both.mean, out.both.stddev, out.both.gross_rate,
                (long long)out.both.n);
    std::printf("wrote metrics.csv and histogram.csv in %s\n", out_dir.c_str());
    return 0;
}

int cmd_maps(const std::string& dataset_dir, int frame, const std::string& out_prefix) {
    const Dataset ds = open_dataset(dataset_dir, false);
    if (frame < 0 || frame >= ds.num_frames) throw DataError("frame index out of range");
    const PointFrame pf = read_point_frame(ds.frame_path(frame));
    const FeatureMaps maps = feature_maps_from_points(pf, ds.grid);
    write_pgm16(out_prefix + "_ft.pgm", maps.f_t, 65535.0f / float(ds.grid.nz));
    write_pgm16(out_prefix + "_fs.pgm", maps.f_s, 65535.0f / float(ds.grid.nz));
    write_pgm16(out_prefix + "_fb.pgm", maps.f_b, 65535.0f / float(ds.grid.nz));
    std::printf("wrote %s_{ft,fs,fb}.pgm\n", out_prefix.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-person tracking and hand localization on voxel volumes"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample a scene script into a dataset");
    std::string gen_script, gen_out;
    std::int64_t gen_seed = -1;
    gen->add_option("--script", gen_script, "scene script JSON")
        ->required()
        ->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--seed", gen_seed, "override the script seed");

    // train
    auto* train = app.add_subcommand("train", "train detector and verifier models");
    std::vector<std::string> train_dirs;
    std::string train_det = "detector.vtld", train_ver = "verifier.vtlv";
    TrainConfig train_cfg;
    train->add_option("--dataset", train_dirs, "training dataset directory (repeatable)")
        ->required()
        ->check(CLI::ExistingDirectory);
    train->add_option("--out-detector", train_det, "output VTLD path");
    train->add_option("--out-verifier", train_ver, "output VTLV path");
    train->add_option("--stride", train_cfg.frame_stride, "frame stride")
        ->check(CLI::PositiveNumber);
    train->add_option("--negatives", train_cfg.negatives_per_frame, "negatives per frame");
    train->add_option("--epochs-linear", train_cfg.linear.epochs, "linear SVM epochs");
    train->add_option("--epochs-verifier", train_cfg.logistic.epochs, "verifier epochs");
    train->add_option("--seed", train_cfg.linear.seed, "training shuffle seed");
    train->add_option("--recall-target", train_cfg.recall_target,
                      "delta calibration recall target");

    // track
    auto* track = app.add_subcommand("track", "run detection, tracking and hand localization");
    std::string track_dir, track_out = "results.jsonl", track_log, track_config;
    RunConfig run_cfg;
    track->add_option("--config", track_config, "key=value run configuration file")
        ->check(CLI::ExistingFile);
    track->add_option("--dataset", track_dir, "dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    track->add_option("--out", track_out, "results JSONL path");
    track->add_option("--detector", run_cfg.detector_model, "VTLD model path");
    track->add_option("--verifier", run_cfg.verifier, "'oracle' or a VTLV model path");
    track->add_option("--segmenter", run_cfg.segmenter, "'oracle' or 'heuristic'");
    track->add_option("--lambda-d", run_cfg.weights.dist, "distance weight");
    track->add_option("--lambda-a", run_cfg.weights.app, "appearance weight");
    track->add_option("--lambda-p", run_cfg.weights.cover, "coverage weight");
    track->add_option("--gating-radius", run_cfg.gating_radius, "matching gate, voxels");
    track->add_option("--tau-kill", run_cfg.tau_kill, "trajectory death threshold");
    track->add_option("--probation", run_cfg.probation, "frames before reporting");
    track->add_option("--p-min", run_cfg.p_min, "verification acceptance threshold");
    track->add_option("--track-log", track_log, "optional track log JSONL path");

    // baseline
    auto* base = app.add_subcommand("baseline", "multiple-view triangulation baseline");
    std::string base_dir, base_rig, base_out = "results.jsonl";
    BaselineConfig base_cfg;
    base->add_option("--dataset", base_dir, "dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    base->add_option("--rig", base_rig, "camera rig JSON")->required()->check(CLI::ExistingFile);
    base->add_option("--out", base_out, "results JSONL path");
    base->add_option("--tau", base_cfg.tau, "truncation threshold, pixels");
    base->add_option("--kp-noise", base_cfg.keypoint_noise_px, "keypoint noise sigma, pixels");
    base->add_option("--outlier-rate", base_cfg.outlier_rate, "per-hand outlier probability");
    base->add_option("--outlier-px", base_cfg.outlier_px, "outlier offset, pixels");
    base->add_option("--seed", base_cfg.seed, "corruption seed");

    // eval
    auto* ev = app.add_subcommand("eval", "score results against ground truth");
    std::string eval_results, eval_gt, eval_out_dir = ".";
    EvalConfig eval_cfg;
    ev->add_option("--results", eval_results, "results JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    ev->add_option("--gt", eval_gt, "ground truth JSONL")->required()->check(CLI::ExistingFile);
    ev->add_option("--out-dir", eval_out_dir, "report output directory");
    ev->add_option("--method", eval_cfg.method, "method name for the report");
    ev->add_option("--target", eval_cfg.target, "'center' or 'anchor' ground-truth voxel");
    ev->add_option("--gate", eval_cfg.gate, "association gate, voxels");
    ev->add_flag("--svg", eval_cfg.svg, "also emit histogram.svg");

    // maps
    auto* maps = app.add_subcommand("maps", "dump feature maps of a frame as 16-bit PGM");
    std::string maps_dir, maps_prefix = "maps";
    int maps_frame = 0;
    maps->add_option("--dataset", maps_dir, "dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    maps->add_option("--frame", maps_frame, "frame index");
    maps->add_option("--out-prefix", maps_prefix, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_script, gen_out, gen_seed);
        if (train->parsed()) return cmd_train(train_dirs, train_det, train_ver, train_cfg);
        if (track->parsed()) {
            if (!track_config.empty())
                apply_run_config_file(track_config, track, run_cfg, track_out, track_log);
            validate_run_config(run_cfg);
            return cmd_track(track_dir, run_cfg, track_out, track_log);
        }
        if (base->parsed()) return cmd_baseline(base_dir, base_rig, base_cfg, base_out);
        if (ev->parsed()) return cmd_eval(eval_results, eval_gt, eval_out_dir, eval_cfg);
        if (maps->parsed()) return cmd_maps(maps_dir, maps_frame, maps_prefix);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
