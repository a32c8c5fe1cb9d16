#pragma once

// Dataset plumbing and the end-to-end runs behind the CLI subcommands:
// generate, train, track, baseline, eval. Everything here is deterministic
// given (inputs, config, seed); frames stream one at a time so peak memory
// does not grow with sequence length.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "volumetrack/detection.hpp"
#include "volumetrack/eval.hpp"
#include "volumetrack/frame_io.hpp"
#include "volumetrack/hands.hpp"
#include "volumetrack/matching.hpp"
#include "volumetrack/oracle.hpp"
#include "volumetrack/projection.hpp"
#include "volumetrack/synth.hpp"
#include "volumetrack/tracking.hpp"
#include "volumetrack/triangulation.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

// Configuration and data problems map to distinct process exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int configured_threads() {
    if (const char* env = std::getenv("VOLUMETRACK_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

// index-addressed parallel loop; output written by index stays bit-identical
// for any thread count
template <typename Fn>
inline void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Dataset directory: frame_%06d.pc4d + gt.jsonl + scene.json + meta.json

inline std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pc4d", index);
    return buf;
}

struct Dataset {
    std::string dir;
    GridSpec grid;
    int num_frames = 0;
    std::vector<FrameGt> gt; // empty when the dataset carries no ground truth

    std::string frame_path(int index) const {
        return (std::filesystem::path(dir) / frame_file_name(index)).string();
    }
    const FrameGt* gt_for_frame(int index) const {
        for (const auto& g : gt)
            if (g.frame == index) return &g;
        return nullptr;
    }
};

inline void generate_dataset(const SceneScript& script, const std::string& out_dir) {
    validate_script(script);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    std::ostringstream gt_lines;
    for (int f = 0; f < script.num_frames; ++f) {
        const auto [frame, gt] = sample_scene(script, f);
        write_pc4d((dir / frame_file_name(f)).string(), frame);
        gt_lines << frame_gt_to_json(gt).dump() << "\n";
    }
    {
        std::ofstream out(dir / "gt.jsonl", std::ios::binary);
        if (!out) throw DataError("cannot write gt.jsonl in " + out_dir);
        out << gt_lines.str();
    }
    {
        std::ofstream out(dir / "scene.json", std::ios::binary);
        out << scene_script_to_json(script).dump(2) << "\n";
    }
    nlohmann::ordered_json meta;
    meta["format"] = "volumetrack-dataset";
    meta["version"] = 1;
    meta["frames"] = script.num_frames;
    meta["grid"] = grid_to_json(script.grid);
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
}

inline Dataset open_dataset(const std::string& dir, bool require_gt = true) {
    Dataset ds;
    ds.dir = dir;
    const std::filesystem::path root(dir);
    std::ifstream meta_in(root / "meta.json");
    if (!meta_in) throw DataError("not a dataset directory (missing meta.json): " + dir);
    nlohmann::json meta;
    try {
        meta_in >> meta;
        ds.grid = grid_from_json(meta.at("grid"));
        ds.num_frames = meta.at("frames").get<int>();
    } catch (const std::exception& e) {
        throw DataError("malformed meta.json in " + dir + ": " + e.what());
    }

    std::vector<int> missing;
    for (int f = 0; f < ds.num_frames; ++f)
        if (!std::filesystem::exists(ds.frame_path(f))) missing.push_back(f);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "dataset " << dir << " is missing frames:";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg << " " << missing[i];
        if (missing.size() > 10) msg << " (+" << missing.size() - 10 << " more)";
        throw DataError(msg.str());
    }

    std::ifstream gt_in(root / "gt.jsonl");
    if (gt_in) {
        std::string line;
        while (std::getline(gt_in, line)) {
            if (line.empty()) continue;
            try {
                ds.gt.push_back(frame_gt_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception& e) {
                throw DataError("malformed gt.jsonl line in " + dir + ": " + e.what());
            }
        }
    } else if (require_gt) {
        throw DataError("dataset has no gt.jsonl: " + dir);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// results.jsonl rows

struct HandResult {
    Eigen::Vector3i voxel{0, 0, 0}; // person-volume coordinates
    bool missing = false;
    Eigen::Vector3d world{0, 0, 0};
};

struct PersonResult {
    std::int64_t frame = 0;
    std::int64_t track_id = 0;
    Eigen::Vector2d center{0, 0}; // room voxel coordinates
    double person_score = 0;
    HandResult left, right;
};

inline nlohmann::ordered_json person_result_to_json(const PersonResult& r) {
    auto hand = [](const HandResult& h) {
        nlohmann::ordered_json hj;
        hj["voxel"] = {h.voxel.x(), h.voxel.y(), h.voxel.z()};
        hj["missing"] = h.missing;
        hj["world"] = {h.world.x(), h.world.y(), h.world.z()};
        return hj;
    };
    nlohmann::ordered_json j;
    j["frame"] = r.frame;
    j["id"] = r.track_id;
    j["center"] = {r.center.x(), r.center.y()};
    j["person_score"] = r.person_score;
    j["left"] = hand(r.left);
    j["right"] = hand(r.right);
    return j;
}

inline PersonResult person_result_from_json(const nlohmann::json& j) {
    auto hand = [](const nlohmann::json& hj) {
        HandResult h;
        h.voxel = {hj.at("voxel").at(0).get<int>(), hj.at("voxel").at(1).get<int>(),
                   hj.at("voxel").at(2).get<int>()};
        h.missing = hj.at("missing").get<bool>();
        h.world = {hj.at("world").at(0).get<double>(), hj.at("world").at(1).get<double>(),
                   hj.at("world").at(2).get<double>()};
        return h;
    };
    PersonResult r;
    r.frame = j.at("frame").get<std::int64_t>();
    r.track_id = j.at("id").get<std::int64_t>();
    r.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
    r.person_score = j.at("person_score").get<double>();
    r.left = hand(j.at("left"));
    r.right = hand(j.at("right"));
    return r;
}

inline std::vector<PersonResult> load_results_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open results: " + path);
    std::vector<PersonResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(person_result_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError("malformed results line in " + path + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    int frame_stride = 2;
    int negatives_per_frame = 4;
    double negative_min_chebyshev = 30;
    LinearTrainParams linear;
    LogisticTrainParams logistic;
    double recall_target = 0.995;
};

struct TrainedModels {
    LinearDetector detector;
    LogisticVerifier verifier;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double train_recall = 0;
    double verifier_accuracy = 0;
};

// Builds patches from dataset frames on disk (positives at ground-truth
// roots, negatives well away from every root), trains the linear stage and
// the verifier, and calibrates delta at the recall target.
inline TrainedModels train_models(const std::vector<Dataset>& datasets,
                                  const TrainConfig& cfg = {}) {
    std::vector<Map2f> linear_patches;
    std::vector<Image3f> stacked_patches;
    std::vector<int> labels;

    for (const auto& ds : datasets) {
        if (ds.gt.empty()) throw DataError("training dataset has no ground truth: " + ds.dir);
        for (int f = 0; f < ds.num_frames; f += cfg.frame_stride) {
            const PointFrame frame = read_point_frame(ds.frame_path(f));
            const FeatureMaps maps = feature_maps_from_points(frame, ds.grid);
            Map2f ft_norm(maps.f_t.width, maps.f_t.height);
            for (std::size_t i = 0; i < ft_norm.data.size(); ++i)
                ft_norm.data[i] = maps.stacked.data[i * 3];
            const FrameGt* gt = ds.gt_for_frame(f);
            if (!gt) continue;

            for (const auto& person : gt->people) {
                const Eigen::Vector2i c = person.root_voxel;
                linear_patches.push_back(extract_patch(ft_norm, c, kDetectorSize));
                stacked_patches.push_back(extract_patch(maps.stacked, c, kDetectorSize));
                labels.push_back(1);
            }
            CounterRng rng(cfg.linear.seed, std::uint64_t(f), 0x6e656773ULL);
            int placed = 0, attempts = 0;
            while (placed < cfg.negatives_per_frame && attempts < 300) {
                ++attempts;
                const int x = int(rng.next_u64() % std::uint64_t(ds.grid.nx));
                const int y = int(rng.next_u64() % std::uint64_t(ds.grid.ny));
                bool clear = true;
                for (const auto& person : gt->people)
                    if (std::max(std::abs(x - person.root_voxel.x()),
                                 std::abs(y - person.root_voxel.y())) <
                        cfg.negative_min_chebyshev)
                        clear = false;
                if (!clear) continue;
                linear_patches.push_back(extract_patch(ft_norm, {x, y}, kDetectorSize));
                stacked_patches.push_back(extract_patch(maps.stacked, {x, y}, kDetectorSize));
                labels.push_back(-1);
                ++placed;
            }
        }
    }
    if (linear_patches.empty()) throw DataError("no training patches collected");

    TrainedModels out;
    out.detector = train_linear(linear_patches, labels, cfg.linear);
    calibrate_delta(out.detector, linear_patches, labels, cfg.recall_target);
    out.verifier = train_logistic_verifier(stacked_patches, labels, cfg.logistic);

    std::size_t pos_total = 0, pos_recalled = 0, correct = 0;
    for (std::size_t i = 0; i < linear_patches.size(); ++i) {
        if (labels[i] > 0) {
            ++pos_total;
            if (detector_score(out.detector, linear_patches[i]) > out.detector.delta)
                ++pos_recalled;
        }
        const float p = out.verifier.score(stacked_patches[i], {0, 0});
        if ((p >= 0.5f) == (labels[i] > 0)) ++correct;
    }
    for (int l : labels) (l > 0 ? out.positives : out.negatives) += 1;
    out.train_recall = pos_total ? double(pos_recalled) / double(pos_total) : 0.0;
    out.verifier_accuracy = double(correct) / double(labels.size());
    return out;
}

// ---------------------------------------------------------------------------
// Tracking run

struct RunConfig {
    std::string detector_model; // VTLD path
    std::string verifier = "oracle";  // "oracle" or VTLV path
    std::string segmenter = "oracle"; // "oracle" | "heuristic"
    MatchWeights weights;
    double gating_radius = 10.0;
    double tau_kill = 0.3;
    int probation = 3;
    float p_min = 0.5f;
    double oracle_verifier_gate = 5.0;
    int threads = 0; // 0 = VOLUMETRACK_THREADS or hardware concurrency
};

struct TrackingStats {
    int frames = 0;
    std::size_t results = 0;
    double fps = 0;
    double hands_ms_median = 0;
    std::size_t person_frames_localized = 0;
};

namespace detail {

// fixed-memory median estimator: 10us bins up to 1s
class DurationHistogram {
public:
    void add(double ms) {
        const int bin = std::clamp(int(ms * 100.0), 0, int(bins_.size()) - 1);
        ++bins_[std::size_t(bin)];
        ++count_;
    }
    double median_ms() const {
        if (count_ == 0) return 0;
        std::int64_t seen = 0;
        for (std::size_t b = 0; b < bins_.size(); ++b) {
            seen += bins_[b];
            if (seen * 2 >= count_) return double(b) / 100.0;
        }
        return 0;
    }
    std::int64_t count() const { return count_; }

private:
    std::array<std::int64_t, 100000> bins_{};
    std::int64_t count_ = 0;
};

inline GridSpec person_crop_grid(const GridSpec& room, const Eigen::Vector2i& center) {
    GridSpec g;
    const Eigen::Vector3i lo = person_crop_origin(room, center);
    g.origin = room.origin + lo.cast<float>() * room.voxel_size;
    g.voxel_size = room.voxel_size;
    g.nx = kPersonDimXY;
    g.ny = kPersonDimXY;
    g.nz = kPersonDimZ;
    g.ground_z = 1;
    return g;
}

inline const PersonGt* nearest_gt_person(const FrameGt* gt, const Eigen::Vector2d& pos,
                                         double gate) {
    if (!gt) return nullptr;
    const PersonGt* best = nullptr;
    double best_d = gate;
    for (const auto& p : gt->people) {
        const double d =
            (pos - Eigen::Vector2d(p.root_voxel.x(), p.root_voxel.y())).norm();
        if (d <= best_d) {
            best_d = d;
            best = &p;
        }
    }
    return best;
}

} // namespace detail

inline TrackingStats run_tracking(const Dataset& ds, const RunConfig& cfg,
                                  const std::string& results_path,
                                  const std::string& track_log_path = {}) {
    if (cfg.detector_model.empty())
        throw ConfigError("run config: detector_model is required");
    const LinearDetector detector = load_linear_detector(cfg.detector_model);

    OracleVerifier oracle_verifier(cfg.oracle_verifier_gate);
    LogisticVerifier logistic_verifier;
    const bool oracle_verify = cfg.verifier == "oracle";
    if (oracle_verify) {
        if (ds.gt.empty())
            throw ConfigError("oracle verifier requires dataset ground truth");
    } else {
        logistic_verifier = load_logistic_verifier(cfg.verifier);
    }
    const Verifier* verifier =
        oracle_verify ? static_cast<const Verifier*>(&oracle_verifier)
                      : static_cast<const Verifier*>(&logistic_verifier);

    const bool oracle_segment = cfg.segmenter == "oracle";
    if (!oracle_segment && cfg.segmenter != "heuristic")
        throw ConfigError("unknown segmenter: " + cfg.segmenter);
    if (oracle_segment && ds.gt.empty())
        throw ConfigError("oracle segmenter requires dataset ground truth");
    const HeuristicSegmenter heuristic;

    TrackerConfig tracker_cfg;
    tracker_cfg.tau_kill = cfg.tau_kill;
    tracker_cfg.probation = cfg.probation;
    tracker_cfg.gating_radius = cfg.gating_radius;
    tracker_cfg.weights = cfg.weights;
    tracker_cfg.p_min = cfg.p_min;
    Tracker tracker(tracker_cfg, verifier);

    std::ofstream results_out(results_path, std::ios::binary);
    if (!results_out) throw DataError("cannot open for writing: " + results_path);
    std::ofstream log_out;
    if (!track_log_path.empty()) {
        log_out.open(track_log_path, std::ios::binary);
        if (!log_out) throw DataError("cannot open for writing: " + track_log_path);
    }

    const int threads = cfg.threads > 0 ? cfg.threads : configured_threads();
    TrackingStats stats;
    detail::DurationHistogram hands_hist;
    const auto t_start = std::chrono::steady_clock::now();

    for (int f = 0; f < ds.num_frames; ++f) {
        const PointFrame frame = read_point_frame(ds.frame_path(f));
        const FeatureMaps maps = feature_maps_from_points(frame, ds.grid);
        Map2f ft_norm(maps.f_t.width, maps.f_t.height);
        for (std::size_t i = 0; i < ft_norm.data.size(); ++i)
            ft_norm.data[i] = maps.stacked.data[i * 3];

        const FrameGt* frame_gt = ds.gt_for_frame(f);
        if (oracle_verify) {
            if (frame_gt)
                oracle_verifier.set_frame_roots(*frame_gt);
            else
                oracle_verifier.set_frame_roots(std::vector<Eigen::Vector2d>{});
        }

        const Map2d score = linear_score_map(ft_norm, detector);
        std::vector<Proposal> proposals = propose(score, detector);
        verify(maps.stacked, proposals, *verifier, cfg.p_min);

        // person volumes and appearance descriptors per proposal
        std::vector<OccupancyVolume> proposal_volumes(proposals.size());
        std::vector<Descriptor> proposal_desc(proposals.size());
        parallel_for(int(proposals.size()), threads, [&](int i) {
            const auto& p = proposals[std::size_t(i)];
            const GridSpec crop = detail::person_crop_grid(ds.grid, {p.x, p.y});
            proposal_volumes[std::size_t(i)] = voxelize(frame, crop);
            proposal_desc[std::size_t(i)] =
                frame.has_colors() ? appearance_descriptor(frame, crop)
                                   : appearance_descriptor(proposal_volumes[std::size_t(i)]);
        });

        const std::vector<ReportedTrack> reported =
            tracker.step(maps, proposals, proposal_desc);

        std::vector<PersonResult> rows(reported.size());
        std::vector<double> hand_ms(reported.size(), 0.0);
        parallel_for(int(reported.size()), threads, [&](int i) {
            const auto& track = reported[std::size_t(i)];
            const Eigen::Vector2i center{int(std::lround(track.pos.x())),
                                         int(std::lround(track.pos.y()))};
            // reuse the proposal volume when the track snapped to a proposal
            const OccupancyVolume* person = nullptr;
            OccupancyVolume local;
            for (std::size_t p = 0; p < proposals.size(); ++p)
                if (proposals[p].x == center.x() && proposals[p].y == center.y()) {
                    person = &proposal_volumes[p];
                    break;
                }
            if (!person) {
                local = voxelize(frame, detail::person_crop_grid(ds.grid, center));
                person = &local;
            }
            const Image3f patch = extract_patch(maps.stacked, center, kPersonDimXY);

            OracleSegmenter oracle_seg;
            const Segmenter2D* seg = &heuristic;
            if (oracle_segment) {
                static const PersonGt kNobody{};
                const PersonGt* match =
                    detail::nearest_gt_person(frame_gt, track.pos, 10.0);
                oracle_seg.bind(frame, ds.grid, match ? *match : kNobody, center);
                seg = &oracle_seg;
            }

            const auto t0 = std::chrono::steady_clock::now();
            const HandEstimate est = localize_hands(*person, patch, *seg);
            const auto t1 = std::chrono::steady_clock::now();
            hand_ms[std::size_t(i)] =
                std::chrono::duration<double, std::milli>(t1 - t0).count();

            PersonResult row;
            row.frame = track.frame;
            row.track_id = track.id;
            row.center = track.pos;
            row.person_score = track.person_score;
            const Eigen::Vector3i lo = person_crop_origin(ds.grid, center);
            auto fill = [&](const HandPoint& hp, HandResult& out) {
                out.voxel = hp.voxel;
                out.missing = hp.missing;
                out.world = ds.grid.voxel_center(lo + hp.voxel).cast<double>();
            };
            fill(est.left, row.left);
            fill(est.right, row.right);
            rows[std::size_t(i)] = row;
        });

        for (std::size_t i = 0; i < rows.size(); ++i) {
            results_out << person_result_to_json(rows[i]).dump() << "\n";
            hands_hist.add(hand_ms[i]);
        }
        if (log_out.is_open())
            for (const auto& track : reported) {
                nlohmann::ordered_json j;
                j["frame"] = track.frame;
                j["id"] = track.id;
                j["x"] = track.pos.x();
                j["y"] = track.pos.y();
                j["predicted"] = track.predicted;
                j["person_score"] = track.person_score;
                log_out << j.dump() << "\n";
            }
        stats.results += rows.size();
    }

    const auto t_end = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(t_end - t_start).count();
    stats.frames = ds.num_frames;
    stats.fps = seconds > 0 ? double(ds.num_frames) / seconds : 0;
    stats.hands_ms_median = hands_hist.median_ms();
    stats.person_frames_localized = std::size_t(hands_hist.count());
    if (!results_out) throw DataError("write failed: " + results_path);
    return stats;
}

// ---------------------------------------------------------------------------
// Multiple-view baseline run

struct BaselineConfig {
    double tau = 30.0;
    double keypoint_noise_px = 0.0;
    double outlier_rate = 0.0;  // per hand: chance that one view is corrupted
    double outlier_px = 200.0;
    std::uint64_t seed = 99;
};

inline void run_baseline(const Dataset& ds, const std::vector<CameraModel>& cams,
                         const BaselineConfig& cfg, const std::string& results_path) {
    if (ds.gt.empty()) throw DataError("baseline requires dataset ground truth");
    if (cams.empty()) throw ConfigError("baseline requires a camera rig");
    std::ofstream out(results_path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + results_path);

    for (int f = 0; f < ds.num_frames; ++f) {
        const FrameGt* gt = ds.gt_for_frame(f);
        if (!gt) continue;
        const PointFrame frame = read_point_frame(ds.frame_path(f));
        for (const auto& person : gt->people) {
            const GridSpec crop_grid = detail::person_crop_grid(ds.grid, person.root_voxel);
            const OccupancyVolume person_vol = voxelize(frame, crop_grid);
            if (person_vol.occupied_count() == 0) continue;

            PersonResult row;
            row.frame = f;
            row.track_id = person.person_id;
            row.center = {double(person.root_voxel.x()), double(person.root_voxel.y())};
            row.person_score = 1.0;

            auto localize = [&](const HandGt& hand, int hand_bit, HandResult& res) {
                const Eigen::Vector3d target =
                    crop_grid.voxel_center(hand.anchor).cast<double>();
                std::vector<Keypoint2D> kps;
                for (int v = 0; v < int(cams.size()); ++v) {
                    const auto proj = project_point(cams[std::size_t(v)], target);
                    if (!proj) {
                        kps.push_back({v, {0, 0}, false});
                        continue;
                    }
                    CounterRng rng(cfg.seed, std::uint64_t(f),
                                   std::uint64_t(person.person_id) * 2 +
                                       std::uint64_t(hand_bit),
                                   std::uint64_t(v));
                    Eigen::Vector2d px = *proj;
                    if (cfg.keypoint_noise_px > 0)
                        px += cfg.keypoint_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
                    kps.push_back({v, px, true});
                }
                CounterRng orng(cfg.seed, std::uint64_t(f),
                                0x6f00ULL + std::uint64_t(person.person_id) * 2 +
                                    std::uint64_t(hand_bit),
                                0x6f75746cULL);
                if (cfg.outlier_rate > 0 && orng.uniform01() < cfg.outlier_rate) {
                    const int bad = int(orng.next_u64() % cams.size());
                    const double angle = orng.uniform(0, 6.283185307179586);
                    if (kps[std::size_t(bad)].present)
                        kps[std::size_t(bad)].pixel +=
                            cfg.outlier_px * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                }
                res.voxel = robust_triangulate(person_vol, cams, kps, cfg.tau);
                res.missing = false;
                res.world = crop_grid.voxel_center(res.voxel).cast<double>();
            };
            localize(person.left, 0, row.left);
            localize(person.right, 1, row.right);
            out << person_result_to_json(row).dump() << "\n";
        }
    }
    if (!out) throw DataError("write failed: " + results_path);
}

// ---------------------------------------------------------------------------
// Evaluation run

struct EvalConfig {
    std::string method = "ours";
    std::string target = "center"; // "center" | "anchor": which gt voxel to score against
    double gate = 10.0;
    bool svg = false;
};

struct EvalOutcome {
    Summary both, left, right;
    std::size_t joined = 0;
    std::size_t unmatched = 0;
    std::vector<ErrorRecord> records;
};

inline EvalOutcome evaluate_results(const std::vector<PersonResult>& results,
                                    const std::vector<FrameGt>& gt, const EvalConfig& cfg) {
    if (cfg.target != "center" && cfg.target != "anchor")
        throw ConfigError("eval target must be 'center' or 'anchor'");
    std::map<std::int64_t, const FrameGt*> by_frame;
    for (const auto& g : gt) by_frame[g.frame] = &g;

    EvalOutcome out;
    for (const auto& row : results) {
        const auto it = by_frame.find(row.frame);
        if (it == by_frame.end()) {
            ++out.unmatched;
            continue;
        }
        const PersonGt* person = detail::nearest_gt_person(it->second, row.center, cfg.gate);
        if (!person) {
            ++out.unmatched;
            continue;
        }
        // estimates live in the crop at the reported center; ground-truth
        // voxels live in the crop at the gt root; compare in room space
        const Eigen::Vector2i est_center{int(std::lround(row.center.x())),
                                         int(std::lround(row.center.y()))};
        const Eigen::Vector3i est_lo{est_center.x() - kPersonHalfXY,
                                     est_center.y() - kPersonHalfXY, 0};
        const Eigen::Vector3i gt_lo{person->root_voxel.x() - kPersonHalfXY,
                                    person->root_voxel.y() - kPersonHalfXY, 0};
        // both crops share the z mapping, so the offset cancels in the error
        auto record = [&](const HandResult& hand, const HandGt& truth, HandSide side) {
            ErrorRecord r;
            r.frame = row.frame;
            r.person_id = person->person_id;
            r.side = side;
            r.estimate = est_lo + hand.voxel;
            r.truth = gt_lo + (cfg.target == "anchor" ? truth.anchor : truth.voxel);
            r.error = manhattan_error(r.estimate, r.truth);
            r.missing = hand.missing;
            out.records.push_back(r);
        };
        record(row.left, person->left, HandSide::left);
        record(row.right, person->right, HandSide::right);
        ++out.joined;
    }
    if (out.records.empty()) throw DataError("evaluation joined no results with ground truth");

    std::vector<int> both_err, left_err, right_err;
    for (const auto& r : out.records) {
        both_err.push_back(r.error);
        (r.side == HandSide::left ? left_err : right_err).push_back(r.error);
    }
    out.both = summarize(both_err);
    if (!left_err.empty()) out.left = summarize(left_err);
    if (!right_err.empty()) out.right = summarize(right_err);
    return out;
}

inline EvalOutcome run_eval(const std::string& results_path, const std::string& gt_path,
                            const std::string& out_dir, const EvalConfig& cfg) {
    const std::vector<PersonResult> results = load_results_jsonl(results_path);
    std::vector<FrameGt> gt;
    {
        std::ifstream in(gt_path);
        if (!in) throw DataError("cannot open gt: " + gt_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            gt.push_back(frame_gt_from_json(nlohmann::json::parse(line)));
        }
    }
    const EvalOutcome out = evaluate_results(results, gt, cfg);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_metrics_csv((dir / "metrics.csv").string(),
                      {{cfg.method, "both", out.both},
                       {cfg.method, "left", out.left},
                       {cfg.method, "right", out.right}});
    write_histogram_csv((dir / "histogram.csv").string(), out.both);
    if (cfg.svg)
        write_histogram_svg((dir / "histogram.svg").string(), out.both,
                            cfg.method + " hand localization error");
    return out;
}

} // namespace volumetrack
