#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "scene_fixtures.hpp"
#include "volumetrack/oracle.hpp"
#include "volumetrack/tracking.hpp"

using namespace volumetrack;

namespace {

Map2f smooth_map(Rng& rng, int w, int h, int waves = 6) {
    std::vector<std::array<double, 5>> params;
    for (int k = 0; k < waves; ++k)
        params.push_back({rng.uniform(0.5, 3.0), rng.uniform(0.03, 0.22),
                          rng.uniform(0.03, 0.22), rng.uniform(0, 6.28),
                          rng.uniform(0, 6.28)});
    Map2f m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 10.0;
            for (const auto& p : params)
                v += p[0] * std::sin(p[1] * x + p[3]) * std::cos(p[2] * y + p[4]);
            m.at(x, y) = float(v);
        }
    return m;
}

// analytic translate: rebuild the same wave sum shifted by (dx, dy)
Map2f smooth_map_shifted(std::uint64_t seed, int w, int h, double dx, double dy,
                         int waves = 6) {
    Rng rng(seed);
    std::vector<std::array<double, 5>> params;
    for (int k = 0; k < waves; ++k)
        params.push_back({rng.uniform(0.5, 3.0), rng.uniform(0.03, 0.22),
                          rng.uniform(0.03, 0.22), rng.uniform(0, 6.28),
                          rng.uniform(0, 6.28)});
    Map2f m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 10.0;
            for (const auto& p : params)
                v += p[0] * std::sin(p[1] * (x - dx) + p[3]) * std::cos(p[2] * (y - dy) + p[4]);
            m.at(x, y) = float(v);
        }
    return m;
}

struct DrivenScene {
    SceneScript script;
    std::vector<FeatureMaps> maps;
    std::vector<FrameGt> gts;
    std::vector<PointFrame> frames;
};

DrivenScene drive_scene(SceneScript script) {
    DrivenScene out;
    out.script = script;
    for (int f = 0; f < script.num_frames; ++f) {
        auto [frame, gt] = sample_scene(script, f);
        out.maps.push_back(feature_maps_from_points(frame, script.grid));
        out.gts.push_back(std::move(gt));
        out.frames.push_back(std::move(frame));
    }
    return out;
}

std::vector<Proposal> gt_proposals(const FrameGt& gt, float prob = 1.0f) {
    std::vector<Proposal> props;
    for (const auto& p : gt.people)
        props.push_back({p.root_voxel.x(), p.root_voxel.y(), 10.0, prob, prob >= 0.5f});
    return props;
}

} // namespace

TEST_SUITE_BEGIN("tracking");

TEST_CASE("oracle verifier scores person centers 1 and empty regions 0") {
    auto scene = drive_scene(fixtures::one_person_scene(2, 1500));
    OracleVerifier verifier;
    verifier.set_frame_roots(scene.gts[0]);
    const Image3f dummy(kDetectorSize, kDetectorSize);
    const auto& root = scene.gts[0].people[0].root_voxel;
    CHECK(verifier.score(dummy, {root.x(), root.y()}) == 1.0f);
    CHECK(verifier.score(dummy, {root.x() + 3, root.y() - 2}) == 1.0f); // inside gate
    CHECK(verifier.score(dummy, {10, 10}) == 0.0f);
}

TEST_CASE("height-profile descriptor basics") {
    GridSpec spec = fixtures::small_room(80, 80);
    OccupancyVolume empty(spec);
    const auto zero = appearance_descriptor(empty);
    CHECK(zero.kind == DescriptorKind::height_profile);
    for (float v : zero.values) CHECK(v == 0.f);

    Rng rng(301);
    const auto vol = oracles::random_volume(rng, 80, 80, 100, 0.02);
    CHECK(descriptor_distance(appearance_descriptor(vol), appearance_descriptor(vol)) == 0.0);
}

TEST_CASE("z-shifting a volume shifts the height profile by two bands") {
    GridSpec spec = fixtures::small_room(80, 80);
    OccupancyVolume a(spec);
    Rng rng(303);
    for (int k = 0; k < 2000; ++k)
        a.set(int(rng.below(80)), int(rng.below(80)), 20 + int(rng.below(40)));
    OccupancyVolume b(spec);
    for (int x = 0; x < 80; ++x)
        for (int y = 0; y < 80; ++y)
            for (int z = 0; z < 100; ++z)
                if (a.test(x, y, z)) b.set(x, y, z + 10);

    const auto da = appearance_descriptor(a);
    const auto db = appearance_descriptor(b);
    Descriptor shifted;
    shifted.kind = DescriptorKind::height_profile;
    shifted.values.assign(20, 0.f);
    for (int band = 0; band < 18; ++band) shifted.values[std::size_t(band) + 2] = da.values[std::size_t(band)];
    CHECK(descriptor_distance(db, shifted) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(descriptor_distance(da, db) ==
          doctest::Approx(descriptor_distance(da, shifted)).epsilon(1e-9));
}

TEST_CASE("color histogram descriptor pools frame points inside the crop") {
    PointFrame frame;
    frame.points.emplace_back(0.5f, 0.5f, 0.5f);
    frame.points.emplace_back(0.55f, 0.5f, 0.5f);
    frame.points.emplace_back(3.0f, 3.0f, 0.5f); // outside crop
    frame.colors.push_back({255, 0, 0});
    frame.colors.push_back({255, 10, 10});
    frame.colors.push_back({0, 255, 0});
    GridSpec crop;
    crop.origin = {0.f, 0.f, 0.f};
    crop.voxel_size = 0.02f;
    crop.nx = 80;
    crop.ny = 80;
    crop.nz = 100;
    const auto d = appearance_descriptor(frame, crop);
    CHECK(d.kind == DescriptorKind::color_histogram);
    CHECK(d.values[std::size_t(7 * 64)] == 1.0f); // both red points in bin (7,0,0)
}

TEST_CASE("lk_flow returns zero for identical maps") {
    Rng rng(305);
    const auto m = smooth_map(rng, 80, 80);
    const auto r = lk_flow(m, m, {40, 40});
    CHECK_FALSE(r.degenerate);
    CHECK(std::abs(r.displacement.x()) < 1e-6);
    CHECK(std::abs(r.displacement.y()) < 1e-6);
}

TEST_CASE("lk_flow recovers synthetic translations within half a pixel") {
    int good = 0;
    const int trials = 60;
    Rng rng(307);
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = 1000 + t;
        const double dx = rng.uniform(-3, 3), dy = rng.uniform(-3, 3);
        const auto prev = smooth_map_shifted(seed, 90, 90, 0, 0);
        const auto cur = smooth_map_shifted(seed, 90, 90, dx, dy);
        const auto r = lk_flow(prev, cur, {45, 45});
        if (!r.degenerate && std::abs(r.displacement.x() - dx) <= 0.5 &&
            std::abs(r.displacement.y() - dy) <= 0.5)
            ++good;
    }
    CHECK(good >= int(trials * 0.95));
}

TEST_CASE("lk_flow flags textureless windows as degenerate") {
    Map2f flat(60, 60, 5.f);
    const auto r = lk_flow(flat, flat, {30, 30});
    CHECK(r.degenerate);
    CHECK(r.displacement == Eigen::Vector2d(0, 0));
}

TEST_CASE("a stationary person yields one clean trajectory") {
    auto scene = drive_scene(fixtures::one_person_scene(10, 1500));
    OracleVerifier verifier;
    TrackerConfig cfg;
    cfg.probation = 3;
    Tracker tracker(cfg, &verifier);
    std::vector<ReportedTrack> all;
    for (int f = 0; f < 10; ++f) {
        verifier.set_frame_roots(scene.gts[std::size_t(f)]);
        const auto reported =
            tracker.step(scene.maps[std::size_t(f)], gt_proposals(scene.gts[std::size_t(f)]));
        for (const auto& r : reported) all.push_back(r);
    }
    REQUIRE(tracker.trajectories().size() == 1);
    const auto& trk = tracker.trajectories()[0];
    CHECK(trk.history.size() == 10);
    for (const auto& e : trk.history) CHECK_FALSE(e.predicted);
    CHECK(trk.person_score() == doctest::Approx(1.0));
    // reported from the probation frame on
    CHECK(all.size() == 8);
    for (const auto& r : all) CHECK(r.id == trk.id);
}

TEST_CASE("dropping proposals mid-sequence coasts on prediction and keeps the id") {
    auto script = fixtures::one_person_scene(12, 1500);
    script.people[0] = fixtures::walking_person(0, {1.5, 1.5}, 0.25, PosePreset::t_pose);
    auto scene = drive_scene(script);
    OracleVerifier verifier;
    Tracker tracker(TrackerConfig{}, &verifier);
    std::vector<std::int64_t> reported_ids;
    for (int f = 0; f < 12; ++f) {
        verifier.set_frame_roots(scene.gts[std::size_t(f)]);
        std::vector<Proposal> props;
        if (f < 5 || f >= 8) props = gt_proposals(scene.gts[std::size_t(f)]);
        const auto reported = tracker.step(scene.maps[std::size_t(f)], props);
        for (const auto& r : reported) reported_ids.push_back(r.id);
    }
    REQUIRE(tracker.trajectories().size() == 1);
    const auto& trk = tracker.trajectories()[0];
    int predicted_entries = 0;
    for (const auto& e : trk.history) predicted_entries += e.predicted;
    CHECK(predicted_entries == 3);
    for (std::int64_t id : reported_ids) CHECK(id == trk.id);
    // the coasted track must still be near the ground truth at the end
    const auto& last_gt = scene.gts.back().people[0];
    CHECK((trk.position() -
           Eigen::Vector2d(last_gt.root_voxel.x(), last_gt.root_voxel.y()))
              .norm() < 5.0);
}

TEST_CASE("persistent low-probability proposals never get reported") {
    auto scene = drive_scene(fixtures::one_person_scene(8, 1200));
    OracleVerifier verifier;
    TrackerConfig cfg;
    cfg.probation = 3;
    Tracker tracker(cfg, &verifier);
    std::size_t reported_total = 0;
    for (int f = 0; f < 8; ++f) {
        verifier.set_frame_roots(scene.gts[std::size_t(f)]);
        auto props = gt_proposals(scene.gts[std::size_t(f)]);
        props.push_back({20, 120, 1.0, 0.1f, false}); // stable false alarm
        reported_total += tracker.step(scene.maps[std::size_t(f)], props).size();
    }
    // only the true person reports (frames 2..7)
    CHECK(reported_total == 6);
    CHECK(tracker.trajectories().size() == 1);
}

TEST_CASE("person_score is the arithmetic mean of observed probabilities") {
    auto scene = drive_scene(fixtures::one_person_scene(6, 1200));
    OracleVerifier verifier;
    Tracker tracker(TrackerConfig{}, &verifier);
    const float probs[6] = {0.9f, 0.8f, 1.0f, 0.7f, 0.95f, 0.85f};
    double sum = 0;
    for (int f = 0; f < 6; ++f) {
        verifier.set_frame_roots(scene.gts[std::size_t(f)]);
        tracker.step(scene.maps[std::size_t(f)],
                     gt_proposals(scene.gts[std::size_t(f)], probs[f]));
        sum += probs[f];
    }
    REQUIRE(tracker.trajectories().size() == 1);
    CHECK(tracker.trajectories()[0].person_score() == doctest::Approx(sum / 6.0));
}

TEST_CASE("step is deterministic across identical runs") {
    auto scene = drive_scene(fixtures::one_person_scene(6, 1500));
    auto run = [&]() {
        OracleVerifier verifier;
        Tracker tracker(TrackerConfig{}, &verifier);
        std::vector<ReportedTrack> out;
        for (int f = 0; f < 6; ++f) {
            verifier.set_frame_roots(scene.gts[std::size_t(f)]);
            for (const auto& r : tracker.step(scene.maps[std::size_t(f)],
                                              gt_proposals(scene.gts[std::size_t(f)])))
                out.push_back(r);
        }
        return out;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].pos == b[i].pos);
        CHECK(a[i].person_score == b[i].person_score);
    }
}

TEST_CASE("history is bounded by the configured capacity") {
    auto scene = drive_scene(fixtures::one_person_scene(12, 1000));
    OracleVerifier verifier;
    TrackerConfig cfg;
    cfg.history_capacity = 5;
    Tracker tracker(cfg, &verifier);
    for (int f = 0; f < 12; ++f) {
        verifier.set_frame_roots(scene.gts[std::size_t(f)]);
        tracker.step(scene.maps[std::size_t(f)], gt_proposals(scene.gts[std::size_t(f)]));
    }
    REQUIRE(tracker.trajectories().size() == 1);
    CHECK(tracker.trajectories()[0].history.size() == 5);
    CHECK(tracker.trajectories()[0].age == 12);
}

TEST_SUITE_END();
