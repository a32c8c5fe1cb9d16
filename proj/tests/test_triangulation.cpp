#include "doctest.h"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <filesystem>

#include "oracles.hpp"
#include "scene_fixtures.hpp"
#include "volumetrack/synth.hpp"
#include "volumetrack/triangulation.hpp"

using namespace volumetrack;

namespace {

using oracles::corner_rig;
using oracles::least_squares_rays;

struct TriScene {
    OccupancyVolume person;
    GridSpec crop_spec;
    PersonGt gt;
};

TriScene make_person(int frame = 1) {
    auto script = fixtures::one_person_scene(3, 3000, PosePreset::t_pose);
    script.noise_sigma = 0.002;
    script.dropout_keep = 0.95;
    auto [points, gt] = sample_scene(script, frame);
    const auto room = voxelize(points, script.grid);
    TriScene t;
    t.gt = gt.people[0];
    t.person = crop_person_volume(room, t.gt.root_voxel);
    t.crop_spec = t.person.spec;
    return t;
}

} // namespace

TEST_SUITE_BEGIN("triangulation");

TEST_CASE("points on the optical axis project to the principal point") {
    CameraModel cam;
    cam.fx = cam.fy = 100;
    cam.cx = 320;
    cam.cy = 240;
    cam.width = 640;
    cam.height = 480;
    const auto p = project_point(cam, {0, 0, 1});
    REQUIRE(p.has_value());
    CHECK(p->x() == doctest::Approx(320));
    CHECK(p->y() == doctest::Approx(240));

    const auto q = project_point(cam, {0.1, 0, 1});
    REQUIRE(q.has_value());
    CHECK(q->x() == doctest::Approx(330));
    CHECK(q->y() == doctest::Approx(240));
}

TEST_CASE("points behind the camera are flagged") {
    CameraModel cam;
    cam.fx = cam.fy = 100;
    CHECK_FALSE(project_point(cam, {0, 0, -1}).has_value());
    CHECK_FALSE(project_point(cam, {0, 0, 0}).has_value());
}

TEST_CASE("projection matches the homogeneous-matrix oracle") {
    Rng rng(501);
    for (int it = 0; it < 200; ++it) {
        CameraModel cam;
        cam.fx = rng.uniform(100, 800);
        cam.fy = rng.uniform(100, 800);
        cam.cx = rng.uniform(100, 600);
        cam.cy = rng.uniform(100, 400);
        cam.width = 1024;
        cam.height = 768;
        const Eigen::Vector3d axis =
            Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
                .normalized();
        cam.rotation = Eigen::AngleAxisd(rng.uniform(-3, 3), axis).matrix();
        cam.translation = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const Eigen::Vector3d world{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};

        Eigen::Matrix<double, 3, 4> pmat;
        Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
        k(0, 0) = cam.fx;
        k(1, 1) = cam.fy;
        k(0, 2) = cam.cx;
        k(1, 2) = cam.cy;
        pmat.leftCols<3>() = cam.rotation;
        pmat.col(3) = cam.translation;
        pmat = k * pmat;
        const Eigen::Vector3d h = pmat * world.homogeneous();

        const auto got = project_point(cam, world);
        if (h.z() <= 0) {
            CHECK_FALSE(got.has_value());
        } else {
            REQUIRE(got.has_value());
            CHECK(std::abs(got->x() - h.x() / h.z()) < 1e-9);
            CHECK(std::abs(got->y() - h.y() / h.z()) < 1e-9);
        }
    }
}

TEST_CASE("noise-free keypoints recover the generating voxel") {
    const auto t = make_person();
    const auto cams = corner_rig({1.5, 1.5, 1.0});
    const Eigen::Vector3i target = t.gt.left.anchor;
    const Eigen::Vector3d world = t.crop_spec.voxel_center(target).cast<double>();
    std::vector<Keypoint2D> kps;
    for (int v = 0; v < 4; ++v) {
        const auto p = project_point(cams[std::size_t(v)], world);
        REQUIRE(p.has_value());
        kps.push_back({v, *p, true});
    }
    const auto got = robust_triangulate(t.person, cams, kps, 30.0);
    CHECK((got - target).cwiseAbs().sum() <= 1);
}

TEST_CASE("one 200-pixel outlier view saturates while least squares breaks") {
    const auto t = make_person();
    const auto cams = corner_rig({1.5, 1.5, 1.0});
    Rng rng(503);
    double robust_sum = 0, ls_sum = 0;
    const int trials = 20;
    for (int it = 0; it < trials; ++it) {
        const Eigen::Vector3i target = it % 2 ? t.gt.left.anchor : t.gt.right.anchor;
        const Eigen::Vector3d world = t.crop_spec.voxel_center(target).cast<double>();
        std::vector<Keypoint2D> kps;
        for (int v = 0; v < 4; ++v) {
            const auto p = project_point(cams[std::size_t(v)], world);
            REQUIRE(p.has_value());
            kps.push_back({v, *p, true});
        }
        const int bad = int(rng.below(4));
        const double dir = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        kps[std::size_t(bad)].pixel += Eigen::Vector2d(dir * 200, 0);

        const auto got = robust_triangulate(t.person, cams, kps, 30.0);
        robust_sum += (got - target).cwiseAbs().sum();

        const Eigen::Vector3d ls = least_squares_rays(cams, kps);
        const Eigen::Vector3i ls_voxel = t.crop_spec.to_voxel(ls.cast<float>());
        ls_sum += (ls_voxel - target).cwiseAbs().sum();
    }
    CHECK(robust_sum / trials <= 2.0);
    CHECK(ls_sum / trials > 5.0);
}

TEST_CASE("a single view pins the voxel to within tau of its keypoint") {
    const auto t = make_person();
    const auto cams = corner_rig({1.5, 1.5, 1.0});
    const Eigen::Vector3d world = t.crop_spec.voxel_center(t.gt.left.anchor).cast<double>();
    const auto p0 = project_point(cams[0], world);
    REQUIRE(p0.has_value());
    std::vector<Keypoint2D> kps{{0, *p0, true}};
    const auto got = robust_triangulate(t.person, cams, kps, 30.0);
    const auto proj = project_point(cams[0], t.crop_spec.voxel_center(got).cast<double>());
    REQUIRE(proj.has_value());
    CHECK(std::abs(proj->x() - p0->x()) + std::abs(proj->y() - p0->y()) <= 30.0);
}

TEST_CASE("growing the outlier offset beyond saturation changes nothing") {
    const auto t = make_person();
    const auto cams = corner_rig({1.5, 1.5, 1.0});
    const Eigen::Vector3i target = t.gt.left.anchor;
    const Eigen::Vector3d world = t.crop_spec.voxel_center(target).cast<double>();
    std::vector<Keypoint2D> kps;
    for (int v = 0; v < 4; ++v) kps.push_back({v, *project_point(cams[std::size_t(v)], world), true});
    auto corrupted = kps;
    corrupted[2].pixel += Eigen::Vector2d(200, 0);
    const auto a = robust_triangulate(t.person, cams, corrupted, 30.0);
    corrupted[2].pixel += Eigen::Vector2d(1800, 0);
    const auto b = robust_triangulate(t.person, cams, corrupted, 30.0);
    CHECK(a == b);
}

TEST_CASE("robust_triangulate validates its inputs") {
    const auto cams = corner_rig({1.5, 1.5, 1.0});
    GridSpec spec = fixtures::small_room(10, 10);
    OccupancyVolume empty(spec);
    std::vector<Keypoint2D> kps{{0, {0, 0}, true}};
    CHECK_THROWS_AS((void)robust_triangulate(empty, cams, kps), std::invalid_argument);

    OccupancyVolume nonempty(spec);
    nonempty.set(1, 1, 1);
    std::vector<Keypoint2D> absent{{0, {0, 0}, false}};
    CHECK_THROWS_AS((void)robust_triangulate(nonempty, cams, absent), std::invalid_argument);
}

TEST_CASE("camera rigs round trip through JSON and reject bad rotations") {
    const auto cams = corner_rig({1.0, 1.0, 1.0});
    const auto path = (std::filesystem::temp_directory_path() / "vt_rig.json").string();
    save_camera_rig(path, cams);
    const auto back = load_camera_rig(path);
    REQUIRE(back.size() == cams.size());
    CHECK((back[1].rotation - cams[1].rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back[2].fx == cams[2].fx);
    std::filesystem::remove(path);

    auto j = camera_rig_to_json(cams);
    j[0]["R"][0] = 3.0;
    CHECK_THROWS_AS((void)camera_rig_from_json(j), std::runtime_error);
}

TEST_SUITE_END();
