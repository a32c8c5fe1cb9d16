#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "json.hpp"
#include "volumetrack/rng.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

// ---------------------------------------------------------------------------
// Humanoid model: capsule/sphere primitives with closed-form surface areas,
// so scenes sample uniformly by area and ground truth is exact by
// construction.

struct ArmPose {
    double azimuth = 0;   // 0 = lateral swing plane, pi/2 = forward
    double elevation = 0; // 0 = arm straight down, pi/2 = horizontal
    double flexion = 0;   // elbow bend, reduces the forearm elevation
};

struct HumanoidPose {
    Eigen::Vector2d root{0, 0}; // ground position, meters
    double heading = 0;         // about z, 0 faces +x
    ArmPose left, right;
};

struct HumanoidShape {
    double height_scale = 1.0;

    double height() const { return 1.75 * height_scale; }
    double hip_z() const { return 0.52 * height(); }
    double shoulder_z() const { return 0.82 * height(); }
    double shoulder_half_width() const { return 0.11 * height(); }
    double upper_arm_len() const { return 0.15 * height(); }
    double forearm_len() const { return 0.14 * height(); }
    double head_center_z() const { return 0.91 * height(); }
    double head_radius() const { return 0.07 * height(); }
    double torso_radius() const { return 0.10 * height(); }
    double leg_radius() const { return 0.05 * height(); }
    double arm_radius() const { return 0.032 * height(); }
    double forearm_radius() const { return 0.028 * height(); }
    double hand_radius() const { return 0.05; } // meters, fixed
};

// joint limits enforced by pose generation
inline constexpr double kMaxElevation = 2.356; // 135 deg
inline constexpr double kMaxFlexion = 2.094;   // 120 deg
inline constexpr double kMinForearmElevation = -0.35;
inline constexpr double kMinAzimuth = -0.52, kMaxAzimuth = 1.75;

struct Primitive {
    enum class Kind { sphere, capsule, box, cylinder } kind = Kind::sphere;
    Eigen::Vector3d a{0, 0, 0}; // center (sphere/box/cylinder base) or endpoint
    Eigen::Vector3d b{0, 0, 0}; // capsule second endpoint
    Eigen::Vector3d half{0, 0, 0}; // box half extents
    double radius = 0;
    double height = 0; // cylinder
    double yaw = 0;    // box
    std::array<std::uint8_t, 3> color{180, 180, 180};

    double area() const {
        constexpr double pi = 3.14159265358979323846;
        switch (kind) {
            case Kind::sphere: return 4 * pi * radius * radius;
            case Kind::capsule:
                return 2 * pi * radius * (b - a).norm() + 4 * pi * radius * radius;
            case Kind::box:
                return 8 * (half.x() * half.y() + half.y() * half.z() + half.x() * half.z());
            case Kind::cylinder: return 2 * pi * radius * height + 2 * pi * radius * radius;
        }
        return 0;
    }
};

// Arm direction for spherical angles; sigma = +1 for the left arm, -1 right.
inline Eigen::Vector3d arm_direction(double azimuth, double elevation, double sigma) {
    return {std::sin(azimuth) * std::sin(elevation),
            sigma * std::cos(azimuth) * std::sin(elevation), -std::cos(elevation)};
}

struct BodyModel {
    std::vector<Primitive> parts; // fixed order, hands at indices 6 and 9
    Eigen::Vector3d left_hand{0, 0, 0};
    Eigen::Vector3d right_hand{0, 0, 0};
    Eigen::Vector3d left_elbow{0, 0, 0};
    Eigen::Vector3d right_elbow{0, 0, 0};
};

inline constexpr int kLeftHandPart = 6;
inline constexpr int kRightHandPart = 9;

// Rigid-chain evaluation: hand center = elbow + forearm direction * length.
inline BodyModel forward_kinematics(const HumanoidShape& shape, const HumanoidPose& pose) {
    const double h = shape.height();
    const Eigen::AngleAxisd heading(pose.heading, Eigen::Vector3d::UnitZ());
    const Eigen::Vector3d root(pose.root.x(), pose.root.y(), 0.0);
    auto world = [&](const Eigen::Vector3d& local) -> Eigen::Vector3d {
        return root + heading * local;
    };

    BodyModel body;
    auto add_capsule = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double r) {
        Primitive p;
        p.kind = Primitive::Kind::capsule;
        p.a = world(a);
        p.b = world(b);
        p.radius = r;
        body.parts.push_back(p);
    };
    auto add_sphere = [&](const Eigen::Vector3d& c, double r) {
        Primitive p;
        p.kind = Primitive::Kind::sphere;
        p.a = world(c);
        p.radius = r;
        body.parts.push_back(p);
    };

    add_capsule({0, 0, shape.hip_z()}, {0, 0, shape.shoulder_z()}, shape.torso_radius());
    add_sphere({0, 0, shape.head_center_z()}, shape.head_radius());
    add_capsule({0, 0.055 * h, shape.hip_z()}, {0, 0.055 * h, 0.03 * h}, shape.leg_radius());
    add_capsule({0, -0.055 * h, shape.hip_z()}, {0, -0.055 * h, 0.03 * h}, shape.leg_radius());

    for (const double sigma : {+1.0, -1.0}) {
        const ArmPose& arm = sigma > 0 ? pose.left : pose.right;
        const Eigen::Vector3d shoulder(0, sigma * shape.shoulder_half_width(),
                                       shape.shoulder_z());
        const Eigen::Vector3d elbow =
            shoulder + shape.upper_arm_len() * arm_direction(arm.azimuth, arm.elevation, sigma);
        const Eigen::Vector3d hand =
            elbow + shape.forearm_len() *
                        arm_direction(arm.azimuth, arm.elevation - arm.flexion, sigma);
        add_capsule(shoulder, elbow, shape.arm_radius());
        add_capsule(elbow, hand, shape.forearm_radius());
        add_sphere(hand, shape.hand_radius());
        if (sigma > 0) {
            body.left_elbow = world(elbow);
            body.left_hand = world(hand);
        } else {
            body.right_elbow = world(elbow);
            body.right_hand = world(hand);
        }
    }
    return body;
}

// ---------------------------------------------------------------------------
// Scene scripts: band-limited sinusoid walks and joint-angle tracks, so every
// frame is a closed-form function of (script, frame) with no generator state.

struct SinTrack {
    double base = 0, amp = 0, omega = 0, phase = 0;
    double at(int frame) const { return base + amp * std::sin(omega * frame + phase); }
};

struct WalkTrack {
    Eigen::Vector2d center{0, 0};
    SinTrack x, y;       // offsets around center
    SinTrack heading;

    Eigen::Vector2d position(int frame) const {
        return center + Eigen::Vector2d(x.at(frame), y.at(frame));
    }
};

enum class PosePreset { t_pose, arms_down, reaching, waving, varied };

inline PosePreset pose_preset_from_string(const std::string& s) {
    if (s == "t_pose") return PosePreset::t_pose;
    if (s == "arms_down") return PosePreset::arms_down;
    if (s == "reaching") return PosePreset::reaching;
    if (s == "waving") return PosePreset::waving;
    if (s == "varied") return PosePreset::varied;
    throw std::runtime_error("unknown pose preset: " + s);
}

inline std::string to_string(PosePreset p) {
    switch (p) {
        case PosePreset::t_pose: return "t_pose";
        case PosePreset::arms_down: return "arms_down";
        case PosePreset::reaching: return "reaching";
        case PosePreset::waving: return "waving";
        case PosePreset::varied: return "varied";
    }
    return "varied";
}

struct PersonScript {
    int person_id = 0;
    double height_scale = 1.0; // kept within [0.92, 1.05]
    PosePreset preset = PosePreset::varied;
    std::uint64_t angle_seed = 0;
    WalkTrack walk;
    std::array<std::uint8_t, 3> color{200, 60, 60};
};

struct ClutterItem {
    Primitive prim; // box or cylinder
};

struct SceneScript {
    GridSpec grid;
    int num_frames = 0;
    std::uint64_t seed = 1;
    double density = 2000.0;      // surface points per square meter
    double floor_density = 250.0; // the floor is sampled sparser
    double noise_sigma = 0.005;   // meters
    double dropout_keep = 0.9;    // per-point keep probability
    bool with_color = false;
    bool with_floor = true;
    double min_person_spacing = 0.4; // meters
    bool allow_close_interaction = false;
    double wall_margin = 0.85; // keep persons this far from the grid walls
    std::vector<PersonScript> people;
    std::vector<ClutterItem> clutter;
};

// The six per-arm angle tracks (left az/el/flex, right az/el/flex) derived
// from the preset; `varied` draws smooth randomized tracks from the seed.
struct AngleTracks {
    std::array<SinTrack, 6> tracks;
};

inline AngleTracks make_angle_tracks(PosePreset preset, std::uint64_t scene_seed,
                                     std::uint64_t angle_seed) {
    AngleTracks at;
    auto set_arm = [&](int base_idx, const SinTrack& az, const SinTrack& el,
                       const SinTrack& fl) {
        at.tracks[std::size_t(base_idx)] = az;
        at.tracks[std::size_t(base_idx) + 1] = el;
        at.tracks[std::size_t(base_idx) + 2] = fl;
    };
    switch (preset) {
        case PosePreset::t_pose:
            set_arm(0, {0, 0, 0, 0}, {1.5708, 0, 0, 0}, {0, 0, 0, 0});
            set_arm(3, {0, 0, 0, 0}, {1.5708, 0, 0, 0}, {0, 0, 0, 0});
            break;
        case PosePreset::arms_down:
            set_arm(0, {0, 0, 0, 0}, {0.10, 0.04, 0.05, 0.0}, {0.12, 0.05, 0.04, 1.0});
            set_arm(3, {0, 0, 0, 0}, {0.10, 0.04, 0.05, 2.0}, {0.12, 0.05, 0.04, 0.3});
            break;
        case PosePreset::reaching:
            set_arm(0, {0.8, 0.4, 0.06, 0.0}, {1.2, 0.25, 0.05, 1.0}, {0.25, 0.2, 0.07, 2.0});
            set_arm(3, {0.8, 0.4, 0.06, 3.0}, {1.2, 0.25, 0.05, 4.0}, {0.25, 0.2, 0.07, 5.0});
            break;
        case PosePreset::waving:
            set_arm(0, {0.3, 0.2, 0.2, 0.0}, {1.9, 0.35, 0.25, 0.0}, {0.6, 0.45, 0.3, 1.5});
            set_arm(3, {0, 0, 0, 0}, {0.12, 0.05, 0.04, 0.0}, {0.15, 0.08, 0.05, 0.0});
            break;
        case PosePreset::varied: {
            CounterRng rng(scene_seed, 0x616e676cULL, angle_seed);
            for (int arm = 0; arm < 2; ++arm) {
                SinTrack az{rng.uniform(0.0, 1.2), rng.uniform(0.1, 0.5),
                            rng.uniform(0.02, 0.12), rng.uniform(0, 6.28)};
                SinTrack el{rng.uniform(0.4, 1.7), rng.uniform(0.2, 0.6),
                            rng.uniform(0.02, 0.12), rng.uniform(0, 6.28)};
                SinTrack fl{rng.uniform(0.1, 0.8), rng.uniform(0.1, 0.5),
                            rng.uniform(0.02, 0.12), rng.uniform(0, 6.28)};
                set_arm(arm * 3, az, el, fl);
            }
            break;
        }
    }
    return at;
}

inline double clamp_angle(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

inline HumanoidPose pose_at(const SceneScript& script, const PersonScript& person, int frame) {
    HumanoidPose pose;
    pose.root = person.walk.position(frame);
    pose.heading = person.walk.heading.at(frame);
    const AngleTracks at = make_angle_tracks(person.preset, script.seed, person.angle_seed);
    auto arm = [&](int base_idx) {
        ArmPose a;
        a.azimuth = clamp_angle(at.tracks[std::size_t(base_idx)].at(frame), kMinAzimuth, kMaxAzimuth);
        a.elevation = clamp_angle(at.tracks[std::size_t(base_idx) + 1].at(frame), 0.0, kMaxElevation);
        a.flexion = clamp_angle(at.tracks[std::size_t(base_idx) + 2].at(frame), 0.0, kMaxFlexion);
        // keep the forearm from folding through the torso
        a.flexion = std::min(a.flexion, a.elevation - kMinForearmElevation);
        if (a.flexion < 0) a.flexion = 0;
        return a;
    };
    pose.left = arm(0);
    pose.right = arm(3);
    return pose;
}

// ---------------------------------------------------------------------------
// Ground truth

struct HandGt {
    Eigen::Vector3d world{0, 0, 0};     // noise-free hand center, meters
    Eigen::Vector3i voxel{0, 0, 0};     // person-volume voxel of the center
    Eigen::Vector3i anchor{0, 0, 0};    // nearest occupied voxel to the center
    std::vector<std::int32_t> point_indices; // hand-surface points in the frame
};

struct PersonGt {
    int person_id = 0;
    Eigen::Vector2d root_world{0, 0};
    double heading = 0;
    Eigen::Vector2i root_voxel{0, 0};
    HandGt left, right;
};

struct FrameGt {
    int frame = 0;
    std::vector<PersonGt> people;
};

// ---------------------------------------------------------------------------
// Surface sampling

namespace detail {

inline Eigen::Vector3d unit_sphere_point(CounterRng& rng) {
    const double z = 1.0 - 2.0 * rng.uniform01();
    const double phi = 6.283185307179586 * rng.uniform01();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

inline void orthonormal_basis(const Eigen::Vector3d& axis, Eigen::Vector3d& n1,
                              Eigen::Vector3d& n2) {
    const Eigen::Vector3d ref =
        std::abs(axis.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    n1 = axis.cross(ref).normalized();
    n2 = axis.cross(n1).normalized();
}

inline Eigen::Vector3d sample_primitive_surface(const Primitive& p, CounterRng& rng) {
    constexpr double pi = 3.14159265358979323846;
    switch (p.kind) {
        case Primitive::Kind::sphere:
            return p.a + p.radius * unit_sphere_point(rng);
        case Primitive::Kind::capsule: {
            const Eigen::Vector3d axis = p.b - p.a;
            const double len = axis.norm();
            const double cyl_area = 2 * pi * p.radius * len;
            const double total = cyl_area + 4 * pi * p.radius * p.radius;
            if (rng.uniform01() * total < cyl_area) {
                const double t = rng.uniform01();
                const double phi = 6.283185307179586 * rng.uniform01();
                Eigen::Vector3d n1, n2;
                orthonormal_basis(axis / len, n1, n2);
                return p.a + t * axis + p.radius * (std::cos(phi) * n1 + std::sin(phi) * n2);
            }
            const Eigen::Vector3d s = p.radius * unit_sphere_point(rng);
            return (s.dot(axis) >= 0 ? p.b : p.a) + s;
        }
        case Primitive::Kind::box: {
            const double ax = p.half.y() * p.half.z(), ay = p.half.x() * p.half.z(),
                         az = p.half.x() * p.half.y();
            const double total = 2 * (ax + ay + az);
            double pick = rng.uniform01() * total;
            const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
            Eigen::Vector3d local;
            if ((pick -= ax) < 0)
                local = {p.half.x(), u * p.half.y(), v * p.half.z()};
            else if ((pick -= ax) < 0)
                local = {-p.half.x(), u * p.half.y(), v * p.half.z()};
            else if ((pick -= ay) < 0)
                local = {u * p.half.x(), p.half.y(), v * p.half.z()};
            else if ((pick -= ay) < 0)
                local = {u * p.half.x(), -p.half.y(), v * p.half.z()};
            else if ((pick -= az) < 0)
                local = {u * p.half.x(), v * p.half.y(), p.half.z()};
            else
                local = {u * p.half.x(), v * p.half.y(), -p.half.z()};
            const Eigen::AngleAxisd rot(p.yaw, Eigen::Vector3d::UnitZ());
            return p.a + rot * local;
        }
        case Primitive::Kind::cylinder: {
            const double side = 2 * pi * p.radius * p.height;
            const double cap = pi * p.radius * p.radius;
            double pick = rng.uniform01() * (side + 2 * cap);
            if (pick < side) {
                const double phi = 6.283185307179586 * rng.uniform01();
                const double z = p.height * rng.uniform01();
                return p.a + Eigen::Vector3d(p.radius * std::cos(phi), p.radius * std::sin(phi), z);
            }
            const double r = p.radius * std::sqrt(rng.uniform01());
            const double phi = 6.283185307179586 * rng.uniform01();
            const double z = pick < side + cap ? 0.0 : p.height;
            return p.a + Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
        }
    }
    return p.a;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Scene assembly

inline void validate_script(const SceneScript& script) {
    if (!script.grid.valid()) throw std::runtime_error("scene script: invalid grid");
    if (script.num_frames < 1) throw std::runtime_error("scene script: frames must be >= 1");
    if (script.density < 0 || script.dropout_keep < 0 || script.dropout_keep > 1)
        throw std::runtime_error("scene script: bad density/dropout");
    const double sx = script.grid.nx * script.grid.voxel_size;
    const double sy = script.grid.ny * script.grid.voxel_size;
    for (const auto& person : script.people) {
        if (person.height_scale < 0.92 || person.height_scale > 1.05)
            throw std::runtime_error("scene script: height_scale outside [0.92, 1.05]");
        for (int f = 0; f < script.num_frames; ++f) {
            const Eigen::Vector2d pos = person.walk.position(f);
            const double gx = pos.x() - script.grid.origin.x();
            const double gy = pos.y() - script.grid.origin.y();
            if (gx < script.wall_margin || gy < script.wall_margin ||
                gx > sx - script.wall_margin || gy > sy - script.wall_margin)
                throw std::runtime_error("scene script: person " +
                                         std::to_string(person.person_id) +
                                         " leaves the walkable area at frame " +
                                         std::to_string(f));
        }
    }
    if (!script.allow_close_interaction) {
        for (std::size_t a = 0; a < script.people.size(); ++a)
            for (std::size_t b = a + 1; b < script.people.size(); ++b)
                for (int f = 0; f < script.num_frames; ++f) {
                    const double d = (script.people[a].walk.position(f) -
                                      script.people[b].walk.position(f))
                                         .norm();
                    if (d < script.min_person_spacing)
                        throw std::runtime_error(
                            "scene script: persons " +
                            std::to_string(script.people[a].person_id) + " and " +
                            std::to_string(script.people[b].person_id) +
                            " come within min spacing at frame " + std::to_string(f));
                }
    }
}

namespace detail {

// stable per-primitive stream ids
inline std::uint64_t person_part_stream(std::size_t person_index, std::size_t part) {
    return 100 + person_index * 16 + part;
}

inline Eigen::Vector3i nearest_occupied(const OccupancyVolume& vol, const Eigen::Vector3i& c,
                                        int max_radius = 10) {
    if (vol.spec.contains(c) && vol.test(c.x(), c.y(), c.z())) return c;
    Eigen::Vector3i best = c;
    int best_d = std::numeric_limits<int>::max();
    for (int dz = -max_radius; dz <= max_radius; ++dz)
        for (int dy = -max_radius; dy <= max_radius; ++dy)
            for (int dx = -max_radius; dx <= max_radius; ++dx) {
                const Eigen::Vector3i v = c + Eigen::Vector3i(dx, dy, dz);
                if (!vol.spec.contains(v) || !vol.test(v.x(), v.y(), v.z())) continue;
                const int d = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (d < best_d ||
                    (d == best_d && std::tie(v.x(), v.y(), v.z()) <
                                        std::tie(best.x(), best.y(), best.z()))) {
                    best_d = d;
                    best = v;
                }
            }
    return best; // falls back to the center voxel when nothing is nearby
}

} // namespace detail

// Person-volume-local voxel of a world point for a crop rooted at root_voxel.
inline Eigen::Vector3i person_local_voxel(const GridSpec& grid, const Eigen::Vector2i& root_voxel,
                                          const Eigen::Vector3d& world) {
    const Eigen::Vector3i room = grid.to_voxel(world.cast<float>());
    const Eigen::Vector3i lo = person_crop_origin(grid, root_voxel);
    return room - lo;
}

// Samples one frame: all primitive surfaces at the configured density with
// per-point dropout then Gaussian noise, plus exact ground truth recorded
// before the noise. Pure function of (script, frame).
inline std::pair<PointFrame, FrameGt> sample_scene(const SceneScript& script, int frame) {
    if (frame < 0 || frame >= script.num_frames)
        throw std::invalid_argument("sample_scene: frame out of range");
    PointFrame out;
    out.timestamp_index = frame;
    FrameGt gt;
    gt.frame = frame;

    struct Pending {
        Primitive prim;
        std::uint64_t stream_id;
        int hand_owner = -1; // index into gt.people
        bool is_left = false;
    };
    std::vector<Pending> prims;

    for (std::size_t pi = 0; pi < script.people.size(); ++pi) {
        const auto& person = script.people[pi];
        HumanoidShape shape;
        shape.height_scale = person.height_scale;
        const HumanoidPose pose = pose_at(script, person, frame);
        BodyModel body = forward_kinematics(shape, pose);

        PersonGt pgt;
        pgt.person_id = person.person_id;
        pgt.root_world = pose.root;
        pgt.heading = pose.heading;
        const Eigen::Vector3i rv = script.grid.to_voxel(
            {float(pose.root.x()), float(pose.root.y()), script.grid.origin.z()});
        pgt.root_voxel = {rv.x(), rv.y()};
        pgt.left.world = body.left_hand;
        pgt.right.world = body.right_hand;
        pgt.left.voxel = person_local_voxel(script.grid, pgt.root_voxel, body.left_hand);
        pgt.right.voxel = person_local_voxel(script.grid, pgt.root_voxel, body.right_hand);
        for (const auto* hv : {&pgt.left.voxel, &pgt.right.voxel})
            if (hv->x() < 0 || hv->x() >= kPersonDimXY || hv->y() < 0 ||
                hv->y() >= kPersonDimXY || hv->z() < 0 || hv->z() >= kPersonDimZ)
                throw std::runtime_error("sample_scene: ground-truth hand outside the person "
                                         "volume (person " +
                                         std::to_string(person.person_id) + ", frame " +
                                         std::to_string(frame) + ")");
        const int gt_index = int(gt.people.size());
        gt.people.push_back(std::move(pgt));

        for (std::size_t part = 0; part < body.parts.size(); ++part) {
            Pending pending;
            pending.prim = body.parts[part];
            pending.prim.color = person.color;
            pending.stream_id = detail::person_part_stream(pi, part);
            if (part == kLeftHandPart || part == kRightHandPart) {
                pending.hand_owner = gt_index;
                pending.is_left = (part == kLeftHandPart);
            }
            prims.push_back(std::move(pending));
        }
    }

    for (std::size_t ci = 0; ci < script.clutter.size(); ++ci)
        prims.push_back({script.clutter[ci].prim, 10000 + ci, -1, false});

    if (script.with_floor) {
        Primitive floor;
        floor.kind = Primitive::Kind::box;
        const double sx = script.grid.nx * script.grid.voxel_size;
        const double sy = script.grid.ny * script.grid.voxel_size;
        floor.a = Eigen::Vector3d(script.grid.origin.x() + sx / 2,
                                  script.grid.origin.y() + sy / 2,
                                  script.grid.origin.z() + 0.005);
        floor.half = {sx / 2, sy / 2, 0.004};
        floor.color = {90, 90, 90};
        prims.push_back({floor, 20000, -1, false});
    }

    for (const auto& pending : prims) {
        const double density =
            pending.stream_id == 20000 ? script.floor_density : script.density;
        const auto n_points = std::int64_t(std::llround(density * pending.prim.area()));
        for (std::int64_t k = 0; k < n_points; ++k) {
            CounterRng rng(script.seed, std::uint64_t(frame), pending.stream_id,
                           std::uint64_t(k));
            if (rng.uniform01() >= script.dropout_keep) continue;
            Eigen::Vector3d p = detail::sample_primitive_surface(pending.prim, rng);
            if (script.noise_sigma > 0)
                p += script.noise_sigma *
                     Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            const auto index = std::int32_t(out.points.size());
            out.points.emplace_back(float(p.x()), float(p.y()), float(p.z()));
            if (script.with_color) out.colors.push_back(pending.prim.color);
            if (pending.hand_owner >= 0) {
                auto& hand = pending.is_left ? gt.people[std::size_t(pending.hand_owner)].left
                                             : gt.people[std::size_t(pending.hand_owner)].right;
                hand.point_indices.push_back(index);
            }
        }
    }

    // anchors: nearest occupied voxel to each hand center in the person crop
    const OccupancyVolume room = voxelize(out, script.grid);
    for (auto& person : gt.people) {
        const OccupancyVolume crop = crop_person_volume(room, person.root_voxel);
        person.left.anchor = detail::nearest_occupied(crop, person.left.voxel);
        person.right.anchor = detail::nearest_occupied(crop, person.right.voxel);
    }
    return {std::move(out), std::move(gt)};
}

// ---------------------------------------------------------------------------
// JSON forms

inline nlohmann::ordered_json grid_to_json(const GridSpec& g) {
    return {{"origin", {g.origin.x(), g.origin.y(), g.origin.z()}},
            {"voxel_size", g.voxel_size},
            {"dims", {g.nx, g.ny, g.nz}},
            {"ground_z", g.ground_z}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    g.origin = {j.at("origin").at(0).get<float>(), j.at("origin").at(1).get<float>(),
                j.at("origin").at(2).get<float>()};
    g.voxel_size = j.at("voxel_size").get<float>();
    g.nx = j.at("dims").at(0).get<int>();
    g.ny = j.at("dims").at(1).get<int>();
    g.nz = j.at("dims").at(2).get<int>();
    g.ground_z = j.value("ground_z", 1);
    if (!g.valid()) throw std::runtime_error("grid config invalid");
    return g;
}

inline nlohmann::ordered_json scene_script_to_json(const SceneScript& s) {
    nlohmann::ordered_json j;
    j["grid"] = grid_to_json(s.grid);
    j["frames"] = s.num_frames;
    j["seed"] = s.seed;
    j["density"] = s.density;
    j["floor_density"] = s.floor_density;
    j["noise_sigma"] = s.noise_sigma;
    j["dropout_keep"] = s.dropout_keep;
    j["with_color"] = s.with_color;
    j["with_floor"] = s.with_floor;
    j["min_person_spacing"] = s.min_person_spacing;
    j["allow_close_interaction"] = s.allow_close_interaction;
    j["wall_margin"] = s.wall_margin;
    j["people"] = nlohmann::ordered_json::array();
    for (const auto& p : s.people) {
        nlohmann::ordered_json pj;
        pj["id"] = p.person_id;
        pj["height_scale"] = p.height_scale;
        pj["preset"] = to_string(p.preset);
        pj["angle_seed"] = p.angle_seed;
        pj["walk"] = {{"center", {p.walk.center.x(), p.walk.center.y()}},
                      {"x", {p.walk.x.base, p.walk.x.amp, p.walk.x.omega, p.walk.x.phase}},
                      {"y", {p.walk.y.base, p.walk.y.amp, p.walk.y.omega, p.walk.y.phase}},
                      {"heading",
                       {p.walk.heading.base, p.walk.heading.amp, p.walk.heading.omega,
                        p.walk.heading.phase}}};
        pj["color"] = {p.color[0], p.color[1], p.color[2]};
        j["people"].push_back(pj);
    }
    j["clutter"] = nlohmann::ordered_json::array();
    for (const auto& c : s.clutter) {
        nlohmann::ordered_json cj;
        if (c.prim.kind == Primitive::Kind::box) {
            cj["kind"] = "box";
            cj["center"] = {c.prim.a.x(), c.prim.a.y(), c.prim.a.z()};
            cj["half"] = {c.prim.half.x(), c.prim.half.y(), c.prim.half.z()};
            cj["yaw"] = c.prim.yaw;
        } else {
            cj["kind"] = "cylinder";
            cj["base"] = {c.prim.a.x(), c.prim.a.y(), c.prim.a.z()};
            cj["radius"] = c.prim.radius;
            cj["height"] = c.prim.height;
        }
        cj["color"] = {c.prim.color[0], c.prim.color[1], c.prim.color[2]};
        j["clutter"].push_back(cj);
    }
    return j;
}

namespace detail {

inline SinTrack sin_track_from_json(const nlohmann::json& j, const char* key) {
    const auto& a = j.at(key);
    return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
            a.at(3).get<double>()};
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::runtime_error("unknown key '" + it.key() + "' in " + where);
}

} // namespace detail

inline SceneScript scene_script_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j,
        {"grid", "frames", "seed", "density", "floor_density", "noise_sigma", "dropout_keep",
         "with_color", "with_floor", "min_person_spacing", "allow_close_interaction",
         "wall_margin", "people", "clutter"},
        "scene script");
    SceneScript s;
    s.grid = grid_from_json(j.at("grid"));
    s.num_frames = j.at("frames").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.density = j.value("density", 2000.0);
    s.floor_density = j.value("floor_density", 250.0);
    s.noise_sigma = j.value("noise_sigma", 0.005);
    s.dropout_keep = j.value("dropout_keep", 0.9);
    s.with_color = j.value("with_color", false);
    s.with_floor = j.value("with_floor", true);
    s.min_person_spacing = j.value("min_person_spacing", 0.4);
    s.allow_close_interaction = j.value("allow_close_interaction", false);
    s.wall_margin = j.value("wall_margin", 0.85);
    for (const auto& pj : j.value("people", nlohmann::json::array())) {
        detail::reject_unknown_keys(
            pj, {"id", "height_scale", "preset", "angle_seed", "walk", "color"},
            "scene script person");
        PersonScript p;
        p.person_id = pj.at("id").get<int>();
        p.height_scale = pj.value("height_scale", 1.0);
        p.preset = pose_preset_from_string(pj.value("preset", std::string("varied")));
        p.angle_seed = pj.value("angle_seed", std::uint64_t(p.person_id));
        const auto& wj = pj.at("walk");
        detail::reject_unknown_keys(wj, {"center", "x", "y", "heading"}, "walk");
        p.walk.center = {wj.at("center").at(0).get<double>(),
                         wj.at("center").at(1).get<double>()};
        p.walk.x = detail::sin_track_from_json(wj, "x");
        p.walk.y = detail::sin_track_from_json(wj, "y");
        p.walk.heading = detail::sin_track_from_json(wj, "heading");
        if (pj.contains("color")) {
            p.color = {pj["color"].at(0).get<std::uint8_t>(),
                       pj["color"].at(1).get<std::uint8_t>(),
                       pj["color"].at(2).get<std::uint8_t>()};
        }
        s.people.push_back(std::move(p));
    }
    for (const auto& cj : j.value("clutter", nlohmann::json::array())) {
        ClutterItem c;
        const std::string kind = cj.at("kind").get<std::string>();
        if (kind == "box") {
            detail::reject_unknown_keys(cj, {"kind", "center", "half", "yaw", "color"},
                                        "clutter box");
            c.prim.kind = Primitive::Kind::box;
            c.prim.a = {cj.at("center").at(0).get<double>(), cj.at("center").at(1).get<double>(),
                        cj.at("center").at(2).get<double>()};
            c.prim.half = {cj.at("half").at(0).get<double>(), cj.at("half").at(1).get<double>(),
                           cj.at("half").at(2).get<double>()};
            c.prim.yaw = cj.value("yaw", 0.0);
        } else if (kind == "cylinder") {
            detail::reject_unknown_keys(cj, {"kind", "base", "radius", "height", "color"},
                                        "clutter cylinder");
            c.prim.kind = Primitive::Kind::cylinder;
            c.prim.a = {cj.at("base").at(0).get<double>(), cj.at("base").at(1).get<double>(),
                        cj.at("base").at(2).get<double>()};
            c.prim.radius = cj.at("radius").get<double>();
            c.prim.height = cj.at("height").get<double>();
        } else {
            throw std::runtime_error("unknown clutter kind: " + kind);
        }
        if (cj.contains("color"))
            c.prim.color = {cj["color"].at(0).get<std::uint8_t>(),
                            cj["color"].at(1).get<std::uint8_t>(),
                            cj["color"].at(2).get<std::uint8_t>()};
        s.clutter.push_back(std::move(c));
    }
    validate_script(s);
    return s;
}

inline nlohmann::ordered_json frame_gt_to_json(const FrameGt& gt) {
    nlohmann::ordered_json j;
    j["frame"] = gt.frame;
    j["people"] = nlohmann::ordered_json::array();
    for (const auto& p : gt.people) {
        nlohmann::ordered_json pj;
        pj["id"] = p.person_id;
        pj["root_world"] = {p.root_world.x(), p.root_world.y()};
        pj["root_voxel"] = {p.root_voxel.x(), p.root_voxel.y()};
        pj["heading"] = p.heading;
        auto hand = [](const HandGt& h) {
            nlohmann::ordered_json hj;
            hj["world"] = {h.world.x(), h.world.y(), h.world.z()};
            hj["voxel"] = {h.voxel.x(), h.voxel.y(), h.voxel.z()};
            hj["anchor"] = {h.anchor.x(), h.anchor.y(), h.anchor.z()};
            hj["points"] = h.point_indices;
            return hj;
        };
        pj["left"] = hand(p.left);
        pj["right"] = hand(p.right);
        j["people"].push_back(pj);
    }
    return j;
}

inline FrameGt frame_gt_from_json(const nlohmann::json& j) {
    FrameGt gt;
    gt.frame = j.at("frame").get<int>();
    for (const auto& pj : j.at("people")) {
        PersonGt p;
        p.person_id = pj.at("id").get<int>();
        p.root_world = {pj.at("root_world").at(0).get<double>(),
                        pj.at("root_world").at(1).get<double>()};
        p.root_voxel = {pj.at("root_voxel").at(0).get<int>(),
                        pj.at("root_voxel").at(1).get<int>()};
        p.heading = pj.value("heading", 0.0);
        auto hand = [](const nlohmann::json& hj) {
            HandGt h;
            h.world = {hj.at("world").at(0).get<double>(), hj.at("world").at(1).get<double>(),
                       hj.at("world").at(2).get<double>()};
            h.voxel = {hj.at("voxel").at(0).get<int>(), hj.at("voxel").at(1).get<int>(),
                       hj.at("voxel").at(2).get<int>()};
            h.anchor = {hj.at("anchor").at(0).get<int>(), hj.at("anchor").at(1).get<int>(),
                        hj.at("anchor").at(2).get<int>()};
            h.point_indices = hj.at("points").get<std::vector<std::int32_t>>();
            return h;
        };
        p.left = hand(pj.at("left"));
        p.right = hand(pj.at("right"));
        gt.people.push_back(std::move(p));
    }
    return gt;
}

} // namespace volumetrack
