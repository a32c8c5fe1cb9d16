#pragma once

// Shared scene-script builders for tests.

#include "volumetrack/synth.hpp"

namespace fixtures {

using namespace volumetrack;

inline GridSpec small_room(int nx = 150, int ny = 150) {
    GridSpec g;
    g.origin = {0.f, 0.f, 0.f};
    g.voxel_size = 0.02f;
    g.nx = nx;
    g.ny = ny;
    g.nz = 100;
    g.ground_z = 1;
    return g;
}

inline PersonScript standing_person(int id, const Eigen::Vector2d& at,
                                    PosePreset preset = PosePreset::t_pose) {
    PersonScript p;
    p.person_id = id;
    p.preset = preset;
    p.angle_seed = std::uint64_t(id) * 31 + 5;
    p.walk.center = at;
    p.walk.x = {0, 0, 0, 0};
    p.walk.y = {0, 0, 0, 0};
    p.walk.heading = {0.4, 0, 0, 0};
    return p;
}

inline PersonScript walking_person(int id, const Eigen::Vector2d& center, double amp,
                                   PosePreset preset = PosePreset::varied) {
    PersonScript p;
    p.person_id = id;
    p.preset = preset;
    p.angle_seed = std::uint64_t(id) * 17 + 3;
    p.walk.center = center;
    p.walk.x = {0, amp, 0.045, 0.7 * id};
    p.walk.y = {0, amp, 0.031, 1.3 * id + 1.0};
    p.walk.heading = {0.2 * id, 0.8, 0.02, 0.3 * id};
    return p;
}

inline SceneScript one_person_scene(int frames = 10, double density = 2500,
                                    PosePreset preset = PosePreset::t_pose) {
    SceneScript s;
    s.grid = small_room();
    s.num_frames = frames;
    s.seed = 404;
    s.density = density;
    s.noise_sigma = 0.0;
    s.dropout_keep = 1.0;
    s.with_floor = false;
    s.people.push_back(standing_person(0, {1.5, 1.5}, preset));
    return s;
}

} // namespace fixtures
