#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

struct CameraModel {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity(); // world -> camera
    Eigen::Vector3d translation{0, 0, 0};

    bool valid() const {
        if (!(fx > 0) || !(fy > 0) || width < 1 || height < 1) return false;
        const Eigen::Matrix3d err =
            rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
        return err.cwiseAbs().maxCoeff() <= 1e-6;
    }
};

struct Keypoint2D {
    int view = 0;
    Eigen::Vector2d pixel{0, 0};
    bool present = false;
};

// Pinhole projection; points at or behind the camera plane are flagged.
inline std::optional<Eigen::Vector2d> project_point(const CameraModel& cam,
                                                    const Eigen::Vector3d& world) {
    const Eigen::Vector3d pc = cam.rotation * world + cam.translation;
    if (pc.z() <= 0) return std::nullopt;
    return Eigen::Vector2d{cam.fx * pc.x() / pc.z() + cam.cx,
                           cam.fy * pc.y() / pc.z() + cam.cy};
}

// The multiple-view baseline: scan every occupied voxel of the person volume
// and keep the one whose projections are closest to the 2D keypoints under
// the truncated L1 norm. Absent keypoints and behind-camera projections
// contribute the truncation constant, so view availability does not bias the
// argmin. Ties resolve to the lexicographically smallest voxel.
inline Eigen::Vector3i robust_triangulate(const OccupancyVolume& person,
                                          const std::vector<CameraModel>& cams,
                                          const std::vector<Keypoint2D>& keypoints,
                                          double tau = 30.0) {
    if (person.occupied_count() == 0)
        throw std::invalid_argument("robust_triangulate: no occupied voxels");
    bool any_present = false;
    for (const auto& kp : keypoints) any_present |= kp.present;
    if (!any_present)
        throw std::invalid_argument("robust_triangulate: no present keypoints");

    Eigen::Vector3i best{0, 0, 0};
    double best_cost = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int y = 0; y < person.spec.ny; ++y)
        for (int x = 0; x < person.spec.nx; ++x) {
            const std::uint64_t* col = person.column(x, y);
            for (int w = 0; w < person.words_per_column; ++w) {
                std::uint64_t bits = col[w];
                while (bits) {
                    const int z = w * 64 + std::countr_zero(bits);
                    bits &= bits - 1;
                    const Eigen::Vector3d world =
                        person.spec.voxel_center({x, y, z}).cast<double>();
                    double cost = 0;
                    for (const auto& kp : keypoints) {
                        if (!kp.present || kp.view < 0 || kp.view >= int(cams.size())) {
                            cost += tau;
                            continue;
                        }
                        const auto proj = project_point(cams[std::size_t(kp.view)], world);
                        if (!proj) {
                            cost += tau;
                            continue;
                        }
                        cost += std::min(std::abs(proj->x() - kp.pixel.x()) +
                                             std::abs(proj->y() - kp.pixel.y()),
                                         tau);
                    }
                    const Eigen::Vector3i v{x, y, z};
                    if (!found || cost < best_cost ||
                        (cost == best_cost &&
                         std::tie(v.x(), v.y(), v.z()) <
                             std::tie(best.x(), best.y(), best.z()))) {
                        found = true;
                        best_cost = cost;
                        best = v;
                    }
                }
            }
        }
    return best;
}

// Camera rig file: JSON array of
//   {fx, fy, cx, cy, w, h, R (9 floats row-major), t (3 floats)}.
inline nlohmann::ordered_json camera_rig_to_json(const std::vector<CameraModel>& cams) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cams) {
        nlohmann::ordered_json j;
        j["fx"] = c.fx;
        j["fy"] = c.fy;
        j["cx"] = c.cx;
        j["cy"] = c.cy;
        j["w"] = c.width;
        j["h"] = c.height;
        std::vector<double> r;
        for (int row = 0; row < 3; ++row)
            for (int col = 0; col < 3; ++col) r.push_back(c.rotation(row, col));
        j["R"] = r;
        j["t"] = {c.translation.x(), c.translation.y(), c.translation.z()};
        arr.push_back(j);
    }
    return arr;
}

inline std::vector<CameraModel> camera_rig_from_json(const nlohmann::json& arr) {
    std::vector<CameraModel> cams;
    for (const auto& j : arr) {
        CameraModel c;
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        c.width = j.at("w").get<int>();
        c.height = j.at("h").get<int>();
        const auto& r = j.at("R");
        if (r.size() != 9) throw std::runtime_error("camera rig: R must have 9 entries");
        for (int row = 0; row < 3; ++row)
            for (int col = 0; col < 3; ++col)
                c.rotation(row, col) = r.at(std::size_t(row * 3 + col)).get<double>();
        c.translation = {j.at("t").at(0).get<double>(), j.at("t").at(1).get<double>(),
                         j.at("t").at(2).get<double>()};
        if (!c.valid()) throw std::runtime_error("camera rig: invalid camera model");
        cams.push_back(c);
    }
    return cams;
}

inline std::vector<CameraModel> load_camera_rig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open camera rig: " + path);
    nlohmann::json j;
    in >> j;
    return camera_rig_from_json(j);
}

inline void save_camera_rig(const std::string& path, const std::vector<CameraModel>& cams) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << camera_rig_to_json(cams).dump(2) << "\n";
}

} // namespace volumetrack
