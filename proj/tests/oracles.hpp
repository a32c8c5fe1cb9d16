#pragma once

// Independent reference implementations used as test oracles. Everything in
// here is deliberately written as plain loops over the public accessors so a
// bug in the packed/incremental production paths cannot hide.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "volumetrack/detection.hpp"
#include "volumetrack/image.hpp"
#include "volumetrack/matching.hpp"
#include "volumetrack/projection.hpp"
#include <Eigen/Dense>

#include "volumetrack/rng.hpp"
#include "volumetrack/triangulation.hpp"
#include "volumetrack/volume.hpp"

namespace oracles {

using namespace volumetrack;

inline Map2f naive_top_down(const OccupancyVolume& v) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x) {
            int best = 0;
            for (int z = 0; z < v.spec.nz; ++z)
                if (v.test(x, y, z)) best = z + 1;
            out.at(x, y) = float(best);
        }
    return out;
}

inline Map2f naive_column_sum(const OccupancyVolume& v) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x) {
            int n = 0;
            for (int z = 0; z < v.spec.nz; ++z)
                if (v.test(x, y, z)) ++n;
            out.at(x, y) = float(n);
        }
    return out;
}

inline Map2f naive_bottom_up(const OccupancyVolume& v, int ground_z) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x) {
            int best = 0;
            for (int z = ground_z + 1; z < v.spec.nz; ++z)
                if (v.test(x, y, z)) best = std::max(best, v.spec.nz - z);
            out.at(x, y) = float(best);
        }
    return out;
}

// Per-pixel ray walks, written from the view-geometry definition: near uses
// the distance from the view face to the first occupied voxel, far the last.
inline SideViewSet naive_side_views(const OccupancyVolume& thin) {
    const int n = thin.spec.nx;
    const int nz = thin.spec.nz;
    SideViewSet out;
    for (auto& v : out.views) v = Image3f(n, nz);
    for (int z = 0; z < nz; ++z)
        for (int t = 0; t < n; ++t) {
            // +x / -x: rays along x at y = t
            int first_px = -1, last_px = -1, cnt = 0;
            for (int x = n - 1; x >= 0; --x)
                if (thin.test(x, t, z)) {
                    if (first_px < 0) first_px = x;
                    last_px = x;
                    ++cnt;
                }
            if (cnt) {
                out.views[0].at(t, z, 0) = float(n - (n - 1 - first_px)) / float(n);
                out.views[0].at(t, z, 1) = float(cnt) / float(n);
                out.views[0].at(t, z, 2) = float(n - (n - 1 - last_px)) / float(n);
                out.views[1].at(t, z, 0) = float(n - last_px) / float(n);
                out.views[1].at(t, z, 1) = float(cnt) / float(n);
                out.views[1].at(t, z, 2) = float(n - first_px) / float(n);
            }
            // +y / -y: rays along y at x = t
            int first_py = -1, last_py = -1;
            cnt = 0;
            for (int y = n - 1; y >= 0; --y)
                if (thin.test(t, y, z)) {
                    if (first_py < 0) first_py = y;
                    last_py = y;
                    ++cnt;
                }
            if (cnt) {
                out.views[2].at(t, z, 0) = float(n - (n - 1 - first_py)) / float(n);
                out.views[2].at(t, z, 1) = float(cnt) / float(n);
                out.views[2].at(t, z, 2) = float(n - (n - 1 - last_py)) / float(n);
                out.views[3].at(t, z, 0) = float(n - last_py) / float(n);
                out.views[3].at(t, z, 1) = float(cnt) / float(n);
                out.views[3].at(t, z, 2) = float(n - first_py) / float(n);
            }
        }
    return out;
}

inline double naive_correlation_at(const Map2f& f, const Map2f& w, float bias, int x, int y) {
    const int half = w.width / 2;
    double s = bias;
    for (int j = 0; j < w.height; ++j)
        for (int i = 0; i < w.width; ++i)
            s += double(w.at(i, j)) * double(f.sample_or_zero(x + i - half, y + j - half));
    return s;
}

// Kuhn's augmenting paths; cardinality oracle for the assignment solver.
inline int max_matching_cardinality(const AssignmentProblem& p) {
    std::vector<std::vector<int>> adj(std::size_t(p.rows));
    for (const auto& e : p.edges) adj[std::size_t(e.row)].push_back(e.col);
    std::vector<int> match_col(std::size_t(p.cols), -1);
    std::vector<char> seen;
    auto try_row = [&](auto&& self, int i) -> bool {
        for (int j : adj[std::size_t(i)]) {
            if (seen[std::size_t(j)]) continue;
            seen[std::size_t(j)] = 1;
            if (match_col[std::size_t(j)] < 0 || self(self, match_col[std::size_t(j)])) {
                match_col[std::size_t(j)] = i;
                return true;
            }
        }
        return false;
    };
    int card = 0;
    for (int i = 0; i < p.rows; ++i) {
        seen.assign(std::size_t(p.cols), 0);
        if (try_row(try_row, i)) ++card;
    }
    return card;
}

inline OccupancyVolume random_volume(Rng& rng, int nx, int ny, int nz, double fill) {
    GridSpec spec;
    spec.nx = nx;
    spec.ny = ny;
    spec.nz = nz;
    spec.ground_z = 1;
    OccupancyVolume v(spec);
    const auto target = std::size_t(fill * double(nx) * ny * nz);
    for (std::size_t k = 0; k < target; ++k)
        v.set(int(rng.below(std::uint32_t(nx))), int(rng.below(std::uint32_t(ny))),
              int(rng.below(std::uint32_t(nz))));
    return v;
}

inline OccupancyVolume mirror_x(const OccupancyVolume& v) {
    OccupancyVolume out(v.spec);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x)
            for (int z = 0; z < v.spec.nz; ++z)
                if (v.test(x, y, z)) out.set(v.spec.nx - 1 - x, y, z);
    return out;
}

// 90 degrees counterclockwise about the volume's vertical center axis:
// rotated(x', y', z) = v(y', n-1-x', z)
inline OccupancyVolume rotate90_ccw(const OccupancyVolume& v) {
    OccupancyVolume out(v.spec);
    const int n = v.spec.nx;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int z = 0; z < v.spec.nz; ++z)
                if (v.test(y, n - 1 - x, z)) out.set(x, y, z);
    return out;
}

// Four cameras at the corners of a square, looking at the rig center.
inline std::vector<CameraModel> corner_rig(const Eigen::Vector3d& target,
                                           double distance = 3.0, double height = 2.2) {
    std::vector<CameraModel> cams;
    for (int k = 0; k < 4; ++k) {
        const double angle = 0.7854 + 1.5708 * k;
        const Eigen::Vector3d pos = target + Eigen::Vector3d(distance * std::cos(angle),
                                                             distance * std::sin(angle),
                                                             height - target.z());
        const Eigen::Vector3d forward = (target - pos).normalized();
        const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
        const Eigen::Vector3d down = forward.cross(right).normalized();
        CameraModel cam;
        cam.fx = cam.fy = 550;
        cam.cx = 512;
        cam.cy = 384;
        cam.width = 1024;
        cam.height = 768;
        cam.rotation.row(0) = right.transpose();
        cam.rotation.row(1) = down.transpose();
        cam.rotation.row(2) = forward.transpose();
        cam.translation = -cam.rotation * pos;
        cams.push_back(cam);
    }
    return cams;
}

// Unweighted least-squares "ray intersection": the point minimizing the sum
// of squared distances to all back-projection rays.
inline Eigen::Vector3d least_squares_rays(const std::vector<CameraModel>& cams,
                                          const std::vector<Keypoint2D>& kps) {
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (const auto& kp : kps) {
        if (!kp.present) continue;
        const auto& cam = cams[std::size_t(kp.view)];
        const Eigen::Vector3d center = -cam.rotation.transpose() * cam.translation;
        const Eigen::Vector3d dir =
            (cam.rotation.transpose() * Eigen::Vector3d((kp.pixel.x() - cam.cx) / cam.fx,
                                                        (kp.pixel.y() - cam.cy) / cam.fy, 1.0))
                .normalized();
        const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - dir * dir.transpose();
        a += proj;
        b += proj * center;
    }
    return a.ldlt().solve(b);
}

} // namespace oracles
