#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace volumetrack {

// One fused point-cloud frame. Points are metric, pre-aligned so the floor
// is parallel to the xy plane; colors are optional and parallel to points.
struct PointFrame {
    std::int64_t timestamp_index = 0;
    std::vector<Eigen::Vector3f> points;
    std::vector<std::array<std::uint8_t, 3>> colors;

    bool has_colors() const { return !colors.empty() && colors.size() == points.size(); }
};

struct GridSpec {
    Eigen::Vector3f origin{0.f, 0.f, 0.f};
    float voxel_size = 0.02f;
    int nx = 1, ny = 1, nz = 1;
    int ground_z = 1; // voxel index of the floor level

    bool valid() const {
        return voxel_size > 0.f && nx >= 1 && ny >= 1 && nz >= 1 && ground_z >= 0 &&
               ground_z < nz;
    }

    // Floor quantization; points exactly on a boundary land in the
    // higher-index voxel.
    Eigen::Vector3i to_voxel(const Eigen::Vector3f& p) const {
        return {int(std::floor((double(p.x()) - double(origin.x())) / double(voxel_size))),
                int(std::floor((double(p.y()) - double(origin.y())) / double(voxel_size))),
                int(std::floor((double(p.z()) - double(origin.z())) / double(voxel_size)))};
    }

    Eigen::Vector3f voxel_center(const Eigen::Vector3i& v) const {
        return origin + (v.cast<float>() + Eigen::Vector3f(0.5f, 0.5f, 0.5f)) * voxel_size;
    }

    bool contains(const Eigen::Vector3i& v) const {
        return v.x() >= 0 && v.x() < nx && v.y() >= 0 && v.y() < ny && v.z() >= 0 &&
               v.z() < nz;
    }

    bool operator==(const GridSpec& o) const {
        return origin.x() == o.origin.x() && origin.y() == o.origin.y() &&
               origin.z() == o.origin.z() && voxel_size == o.voxel_size && nx == o.nx &&
               ny == o.ny && nz == o.nz && ground_z == o.ground_z;
    }
};

// Tracked-person sub-volume and hand thin-volume dimensions, in voxels.
inline constexpr int kPersonDimXY = 80;
inline constexpr int kPersonDimZ = 100;
inline constexpr int kThinDimXY = 41;
inline constexpr int kPersonHalfXY = kPersonDimXY / 2;
inline constexpr int kThinHalfXY = kThinDimXY / 2;

// Binary surface-occupancy grid. Bits are packed along z so per-column scans
// (projections) are word operations.
struct OccupancyVolume {
    GridSpec spec;
    int words_per_column = 0;
    std::vector<std::uint64_t> words;

    OccupancyVolume() = default;
    explicit OccupancyVolume(const GridSpec& s)
        : spec(s),
          words_per_column((s.nz + 63) / 64),
          words(std::size_t(s.nx) * s.ny * words_per_column, 0) {}

    std::size_t column_index(int x, int y) const {
        return (std::size_t(y) * spec.nx + x) * words_per_column;
    }

    const std::uint64_t* column(int x, int y) const { return &words[column_index(x, y)]; }
    std::uint64_t* column(int x, int y) { return &words[column_index(x, y)]; }

    void set(int x, int y, int z) {
        words[column_index(x, y) + std::size_t(z >> 6)] |= std::uint64_t(1) << (z & 63);
    }

    bool test(int x, int y, int z) const {
        return (words[column_index(x, y) + std::size_t(z >> 6)] >>
                (z & 63)) & 1;
    }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (std::uint64_t w : words) n += std::size_t(std::popcount(w));
        return n;
    }

    bool operator==(const OccupancyVolume&) const = default;
};

// Voxel set to 1 iff at least one point falls inside it; points outside the
// grid are dropped. Non-finite coordinates fail every bound check and drop
// out with them.
inline OccupancyVolume voxelize(const PointFrame& frame, const GridSpec& spec) {
    if (!spec.valid()) throw std::invalid_argument("voxelize: invalid grid spec");
    OccupancyVolume vol(spec);
    for (const auto& p : frame.points) {
        const Eigen::Vector3i v = spec.to_voxel(p);
        if (spec.contains(v)) vol.set(v.x(), v.y(), v.z());
    }
    return vol;
}

namespace detail {

// Copies the axis-aligned sub-box starting at parent voxel `lo` into a fresh
// volume of dims (dx, dy, dz); everything outside the parent is zero. The z
// shift is done word-wise per column.
inline OccupancyVolume crop_volume(const OccupancyVolume& parent, const Eigen::Vector3i& lo,
                                   int dx, int dy, int dz, int local_ground_z) {
    GridSpec out_spec;
    out_spec.origin = parent.spec.origin + lo.cast<float>() * parent.spec.voxel_size;
    out_spec.voxel_size = parent.spec.voxel_size;
    out_spec.nx = dx;
    out_spec.ny = dy;
    out_spec.nz = dz;
    out_spec.ground_z = local_ground_z;
    OccupancyVolume out(out_spec);

    const int zoff = lo.z();
    const int pw = parent.words_per_column;
    const int ow = out.words_per_column;
    for (int ly = 0; ly < dy; ++ly) {
        const int py = lo.y() + ly;
        if (py < 0 || py >= parent.spec.ny) continue;
        for (int lx = 0; lx < dx; ++lx) {
            const int px = lo.x() + lx;
            if (px < 0 || px >= parent.spec.nx) continue;
            const std::uint64_t* src = parent.column(px, py);
            std::uint64_t* dst = out.column(lx, ly);
            for (int w = 0; w < ow; ++w) {
                const int src_bit = zoff + w * 64;
                std::uint64_t v = 0;
                const int wi = src_bit >> 6;
                const int sh = src_bit & 63;
                auto word_at = [&](int i) -> std::uint64_t {
                    return (i >= 0 && i < pw) ? src[i] : 0;
                };
                if (src_bit >= 0) {
                    v = word_at(wi) >> sh;
                    if (sh) v |= word_at(wi + 1) << (64 - sh);
                } else {
                    const int lead = -src_bit; // local bits below parent z=0
                    if (lead < 64) v = word_at(0) << lead;
                }
                dst[w] = v;
            }
            // clear bits at or above nz in the top word
            const int top_bits = dz & 63;
            if (top_bits) dst[ow - 1] &= (std::uint64_t(1) << top_bits) - 1;
        }
    }
    return out;
}

} // namespace detail

// Parent voxel of person-crop local (0,0,0) for a crop centered at
// center_xy. Local z index 1 aligns to the parent ground level.
inline Eigen::Vector3i person_crop_origin(const GridSpec& parent, const Eigen::Vector2i& center_xy) {
    return {center_xy.x() - kPersonHalfXY, center_xy.y() - kPersonHalfXY, parent.ground_z - 1};
}

// 80x80x100 person sub-volume with the bottom centered at (x, y, 1).
inline OccupancyVolume crop_person_volume(const OccupancyVolume& volume,
                                          const Eigen::Vector2i& center_xy) {
    return detail::crop_volume(volume, person_crop_origin(volume.spec, center_xy),
                               kPersonDimXY, kPersonDimXY, kPersonDimZ, 1);
}

// 41x41x100 thin volume centered at hand_xy on the xy plane, full z extent.
inline OccupancyVolume crop_thin_volume(const OccupancyVolume& person,
                                        const Eigen::Vector2i& hand_xy) {
    return detail::crop_volume(
        person, {hand_xy.x() - kThinHalfXY, hand_xy.y() - kThinHalfXY, 0}, kThinDimXY,
        kThinDimXY, person.spec.nz, person.spec.ground_z);
}

} // namespace volumetrack
