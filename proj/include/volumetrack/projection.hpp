#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>

#include "volumetrack/image.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

// The three ground-plane maps plus their normalized 3-channel stack.
// f_t: 1-based height of the highest occupied voxel per column (0 = empty).
// f_s: occupied-voxel count per column.
// f_b: N_z - z of the lowest occupied voxel strictly above ground (0 = none).
struct FeatureMaps {
    Map2f f_t;
    Map2f f_s;
    Map2f f_b;
    Image3f stacked;
};

namespace detail {

inline int highest_bit_plus_one(const std::uint64_t* col, int wpc) {
    for (int w = wpc - 1; w >= 0; --w)
        if (col[w]) return w * 64 + 64 - std::countl_zero(col[w]);
    return 0;
}

inline int popcount_column(const std::uint64_t* col, int wpc) {
    int n = 0;
    for (int w = 0; w < wpc; ++w) n += std::popcount(col[w]);
    return n;
}

// lowest set bit with z > ground_z, or -1
inline int lowest_bit_above(const std::uint64_t* col, int wpc, int ground_z) {
    for (int w = 0; w < wpc; ++w) {
        std::uint64_t v = col[w];
        const int base = w * 64;
        if (base + 63 <= ground_z) continue;
        if (ground_z >= base) v &= ~((std::uint64_t(2) << (ground_z - base)) - 1);
        if (v) return base + std::countr_zero(v);
    }
    return -1;
}

} // namespace detail

inline Map2f top_down(const OccupancyVolume& v) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x)
            out.at(x, y) = float(detail::highest_bit_plus_one(v.column(x, y), v.words_per_column));
    return out;
}

inline Map2f column_sum(const OccupancyVolume& v) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x)
            out.at(x, y) = float(detail::popcount_column(v.column(x, y), v.words_per_column));
    return out;
}

inline Map2f bottom_up(const OccupancyVolume& v, int ground_z) {
    Map2f out(v.spec.nx, v.spec.ny);
    for (int y = 0; y < v.spec.ny; ++y)
        for (int x = 0; x < v.spec.nx; ++x) {
            const int z = detail::lowest_bit_above(v.column(x, y), v.words_per_column, ground_z);
            out.at(x, y) = z < 0 ? 0.f : float(v.spec.nz - z);
        }
    return out;
}

inline Map2f bottom_up(const OccupancyVolume& v) { return bottom_up(v, v.spec.ground_z); }

// (f_t, f_s, f_b) / N_z stacked along the channel axis, clamped to [0, 1].
inline Image3f stack_features(const Map2f& f_t, const Map2f& f_s, const Map2f& f_b, int nz) {
    if (f_t.width != f_s.width || f_t.width != f_b.width || f_t.height != f_s.height ||
        f_t.height != f_b.height)
        throw std::invalid_argument("stack_features: map dimensions differ");
    if (nz < 1) throw std::invalid_argument("stack_features: nz must be >= 1");
    Image3f out(f_t.width, f_t.height);
    const float fnz = float(nz);
    for (int y = 0; y < f_t.height; ++y)
        for (int x = 0; x < f_t.width; ++x) {
            out.at(x, y, 0) = std::clamp(f_t.at(x, y) / fnz, 0.f, 1.f);
            out.at(x, y, 1) = std::clamp(f_s.at(x, y) / fnz, 0.f, 1.f);
            out.at(x, y, 2) = std::clamp(f_b.at(x, y) / fnz, 0.f, 1.f);
        }
    return out;
}

inline FeatureMaps compute_feature_maps(const OccupancyVolume& v) {
    FeatureMaps maps;
    maps.f_t = top_down(v);
    maps.f_s = column_sum(v);
    maps.f_b = bottom_up(v);
    maps.stacked = stack_features(maps.f_t, maps.f_s, maps.f_b, v.spec.nz);
    return maps;
}

// Direct point-to-map path for room-scale frames: the full room volume is
// never kept, only a transient per-column bitset. Bit-identical to
// compute_feature_maps(voxelize(frame, spec)).
inline FeatureMaps feature_maps_from_points(const PointFrame& frame, const GridSpec& spec) {
    if (!spec.valid()) throw std::invalid_argument("feature_maps_from_points: invalid grid spec");
    const int wpc = (spec.nz + 63) / 64;
    std::vector<std::uint64_t> cols(std::size_t(spec.nx) * spec.ny * wpc, 0);
    for (const auto& p : frame.points) {
        const Eigen::Vector3i v = spec.to_voxel(p);
        if (spec.contains(v))
            cols[(std::size_t(v.y()) * spec.nx + v.x()) * wpc + std::size_t(v.z() >> 6)] |=
                std::uint64_t(1) << (v.z() & 63);
    }
    FeatureMaps maps;
    maps.f_t = Map2f(spec.nx, spec.ny);
    maps.f_s = Map2f(spec.nx, spec.ny);
    maps.f_b = Map2f(spec.nx, spec.ny);
    for (int y = 0; y < spec.ny; ++y)
        for (int x = 0; x < spec.nx; ++x) {
            const std::uint64_t* col = &cols[(std::size_t(y) * spec.nx + x) * wpc];
            maps.f_t.at(x, y) = float(detail::highest_bit_plus_one(col, wpc));
            maps.f_s.at(x, y) = float(detail::popcount_column(col, wpc));
            const int z = detail::lowest_bit_above(col, wpc, spec.ground_z);
            maps.f_b.at(x, y) = z < 0 ? 0.f : float(spec.nz - z);
        }
    maps.stacked = stack_features(maps.f_t, maps.f_s, maps.f_b, spec.nz);
    return maps;
}

// size x size patch centered at `center` (for even sizes the center occupies
// local index size/2), zero-padded outside the map.
inline Map2f extract_patch(const Map2f& map, const Eigen::Vector2i& center, int size) {
    if (size < 1) throw std::invalid_argument("extract_patch: size must be >= 1");
    Map2f patch(size, size);
    const int half = size / 2;
    for (int j = 0; j < size; ++j)
        for (int i = 0; i < size; ++i)
            patch.at(i, j) = map.sample_or_zero(center.x() + i - half, center.y() + j - half);
    return patch;
}

inline Image3f extract_patch(const Image3f& img, const Eigen::Vector2i& center, int size) {
    if (size < 1) throw std::invalid_argument("extract_patch: size must be >= 1");
    Image3f patch(size, size);
    const int half = size / 2;
    for (int j = 0; j < size; ++j)
        for (int i = 0; i < size; ++i) {
            const int sx = center.x() + i - half;
            const int sy = center.y() + j - half;
            if (!img.in_bounds(sx, sy)) continue;
            patch.at(i, j, 0) = img.at(sx, sy, 0);
            patch.at(i, j, 1) = img.at(sx, sy, 1);
            patch.at(i, j, 2) = img.at(sx, sy, 2);
        }
    return patch;
}

enum class ViewDirection : int { pos_x = 0, neg_x = 1, pos_y = 2, neg_y = 3 };

// Four orthographic side views of a 41x41x100 thin volume, one per
// direction, each 41 (transverse) x 100 (z) with the same near/sum/far
// channel recipe as the top-down stack, normalized by the 41-voxel depth.
// Transverse coordinate is y for the x views and x for the y views.
struct SideViewSet {
    std::array<Image3f, 4> views;

    const Image3f& view(ViewDirection d) const { return views[int(d)]; }
};

inline SideViewSet side_views(const OccupancyVolume& thin) {
    if (thin.spec.nx != kThinDimXY || thin.spec.ny != kThinDimXY ||
        thin.spec.nz != kPersonDimZ)
        throw std::invalid_argument("side_views: thin volume must be 41x41x100");
    const int n = kThinDimXY;
    const int nz = thin.spec.nz;

    // per-(transverse, z) extremes and counts along each horizontal axis
    Grid2<std::int16_t> min_x(n, nz, std::int16_t(n)), max_x(n, nz, std::int16_t(-1));
    Grid2<std::int16_t> min_y(n, nz, std::int16_t(n)), max_y(n, nz, std::int16_t(-1));
    Grid2<std::int16_t> cnt_x(n, nz, 0), cnt_y(n, nz, 0);

    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const std::uint64_t* col = thin.column(x, y);
            for (int w = 0; w < thin.words_per_column; ++w) {
                std::uint64_t bits = col[w];
                while (bits) {
                    const int z = w * 64 + std::countr_zero(bits);
                    bits &= bits - 1;
                    if (x < min_x.at(y, z)) min_x.at(y, z) = std::int16_t(x);
                    if (x > max_x.at(y, z)) max_x.at(y, z) = std::int16_t(x);
                    ++cnt_x.at(y, z);
                    if (y < min_y.at(x, z)) min_y.at(x, z) = std::int16_t(y);
                    if (y > max_y.at(x, z)) max_y.at(x, z) = std::int16_t(y);
                    ++cnt_y.at(x, z);
                }
            }
        }

    SideViewSet out;
    for (auto& v : out.views) v = Image3f(n, nz);
    const float fn = float(n);
    for (int z = 0; z < nz; ++z)
        for (int t = 0; t < n; ++t) {
            if (max_x.at(t, z) >= 0) {
                const float sum = float(cnt_x.at(t, z)) / fn;
                out.views[int(ViewDirection::pos_x)].at(t, z, 0) = float(max_x.at(t, z) + 1) / fn;
                out.views[int(ViewDirection::pos_x)].at(t, z, 1) = sum;
                out.views[int(ViewDirection::pos_x)].at(t, z, 2) = float(min_x.at(t, z) + 1) / fn;
                out.views[int(ViewDirection::neg_x)].at(t, z, 0) = float(n - min_x.at(t, z)) / fn;
                out.views[int(ViewDirection::neg_x)].at(t, z, 1) = sum;
                out.views[int(ViewDirection::neg_x)].at(t, z, 2) = float(n - max_x.at(t, z)) / fn;
            }
            if (max_y.at(t, z) >= 0) {
                const float sum = float(cnt_y.at(t, z)) / fn;
                out.views[int(ViewDirection::pos_y)].at(t, z, 0) = float(max_y.at(t, z) + 1) / fn;
                out.views[int(ViewDirection::pos_y)].at(t, z, 1) = sum;
                out.views[int(ViewDirection::pos_y)].at(t, z, 2) = float(min_y.at(t, z) + 1) / fn;
                out.views[int(ViewDirection::neg_y)].at(t, z, 0) = float(n - min_y.at(t, z)) / fn;
                out.views[int(ViewDirection::neg_y)].at(t, z, 1) = sum;
                out.views[int(ViewDirection::neg_y)].at(t, z, 2) = float(n - max_y.at(t, z)) / fn;
            }
        }
    return out;
}

} // namespace volumetrack
