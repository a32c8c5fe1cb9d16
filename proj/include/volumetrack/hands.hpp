#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "volumetrack/image.hpp"
#include "volumetrack/projection.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

// label values shared by all segmenters
inline constexpr std::uint8_t kLabelNone = 0;
inline constexpr std::uint8_t kLabelLeft = 1;
inline constexpr std::uint8_t kLabelRight = 2;
inline constexpr std::uint8_t kLabelHand = 1; // side views have two classes

enum class HandSide { left, right };
enum class SegMode { topdown, side };

// Everything a segmenter may need to resolve which view it is labeling. The
// top-down stage passes only the mode; side calls carry the hand, the view
// direction, and the thin volume's origin in person-volume coordinates.
struct SegContext {
    SegMode mode = SegMode::topdown;
    HandSide hand = HandSide::left;
    ViewDirection direction = ViewDirection::pos_x;
    Eigen::Vector2i thin_origin{0, 0};
};

// Pixel classifier seam. The pipeline treats any implementation as a black
// box that must label only the person centered in the patch.
class Segmenter2D {
public:
    virtual ~Segmenter2D() = default;
    virtual LabelMap label(const Image3f& image, const SegContext& ctx) const = 0;
};

struct HandPoint {
    Eigen::Vector3i voxel{kPersonHalfXY, kPersonHalfXY, kPersonDimZ / 2};
    bool missing = true;
    int topdown_pixels = 0;
    int side_pixels = 0;
};

struct HandEstimate {
    HandPoint left, right;
};

inline const Eigen::Vector3i kMissingHandFallback{kPersonHalfXY, kPersonHalfXY,
                                                  kPersonDimZ / 2};

// Component-wise lower median of the labeled pixel coordinates.
inline std::optional<Eigen::Vector2i> median_xy(const LabelMap& labels, std::uint8_t cls) {
    std::vector<int> xs, ys;
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x)
            if (labels.at(x, y) == cls) {
                xs.push_back(x);
                ys.push_back(y);
            }
    if (xs.empty()) return std::nullopt;
    const std::size_t mid = (xs.size() - 1) / 2; // lower median
    std::nth_element(xs.begin(), xs.begin() + std::ptrdiff_t(mid), xs.end());
    std::nth_element(ys.begin(), ys.begin() + std::ptrdiff_t(mid), ys.end());
    return Eigen::Vector2i{xs[mid], ys[mid]};
}

// Lower median of the z coordinates pooled across the four side views.
inline std::optional<int> median_z(const std::array<LabelMap, 4>& views,
                                   std::uint8_t cls = kLabelHand) {
    std::vector<int> zs;
    for (const auto& view : views)
        for (int z = 0; z < view.height; ++z)
            for (int t = 0; t < view.width; ++t)
                if (view.at(t, z) == cls) zs.push_back(z);
    if (zs.empty()) return std::nullopt;
    const std::size_t mid = (zs.size() - 1) / 2;
    std::nth_element(zs.begin(), zs.begin() + std::ptrdiff_t(mid), zs.end());
    return zs[mid];
}

// Projections of person-volume voxels into the label-map planes; shared by
// the ground-truth segmenter and the training-set exporter.
inline LabelMap label_from_voxels_topdown(std::span<const Eigen::Vector3i> left,
                                          std::span<const Eigen::Vector3i> right) {
    LabelMap out(kPersonDimXY, kPersonDimXY, kLabelNone);
    for (const auto& v : right)
        if (v.x() >= 0 && v.x() < kPersonDimXY && v.y() >= 0 && v.y() < kPersonDimXY)
            out.at(v.x(), v.y()) = kLabelRight;
    for (const auto& v : left)
        if (v.x() >= 0 && v.x() < kPersonDimXY && v.y() >= 0 && v.y() < kPersonDimXY)
            out.at(v.x(), v.y()) = kLabelLeft;
    return out;
}

// voxels are given in thin-volume-local coordinates
inline LabelMap label_from_voxels_side(std::span<const Eigen::Vector3i> voxels,
                                       ViewDirection dir) {
    LabelMap out(kThinDimXY, kPersonDimZ, kLabelNone);
    const bool x_view = dir == ViewDirection::pos_x || dir == ViewDirection::neg_x;
    for (const auto& v : voxels) {
        const int t = x_view ? v.y() : v.x();
        if (t < 0 || t >= kThinDimXY || v.z() < 0 || v.z() >= kPersonDimZ) continue;
        if (v.x() < 0 || v.x() >= kThinDimXY || v.y() < 0 || v.y() >= kThinDimXY) continue;
        out.at(t, v.z()) = kLabelHand;
    }
    return out;
}

// Top-down stage fixes (x, y); four side views of the thin volume cut at
// that location vote on z. A hand missing at either stage falls back to the
// volume center with the missing flag set.
inline HandEstimate localize_hands(const OccupancyVolume& person, const Image3f& ft_patch,
                                   const Segmenter2D& seg) {
    if (person.spec.nx != kPersonDimXY || person.spec.ny != kPersonDimXY ||
        person.spec.nz != kPersonDimZ)
        throw std::invalid_argument("localize_hands: person volume must be 80x80x100");
    if (ft_patch.width != kPersonDimXY || ft_patch.height != kPersonDimXY)
        throw std::invalid_argument("localize_hands: patch must be 80x80");

    SegContext top_ctx;
    top_ctx.mode = SegMode::topdown;
    const LabelMap topdown = seg.label(ft_patch, top_ctx);
    if (topdown.width != ft_patch.width || topdown.height != ft_patch.height)
        throw std::runtime_error("segmenter returned a label map of the wrong size");

    HandEstimate est;
    for (const HandSide side : {HandSide::left, HandSide::right}) {
        HandPoint& hand = side == HandSide::left ? est.left : est.right;
        const std::uint8_t cls = side == HandSide::left ? kLabelLeft : kLabelRight;
        const auto xy = median_xy(topdown, cls);
        if (!xy) continue; // fallback stays in place
        int labeled = 0;
        for (std::uint8_t v : topdown.data) labeled += (v == cls);
        hand.topdown_pixels = labeled;

        const OccupancyVolume thin = crop_thin_volume(person, *xy);
        const SideViewSet views = side_views(thin);
        std::array<LabelMap, 4> side_labels;
        for (int d = 0; d < 4; ++d) {
            SegContext ctx;
            ctx.mode = SegMode::side;
            ctx.hand = side;
            ctx.direction = ViewDirection(d);
            ctx.thin_origin = {xy->x() - kThinHalfXY, xy->y() - kThinHalfXY};
            side_labels[std::size_t(d)] = seg.label(views.views[std::size_t(d)], ctx);
        }
        const auto z = median_z(side_labels);
        if (!z) continue;
        for (const auto& lm : side_labels)
            for (std::uint8_t v : lm.data) hand.side_pixels += (v == kLabelHand);
        hand.voxel = {xy->x(), xy->y(), *z};
        hand.missing = false;
    }
    return est;
}

// Non-learned extremity baseline. Top-down: the two occupied pixels farthest
// from the occupancy centroid (with mutual separation), grown into small
// disks, left/right assigned by the signed cross product against the
// centroid-to-midpoint axis. Side: a small disk near the view center-line at
// the most extremal z. Documented best-effort; poses with hands against the
// body are expected failures.
class HeuristicSegmenter : public Segmenter2D {
public:
    LabelMap label(const Image3f& image, const SegContext& ctx) const override {
        return ctx.mode == SegMode::topdown ? label_topdown(image) : label_side(image);
    }

private:
    static LabelMap label_topdown(const Image3f& patch) {
        LabelMap out(patch.width, patch.height, kLabelNone);
        const double cx = patch.width / 2.0, cy = patch.height / 2.0;
        std::vector<Eigen::Vector2d> occ;
        Eigen::Vector2d centroid{0, 0};
        for (int y = 0; y < patch.height; ++y)
            for (int x = 0; x < patch.width; ++x) {
                if (patch.at(x, y, 0) <= 0.f) continue;
                const double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy > 35.0 * 35.0) continue;
                occ.push_back({double(x), double(y)});
                centroid += Eigen::Vector2d(x, y);
            }
        if (occ.size() < 4) return out;
        centroid /= double(occ.size());

        // first pick: farthest from the centroid
        auto farthest = [&](const std::optional<Eigen::Vector2d>& avoid) {
            Eigen::Vector2d best{0, 0};
            double best_d = -1;
            for (const auto& p : occ) {
                if (avoid && (p - *avoid).norm() < 10.0) continue;
                const double d = (p - centroid).norm();
                if (d > best_d) {
                    best_d = d;
                    best = p;
                }
            }
            return std::pair{best, best_d};
        };
        const auto [p1, d1] = farthest(std::nullopt);
        if (d1 < 0) return out;
        const auto [p2, d2] = farthest(p1);
        if (d2 < 0) return out;

        const Eigen::Vector2d mid = 0.5 * (p1 + p2);
        const Eigen::Vector2d axis = mid - centroid;
        auto assign = [&](const Eigen::Vector2d& p) {
            const Eigen::Vector2d r = p - centroid;
            const double cross = axis.x() * r.y() - axis.y() * r.x();
            return cross >= 0 ? kLabelLeft : kLabelRight;
        };
        std::uint8_t c1 = assign(p1);
        std::uint8_t c2 = assign(p2);
        if (c1 == c2) c2 = (c1 == kLabelLeft) ? kLabelRight : kLabelLeft;
        grow_disk(out, p1, c1);
        grow_disk(out, p2, c2);
        return out;
    }

    static LabelMap label_side(const Image3f& view) {
        LabelMap out(view.width, view.height, kLabelNone);
        const double center_t = view.width / 2.0;
        // mean z of all occupied pixels; the hand is assumed extremal
        double mean_z = 0;
        int count = 0;
        for (int z = 0; z < view.height; ++z)
            for (int t = 0; t < view.width; ++t)
                if (view.at(t, z, 1) > 0.f) {
                    mean_z += z;
                    ++count;
                }
        if (count == 0) return out;
        mean_z /= count;

        Eigen::Vector2d best{0, 0};
        double best_score = -1;
        for (int z = 0; z < view.height; ++z)
            for (int t = 0; t < view.width; ++t) {
                if (view.at(t, z, 1) <= 0.f) continue;
                if (std::abs(t - center_t) > 8.0) continue;
                const double score =
                    std::abs(z - mean_z) - 0.5 * std::abs(t - center_t);
                if (score > best_score) {
                    best_score = score;
                    best = {double(t), double(z)};
                }
            }
        if (best_score < 0) return out;
        // the extremum sits on the rim of the hand blob; pull the label disk
        // back toward the occupancy to land on the blob center
        if (best.y() > mean_z + 2)
            best.y() -= 2;
        else if (best.y() < mean_z - 2)
            best.y() += 2;
        grow_disk(out, best, kLabelHand);
        return out;
    }

    static void grow_disk(LabelMap& out, const Eigen::Vector2d& c, std::uint8_t cls) {
        for (int dy = -3; dy <= 3; ++dy)
            for (int dx = -3; dx <= 3; ++dx) {
                if (dx * dx + dy * dy > 9) continue;
                const int x = int(std::lround(c.x())) + dx;
                const int y = int(std::lround(c.y())) + dy;
                if (out.in_bounds(x, y)) out.at(x, y) = cls;
            }
    }
};

// Labels nothing; exercises the missing-hand fallback path.
class NullSegmenter : public Segmenter2D {
public:
    LabelMap label(const Image3f& image, const SegContext&) const override {
        return LabelMap(image.width, image.height, kLabelNone);
    }
};

} // namespace volumetrack
