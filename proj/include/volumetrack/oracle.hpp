#pragma once

// Ground-truth-backed verifier and segmenter. These stand in for the trained
// networks of the full system: they label exactly what the synthetic ground
// truth says, with optional corruption knobs for robustness tests.

#include <cstdint>
#include <vector>

#include "volumetrack/detection.hpp"
#include "volumetrack/hands.hpp"
#include "volumetrack/synth.hpp"

namespace volumetrack {

class OracleVerifier : public Verifier {
public:
    explicit OracleVerifier(double gate_voxels = 5.0) : gate_(gate_voxels) {}

    void set_frame_roots(std::vector<Eigen::Vector2d> roots) { roots_ = std::move(roots); }

    void set_frame_roots(const FrameGt& gt) {
        roots_.clear();
        for (const auto& p : gt.people)
            roots_.push_back({double(p.root_voxel.x()), double(p.root_voxel.y())});
    }

    float score(const Image3f&, const Eigen::Vector2i& xy) const override {
        for (const auto& r : roots_)
            if ((r - Eigen::Vector2d(xy.x(), xy.y())).norm() <= gate_) return 1.f;
        return 0.f;
    }

private:
    std::vector<Eigen::Vector2d> roots_;
    double gate_;
};

struct OracleCorruption {
    double flip_to_background = 0; // chance a true label is dropped to none
    double view_wipe_prob = 0;     // independent per side view
    bool wipe_one_of_four = false; // wipe exactly one of the four side views
    int salt_pixels = 0;           // spurious labels sprinkled per image
    std::uint64_t seed = 7;
};

// Labels the pixels onto which the centered person's ground-truth hand
// voxels project. Bound per (frame, person) with the crop center actually
// used by the caller, so labels align with the person volume under test.
class OracleSegmenter : public Segmenter2D {
public:
    OracleSegmenter() = default;
    explicit OracleSegmenter(const OracleCorruption& corruption) : corrupt_(corruption) {}

    void bind(const PointFrame& frame, const GridSpec& room, const PersonGt& person,
              const Eigen::Vector2i& crop_center) {
        left_.clear();
        right_.clear();
        const Eigen::Vector3i lo = person_crop_origin(room, crop_center);
        auto gather = [&](const std::vector<std::int32_t>& indices,
                          std::vector<Eigen::Vector3i>& out) {
            for (std::int32_t idx : indices) {
                if (idx < 0 || idx >= std::int32_t(frame.points.size())) continue;
                const Eigen::Vector3i room_voxel = room.to_voxel(frame.points[std::size_t(idx)]);
                out.push_back(room_voxel - lo);
            }
        };
        gather(person.left.point_indices, left_);
        gather(person.right.point_indices, right_);
        identity_ = (std::uint64_t(frame.timestamp_index) << 20) ^
                    std::uint64_t(person.person_id + 1);
    }

    LabelMap label(const Image3f& image, const SegContext& ctx) const override {
        LabelMap out;
        if (ctx.mode == SegMode::topdown) {
            out = label_from_voxels_topdown(left_, right_);
            corrupt_labels(out, 0x40u, 0);
        } else {
            const auto& voxels = ctx.hand == HandSide::left ? left_ : right_;
            std::vector<Eigen::Vector3i> local;
            local.reserve(voxels.size());
            for (const auto& v : voxels)
                local.push_back({v.x() - ctx.thin_origin.x(), v.y() - ctx.thin_origin.y(),
                                 v.z()});
            out = label_from_voxels_side(local, ctx.direction);
            const std::uint64_t salt =
                0x5000 + (ctx.hand == HandSide::left ? 0 : 8) + int(ctx.direction);
            if (wiped(ctx)) {
                out = LabelMap(out.width, out.height, kLabelNone);
                return out;
            }
            corrupt_labels(out, salt, 1);
        }
        (void)image;
        return out;
    }

private:
    bool wiped(const SegContext& ctx) const {
        const int hand_bit = ctx.hand == HandSide::left ? 0 : 1;
        if (corrupt_.wipe_one_of_four) {
            CounterRng rng(corrupt_.seed, identity_, 0x77u, std::uint64_t(hand_bit));
            return int(rng.next_u64() & 3) == int(ctx.direction);
        }
        if (corrupt_.view_wipe_prob > 0) {
            CounterRng rng(corrupt_.seed, identity_,
                           0x78u + std::uint64_t(int(ctx.direction)),
                           std::uint64_t(hand_bit));
            return rng.uniform01() < corrupt_.view_wipe_prob;
        }
        return false;
    }

    void corrupt_labels(LabelMap& labels, std::uint64_t salt, int mode) const {
        if (corrupt_.flip_to_background <= 0 && corrupt_.salt_pixels <= 0) return;
        CounterRng rng(corrupt_.seed, identity_, salt, 0);
        if (corrupt_.flip_to_background > 0)
            for (auto& v : labels.data)
                if (v != kLabelNone && rng.uniform01() < corrupt_.flip_to_background)
                    v = kLabelNone;
        for (int k = 0; k < corrupt_.salt_pixels; ++k) {
            const int x = int(rng.next_u64() % std::uint64_t(labels.width));
            const int y = int(rng.next_u64() % std::uint64_t(labels.height));
            labels.at(x, y) =
                mode == 0 ? (rng.uniform01() < 0.5 ? kLabelLeft : kLabelRight) : kLabelHand;
        }
    }

    std::vector<Eigen::Vector3i> left_, right_;
    std::uint64_t identity_ = 0;
    OracleCorruption corrupt_;
};

} // namespace volumetrack
