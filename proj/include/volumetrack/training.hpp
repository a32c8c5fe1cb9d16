#pragma once

// Training-set assembly from scripted scenes: detector/verifier patches
// centered on ground-truth roots plus off-person negatives, and hand label
// images from the ground-truth projections.

#include <cstdint>
#include <vector>

#include "volumetrack/detection.hpp"
#include "volumetrack/hands.hpp"
#include "volumetrack/projection.hpp"
#include "volumetrack/synth.hpp"

namespace volumetrack {

struct TrainingSet {
    std::vector<Map2f> linear_patches;    // normalized f_t, 51x51
    std::vector<Image3f> stacked_patches; // 51x51x3
    std::vector<int> labels;              // +1 person, -1 background
    std::vector<int> person_ids;          // -1 for negatives
};

struct HandLabelExample {
    int person_id = 0;
    int frame = 0;
    LabelMap topdown; // 80x80, left/right/none
    std::array<LabelMap, 4> left_views, right_views;
};

struct TrainingSetParams {
    int frame_stride = 1;
    int negatives_per_frame = 3;
    double negative_min_chebyshev = 30; // voxels away from every root
};

inline TrainingSet make_training_set(const SceneScript& script,
                                     const TrainingSetParams& params = {}) {
    TrainingSet set;
    for (int frame = 0; frame < script.num_frames; frame += params.frame_stride) {
        const auto [points, gt] = sample_scene(script, frame);
        const FeatureMaps maps = feature_maps_from_points(points, script.grid);
        Map2f ft_norm(maps.f_t.width, maps.f_t.height);
        for (std::size_t i = 0; i < ft_norm.data.size(); ++i)
            ft_norm.data[i] = maps.stacked.data[i * 3];

        for (const auto& person : gt.people) {
            const Eigen::Vector2i c{person.root_voxel.x(), person.root_voxel.y()};
            set.linear_patches.push_back(extract_patch(ft_norm, c, kDetectorSize));
            set.stacked_patches.push_back(extract_patch(maps.stacked, c, kDetectorSize));
            set.labels.push_back(1);
            set.person_ids.push_back(person.person_id);
        }

        CounterRng rng(script.seed, std::uint64_t(frame), 0x6e656773ULL);
        int placed = 0, attempts = 0;
        while (placed < params.negatives_per_frame && attempts < 200) {
            ++attempts;
            const int x = int(rng.next_u64() % std::uint64_t(script.grid.nx));
            const int y = int(rng.next_u64() % std::uint64_t(script.grid.ny));
            bool clear = true;
            for (const auto& person : gt.people)
                if (std::max(std::abs(x - person.root_voxel.x()),
                             std::abs(y - person.root_voxel.y())) <
                    params.negative_min_chebyshev)
                    clear = false;
            if (!clear) continue;
            set.linear_patches.push_back(extract_patch(ft_norm, {x, y}, kDetectorSize));
            set.stacked_patches.push_back(extract_patch(maps.stacked, {x, y}, kDetectorSize));
            set.labels.push_back(-1);
            set.person_ids.push_back(-1);
            ++placed;
        }
    }
    return set;
}

// Ground-truth hand semantic labels for every person in a frame, in the
// formats the hand segmenters consume.
inline std::vector<HandLabelExample> make_hand_label_examples(const SceneScript& script,
                                                              int frame) {
    const auto [points, gt] = sample_scene(script, frame);
    std::vector<HandLabelExample> out;
    for (const auto& person : gt.people) {
        HandLabelExample ex;
        ex.person_id = person.person_id;
        ex.frame = frame;
        const Eigen::Vector3i lo = person_crop_origin(script.grid, person.root_voxel);
        auto gather = [&](const std::vector<std::int32_t>& idx) {
            std::vector<Eigen::Vector3i> voxels;
            for (std::int32_t i : idx)
                voxels.push_back(script.grid.to_voxel(points.points[std::size_t(i)]) - lo);
            return voxels;
        };
        const auto left = gather(person.left.point_indices);
        const auto right = gather(person.right.point_indices);
        ex.topdown = label_from_voxels_topdown(left, right);
        for (int d = 0; d < 4; ++d) {
            auto shift = [&](const std::vector<Eigen::Vector3i>& vs,
                             const Eigen::Vector3i& center) {
                std::vector<Eigen::Vector3i> local;
                for (const auto& v : vs)
                    local.push_back({v.x() - (center.x() - kThinHalfXY),
                                     v.y() - (center.y() - kThinHalfXY), v.z()});
                return local;
            };
            ex.left_views[std::size_t(d)] =
                label_from_voxels_side(shift(left, person.left.voxel), ViewDirection(d));
            ex.right_views[std::size_t(d)] =
                label_from_voxels_side(shift(right, person.right.voxel), ViewDirection(d));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace volumetrack
