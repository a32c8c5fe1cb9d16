#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "volumetrack/detection.hpp"
#include "volumetrack/matching.hpp"
#include "volumetrack/projection.hpp"
#include "volumetrack/volume.hpp"

namespace volumetrack {

// ---------------------------------------------------------------------------
// Appearance descriptors

// 20-bin height profile: occupied-voxel counts per 5-voxel z band of the
// person volume, L1-normalized. Used when the frame carries no colors.
inline Descriptor appearance_descriptor(const OccupancyVolume& person) {
    Descriptor d;
    d.kind = DescriptorKind::height_profile;
    d.values.assign(20, 0.f);
    for (int y = 0; y < person.spec.ny; ++y)
        for (int x = 0; x < person.spec.nx; ++x) {
            const std::uint64_t* col = person.column(x, y);
            for (int w = 0; w < person.words_per_column; ++w) {
                std::uint64_t bits = col[w];
                while (bits) {
                    const int z = w * 64 + std::countr_zero(bits);
                    bits &= bits - 1;
                    const int band = std::min(z / 5, 19);
                    d.values[std::size_t(band)] += 1.f;
                }
            }
        }
    float total = 0.f;
    for (float v : d.values) total += v;
    if (total > 0.f)
        for (auto& v : d.values) v /= total;
    return d;
}

// 8x8x8 RGB histogram over the frame points that fall inside the crop
// region, L1-normalized.
inline Descriptor appearance_descriptor(const PointFrame& frame, const GridSpec& crop_region) {
    if (!frame.has_colors())
        throw std::invalid_argument("color appearance descriptor requires point colors");
    Descriptor d;
    d.kind = DescriptorKind::color_histogram;
    d.values.assign(512, 0.f);
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
        const Eigen::Vector3i v = crop_region.to_voxel(frame.points[i]);
        if (!crop_region.contains(v)) continue;
        const auto& c = frame.colors[i];
        d.values[std::size_t((c[0] >> 5) * 64 + (c[1] >> 5) * 8 + (c[2] >> 5))] += 1.f;
    }
    float total = 0.f;
    for (float v : d.values) total += v;
    if (total > 0.f)
        for (auto& v : d.values) v /= total;
    return d;
}

// ---------------------------------------------------------------------------
// Lucas-Kanade on the f_t map

struct FlowResult {
    Eigen::Vector2d displacement{0, 0};
    bool degenerate = false;
};

namespace detail {

inline double bilinear(const Map2f& m, double x, double y) {
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    const double v00 = m.sample_or_zero(x0, y0), v10 = m.sample_or_zero(x0 + 1, y0);
    const double v01 = m.sample_or_zero(x0, y0 + 1), v11 = m.sample_or_zero(x0 + 1, y0 + 1);
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 +
           fx * fy * v11;
}

} // namespace detail

// Iterative single-scale Lucas-Kanade around `point`: each iteration solves
// the 2x2 normal equations of the windowed structure tensor with bilinear
// sampling of the current map. Ill-conditioned windows return (0,0) flagged
// degenerate.
inline FlowResult lk_flow(const Map2f& f_prev, const Map2f& f_cur, const Eigen::Vector2d& point,
                          int window = 21, int iters = 10) {
    if (window < 3 || (window & 1) == 0)
        throw std::invalid_argument("lk_flow: window must be odd and >= 3");
    const int half = window / 2;
    const std::size_t count = std::size_t(window) * std::size_t(window);

    std::vector<double> gx(count), gy(count), tpl(count);
    double a11 = 0, a12 = 0, a22 = 0;
    for (int j = 0; j < window; ++j)
        for (int i = 0; i < window; ++i) {
            const double px = point.x() + i - half;
            const double py = point.y() + j - half;
            const double ix =
                0.5 * (detail::bilinear(f_prev, px + 1, py) - detail::bilinear(f_prev, px - 1, py));
            const double iy =
                0.5 * (detail::bilinear(f_prev, px, py + 1) - detail::bilinear(f_prev, px, py - 1));
            const std::size_t idx = std::size_t(j) * window + std::size_t(i);
            gx[idx] = ix;
            gy[idx] = iy;
            tpl[idx] = detail::bilinear(f_prev, px, py);
            a11 += ix * ix;
            a12 += ix * iy;
            a22 += iy * iy;
        }

    const double trace = a11 + a22;
    const double det = a11 * a22 - a12 * a12;
    // condition estimate via eigenvalue ratio of the structure tensor
    const double disc = std::sqrt(std::max(0.0, trace * trace / 4 - det));
    const double lmin = trace / 2 - disc;
    const double lmax = trace / 2 + disc;
    if (!(lmin > 0) || lmax / lmin > 1e6) return {{0, 0}, true};

    Eigen::Vector2d d{0, 0};
    for (int it = 0; it < iters; ++it) {
        double b1 = 0, b2 = 0;
        for (int j = 0; j < window; ++j)
            for (int i = 0; i < window; ++i) {
                const std::size_t idx = std::size_t(j) * window + std::size_t(i);
                const double cur = detail::bilinear(f_cur, point.x() + i - half + d.x(),
                                                    point.y() + j - half + d.y());
                const double diff = tpl[idx] - cur;
                b1 += gx[idx] * diff;
                b2 += gy[idx] * diff;
            }
        const Eigen::Vector2d step{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
        d += step;
        if (step.squaredNorm() < 1e-6) break;
    }
    return {d, false};
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrackEntry {
    Eigen::Vector2d pos{0, 0};
    bool predicted = false; // true when extended by motion prediction
    float prob = 0.f;       // person probability observed this frame
};

struct Trajectory {
    std::int64_t id = 0;
    std::deque<TrackEntry> history; // bounded ring, newest at the back
    Descriptor appearance;
    Eigen::Vector2d velocity{0, 0};
    double prob_sum = 0;
    std::int64_t frames_observed = 0;
    std::int64_t age = 0; // frames since birth, birth frame counts as 1
    int matched_updates = 0;

    double person_score() const {
        return frames_observed > 0 ? prob_sum / double(frames_observed) : 0.0;
    }
    const Eigen::Vector2d& position() const { return history.back().pos; }
};

struct TrackerConfig {
    double tau_kill = 0.3;
    int probation = 3;
    double gating_radius = 10.0;
    int max_edges_per_row = 10;
    MatchWeights weights;
    float p_min = 0.5f;
    int history_capacity = 1000;
    int appearance_cap = 100; // running-mean weight floor is 1/appearance_cap
    int lk_window = 21;
    int lk_iters = 10;
};

struct ReportedTrack {
    std::int64_t frame = 0;
    std::int64_t id = 0;
    Eigen::Vector2d pos{0, 0};
    bool predicted = false;
    double person_score = 0;
};

// Per-frame tracker state machine: matched trajectories extend and update
// everything, unmatched ones coast on Lucas-Kanade prediction with a frozen
// appearance model, unmatched candidates are born, and trajectories die when
// the aggregated person score falls under tau_kill. New tracks are reported
// only once they outlive probation.
class Tracker {
public:
    explicit Tracker(const TrackerConfig& cfg, const Verifier* verifier)
        : cfg_(cfg), verifier_(verifier) {}

    std::vector<ReportedTrack> step(const FeatureMaps& maps,
                                    const std::vector<Proposal>& proposals,
                                    const std::vector<Descriptor>& proposal_desc = {}) {
        // 1. predict every trajectory forward on the f_t pair
        std::vector<Eigen::Vector2d> predicted(tracks_.size());
        std::vector<Eigen::Vector2d> flows(tracks_.size(), Eigen::Vector2d::Zero());
        for (std::size_t t = 0; t < tracks_.size(); ++t) {
            const Eigen::Vector2d last = tracks_[t].position();
            Eigen::Vector2d flow = Eigen::Vector2d::Zero();
            if (has_prev_) {
                const FlowResult r =
                    lk_flow(prev_ft_, maps.f_t, last, cfg_.lk_window, cfg_.lk_iters);
                flow = r.degenerate ? tracks_[t].velocity : r.displacement;
            }
            flows[t] = flow;
            predicted[t] = clamp_to_map(last + flow, maps.f_t);
        }

        // 2. assignment against the current proposals
        std::vector<Eigen::Vector2d> cand_pos;
        std::vector<double> cand_prob;
        for (const auto& p : proposals) {
            cand_pos.push_back({double(p.x), double(p.y)});
            cand_prob.push_back(double(p.person_prob));
        }
        std::vector<Descriptor> track_desc;
        for (const auto& t : tracks_) track_desc.push_back(t.appearance);
        BuildConfig bcfg;
        bcfg.gating_radius = cfg_.gating_radius;
        bcfg.max_edges_per_row = cfg_.max_edges_per_row;
        bcfg.weights = cfg_.weights;
        const AssignmentProblem problem =
            build_problem(predicted, track_desc, cand_pos, proposal_desc, cand_prob, bcfg);
        const Matching matching = solve_assignment(problem);

        std::vector<int> track_to_cand(tracks_.size(), -1);
        std::vector<char> cand_used(proposals.size(), 0);
        for (const auto& [i, j] : matching.pairs) {
            track_to_cand[std::size_t(i)] = j;
            cand_used[std::size_t(j)] = 1;
        }

        // 3./4. extend matched and coasting trajectories
        for (std::size_t t = 0; t < tracks_.size(); ++t) {
            Trajectory& trk = tracks_[t];
            const Eigen::Vector2d prev_pos = trk.position();
            const int j = track_to_cand[t];
            if (j >= 0) {
                const auto& cand = proposals[std::size_t(j)];
                const Eigen::Vector2d pos{double(cand.x), double(cand.y)};
                push_entry(trk, {pos, false, cand.person_prob});
                trk.prob_sum += cand.person_prob;
                ++trk.frames_observed;
                ++trk.matched_updates;
                if (j < int(proposal_desc.size()))
                    update_appearance(trk, proposal_desc[std::size_t(j)]);
                trk.velocity = 0.5 * (pos - prev_pos) + 0.5 * flows[t];
            } else {
                const Eigen::Vector2d pos = predicted[t];
                float prob = 0.f;
                if (verifier_) {
                    const Eigen::Vector2i center{int(std::lround(pos.x())),
                                                 int(std::lround(pos.y()))};
                    const Image3f patch = extract_patch(maps.stacked, center, kDetectorSize);
                    prob = std::clamp(verifier_->score(patch, center), 0.f, 1.f);
                }
                push_entry(trk, {pos, true, prob});
                trk.prob_sum += prob;
                ++trk.frames_observed;
                trk.velocity = 0.5 * (pos - prev_pos) + 0.5 * flows[t];
            }
            ++trk.age;
        }

        // 5. births from unmatched candidates
        for (std::size_t j = 0; j < proposals.size(); ++j) {
            if (cand_used[j]) continue;
            Trajectory trk;
            trk.id = next_id_++;
            const auto& cand = proposals[j];
            trk.history.push_back(
                {{double(cand.x), double(cand.y)}, false, cand.person_prob});
            if (j < proposal_desc.size()) {
                trk.appearance = proposal_desc[j];
                trk.matched_updates = 1;
            }
            trk.prob_sum = cand.person_prob;
            trk.frames_observed = 1;
            trk.age = 1;
            tracks_.push_back(std::move(trk));
        }

        // 6. deaths
        std::erase_if(tracks_, [&](const Trajectory& t) {
            return t.person_score() < cfg_.tau_kill;
        });

        // report
        std::vector<ReportedTrack> out;
        const std::int64_t report_age = std::max(1, cfg_.probation);
        for (const auto& t : tracks_)
            if (t.age >= report_age)
                out.push_back({frame_index_, t.id, t.position(), t.history.back().predicted,
                               t.person_score()});

        prev_ft_ = maps.f_t;
        has_prev_ = true;
        ++frame_index_;
        return out;
    }

    const std::vector<Trajectory>& trajectories() const { return tracks_; }
    std::int64_t frame_index() const { return frame_index_; }

private:
    static Eigen::Vector2d clamp_to_map(const Eigen::Vector2d& p, const Map2f& m) {
        return {std::clamp(p.x(), 0.0, double(m.width - 1)),
                std::clamp(p.y(), 0.0, double(m.height - 1))};
    }

    void push_entry(Trajectory& trk, const TrackEntry& e) {
        trk.history.push_back(e);
        while (int(trk.history.size()) > cfg_.history_capacity) trk.history.pop_front();
    }

    // cumulative running mean while matched; the floor keeps old tracks
    // adapting
    void update_appearance(Trajectory& trk, const Descriptor& d) {
        if (d.kind == DescriptorKind::none) return;
        if (trk.appearance.kind == DescriptorKind::none) {
            trk.appearance = d;
            return;
        }
        if (trk.appearance.kind != d.kind || trk.appearance.values.size() != d.values.size())
            return;
        const double w =
            1.0 / std::min<double>(trk.matched_updates, double(cfg_.appearance_cap));
        for (std::size_t i = 0; i < d.values.size(); ++i)
            trk.appearance.values[i] =
                float((1.0 - w) * trk.appearance.values[i] + w * d.values[i]);
    }

    TrackerConfig cfg_;
    const Verifier* verifier_ = nullptr;
    std::vector<Trajectory> tracks_;
    std::int64_t next_id_ = 0;
    std::int64_t frame_index_ = 0;
    Map2f prev_ft_;
    bool has_prev_ = false;
};

} // namespace volumetrack
