#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "volumetrack/hands.hpp"
#include "volumetrack/synth.hpp"
#include "volumetrack/tracking.hpp"

namespace volumetrack {

inline int manhattan_error(const Eigen::Vector3i& a, const Eigen::Vector3i& b) {
    return std::abs(a.x() - b.x()) + std::abs(a.y() - b.y()) + std::abs(a.z() - b.z());
}

inline constexpr int kGrossErrorVoxels = 20;
inline constexpr int kHistogramMaxBin = 60; // unit-voxel bins [0,60] plus overflow

struct ErrorRecord {
    std::int64_t frame = 0;
    int person_id = 0;
    HandSide side = HandSide::left;
    Eigen::Vector3i estimate{0, 0, 0};
    Eigen::Vector3i truth{0, 0, 0};
    int error = 0;
    bool missing = false;
};

struct Summary {
    double mean = 0;
    double stddev = 0; // population
    double gross_rate = 0; // fraction with error > 20 voxels
    std::array<std::int64_t, kHistogramMaxBin + 2> histogram{}; // [0..60] + overflow
    std::int64_t n = 0;
};

inline Summary summarize(const std::vector<int>& errors) {
    if (errors.empty()) throw std::invalid_argument("summarize: no records");
    Summary s;
    s.n = std::int64_t(errors.size());
    double sum = 0, sq = 0;
    std::int64_t gross = 0;
    for (int e : errors) {
        sum += e;
        sq += double(e) * e;
        if (e > kGrossErrorVoxels) ++gross;
        const int bin = std::clamp(e, 0, kHistogramMaxBin + 1);
        ++s.histogram[std::size_t(bin)];
    }
    s.mean = sum / double(s.n);
    s.stddev = std::sqrt(std::max(0.0, sq / double(s.n) - s.mean * s.mean));
    s.gross_rate = double(gross) / double(s.n);
    return s;
}

inline Summary summarize(const std::vector<ErrorRecord>& records) {
    std::vector<int> errors;
    errors.reserve(records.size());
    for (const auto& r : records) errors.push_back(r.error);
    return summarize(errors);
}

// ---------------------------------------------------------------------------
// Tracking quality against ground truth

struct TrackingMetrics {
    double accuracy = 0; // matched reported tracks / all reported tracks
    double recall = 0;   // matched person-frames / all person-frames
    int id_switches = 0;
    int fragmentations = 0;
    std::int64_t matched = 0, reported = 0, person_frames = 0;
};

// Greedy per-frame association by distance under the gate, then id and gap
// bookkeeping per ground-truth person.
inline TrackingMetrics tracking_metrics(const std::vector<ReportedTrack>& log,
                                        const std::vector<FrameGt>& gt,
                                        double gate_voxels = 10.0) {
    std::map<std::int64_t, std::vector<const ReportedTrack*>> by_frame;
    for (const auto& r : log) by_frame[r.frame].push_back(&r);

    TrackingMetrics m;
    m.reported = std::int64_t(log.size());
    // per person: sequence of (frame, track id) associations
    std::map<int, std::vector<std::pair<std::int64_t, std::int64_t>>> assoc;

    for (const auto& fgt : gt) {
        m.person_frames += std::int64_t(fgt.people.size());
        const auto it = by_frame.find(fgt.frame);
        if (it == by_frame.end()) continue;
        const auto& tracks = it->second;

        struct Cand {
            double d;
            std::size_t track;
            std::size_t person;
        };
        std::vector<Cand> cands;
        for (std::size_t ti = 0; ti < tracks.size(); ++ti)
            for (std::size_t pi = 0; pi < fgt.people.size(); ++pi) {
                const auto& p = fgt.people[pi];
                const double d =
                    (tracks[ti]->pos -
                     Eigen::Vector2d(p.root_voxel.x(), p.root_voxel.y()))
                        .norm();
                if (d <= gate_voxels) cands.push_back({d, ti, pi});
            }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& a, const Cand& b) { return a.d < b.d; });
        std::vector<char> track_used(tracks.size(), 0), person_used(fgt.people.size(), 0);
        for (const auto& c : cands) {
            if (track_used[c.track] || person_used[c.person]) continue;
            track_used[c.track] = 1;
            person_used[c.person] = 1;
            ++m.matched;
            assoc[fgt.people[c.person].person_id].push_back(
                {fgt.frame, tracks[c.track]->id});
        }
    }

    for (auto& [person, seq] : assoc) {
        std::sort(seq.begin(), seq.end());
        for (std::size_t i = 1; i < seq.size(); ++i) {
            if (seq[i].second != seq[i - 1].second) ++m.id_switches;
            if (seq[i].first > seq[i - 1].first + 1) ++m.fragmentations;
        }
    }
    m.accuracy = m.reported > 0 ? double(m.matched) / double(m.reported) : 1.0;
    m.recall = m.person_frames > 0 ? double(m.matched) / double(m.person_frames) : 1.0;
    return m;
}

// ---------------------------------------------------------------------------
// Report files

struct MethodSummary {
    std::string method;
    std::string hand; // "left" | "right" | "both"
    Summary summary;
};

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MethodSummary>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "method,hand,mean,std,gross_rate,n\n";
    char line[256];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f,%.6f,%lld\n", r.method.c_str(),
                      r.hand.c_str(), r.summary.mean, r.summary.stddev, r.summary.gross_rate,
                      (long long)r.summary.n);
        out << line;
    }
}

inline void write_histogram_csv(const std::string& path, const Summary& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "bin,count\n";
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        if (b <= kHistogramMaxBin)
            out << b << "," << s.histogram[b] << "\n";
        else
            out << "overflow," << s.histogram[b] << "\n";
    }
}

// Static SVG bar chart of the error histogram.
inline void write_histogram_svg(const std::string& path, const Summary& s,
                                const std::string& title) {
    const int bar_w = 12, chart_h = 240, margin = 40;
    const int width = margin * 2 + bar_w * int(s.histogram.size());
    std::int64_t peak = 1;
    for (auto c : s.histogram) peak = std::max(peak, c);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << (chart_h + 2 * margin) << "\">\n";
    out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << title
        << " (n=" << s.n << ", mean=" << s.mean << ")</text>\n";
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        const int h = int(double(s.histogram[b]) / double(peak) * chart_h);
        const int x = margin + int(b) * bar_w;
        const int y = margin + chart_h - h;
        const char* fill = b > kGrossErrorVoxels ? "#c0504d" : "#4f81bd";
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << (bar_w - 2)
            << "\" height=\"" << h << "\" fill=\"" << fill << "\"/>\n";
    }
    out << "<line x1=\"" << margin << "\" y1=\"" << (margin + chart_h) << "\" x2=\""
        << (width - margin) << "\" y2=\"" << (margin + chart_h)
        << "\" stroke=\"#333\"/>\n</svg>\n";
}

} // namespace volumetrack
