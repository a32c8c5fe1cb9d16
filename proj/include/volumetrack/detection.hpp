#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volumetrack/image.hpp"
#include "volumetrack/projection.hpp"
#include "volumetrack/rng.hpp"

namespace volumetrack {

inline constexpr int kDetectorSize = 51;

// Linear stage of the people-proposal cascade: a 51x51 weight map scored by
// cross-correlation over the normalized f_t map.
struct LinearDetector {
    Map2f weights{kDetectorSize, kDetectorSize};
    float bias = 0.f;
    float delta = -0.3f; // proposal threshold, small negative number
    int nms_radius = 25;
};

struct Proposal {
    int x = 0;
    int y = 0;
    double linear_score = 0;
    float person_prob = -1.f; // set by verify()
    bool accepted = false;    // person_prob >= p_min
};

// Second cascade stage. Implementations score a 51x51x3 stacked patch; the
// candidate center (room voxel coordinates) is passed along so that
// ground-truth-backed implementations can resolve which person is meant.
class Verifier {
public:
    virtual ~Verifier() = default;
    virtual float score(const Image3f& patch, const Eigen::Vector2i& xy) const = 0;
};

inline double detector_score(const LinearDetector& det, const Map2f& patch) {
    double s = det.bias;
    for (std::size_t i = 0; i < det.weights.data.size(); ++i)
        s += double(det.weights.data[i]) * double(patch.data[i]);
    return s;
}

// Cross-correlation of W over f_t plus b at every pixel, with the input
// zero-extended so scores stay aligned with candidate centers. Computed by
// scattering each nonzero input pixel through the reversed weight rows, so
// the cost scales with map occupancy rather than map area; pixels whose
// window sees only zeros score exactly `bias`.
inline Map2d linear_score_map(const Map2f& ft, const LinearDetector& det) {
    if (ft.width < kDetectorSize || ft.height < kDetectorSize)
        throw std::invalid_argument("linear_score_map: map smaller than detector window");
    const int w = ft.width, h = ft.height;
    const int half = kDetectorSize / 2;
    Map2d score(w, h, 0.0);

    // reversed weight rows: input pixel u contributes v * W(u - x + half, j)
    // to output x, which runs through each row backwards
    std::array<double, std::size_t(kDetectorSize) * kDetectorSize> wrev;
    for (int j = 0; j < kDetectorSize; ++j)
        for (int i = 0; i < kDetectorSize; ++i)
            wrev[std::size_t(j) * kDetectorSize + std::size_t(kDetectorSize - 1 - i)] =
                double(det.weights.at(i, j));

    for (int sy = 0; sy < h; ++sy) {
        const float* frow = &ft.data[std::size_t(sy) * w];
        for (int u = 0; u < w; ++u) {
            const double v = double(frow[u]);
            if (v == 0.0) continue;
            const int ylo = std::max(0, sy - half), yhi = std::min(h - 1, sy + half);
            const int xlo = std::max(0, u - half), xhi = std::min(w - 1, u + half);
            const int klo = xlo - (u - half); // offset into the reversed row
            for (int y = ylo; y <= yhi; ++y) {
                const int j = sy - y + half;
                const double* wr = &wrev[std::size_t(j) * kDetectorSize + std::size_t(klo)];
                double* orow = &score.data[std::size_t(y) * w + std::size_t(xlo)];
                const int len = xhi - xlo + 1;
                for (int t = 0; t < len; ++t) orow[t] += v * wr[t];
            }
        }
    }
    for (auto& s : score.data) s += double(det.bias);
    return score;
}

// Local maxima above delta, greedily suppressed so no two survivors are
// within nms_radius in Chebyshev distance; result sorted by descending
// score (ties by scan order).
inline std::vector<Proposal> propose(const Map2d& score, const LinearDetector& det) {
    std::vector<Proposal> maxima;
    for (int y = 0; y < score.height; ++y)
        for (int x = 0; x < score.width; ++x) {
            const double v = score.at(x, y);
            if (!(v > det.delta)) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dx && !dy) continue;
                    if (score.in_bounds(x + dx, y + dy) && score.at(x + dx, y + dy) > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) maxima.push_back({x, y, v, -1.f, false});
        }
    std::stable_sort(maxima.begin(), maxima.end(), [](const Proposal& a, const Proposal& b) {
        return a.linear_score > b.linear_score;
    });
    std::vector<Proposal> kept;
    for (const auto& m : maxima) {
        bool suppressed = false;
        for (const auto& k : kept)
            if (std::max(std::abs(m.x - k.x), std::abs(m.y - k.y)) <= det.nms_radius) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(m);
    }
    return kept;
}

// Attaches person probabilities. Low-probability proposals are kept (the
// tracker consumes probabilities), only flagged via `accepted`.
inline void verify(const Image3f& stacked, std::vector<Proposal>& proposals,
                   const Verifier& verifier, float p_min = 0.5f) {
    for (auto& p : proposals) {
        const Image3f patch = extract_patch(stacked, {p.x, p.y}, kDetectorSize);
        p.person_prob = std::clamp(verifier.score(patch, {p.x, p.y}), 0.f, 1.f);
        p.accepted = p.person_prob >= p_min;
    }
}

struct LinearTrainParams {
    int epochs = 40;
    double rate = 0.05;
    double l2 = 1e-4;
    std::uint64_t seed = 42;
};

// Primal hinge-loss SGD with a fixed shuffling seed; deterministic given the
// seed. Labels are +/-1.
inline LinearDetector train_linear(const std::vector<Map2f>& patches,
                                   const std::vector<int>& labels,
                                   const LinearTrainParams& params = {}) {
    if (patches.size() != labels.size() || patches.empty())
        throw std::invalid_argument("train_linear: patches and labels must align");
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_linear: need at least one example per class");
    for (const auto& p : patches)
        if (p.width != kDetectorSize || p.height != kDetectorSize)
            throw std::invalid_argument("train_linear: patches must be 51x51");

    const std::size_t dim = std::size_t(kDetectorSize) * kDetectorSize;
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<std::uint32_t> order(patches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = std::uint32_t(i);
    Rng rng(params.seed);

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const double lr = params.rate / (1.0 + epoch);
        rng.shuffle(order);
        for (std::uint32_t idx : order) {
            const Map2f& x = patches[idx];
            const double y = labels[idx] > 0 ? 1.0 : -1.0;
            double dot = b;
            for (std::size_t i = 0; i < dim; ++i) dot += w[i] * double(x.data[i]);
            const double shrink = 1.0 - lr * params.l2;
            for (std::size_t i = 0; i < dim; ++i) w[i] *= shrink;
            if (y * dot < 1.0) {
                const double step = lr * y;
                for (std::size_t i = 0; i < dim; ++i) w[i] += step * double(x.data[i]);
                b += step;
            }
        }
    }
    LinearDetector det;
    for (std::size_t i = 0; i < dim; ++i) det.weights.data[i] = float(w[i]);
    det.bias = float(b);
    return det;
}

// Sets delta to (just below) the score that retains `recall` of the positive
// training patches, per the cascade's high-recall contract.
inline void calibrate_delta(LinearDetector& det, const std::vector<Map2f>& patches,
                            const std::vector<int>& labels, double recall = 0.995) {
    std::vector<double> pos_scores;
    for (std::size_t i = 0; i < patches.size(); ++i)
        if (labels[i] > 0) pos_scores.push_back(detector_score(det, patches[i]));
    if (pos_scores.empty()) throw std::invalid_argument("calibrate_delta: no positives");
    std::sort(pos_scores.begin(), pos_scores.end(), std::greater<double>());
    const std::size_t keep = std::min(
        pos_scores.size(),
        std::size_t(std::ceil(recall * double(pos_scores.size()))));
    det.delta = float(pos_scores[keep - 1] - 1e-4);
}

// Logistic regression on the flattened 51x51x3 stacked patch; the learned
// stand-in for the cascade's verification network.
class LogisticVerifier : public Verifier {
public:
    std::vector<float> weights;
    float bias = 0.f;

    LogisticVerifier() = default;
    LogisticVerifier(std::vector<float> w, float b) : weights(std::move(w)), bias(b) {}

    float score(const Image3f& patch, const Eigen::Vector2i&) const override {
        if (patch.data.size() != weights.size())
            throw std::invalid_argument("LogisticVerifier: patch size mismatch");
        double z = bias;
        for (std::size_t i = 0; i < weights.size(); ++i)
            z += double(weights[i]) * double(patch.data[i]);
        return float(1.0 / (1.0 + std::exp(-z)));
    }
};

struct LogisticTrainParams {
    int epochs = 20;
    double rate = 0.2;
    double l2 = 1e-5;
    std::uint64_t seed = 43;
};

inline LogisticVerifier train_logistic_verifier(const std::vector<Image3f>& patches,
                                                const std::vector<int>& labels,
                                                const LogisticTrainParams& params = {}) {
    if (patches.size() != labels.size() || patches.empty())
        throw std::invalid_argument("train_logistic_verifier: patches and labels must align");
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_logistic_verifier: need both classes");
    const std::size_t dim = patches.front().data.size();
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<std::uint32_t> order(patches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = std::uint32_t(i);
    Rng rng(params.seed);

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const double lr = params.rate / (1.0 + epoch);
        rng.shuffle(order);
        for (std::uint32_t idx : order) {
            const auto& x = patches[idx].data;
            const double y = labels[idx] > 0 ? 1.0 : 0.0;
            double z = b;
            for (std::size_t i = 0; i < dim; ++i) z += w[i] * double(x[i]);
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double g = p - y;
            const double shrink = 1.0 - lr * params.l2;
            for (std::size_t i = 0; i < dim; ++i) w[i] = w[i] * shrink - lr * g * double(x[i]);
            b -= lr * g;
        }
    }
    std::vector<float> wf(dim);
    for (std::size_t i = 0; i < dim; ++i) wf[i] = float(w[i]);
    return LogisticVerifier(std::move(wf), float(b));
}

// Model files, little-endian.
//   VTLD: magic "VTLD", u32 version, 51x51 f32 weights row-major, f32 bias,
//         f32 delta.
//   VTLV: magic "VTLV", u32 version, u32 input_len, f32 weights, f32 bias.

inline void save_linear_detector(const std::string& path, const LinearDetector& det) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("VTLD", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(det.weights.data.data()),
              std::streamsize(det.weights.data.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(&det.bias), 4);
    out.write(reinterpret_cast<const char*>(&det.delta), 4);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline LinearDetector load_linear_detector(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    std::uint32_t version = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || std::string(magic, 4) != "VTLD" || version != 1)
        throw std::runtime_error("not a VTLD v1 model: " + path);
    LinearDetector det;
    in.read(reinterpret_cast<char*>(det.weights.data.data()),
            std::streamsize(det.weights.data.size() * sizeof(float)));
    in.read(reinterpret_cast<char*>(&det.bias), 4);
    in.read(reinterpret_cast<char*>(&det.delta), 4);
    if (!in) throw std::runtime_error("truncated VTLD model: " + path);
    return det;
}

inline void save_logistic_verifier(const std::string& path, const LogisticVerifier& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("VTLV", 4);
    const std::uint32_t version = 1;
    const std::uint32_t len = std::uint32_t(v.weights.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(reinterpret_cast<const char*>(v.weights.data()),
              std::streamsize(v.weights.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(&v.bias), 4);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline LogisticVerifier load_logistic_verifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    std::uint32_t version = 0, len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in || std::string(magic, 4) != "VTLV" || version != 1)
        throw std::runtime_error("not a VTLV v1 model: " + path);
    LogisticVerifier v;
    v.weights.resize(len);
    in.read(reinterpret_cast<char*>(v.weights.data()), std::streamsize(len * sizeof(float)));
    in.read(reinterpret_cast<char*>(&v.bias), 4);
    if (!in) throw std::runtime_error("truncated VTLV model: " + path);
    return v;
}

} // namespace volumetrack
