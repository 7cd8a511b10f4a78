#include "athena/encoding.hpp"

#include <cmath>
#include <numbers>

namespace athena {

namespace {
constexpr double kBase = 10000.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

const char* to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::None: return "none";
        case EncodingKind::Sinusoidal: return "sin";
        case EncodingKind::Fourier: return "fourier";
        case EncodingKind::Rope: return "rope";
        case EncodingKind::TaSinusoidal: return "ta-sin";
        case EncodingKind::TaFourier: return "ta-fourier";
        case EncodingKind::TaRope: return "ta-rope";
    }
    return "?";
}

EncodingKind encoding_from_string(const std::string& name) {
    for (EncodingKind k : {EncodingKind::None, EncodingKind::Sinusoidal, EncodingKind::Fourier, EncodingKind::Rope,
                           EncodingKind::TaSinusoidal, EncodingKind::TaFourier, EncodingKind::TaRope}) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown encoding kind: " + name);
}

Vec encoding_positions(EncodingKind kind, int n, const Vec& times, double time_scale) {
    if (is_time_aware(kind)) {
        if (times.size() < n) throw ContractViolation("timestamp vector shorter than sequence");
        return times.head(n) * time_scale;
    }
    return Vec::LinSpaced(n, 0.0, static_cast<double>(n - 1));
}

Mat sinusoidal_encoding(const Vec& positions, int d_model) {
    if (d_model % 2 != 0) throw ContractViolation("d_model must be even");
    const auto n = positions.size();
    Mat pe(n, d_model);
    for (int i = 0; i < d_model / 2; ++i) {
        double inv_freq = 1.0 / std::pow(kBase, 2.0 * i / d_model);
        for (Eigen::Index r = 0; r < n; ++r) {
            double arg = positions[r] * inv_freq;
            pe(r, 2 * i) = std::sin(arg);
            pe(r, 2 * i + 1) = std::cos(arg);
        }
    }
    return pe;
}

Mat fourier_encoding(const Vec& positions, const Vec& freqs, int d_model) {
    if (d_model % 2 != 0) throw ContractViolation("d_model must be even");
    if (freqs.size() != d_model / 2) throw ContractViolation("fourier frequency count must be d_model/2");
    const auto n = positions.size();
    Mat pe(n, d_model);
    for (int i = 0; i < d_model / 2; ++i) {
        for (Eigen::Index r = 0; r < n; ++r) {
            double arg = kTwoPi * freqs[i] * positions[r];
            pe(r, 2 * i) = std::sin(arg);
            pe(r, 2 * i + 1) = std::cos(arg);
        }
    }
    return pe;
}

Vec fourier_freq_grad(const Vec& positions, const Vec& freqs, const Mat& upstream) {
    const int pairs = static_cast<int>(freqs.size());
    Vec grad = Vec::Zero(pairs);
    for (int i = 0; i < pairs; ++i) {
        for (Eigen::Index r = 0; r < positions.size(); ++r) {
            double arg = kTwoPi * freqs[i] * positions[r];
            double scale = kTwoPi * positions[r];
            grad[i] += upstream(r, 2 * i) * scale * std::cos(arg);
            grad[i] -= upstream(r, 2 * i + 1) * scale * std::sin(arg);
        }
    }
    return grad;
}

Vec fourier_equivalent_freqs(int d_model) {
    Vec f(d_model / 2);
    for (int i = 0; i < d_model / 2; ++i) f[i] = 1.0 / (kTwoPi * std::pow(kBase, 2.0 * i / d_model));
    return f;
}

Mat rope_rotate(const Mat& x, const Vec& positions, bool inverse) {
    const auto d_head = x.cols();
    if (d_head % 2 != 0) throw ContractViolation("head dimension must be even");
    if (x.rows() != positions.size()) throw ContractViolation("row/position count mismatch");
    Mat out(x.rows(), d_head);
    const double sign = inverse ? -1.0 : 1.0;
    for (Eigen::Index i = 0; i < d_head / 2; ++i) {
        double omega = std::pow(kBase, -2.0 * static_cast<double>(i) / static_cast<double>(d_head));
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            double theta = sign * positions[r] * omega;
            double c = std::cos(theta), s = std::sin(theta);
            double a = x(r, 2 * i), b = x(r, 2 * i + 1);
            out(r, 2 * i) = c * a - s * b;
            out(r, 2 * i + 1) = s * a + c * b;
        }
    }
    return out;
}

Mat apply_input_encoding(EncodingKind kind, const Mat& h, const Vec& times, const Vec* freqs, double time_scale) {
    if (is_rope(kind)) throw ContractViolation("rotary kinds are applied inside attention, not at the input");
    if (kind == EncodingKind::None) return h;
    const int n = static_cast<int>(h.rows());
    const int d_model = static_cast<int>(h.cols());
    Vec pos = encoding_positions(kind, n, times, time_scale);
    if (kind == EncodingKind::Sinusoidal || kind == EncodingKind::TaSinusoidal)
        return h + sinusoidal_encoding(pos, d_model);
    if (!freqs) throw ContractViolation("fourier kinds need frequency parameters");
    return h + fourier_encoding(pos, *freqs, d_model);
}

}  // namespace athena
