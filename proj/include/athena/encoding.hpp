#pragma once

#include "athena/types.hpp"

#include <string>

namespace athena {

/// Positional encoding variants. The Ta* variants feed packet timestamps
/// (seconds since flow start) into the same closed forms that the index
/// variants feed the integer position into; Rope variants act on Q/K inside
/// attention instead of the input projection.
enum class EncodingKind {
    None,
    Sinusoidal,
    Fourier,
    Rope,
    TaSinusoidal,
    TaFourier,
    TaRope,
};

constexpr bool is_time_aware(EncodingKind k) {
    return k == EncodingKind::TaSinusoidal || k == EncodingKind::TaFourier || k == EncodingKind::TaRope;
}
constexpr bool is_rope(EncodingKind k) { return k == EncodingKind::Rope || k == EncodingKind::TaRope; }
constexpr bool is_additive(EncodingKind k) {
    return k == EncodingKind::Sinusoidal || k == EncodingKind::Fourier || k == EncodingKind::TaSinusoidal ||
           k == EncodingKind::TaFourier;
}
constexpr bool has_fourier_freqs(EncodingKind k) {
    return k == EncodingKind::Fourier || k == EncodingKind::TaFourier;
}

/// Trainable parameters contributed by the encoding itself.
constexpr int encoding_param_count(EncodingKind k, int d_model) {
    return has_fourier_freqs(k) ? d_model / 2 : 0;
}

const char* to_string(EncodingKind k);
EncodingKind encoding_from_string(const std::string& name);

/// Position argument for each row: 0..n-1 for index variants, scaled
/// timestamps for time-aware ones.
Vec encoding_positions(EncodingKind kind, int n, const Vec& times, double time_scale = 1.0);

/// Classic sin/cos table: column 2i = sin(pos / 10000^{2i/d_model}),
/// column 2i+1 = cos of the same argument. Positions may be real-valued.
Mat sinusoidal_encoding(const Vec& positions, int d_model);

/// Learnable-frequency table: column 2i = sin(2*pi*f_i*pos), 2i+1 = cos.
Mat fourier_encoding(const Vec& positions, const Vec& freqs, int d_model);

/// Gradient of a loss w.r.t. the Fourier frequencies, given the upstream
/// gradient on the encoding matrix produced by fourier_encoding.
Vec fourier_freq_grad(const Vec& positions, const Vec& freqs, const Mat& upstream);

/// Frequencies that make fourier_encoding coincide with sinusoidal_encoding:
/// f_i = 1 / (2*pi*10000^{2i/d_model}). Used as the training initializer.
Vec fourier_equivalent_freqs(int d_model);

/// Rotates consecutive component pairs (x_{2i}, x_{2i+1}) of each row by
/// angle pos * 10000^{-2i/d_head}. Set inverse for the transpose rotation
/// (used by backprop).
Mat rope_rotate(const Mat& x, const Vec& positions, bool inverse = false);

/// H + PE for the additive kinds, H unchanged for None. Calling this with a
/// Rope kind is a contract violation: those act inside attention.
Mat apply_input_encoding(EncodingKind kind, const Mat& h, const Vec& times, const Vec* freqs,
                         double time_scale = 1.0);

}  // namespace athena
