#pragma once

#include "athena/encoding.hpp"
#include "athena/rng.hpp"
#include "athena/types.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace athena {

struct ModelConfig {
    int packet_len = 448;   // d, bytes per packet row
    int max_flow_len = 30;  // N
    int d_model = 8;
    int layers = 1;
    int heads = 4;
    int head_dim = 8;  // deliberately not d_model/heads
    int ffn_dim = 16;
    double dropout = 0.1;
    int num_classes = 2;
    EncodingKind encoding = EncodingKind::TaSinusoidal;
    double time_scale = 1.0;  // multiplier on timestamps before encoding
    double layer_norm_eps = 1e-5;
    bool attention_dropout = true;

    void validate() const;
};

/// Closed-form trainable parameter count of the base model (encoding
/// parameters excluded): d_m[2L(2h*d_h + d_ff + 3) + d + C + 1] + L(3h*d_h + d_ff) + C.
long param_count(const ModelConfig& cfg);

struct LayerParams {
    Mat wq, wk, wv;  // d_model x heads*head_dim
    Vec bq, bk, bv;
    Mat wo;  // heads*head_dim x d_model
    Vec bo;
    Vec ln1_scale, ln1_shift;
    Mat w1;  // d_model x ffn_dim
    Vec b1;
    Mat w2;  // ffn_dim x d_model
    Vec b2;
    Vec ln2_scale, ln2_shift;
};

struct ModelParams {
    Mat w_in;  // packet_len x d_model
    Vec b_in;
    std::vector<LayerParams> layers;
    Mat w_head;  // d_model x num_classes
    Vec b_head;
    Vec fourier_freqs;  // d_model/2 when the encoding is a Fourier kind, else empty

    long base_size() const;   // everything except fourier_freqs
    long total_size() const;
    void set_zero();
};

/// One named view per parameter array, in a fixed order shared by the
/// optimizer, serializer and parameter census.
struct ParamSlot {
    std::string name;
    double* data;
    long size;
};
std::vector<ParamSlot> param_slots(ModelParams& p);

ModelParams init_params(const ModelConfig& cfg, Rng& rng);
ModelParams zeros_like(const ModelConfig& cfg);

struct LayerTrace {
    Mat h_in;
    Mat q, k, v;            // pre-rotation projections, n x heads*head_dim
    Mat q_rot, k_rot;       // post-rotation (== q,k for non-rotary kinds)
    std::vector<Mat> attn;  // per head, n x n, post-softmax pre-dropout
    std::vector<Mat> attn_mask;  // dropout keep-masks scaled by 1/(1-p); empty when inactive
    Mat ctx;                     // n x heads*head_dim
    Mat o;                       // ctx*wo + bo, pre-dropout
    Mat o_mask;
    Mat r1;  // residual sum entering the first layer norm
    Mat ln1_xhat;
    Vec ln1_inv_std;
    Mat h1;
    Mat z;  // FFN pre-activation
    Mat u;  // FFN output, pre-dropout
    Mat u_mask;
    Mat r2;
    Mat ln2_xhat;
    Vec ln2_inv_std;
    Mat h2;
};

struct ForwardTrace {
    const FlowInput* input = nullptr;  // borrowed; must outlive the backward pass
    int n = 0;
    Vec positions;  // encoding positions actually used
    Mat h0;         // input projection output
    Mat h_enc;      // after additive encoding (== h0 for None/rotary kinds)
    std::vector<LayerTrace> layers;
    Vec pooled;
    Vec logits;
    Vec probs;
};

/// Runs the classifier on one flow and returns class probabilities.
/// In training mode dropout is active (requires rng) and, when trace is
/// given, intermediates for backward() are captured. Computation covers the
/// n real rows only; padding can never influence the output.
Vec forward(const ModelParams& params, const ModelConfig& cfg, const FlowInput& input, bool training = false,
            Rng* rng = nullptr, ForwardTrace* trace = nullptr);

/// Accumulates analytic gradients for every trainable array into `grads`
/// (shaped by zeros_like). `dlogits` is the loss gradient w.r.t. the logits.
void backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& cfg, const Vec& dlogits,
              ModelParams& grads);

struct AdamState {
    std::vector<Vec> m, v;  // one flat accumulator pair per parameter slot
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update. Throws TrainingError on non-finite gradients.
void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, double lr);

void save_model(const ModelParams& params, const ModelConfig& cfg, const std::vector<std::string>& class_names,
                const std::filesystem::path& path);

struct LoadedModel {
    ModelParams params;
    ModelConfig cfg;
    std::vector<std::string> class_names;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace athena
