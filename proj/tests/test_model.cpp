#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include "athena/loss.hpp"
#include "athena/model.hpp"

#include <filesystem>
#include <fstream>

using namespace athena;
using namespace athena::testing;

namespace {

ModelConfig table_config(int classes, EncodingKind enc = EncodingKind::TaSinusoidal) {
    ModelConfig cfg;
    cfg.num_classes = classes;
    cfg.encoding = enc;
    return cfg;
}

FlowInput random_input(int n, int d, Rng& rng) {
    FlowInput in;
    in.length = n;
    in.packets.resize(n, d);
    for (Eigen::Index i = 0; i < in.packets.size(); ++i)
        in.packets.data()[i] = rng.uniform_int(0, 255) / 255.0;
    in.times.resize(n);
    in.times[0] = 0.0;
    for (int i = 1; i < n; ++i) in.times[i] = in.times[i - 1] + rng.uniform(0.01, 1.5);
    return in;
}

const EncodingKind kAllKinds[] = {EncodingKind::None,       EncodingKind::Sinusoidal, EncodingKind::Fourier,
                                  EncodingKind::Rope,       EncodingKind::TaSinusoidal,
                                  EncodingKind::TaFourier,  EncodingKind::TaRope};

}  // namespace

TEST_CASE("closed-form parameter count matches the known values") {
    CHECK(param_count(table_config(5)) == 5077);
    CHECK(param_count(table_config(6)) == 5086);
    CHECK(param_count(table_config(9)) == 5113);
}

TEST_CASE("measured array sizes equal the closed form for every class count and encoding") {
    Rng rng(1);
    for (int classes : {2, 5, 6, 9})
        for (EncodingKind enc : kAllKinds) {
            ModelConfig cfg = table_config(classes, enc);
            ModelParams p = init_params(cfg, rng);
            CHECK(p.base_size() == param_count(cfg));
            CHECK(p.total_size() == param_count(cfg) + encoding_param_count(enc, cfg.d_model));
        }
}

TEST_CASE("forward returns a probability vector") {
    Rng rng(2);
    ModelConfig cfg = table_config(5);
    ModelParams p = init_params(cfg, rng);
    FlowInput in = random_input(7, cfg.packet_len, rng);
    Vec probs = forward(p, cfg, in);
    CHECK(probs.size() == 5);
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int c = 0; c < 5; ++c) {
        CHECK(probs[c] > 0.0);
        CHECK(probs[c] < 1.0);
    }
}

TEST_CASE("padded-region timestamps cannot influence the output") {
    Rng rng(3);
    ModelConfig cfg = table_config(3, EncodingKind::TaSinusoidal);
    ModelParams p = init_params(cfg, rng);

    auto sample = random_sample(6, cfg.packet_len, cfg.max_flow_len, 0, rng);
    Vec a = forward(p, cfg, to_input(*sample));

    // the padded view only ever exposes the first n entries to the model
    Vec full = sample->timestamp_vector();
    CHECK(full.size() == cfg.max_flow_len);
    CHECK(full.tail(cfg.max_flow_len - 6).cwiseAbs().maxCoeff() == 0.0);
    Vec b = forward(p, cfg, to_input(*sample));
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("no encoding makes pooled output permutation invariant") {
    Rng rng(4);
    ModelConfig cfg = table_config(4, EncodingKind::None);
    ModelParams p = init_params(cfg, rng);
    FlowInput in = random_input(9, cfg.packet_len, rng);
    Vec base = forward(p, cfg, in);

    std::vector<int> perm{3, 1, 7, 0, 8, 5, 2, 6, 4};
    FlowInput shuffled = in;
    for (int i = 0; i < 9; ++i) shuffled.packets.row(i) = in.packets.row(perm[i]);
    Vec permuted = forward(p, cfg, shuffled);
    CHECK((base - permuted).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("attention rows are simplex vectors over the real positions") {
    Rng rng(5);
    ModelConfig cfg = table_config(3, EncodingKind::TaRope);
    cfg.dropout = 0.0;
    ModelParams p = init_params(cfg, rng);
    FlowInput in = random_input(5, cfg.packet_len, rng);
    ForwardTrace trace;
    forward(p, cfg, in, true, nullptr, &trace);
    for (const auto& a : trace.layers[0].attn) {
        CHECK(a.rows() == 5);
        CHECK(a.cols() == 5);  // padded keys are simply absent
        for (int r = 0; r < 5; ++r) CHECK(a.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(a.minCoeff() >= 0.0);
    }
}

TEST_CASE("rotary kinds leave the input projection output untouched") {
    Rng rng(6);
    for (EncodingKind enc : {EncodingKind::Rope, EncodingKind::TaRope, EncodingKind::None}) {
        ModelConfig cfg = table_config(3, enc);
        cfg.dropout = 0.0;
        ModelParams p = init_params(cfg, rng);
        FlowInput in = random_input(4, cfg.packet_len, rng);
        ForwardTrace trace;
        forward(p, cfg, in, true, nullptr, &trace);
        CHECK((trace.h_enc - trace.h0).cwiseAbs().maxCoeff() == 0.0);
    }
    // additive kinds do modify it
    ModelConfig cfg = table_config(3, EncodingKind::TaSinusoidal);
    cfg.dropout = 0.0;
    ModelParams p = init_params(cfg, rng);
    FlowInput in = random_input(4, cfg.packet_len, rng);
    ForwardTrace trace;
    forward(p, cfg, in, true, nullptr, &trace);
    CHECK((trace.h_enc - trace.h0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("inference is deterministic") {
    Rng rng(7);
    ModelConfig cfg = table_config(4);
    ModelParams p = init_params(cfg, rng);
    FlowInput in = random_input(10, cfg.packet_len, rng);
    Vec a = forward(p, cfg, in);
    Vec b = forward(p, cfg, in);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradients match central finite differences for every encoding kind") {
    for (EncodingKind enc : kAllKinds) {
        CAPTURE(to_string(enc));
        Rng rng(100 + static_cast<int>(enc));
        ModelConfig cfg = table_config(3, enc);
        cfg.dropout = 0.0;  // the loss must be a pure function of the parameters
        ModelParams params = init_params(cfg, rng);
        FlowInput in = random_input(3, cfg.packet_len, rng);
        const int label = 1;

        auto loss_fn = [&](const ModelParams& p) {
            Vec probs = forward(p, cfg, in, true);
            Mat pm(1, cfg.num_classes);
            pm.row(0) = probs.transpose();
            return edl_loss(pm, {label}, {in.length}).loss;
        };

        ForwardTrace trace;
        Vec probs = forward(params, cfg, in, true, nullptr, &trace);
        Mat pm(1, cfg.num_classes);
        pm.row(0) = probs.transpose();
        EdlResult loss = edl_loss(pm, {label}, {in.length});
        ModelParams analytic = zeros_like(cfg);
        backward(trace, params, cfg, loss.dlogits.row(0).transpose(), analytic);

        ModelParams numeric = finite_difference_grads(params, cfg, loss_fn);
        auto a_slots = param_slots(analytic);
        auto n_slots = param_slots(numeric);
        for (std::size_t s = 0; s < a_slots.size(); ++s) {
            CAPTURE(a_slots[s].name);
            double err = group_relative_error(a_slots[s].data, n_slots[s].data, a_slots[s].size);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("gradients flow through dropout masks recorded in the trace") {
    // reseeding the rng per evaluation fixes the dropout masks, so finite
    // differences remain valid with dropout active
    Rng rng(42);
    ModelConfig cfg = table_config(3, EncodingKind::TaFourier);
    cfg.dropout = 0.1;
    ModelParams params = init_params(cfg, rng);
    FlowInput in = random_input(3, cfg.packet_len, rng);

    auto loss_fn = [&](const ModelParams& p) {
        Rng drop(999);
        Vec probs = forward(p, cfg, in, true, &drop);
        Mat pm(1, cfg.num_classes);
        pm.row(0) = probs.transpose();
        return edl_loss(pm, {0}, {in.length}).loss;
    };

    Rng drop(999);
    ForwardTrace trace;
    Vec probs = forward(params, cfg, in, true, &drop, &trace);
    Mat pm(1, cfg.num_classes);
    pm.row(0) = probs.transpose();
    EdlResult loss = edl_loss(pm, {0}, {in.length});
    ModelParams analytic = zeros_like(cfg);
    backward(trace, params, cfg, loss.dlogits.row(0).transpose(), analytic);

    ModelParams numeric = finite_difference_grads(params, cfg, loss_fn);
    auto a_slots = param_slots(analytic);
    auto n_slots = param_slots(numeric);
    for (std::size_t s = 0; s < a_slots.size(); ++s) {
        CAPTURE(a_slots[s].name);
        CHECK(group_relative_error(a_slots[s].data, n_slots[s].data, a_slots[s].size) < 1e-4);
    }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    Rng rng(8);
    ModelConfig cfg = table_config(3);
    cfg.dropout = 0.0;
    ModelParams params = init_params(cfg, rng);
    FlowInput in = random_input(4, cfg.packet_len, rng);
    ForwardTrace trace;
    forward(params, cfg, in, true, nullptr, &trace);
    ModelParams grads = zeros_like(cfg);
    backward(trace, params, cfg, Vec::Zero(cfg.num_classes), grads);
    for (const auto& s : param_slots(grads))
        for (long j = 0; j < s.size; ++j) CHECK(s.data[j] == 0.0);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    Rng rng(9);
    ModelConfig cfg = table_config(3);
    ModelParams params = init_params(cfg, rng);
    ModelParams before = params;
    ModelParams grads = zeros_like(cfg);
    AdamState state;
    adam_step(params, grads, state, 1e-3);
    CHECK(state.step == 1);
    auto a = param_slots(params);
    auto b = param_slots(before);
    for (std::size_t s = 0; s < a.size(); ++s)
        for (long j = 0; j < a[s].size; ++j) CHECK(a[s].data[j] == b[s].data[j]);
}

TEST_CASE("adam: first step with unit gradient moves by about -lr") {
    // bias correction makes both moment estimates ~1 at step 1
    ModelConfig cfg = table_config(2);
    ModelParams params = zeros_like(cfg);
    ModelParams grads = zeros_like(cfg);
    grads.b_head[0] = 1.0;
    AdamState state;
    const double lr = 1e-2;
    adam_step(params, grads, state, lr);
    CHECK(params.b_head[0] == doctest::Approx(-lr).epsilon(1e-6));
}

TEST_CASE("adam: repeated identical gradients approach -lr * sign(g)") {
    ModelConfig cfg = table_config(2);
    ModelParams params = zeros_like(cfg);
    AdamState state;
    const double lr = 1e-3;
    double prev = 0.0;
    for (int step = 0; step < 200; ++step) {
        ModelParams grads = zeros_like(cfg);
        grads.b_head[0] = -2.5;
        double before = params.b_head[0];
        adam_step(params, grads, state, lr);
        prev = params.b_head[0] - before;
    }
    CHECK(prev == doctest::Approx(lr).epsilon(1e-3));  // moving up against a negative gradient
}

TEST_CASE("adam rejects non-finite gradients") {
    ModelConfig cfg = table_config(2);
    ModelParams params = zeros_like(cfg);
    ModelParams grads = zeros_like(cfg);
    grads.w_in(0, 0) = std::numeric_limits<double>::quiet_NaN();
    AdamState state;
    CHECK_THROWS_AS(adam_step(params, grads, state, 1e-3), TrainingError);
}

TEST_CASE("model files round-trip bit-identically") {
    Rng rng(10);
    ModelConfig cfg = table_config(5, EncodingKind::TaFourier);
    ModelParams params = init_params(cfg, rng);
    auto dir = temp_dir("model-io");
    auto path = dir / "model.athm";
    std::vector<std::string> names{"benign", "a", "b", "c", "d"};
    save_model(params, cfg, names, path);

    LoadedModel loaded = load_model(path);
    CHECK(loaded.class_names == names);
    CHECK(loaded.cfg.encoding == EncodingKind::TaFourier);

    FlowInput in = random_input(6, cfg.packet_len, rng);
    Vec a = forward(params, cfg, in);
    Vec b = forward(loaded.params, loaded.cfg, in);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model loader rejects class-count mismatch and truncation") {
    Rng rng(11);
    ModelConfig cfg = table_config(3);
    ModelParams params = init_params(cfg, rng);
    auto dir = temp_dir("model-corrupt");

    CHECK_THROWS_AS(save_model(params, cfg, {"one", "two"}, dir / "bad.athm"), ContractViolation);

    auto path = dir / "model.athm";
    save_model(params, cfg, {"x", "y", "z"}, path);
    auto size = std::filesystem::file_size(path);
    std::string blob(size, '\0');
    {
        std::ifstream is(path, std::ios::binary);
        is.read(blob.data(), static_cast<std::streamsize>(size));
    }
    auto truncated = dir / "truncated.athm";
    {
        std::ofstream os(truncated, std::ios::binary);
        os.write(blob.data(), static_cast<std::streamsize>(size / 2));
    }
    CHECK_THROWS_AS(load_model(truncated), DataError);

    auto garbage = dir / "garbage.athm";
    {
        std::ofstream os(garbage, std::ios::binary);
        os << "definitely not a model";
    }
    CHECK_THROWS_AS(load_model(garbage), DataError);
}

TEST_CASE("forward rejects malformed inputs") {
    Rng rng(12);
    ModelConfig cfg = table_config(3);
    ModelParams params = init_params(cfg, rng);
    FlowInput in = random_input(3, cfg.packet_len, rng);
    in.times.resize(2);
    CHECK_THROWS_AS(forward(params, cfg, in), ContractViolation);

    FlowInput too_long = random_input(cfg.max_flow_len + 1, cfg.packet_len, rng);
    CHECK_THROWS_AS(forward(params, cfg, too_long), ContractViolation);
}
