#include "athena/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace athena {

void ModelConfig::validate() const {
    if (packet_len < 1 || max_flow_len < 1 || d_model < 1 || layers < 1 || heads < 1 || head_dim < 1 ||
        ffn_dim < 1 || num_classes < 1)
        throw ConfigError("model dimensions must be positive");
    if (d_model % 2 != 0) throw ConfigError("d_model must be even");
    if (head_dim % 2 != 0) throw ConfigError("head_dim must be even");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    if (time_scale <= 0.0) throw ConfigError("time_scale must be positive");
}

long param_count(const ModelConfig& cfg) {
    const long dm = cfg.d_model, L = cfg.layers, h = cfg.heads, dh = cfg.head_dim, dff = cfg.ffn_dim;
    const long d = cfg.packet_len, C = cfg.num_classes;
    return dm * (2 * L * (2 * h * dh + dff + 3) + d + C + 1) + L * (3 * h * dh + dff) + C;
}

namespace {

template <typename Params, typename Slot, typename Push>
void visit_slots(Params& p, Push&& push) {
    push(Slot{"w_in", p.w_in.data(), p.w_in.size()});
    push(Slot{"b_in", p.b_in.data(), p.b_in.size()});
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& lp = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        push(Slot{pre + "wq", lp.wq.data(), lp.wq.size()});
        push(Slot{pre + "bq", lp.bq.data(), lp.bq.size()});
        push(Slot{pre + "wk", lp.wk.data(), lp.wk.size()});
        push(Slot{pre + "bk", lp.bk.data(), lp.bk.size()});
        push(Slot{pre + "wv", lp.wv.data(), lp.wv.size()});
        push(Slot{pre + "bv", lp.bv.data(), lp.bv.size()});
        push(Slot{pre + "wo", lp.wo.data(), lp.wo.size()});
        push(Slot{pre + "bo", lp.bo.data(), lp.bo.size()});
        push(Slot{pre + "ln1_scale", lp.ln1_scale.data(), lp.ln1_scale.size()});
        push(Slot{pre + "ln1_shift", lp.ln1_shift.data(), lp.ln1_shift.size()});
        push(Slot{pre + "ffn_w1", lp.w1.data(), lp.w1.size()});
        push(Slot{pre + "ffn_b1", lp.b1.data(), lp.b1.size()});
        push(Slot{pre + "ffn_w2", lp.w2.data(), lp.w2.size()});
        push(Slot{pre + "ffn_b2", lp.b2.data(), lp.b2.size()});
        push(Slot{pre + "ln2_scale", lp.ln2_scale.data(), lp.ln2_scale.size()});
        push(Slot{pre + "ln2_shift", lp.ln2_shift.data(), lp.ln2_shift.size()});
    }
    push(Slot{"head.w", p.w_head.data(), p.w_head.size()});
    push(Slot{"head.b", p.b_head.data(), p.b_head.size()});
    if (p.fourier_freqs.size() > 0)
        push(Slot{"encoding.fourier_freqs", p.fourier_freqs.data(), p.fourier_freqs.size()});
}

struct ConstParamSlot {
    std::string name;
    const double* data;
    long size;
};

std::vector<ConstParamSlot> const_param_slots(const ModelParams& p) {
    std::vector<ConstParamSlot> out;
    visit_slots<const ModelParams, ConstParamSlot>(p, [&](ConstParamSlot s) { out.push_back(std::move(s)); });
    return out;
}

}  // namespace

std::vector<ParamSlot> param_slots(ModelParams& p) {
    std::vector<ParamSlot> out;
    visit_slots<ModelParams, ParamSlot>(p, [&](ParamSlot s) { out.push_back(std::move(s)); });
    return out;
}

long ModelParams::base_size() const {
    long total = 0;
    for (const auto& s : const_param_slots(*this))
        if (s.name != "encoding.fourier_freqs") total += s.size;
    return total;
}

long ModelParams::total_size() const {
    long total = 0;
    for (const auto& s : const_param_slots(*this)) total += s.size;
    return total;
}

void ModelParams::set_zero() {
    for (auto& s : param_slots(*this)) std::memset(s.data, 0, sizeof(double) * s.size);
}

namespace {

Mat glorot(int rows, int cols, Rng& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    return m;
}

}  // namespace

ModelParams zeros_like(const ModelConfig& cfg) {
    ModelParams p;
    const int hd = cfg.heads * cfg.head_dim;
    p.w_in = Mat::Zero(cfg.packet_len, cfg.d_model);
    p.b_in = Vec::Zero(cfg.d_model);
    p.layers.resize(cfg.layers);
    for (auto& lp : p.layers) {
        lp.wq = Mat::Zero(cfg.d_model, hd);
        lp.wk = Mat::Zero(cfg.d_model, hd);
        lp.wv = Mat::Zero(cfg.d_model, hd);
        lp.bq = Vec::Zero(hd);
        lp.bk = Vec::Zero(hd);
        lp.bv = Vec::Zero(hd);
        lp.wo = Mat::Zero(hd, cfg.d_model);
        lp.bo = Vec::Zero(cfg.d_model);
        lp.ln1_scale = Vec::Zero(cfg.d_model);
        lp.ln1_shift = Vec::Zero(cfg.d_model);
        lp.w1 = Mat::Zero(cfg.d_model, cfg.ffn_dim);
        lp.b1 = Vec::Zero(cfg.ffn_dim);
        lp.w2 = Mat::Zero(cfg.ffn_dim, cfg.d_model);
        lp.b2 = Vec::Zero(cfg.d_model);
        lp.ln2_scale = Vec::Zero(cfg.d_model);
        lp.ln2_shift = Vec::Zero(cfg.d_model);
    }
    p.w_head = Mat::Zero(cfg.d_model, cfg.num_classes);
    p.b_head = Vec::Zero(cfg.num_classes);
    if (has_fourier_freqs(cfg.encoding)) p.fourier_freqs = Vec::Zero(cfg.d_model / 2);
    return p;
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p = zeros_like(cfg);
    p.w_in = glorot(cfg.packet_len, cfg.d_model, rng);
    for (auto& lp : p.layers) {
        const int hd = cfg.heads * cfg.head_dim;
        lp.wq = glorot(cfg.d_model, hd, rng);
        lp.wk = glorot(cfg.d_model, hd, rng);
        lp.wv = glorot(cfg.d_model, hd, rng);
        lp.wo = glorot(hd, cfg.d_model, rng);
        lp.ln1_scale.setOnes();
        lp.ln2_scale.setOnes();
        lp.w1 = glorot(cfg.d_model, cfg.ffn_dim, rng);
        lp.w2 = glorot(cfg.ffn_dim, cfg.d_model, rng);
    }
    p.w_head = glorot(cfg.d_model, cfg.num_classes, rng);
    if (has_fourier_freqs(cfg.encoding)) p.fourier_freqs = fourier_equivalent_freqs(cfg.d_model);
    return p;
}

namespace {

Vec softmax_vec(const Vec& x) {
    Vec e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

void softmax_rows(Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double mx = m.row(i).maxCoeff();
        m.row(i) = (m.row(i).array() - mx).exp();
        m.row(i) /= m.row(i).sum();
    }
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
    Mat m(rows, cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(p) ? 0.0 : keep_scale;
    return m;
}

struct LnCache {
    Mat xhat;
    Vec inv_std;
};

Mat layer_norm(const Mat& x, const Vec& scale, const Vec& shift, double eps, LnCache& cache) {
    const auto n = x.rows();
    const auto m = x.cols();
    Mat y(n, m);
    cache.xhat.resize(n, m);
    cache.inv_std.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mu = x.row(i).mean();
        double var = (x.row(i).array() - mu).square().mean();
        double inv_std = 1.0 / std::sqrt(var + eps);
        cache.inv_std[i] = inv_std;
        cache.xhat.row(i) = (x.row(i).array() - mu) * inv_std;
        y.row(i) = cache.xhat.row(i).cwiseProduct(scale.transpose()) + shift.transpose();
    }
    return y;
}

Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Vec& inv_std, const Vec& scale, Vec& dscale,
                        Vec& dshift) {
    const auto n = dy.rows();
    const auto m = dy.cols();
    Mat dx(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        dshift += dy.row(i).transpose();
        dscale += dy.row(i).cwiseProduct(xhat.row(i)).transpose();
        Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(scale.transpose());
        double mean_dxhat = dxhat.mean();
        double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).mean();
        dx.row(i) =
            inv_std[i] * (dxhat.array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat).matrix();
    }
    return dx;
}

}  // namespace

Vec forward(const ModelParams& params, const ModelConfig& cfg, const FlowInput& input, bool training, Rng* rng,
            ForwardTrace* trace) {
    const int n = input.length;
    if (n < 1 || n > cfg.max_flow_len) throw ContractViolation("flow length out of range");
    if (input.packets.rows() != n || input.packets.cols() != cfg.packet_len)
        throw ContractViolation("packet matrix shape mismatch");
    if (input.times.size() != n) throw ContractViolation("timestamp vector shape mismatch");
    if (training && cfg.dropout > 0.0 && rng == nullptr)
        throw ContractViolation("training with dropout requires an rng");

    const bool drop = training && cfg.dropout > 0.0;
    const int hd = cfg.head_dim;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(hd));

    Vec positions = encoding_positions(cfg.encoding, n, input.times, cfg.time_scale);

    Mat h0 = input.packets * params.w_in;
    h0.rowwise() += params.b_in.transpose();

    Mat h;
    switch (cfg.encoding) {
        case EncodingKind::Sinusoidal:
        case EncodingKind::TaSinusoidal:
            h = h0 + sinusoidal_encoding(positions, cfg.d_model);
            break;
        case EncodingKind::Fourier:
        case EncodingKind::TaFourier:
            h = h0 + fourier_encoding(positions, params.fourier_freqs, cfg.d_model);
            break;
        default:
            h = h0;
            break;
    }

    if (trace) {
        trace->input = &input;
        trace->n = n;
        trace->positions = positions;
        trace->h0 = h0;
        trace->h_enc = h;
        trace->layers.clear();
        trace->layers.resize(cfg.layers);
    }

    for (int l = 0; l < cfg.layers; ++l) {
        const auto& lp = params.layers[l];
        LayerTrace local;
        LayerTrace& t = trace ? trace->layers[l] : local;
        t.h_in = h;

        Mat q = h * lp.wq;
        q.rowwise() += lp.bq.transpose();
        Mat k = h * lp.wk;
        k.rowwise() += lp.bk.transpose();
        Mat v = h * lp.wv;
        v.rowwise() += lp.bv.transpose();
        t.q = q;
        t.k = k;
        t.v = v;

        Mat q_rot = q, k_rot = k;
        if (is_rope(cfg.encoding)) {
            for (int head = 0; head < cfg.heads; ++head) {
                q_rot.middleCols(head * hd, hd) = rope_rotate(q.middleCols(head * hd, hd), positions);
                k_rot.middleCols(head * hd, hd) = rope_rotate(k.middleCols(head * hd, hd), positions);
            }
        }
        t.q_rot = q_rot;
        t.k_rot = k_rot;

        Mat ctx(n, cfg.heads * hd);
        t.attn.resize(cfg.heads);
        t.attn_mask.assign(cfg.heads, Mat());
        for (int head = 0; head < cfg.heads; ++head) {
            Mat scores = q_rot.middleCols(head * hd, hd) * k_rot.middleCols(head * hd, hd).transpose();
            scores *= inv_sqrt_dh;
            softmax_rows(scores);
            t.attn[head] = scores;
            if (drop && cfg.attention_dropout) {
                t.attn_mask[head] = dropout_mask(n, n, cfg.dropout, *rng);
                scores = scores.cwiseProduct(t.attn_mask[head]);
            }
            ctx.middleCols(head * hd, hd).noalias() = scores * v.middleCols(head * hd, hd);
        }
        t.ctx = ctx;

        Mat o = ctx * lp.wo;
        o.rowwise() += lp.bo.transpose();
        t.o = o;
        if (drop) {
            t.o_mask = dropout_mask(n, cfg.d_model, cfg.dropout, *rng);
            o = o.cwiseProduct(t.o_mask);
        }

        t.r1 = h + o;
        LnCache ln1;
        Mat h1 = layer_norm(t.r1, lp.ln1_scale, lp.ln1_shift, cfg.layer_norm_eps, ln1);
        t.ln1_xhat = std::move(ln1.xhat);
        t.ln1_inv_std = std::move(ln1.inv_std);
        t.h1 = h1;

        Mat z = h1 * lp.w1;
        z.rowwise() += lp.b1.transpose();
        t.z = z;
        Mat u = z.cwiseMax(0.0) * lp.w2;
        u.rowwise() += lp.b2.transpose();
        t.u = u;
        if (drop) {
            t.u_mask = dropout_mask(n, cfg.d_model, cfg.dropout, *rng);
            u = u.cwiseProduct(t.u_mask);
        }

        t.r2 = h1 + u;
        LnCache ln2;
        h = layer_norm(t.r2, lp.ln2_scale, lp.ln2_shift, cfg.layer_norm_eps, ln2);
        t.ln2_xhat = std::move(ln2.xhat);
        t.ln2_inv_std = std::move(ln2.inv_std);
        t.h2 = h;
    }

    Vec pooled = h.colwise().mean().transpose();
    Vec logits = params.w_head.transpose() * pooled + params.b_head;
    Vec probs = softmax_vec(logits);

    if (trace) {
        trace->pooled = pooled;
        trace->logits = logits;
        trace->probs = probs;
    }
    return probs;
}

void backward(const ForwardTrace& trace, const ModelParams& params, const ModelConfig& cfg, const Vec& dlogits,
              ModelParams& grads) {
    if (!trace.input) throw ContractViolation("trace was not produced by a training forward pass");
    if (dlogits.size() != cfg.num_classes) throw ContractViolation("logit gradient size mismatch");
    if (static_cast<int>(trace.layers.size()) != cfg.layers || params.layers.size() != grads.layers.size())
        throw ContractViolation("trace/params/grads layer count mismatch");

    const int n = trace.n;
    const int hd = cfg.head_dim;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(hd));

    grads.w_head.noalias() += trace.pooled * dlogits.transpose();
    grads.b_head += dlogits;
    Vec dpooled = params.w_head * dlogits;

    // mean pooling spreads the gradient evenly over the n real rows
    Mat dh = Vec::Ones(n) * (dpooled.transpose() / static_cast<double>(n));

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& lp = params.layers[l];
        auto& gp = grads.layers[l];
        const auto& t = trace.layers[l];

        Mat dr2 = layer_norm_backward(dh, t.ln2_xhat, t.ln2_inv_std, lp.ln2_scale, gp.ln2_scale, gp.ln2_shift);
        Mat dh1 = dr2;
        Mat du = dr2;
        if (t.u_mask.size() > 0) du = du.cwiseProduct(t.u_mask);

        Mat zr = t.z.cwiseMax(0.0);
        gp.w2.noalias() += zr.transpose() * du;
        gp.b2 += du.colwise().sum().transpose();
        Mat dz = (du * lp.w2.transpose()).cwiseProduct((t.z.array() > 0.0).cast<double>().matrix());
        gp.w1.noalias() += t.h1.transpose() * dz;
        gp.b1 += dz.colwise().sum().transpose();
        dh1.noalias() += dz * lp.w1.transpose();

        Mat dr1 = layer_norm_backward(dh1, t.ln1_xhat, t.ln1_inv_std, lp.ln1_scale, gp.ln1_scale, gp.ln1_shift);
        Mat dh_in = dr1;
        Mat do_ = dr1;
        if (t.o_mask.size() > 0) do_ = do_.cwiseProduct(t.o_mask);

        gp.wo.noalias() += t.ctx.transpose() * do_;
        gp.bo += do_.colwise().sum().transpose();
        Mat dctx = do_ * lp.wo.transpose();

        Mat dq_rot = Mat::Zero(n, cfg.heads * hd);
        Mat dk_rot = Mat::Zero(n, cfg.heads * hd);
        Mat dv = Mat::Zero(n, cfg.heads * hd);
        for (int head = 0; head < cfg.heads; ++head) {
            Mat a_used = t.attn[head];
            if (t.attn_mask[head].size() > 0) a_used = a_used.cwiseProduct(t.attn_mask[head]);
            Mat dctx_h = dctx.middleCols(head * hd, hd);
            Mat da_used = dctx_h * t.v.middleCols(head * hd, hd).transpose();
            dv.middleCols(head * hd, hd).noalias() = a_used.transpose() * dctx_h;
            Mat da = da_used;
            if (t.attn_mask[head].size() > 0) da = da.cwiseProduct(t.attn_mask[head]);
            // softmax backward, row-wise
            Mat ds(n, n);
            for (int i = 0; i < n; ++i) {
                double dot = da.row(i).dot(t.attn[head].row(i));
                ds.row(i) = t.attn[head].row(i).cwiseProduct((da.row(i).array() - dot).matrix());
            }
            ds *= inv_sqrt_dh;
            dq_rot.middleCols(head * hd, hd).noalias() = ds * t.k_rot.middleCols(head * hd, hd);
            dk_rot.middleCols(head * hd, hd).noalias() = ds.transpose() * t.q_rot.middleCols(head * hd, hd);
        }

        Mat dq = dq_rot, dk = dk_rot;
        if (is_rope(cfg.encoding)) {
            for (int head = 0; head < cfg.heads; ++head) {
                dq.middleCols(head * hd, hd) = rope_rotate(dq_rot.middleCols(head * hd, hd), trace.positions, true);
                dk.middleCols(head * hd, hd) = rope_rotate(dk_rot.middleCols(head * hd, hd), trace.positions, true);
            }
        }

        gp.wq.noalias() += t.h_in.transpose() * dq;
        gp.bq += dq.colwise().sum().transpose();
        gp.wk.noalias() += t.h_in.transpose() * dk;
        gp.bk += dk.colwise().sum().transpose();
        gp.wv.noalias() += t.h_in.transpose() * dv;
        gp.bv += dv.colwise().sum().transpose();
        dh_in.noalias() += dq * lp.wq.transpose();
        dh_in.noalias() += dk * lp.wk.transpose();
        dh_in.noalias() += dv * lp.wv.transpose();

        dh = std::move(dh_in);
    }

    if (has_fourier_freqs(cfg.encoding))
        grads.fourier_freqs += fourier_freq_grad(trace.positions, params.fourier_freqs, dh);

    grads.w_in.noalias() += trace.input->packets.transpose() * dh;
    grads.b_in += dh.colwise().sum().transpose();
}

void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, double lr) {
    auto pslots = param_slots(params);
    auto gslots = param_slots(grads);
    if (pslots.size() != gslots.size()) throw ContractViolation("parameter/gradient slot mismatch");

    if (state.m.empty()) {
        state.m.resize(pslots.size());
        state.v.resize(pslots.size());
        for (std::size_t i = 0; i < pslots.size(); ++i) {
            state.m[i] = Vec::Zero(pslots[i].size);
            state.v[i] = Vec::Zero(pslots[i].size);
        }
    }

    for (const auto& g : gslots)
        for (long j = 0; j < g.size; ++j)
            if (!std::isfinite(g.data[j])) throw TrainingError("training diverged: non-finite gradient in " + g.name);

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < pslots.size(); ++i) {
        Eigen::Map<Vec> p(pslots[i].data, pslots[i].size);
        Eigen::Map<const Vec> g(gslots[i].data, gslots[i].size);
        Vec& m = state.m[i];
        Vec& v = state.v[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    }
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr char kModelMagic[8] = {'A', 'T', 'H', 'M', 'O', 'D', 'L', '1'};
constexpr std::uint32_t kModelSentinel = 0x454e4421;  // "END!"

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("model file truncated");
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    auto len = read_pod<std::uint32_t>(is);
    if (len > (1u << 20)) throw DataError("model file corrupted: implausible string length");
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw DataError("model file truncated");
    return s;
}

}  // namespace

void save_model(const ModelParams& params, const ModelConfig& cfg, const std::vector<std::string>& class_names,
                const std::filesystem::path& path) {
    if (static_cast<int>(class_names.size()) != cfg.num_classes)
        throw ContractViolation("class name count must equal num_classes");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());

    os.write(kModelMagic, sizeof(kModelMagic));
    write_pod<std::uint32_t>(os, 1);  // format version
    write_pod<std::int32_t>(os, cfg.packet_len);
    write_pod<std::int32_t>(os, cfg.max_flow_len);
    write_pod<std::int32_t>(os, cfg.d_model);
    write_pod<std::int32_t>(os, cfg.layers);
    write_pod<std::int32_t>(os, cfg.heads);
    write_pod<std::int32_t>(os, cfg.head_dim);
    write_pod<std::int32_t>(os, cfg.ffn_dim);
    write_pod<double>(os, cfg.dropout);
    write_pod<std::int32_t>(os, cfg.num_classes);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(cfg.encoding));
    write_pod<double>(os, cfg.time_scale);
    write_pod<double>(os, cfg.layer_norm_eps);
    write_pod<std::uint8_t>(os, cfg.attention_dropout ? 1 : 0);

    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(class_names.size()));
    for (const auto& name : class_names) write_string(os, name);

    auto slots = const_param_slots(params);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(slots.size()));
    for (const auto& s : slots) {
        write_string(os, s.name);
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(s.size));
        os.write(reinterpret_cast<const char*>(s.data), static_cast<std::streamsize>(s.size * sizeof(double)));
    }
    write_pod<std::uint32_t>(os, kModelSentinel);
    if (!os) throw IoError("write failed: " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file: " + path.string());

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw DataError("not a model file: " + path.string());
    auto version = read_pod<std::uint32_t>(is);
    if (version != 1) throw DataError("unsupported model file version");

    LoadedModel out;
    ModelConfig& cfg = out.cfg;
    cfg.packet_len = read_pod<std::int32_t>(is);
    cfg.max_flow_len = read_pod<std::int32_t>(is);
    cfg.d_model = read_pod<std::int32_t>(is);
    cfg.layers = read_pod<std::int32_t>(is);
    cfg.heads = read_pod<std::int32_t>(is);
    cfg.head_dim = read_pod<std::int32_t>(is);
    cfg.ffn_dim = read_pod<std::int32_t>(is);
    cfg.dropout = read_pod<double>(is);
    cfg.num_classes = read_pod<std::int32_t>(is);
    cfg.encoding = static_cast<EncodingKind>(read_pod<std::uint8_t>(is));
    cfg.time_scale = read_pod<double>(is);
    cfg.layer_norm_eps = read_pod<double>(is);
    cfg.attention_dropout = read_pod<std::uint8_t>(is) != 0;
    cfg.validate();

    auto n_classes = read_pod<std::uint32_t>(is);
    if (static_cast<int>(n_classes) != cfg.num_classes)
        throw DataError("model file integrity error: class table size disagrees with config");
    out.class_names.reserve(n_classes);
    for (std::uint32_t i = 0; i < n_classes; ++i) out.class_names.push_back(read_string(is));

    out.params = zeros_like(cfg);
    auto slots = param_slots(out.params);
    auto n_slots = read_pod<std::uint32_t>(is);
    if (n_slots != slots.size()) throw DataError("model file corrupted: parameter array count mismatch");
    for (auto& s : slots) {
        auto name = read_string(is);
        auto count = read_pod<std::uint64_t>(is);
        if (name != s.name || count != static_cast<std::uint64_t>(s.size))
            throw DataError("model file corrupted: unexpected array " + name);
        is.read(reinterpret_cast<char*>(s.data), static_cast<std::streamsize>(count * sizeof(double)));
        if (!is) throw DataError("model file truncated inside array " + name);
    }
    if (read_pod<std::uint32_t>(is) != kModelSentinel) throw DataError("model file corrupted: bad trailer");
    return out;
}

}  // namespace athena
