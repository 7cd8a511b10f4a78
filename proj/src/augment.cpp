#include "athena/augment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace athena {

std::size_t target_density(long model_param_count, int num_classes) {
    if (num_classes < 1) throw ContractViolation("class count must be positive");
    return static_cast<std::size_t>(std::llround(2.0 * model_param_count / num_classes));
}

ClassStats compute_class_stats(const Dataset& dataset, std::size_t m_d, const AugmentConfig& cfg) {
    ClassStats stats;
    stats.target_density = m_d;
    stats.rows.resize(dataset.num_classes());
    std::vector<double> length_sums(dataset.num_classes(), 0.0);
    for (const auto& s : dataset.samples) {
        auto& row = stats.rows[s->label];
        row.original_count += 1;
        length_sums[s->label] += s->n;
    }
    for (int c = 0; c < dataset.num_classes(); ++c) {
        auto& row = stats.rows[c];
        if (row.original_count == 0) continue;
        row.mean_length = length_sums[c] / static_cast<double>(row.original_count);
        row.minority = row.original_count < m_d;
        if (row.minority) {
            double deficit_ratio =
                (static_cast<double>(m_d) - static_cast<double>(row.original_count)) / row.original_count;
            row.subflow_factor = std::max(0.0, std::min(deficit_ratio, row.mean_length - 1.0));
        } else {
            row.subflow_factor = cfg.majority_factor;
        }
    }
    return stats;
}

PreparedSample subflow_prefix(const PreparedSample& src, int k, std::uint64_t new_id) {
    if (k < 1 || k >= src.n) throw ContractViolation("subflow cut-off must be in [1, n-1]");
    PreparedSample s;
    s.n = k;
    s.d = src.d;
    s.max_len = src.max_len;
    s.label = src.label;
    s.bytes.assign(src.bytes.begin(), src.bytes.begin() + static_cast<std::ptrdiff_t>(k) * src.d);
    s.timestamps = src.timestamps.head(k);
    s.id = new_id;
    s.origin_id = src.origin_id;
    return s;
}

namespace {

int log_uniform_cutoff(int n, Rng& rng) {
    // dense coverage of early packets, sparse toward the tail
    double u = rng.uniform(0.0, std::log(static_cast<double>(n - 1)));
    auto k = static_cast<int>(std::llround(std::exp(u)));
    return std::clamp(k, 1, n - 1);
}

Dataset run_subflow_generation(const Dataset& dataset, const ClassStats& stats, const AugmentConfig& cfg,
                               Rng& rng) {
    Dataset out = dataset;
    std::uint64_t next_id = 0;
    for (const auto& s : dataset.samples) next_id = std::max(next_id, s->id + 1);

    // minority classes: per-flow stochastic count with log-uniform cut-offs
    for (const auto& s : dataset.samples) {
        const auto& row = stats.rows.at(s->label);
        if (!row.minority || s->n < 2) continue;
        double a = row.subflow_factor;
        int count = static_cast<int>(std::floor(a));
        if (rng.bernoulli(a - std::floor(a))) ++count;
        for (int i = 0; i < count; ++i) {
            int k = log_uniform_cutoff(s->n, rng);
            out.samples.push_back(std::make_shared<PreparedSample>(subflow_prefix(*s, k, next_id++)));
        }
    }

    // majority classes: one short subflow for 20% of the flows
    for (int c = 0; c < dataset.num_classes(); ++c) {
        const auto& row = stats.rows[c];
        if (row.minority || row.original_count == 0) continue;
        std::vector<std::shared_ptr<const PreparedSample>> eligible;
        for (const auto& s : dataset.samples)
            if (s->label == c && s->n >= 2) eligible.push_back(s);
        auto wanted = static_cast<std::size_t>(std::llround(row.subflow_factor * row.original_count));
        auto picks = rng.choose(eligible.size(), wanted);
        std::sort(picks.begin(), picks.end());
        for (auto idx : picks) {
            const auto& s = eligible[idx];
            int hi = std::min(cfg.majority_k_max, s->n - 1);
            int k = static_cast<int>(rng.uniform_int(cfg.majority_k_min, hi));
            out.samples.push_back(std::make_shared<PreparedSample>(subflow_prefix(*s, k, next_id++)));
        }
    }
    return out;
}

}  // namespace

Dataset generate_subflows(const Dataset& dataset, const AugmentConfig& cfg, long model_param_count, Rng& rng,
                          ClassStats& stats) {
    dataset.validate();
    stats = compute_class_stats(dataset, target_density(model_param_count, dataset.num_classes()), cfg);
    Dataset out = run_subflow_generation(dataset, stats, cfg, rng);
    auto counts = out.class_counts();
    for (int c = 0; c < out.num_classes(); ++c) stats.rows[c].after_subflows = counts[c];
    return out;
}

Dataset generate_subflows_with_factors(const Dataset& dataset, const ClassStats& train_stats,
                                       const AugmentConfig& cfg, Rng& rng) {
    dataset.validate();
    if (train_stats.rows.size() != static_cast<std::size_t>(dataset.num_classes()))
        throw ContractViolation("class statistics do not cover this dataset");
    return run_subflow_generation(dataset, train_stats, cfg, rng);
}

Dataset hybrid_oversample(const Dataset& dataset, ClassStats& stats, Rng& rng) {
    auto counts = dataset.class_counts();
    for (int c = 0; c < dataset.num_classes(); ++c)
        if (counts[c] == 0) throw DataError("cannot oversample: class '" + dataset.class_names[c] + "' is empty");
    const std::size_t m_max = *std::max_element(counts.begin(), counts.end());

    Dataset out = dataset;
    for (int c = 0; c < dataset.num_classes(); ++c) {
        const double z = (static_cast<double>(m_max) - static_cast<double>(counts[c])) / counts[c];
        const int r = static_cast<int>(std::floor(z));
        const double p = z - r;

        std::vector<std::shared_ptr<const PreparedSample>> members;
        for (const auto& s : dataset.samples)
            if (s->label == c) members.push_back(s);

        for (int copy = 0; copy < r; ++copy)
            for (const auto& s : members) out.samples.push_back(s);  // shared storage

        auto extras = static_cast<std::size_t>(std::floor(p * static_cast<double>(counts[c])));
        auto picks = rng.choose(members.size(), extras);
        std::sort(picks.begin(), picks.end());
        for (auto idx : picks) out.samples.push_back(members[idx]);

        if (c < static_cast<int>(stats.rows.size())) {
            stats.rows[c].oversample_factor = z;
            stats.rows[c].final_count = counts[c] * (1 + r) + extras;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// online augmentation

TrainExample augment_flow(const PreparedSample& sample, const AugmentConfig& cfg, Rng& rng) {
    TrainExample ex;
    ex.label = sample.label;
    FlowInput& in = ex.input;
    in = to_input(sample);
    int n = in.length;
    const int d = sample.d;

    if (cfg.jitter && n >= 2) {
        Vec jittered = in.times;
        for (int i = 0; i < n; ++i) {
            double left = i > 0 ? in.times[i] - in.times[i - 1] : std::numeric_limits<double>::infinity();
            double right = i < n - 1 ? in.times[i + 1] - in.times[i] : std::numeric_limits<double>::infinity();
            double t_min = std::min(left, right);
            jittered[i] += rng.uniform(-cfg.jitter_fraction * t_min, cfg.jitter_fraction * t_min);
        }
        // opposite draws on adjacent packets can cross; restore order, then re-anchor
        std::sort(jittered.data(), jittered.data() + n);
        in.times = (jittered.array() - jittered[0]).matrix();
    }

    if (cfg.scaling && !cfg.scale_set.empty()) {
        double s = cfg.scale_set[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(cfg.scale_set.size()) - 1))];
        in.times *= s;
    }

    if (cfg.drop) {
        int bound = std::max(0, static_cast<int>(std::floor(cfg.drop_coeff * n - 0.5)));
        int k_d = static_cast<int>(rng.uniform_int(0, bound));
        if (k_d > 0) {
            auto positions = rng.choose(static_cast<std::size_t>(n), static_cast<std::size_t>(k_d));
            std::vector<bool> dropped(n, false);
            for (auto p : positions) dropped[p] = true;
            Mat packets(n - k_d, d);
            Vec times(n - k_d);
            int w = 0;
            for (int i = 0; i < n; ++i) {
                if (dropped[i]) continue;
                packets.row(w) = in.packets.row(i);
                times[w] = in.times[i];
                ++w;
            }
            n -= k_d;
            in.packets = std::move(packets);
            in.times = (times.array() - times[0]).matrix();
            in.length = n;
        }
    }

    if (cfg.insert) {
        int bound = std::max(0, static_cast<int>(std::floor(cfg.insert_coeff * n - 0.5)));
        int k_i = static_cast<int>(rng.uniform_int(0, bound));
        k_i = std::min(k_i, sample.max_len - n);  // never exceed the model cap
        for (int ins = 0; ins < k_i; ++ins) {
            int pos = static_cast<int>(rng.uniform_int(0, n));
            double t_new;
            if (pos == 0)
                t_new = in.times[0];
            else if (pos == n)
                t_new = in.times[n - 1];
            else
                t_new = 0.5 * (in.times[pos - 1] + in.times[pos]);
            Mat packets(n + 1, d);
            Vec times(n + 1);
            packets.topRows(pos) = in.packets.topRows(pos);
            packets.row(pos).setZero();
            packets.bottomRows(n - pos) = in.packets.bottomRows(n - pos);
            times.head(pos) = in.times.head(pos);
            times[pos] = t_new;
            times.tail(n - pos) = in.times.tail(n - pos);
            in.packets = std::move(packets);
            in.times = std::move(times);
            ++n;
            in.length = n;
        }
    }

    if (cfg.noise) {
        int max_packets = n / cfg.noise_packet_divisor;
        int max_bytes = d / cfg.noise_byte_divisor;
        if (max_packets >= 1 && max_bytes >= 1) {
            int k_p = static_cast<int>(rng.uniform_int(0, max_packets));
            auto packet_rows = rng.choose(static_cast<std::size_t>(n), static_cast<std::size_t>(k_p));
            for (auto row : packet_rows) {
                int k_b = static_cast<int>(rng.uniform_int(0, max_bytes));
                auto cols = rng.choose(static_cast<std::size_t>(d), static_cast<std::size_t>(k_b));
                for (auto col : cols) {
                    double v = in.packets(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
                    v += rng.normal(0.0, cfg.noise_sigma);
                    in.packets(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                        std::clamp(v, 0.0, 1.0);
                }
            }
        }
    }

    return ex;
}

std::vector<TrainExample> augment_batch(const std::vector<std::shared_ptr<const PreparedSample>>& batch,
                                        const AugmentConfig& cfg, Rng& rng) {
    std::vector<TrainExample> out;
    out.reserve(batch.size());
    for (const auto& s : batch) out.push_back(augment_flow(*s, cfg, rng));
    return out;
}

// ---------------------------------------------------------------------------
// audit report

namespace {

nlohmann::json stats_to_json(const ClassStats& stats, const std::vector<std::string>& class_names) {
    nlohmann::json j;
    j["target_density"] = stats.target_density;
    j["classes"] = nlohmann::json::array();
    for (std::size_t c = 0; c < stats.rows.size(); ++c) {
        const auto& r = stats.rows[c];
        j["classes"].push_back({{"class", class_names.at(c)},
                                {"m_c", r.original_count},
                                {"mean_length", r.mean_length},
                                {"minority", r.minority},
                                {"a_c", r.subflow_factor},
                                {"m_prime", r.after_subflows},
                                {"z_c", r.oversample_factor},
                                {"m_final", r.final_count}});
    }
    return j;
}

}  // namespace

void write_class_stats_csv(const ClassStats& stats, const std::vector<std::string>& class_names,
                           const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << "class,m_c,mean_length,minority,a_c,m_prime,z_c,m_final,m_d\n";
    for (std::size_t c = 0; c < stats.rows.size(); ++c) {
        const auto& r = stats.rows[c];
        os << class_names.at(c) << ',' << r.original_count << ',' << r.mean_length << ',' << (r.minority ? 1 : 0)
           << ',' << r.subflow_factor << ',' << r.after_subflows << ',' << r.oversample_factor << ','
           << r.final_count << ',' << stats.target_density << '\n';
    }
}

void write_class_stats_json(const ClassStats& stats, const std::vector<std::string>& class_names,
                            const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << stats_to_json(stats, class_names).dump(2) << '\n';
}

}  // namespace athena
