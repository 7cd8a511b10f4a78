#include "athena/trainer.hpp"

#include "athena/loss.hpp"
#include "athena/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace athena {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (test_fraction <= 0.0 || test_fraction >= 1.0) throw ConfigError("test fraction must be in (0,1)");
    if (final_val_fraction <= 0.0 || final_val_fraction >= 1.0)
        throw ConfigError("final validation fraction must be in (0,1)");
    if (edl_decay <= 0.0) throw ConfigError("EDL decay must be positive");
    if (candidates.empty()) throw ConfigError("no candidate encodings configured");
}

bool EarlyStopper::observe(double val) {
    ++epoch_;
    if (val < best_) {
        best_ = val;
        best_epoch_ = epoch_;
        since_improvement_ = 0;
        return true;
    }
    ++since_improvement_;
    return false;
}

SplitIndices stratified_split(const Dataset& dataset, double second_fraction, Rng rng) {
    SplitIndices split;
    for (int c = 0; c < dataset.num_classes(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < dataset.size(); ++i)
            if (dataset.samples[i]->label == c) members.push_back(i);
        rng.shuffle(members);
        auto take = static_cast<std::size_t>(std::llround(second_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < take ? split.second : split.first).push_back(members[i]);
    }
    std::sort(split.first.begin(), split.first.end());
    std::sort(split.second.begin(), split.second.end());
    return split;
}

std::vector<FoldIndices> stratified_kfold(const Dataset& dataset, int k, Rng rng) {
    auto counts = dataset.class_counts();
    for (int c = 0; c < dataset.num_classes(); ++c) {
        if (counts[c] < static_cast<std::size_t>(k))
            throw DataError("class '" + dataset.class_names[c] + "' has only " + std::to_string(counts[c]) +
                            " samples; it would be absent from some fold. Use fewer folds.");
    }
    std::vector<FoldIndices> folds(k);
    for (int c = 0; c < dataset.num_classes(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < dataset.size(); ++i)
            if (dataset.samples[i]->label == c) members.push_back(i);
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            int fold = static_cast<int>(i % k);
            for (int f = 0; f < k; ++f) (f == fold ? folds[f].val : folds[f].train).push_back(members[i]);
        }
    }
    for (auto& f : folds) {
        std::sort(f.train.begin(), f.train.end());
        std::sort(f.val.begin(), f.val.end());
    }
    return folds;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
    Dataset out;
    out.d = dataset.d;
    out.max_len = dataset.max_len;
    out.class_names = dataset.class_names;
    out.samples.reserve(indices.size());
    for (auto i : indices) out.samples.push_back(dataset.samples[i]);
    return out;
}

namespace {

double validation_edl(const ModelParams& params, const ModelConfig& cfg, const Dataset& val, double decay) {
    double total = 0.0;
    for (const auto& s : val.samples) {
        Vec probs = forward(params, cfg, to_input(*s));
        total += edl_weight(s->n, decay) * -std::log(std::max(probs[s->label], 1e-12));
    }
    return total / static_cast<double>(val.size());
}

}  // namespace

TrainOutcome train_one(const ModelConfig& cfg, const TrainConfig& tcfg, const Dataset& train, const Dataset& val,
                       Rng rng) {
    cfg.validate();
    tcfg.validate();
    if (train.samples.empty() || val.samples.empty()) throw DataError("train/validation split is empty");
    if (train.d != cfg.packet_len || train.max_len != cfg.max_flow_len)
        throw ConfigError("dataset dimensions disagree with the model config");

    Rng init_rng = rng.substream("init");
    ModelParams params = init_params(cfg, init_rng);
    AdamState adam;

    TrainOutcome out;
    EarlyStopper stopper(tcfg.patience);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        auto t_start = std::chrono::steady_clock::now();
        Rng shuffle_rng = rng.substream("shuffle", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            const auto end = std::min(order.size(), start + tcfg.batch_size);
            const auto b = end - start;

            std::vector<TrainExample> examples;
            examples.reserve(b);
            std::vector<ForwardTrace> traces(b);
            Mat probs(b, cfg.num_classes);
            std::vector<int> labels(b), lengths(b);

            for (std::size_t i = 0; i < b; ++i) {
                const auto idx = order[start + i];
                const auto& sample = *train.samples[idx];
                // per-sample substreams: batch composition never changes draws
                Rng aug_rng = rng.substream("augment", static_cast<std::uint64_t>(epoch), idx);
                if (tcfg.online_augment) {
                    examples.push_back(augment_flow(sample, tcfg.augment, aug_rng));
                } else {
                    examples.push_back(TrainExample{to_input(sample), sample.label});
                }
                Rng drop_rng = rng.substream("dropout", static_cast<std::uint64_t>(epoch), idx);
                probs.row(i) =
                    forward(params, cfg, examples[i].input, true, &drop_rng, &traces[i]).transpose();
                labels[i] = examples[i].label;
                lengths[i] = examples[i].input.length;
            }

            EdlResult loss = edl_loss(probs, labels, lengths, tcfg.edl_decay);
            if (!std::isfinite(loss.loss)) throw TrainingError("training diverged: non-finite loss");
            epoch_loss += loss.loss;

            ModelParams grads = zeros_like(cfg);
            for (std::size_t i = 0; i < b; ++i)
                backward(traces[i], params, cfg, loss.dlogits.row(i).transpose(), grads);
            adam_step(params, grads, adam, tcfg.learning_rate);
        }

        const double val_edl = validation_edl(params, cfg, val, tcfg.edl_decay);
        auto wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
        out.log.push_back({epoch, epoch_loss / static_cast<double>(train.size()), val_edl, wall});

        if (stopper.observe(val_edl)) out.params = params;
        out.epochs_run = epoch;
        if (stopper.should_stop()) break;
    }

    out.best_val_edl = stopper.best();
    out.best_epoch = stopper.best_epoch();
    return out;
}

namespace {

struct FoldData {
    Dataset train;
    Dataset val;
    ClassStats stats;
};

FoldData prepare_fold(const Dataset& dev, const FoldIndices& fold, const ModelConfig& cfg,
                      const TrainConfig& tcfg, Rng rng) {
    FoldData data;
    Dataset train_raw = subset(dev, fold.train);
    Dataset val_raw = subset(dev, fold.val);
    if (!tcfg.offline_augment) {
        data.train = std::move(train_raw);
        data.val = std::move(val_raw);
        return data;
    }
    const long P = param_count(cfg);
    Rng sub_rng = rng.substream("subflows");
    Dataset with_subflows = generate_subflows(train_raw, tcfg.augment, P, sub_rng, data.stats);
    Rng over_rng = rng.substream("oversample");
    data.train = hybrid_oversample(with_subflows, data.stats, over_rng);
    Rng val_rng = rng.substream("val-subflows");
    data.val = generate_subflows_with_factors(val_raw, data.stats, tcfg.augment, val_rng);
    return data;
}

}  // namespace

SelectionResult the_select(const Dataset& dev, ModelConfig cfg, const TrainConfig& tcfg, Rng rng) {
    tcfg.validate();
    if (dev.samples.empty()) throw DataError("development set is empty");
    cfg.num_classes = dev.num_classes();

    auto folds = stratified_kfold(dev, tcfg.folds, rng.substream("folds"));
    std::vector<FoldData> fold_data(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f)
        fold_data[f] = prepare_fold(dev, folds[f], cfg, tcfg, rng.substream("fold-aug", f));

    SelectionResult result;
    result.candidates = tcfg.candidates;
    const auto n_candidates = tcfg.candidates.size();
    result.cells.resize(n_candidates * folds.size());

    // one independent task per (encoding, fold)
    run_parallel(result.cells.size(), tcfg.jobs, [&](std::size_t task) {
        const auto e = task / folds.size();
        const auto f = task % folds.size();
        ModelConfig run_cfg = cfg;
        run_cfg.encoding = tcfg.candidates[e];
        Rng task_rng = rng.substream("train", e, f);
        TrainOutcome outcome = train_one(run_cfg, tcfg, fold_data[f].train, fold_data[f].val, task_rng);

        FoldCell& cell = result.cells[task];
        cell.encoding = tcfg.candidates[e];
        cell.fold = static_cast<int>(f);
        cell.val_edl = outcome.best_val_edl;
        cell.best_epoch = outcome.best_epoch;
        cell.epochs_run = outcome.epochs_run;
        if (tcfg.fold_metrics) {
            auto clf = make_classifier(outcome.params, run_cfg);
            int o_values[] = {5};
            cell.metrics = evaluate(clf, fold_data[f].val, tcfg.fold_metrics_tau, o_values,
                                    benign_class_index(dev.class_names));
        }
    });

    result.mean_val_edl.resize(n_candidates);
    result.stddev_val_edl.resize(n_candidates);
    for (std::size_t e = 0; e < n_candidates; ++e) {
        double sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) sum += result.cells[e * folds.size() + f].val_edl;
        double mean = sum / static_cast<double>(folds.size());
        double var = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            double diff = result.cells[e * folds.size() + f].val_edl - mean;
            var += diff * diff;
        }
        result.mean_val_edl[e] = mean;
        result.stddev_val_edl[e] = std::sqrt(var / static_cast<double>(folds.size()));
    }

    std::size_t best = 0;
    for (std::size_t e = 1; e < n_candidates; ++e) {
        if (result.mean_val_edl[e] < result.mean_val_edl[best]) best = e;
        else if (result.mean_val_edl[e] == result.mean_val_edl[best]) result.tie = true;  // first wins
    }
    result.chosen = tcfg.candidates[best];
    return result;
}

FinalModel train_final(const Dataset& dev, EncodingKind encoding, ModelConfig cfg, const TrainConfig& tcfg,
                       Rng rng) {
    if (dev.samples.empty()) throw DataError("development set is empty");
    cfg.encoding = encoding;
    cfg.num_classes = dev.num_classes();

    auto split = stratified_split(dev, tcfg.final_val_fraction, rng.substream("final-split"));
    if (split.first.empty() || split.second.empty())
        throw DataError("development set too small for the final train/validation split");
    Dataset train_raw = subset(dev, split.first);
    Dataset val_raw = subset(dev, split.second);

    FinalModel final;
    final.cfg = cfg;
    final.class_names = dev.class_names;

    Dataset train = train_raw, val = val_raw;
    if (tcfg.offline_augment) {
        const long P = param_count(cfg);
        Rng sub_rng = rng.substream("final-subflows");
        Dataset with_subflows = generate_subflows(train_raw, tcfg.augment, P, sub_rng, final.train_stats);
        Rng over_rng = rng.substream("final-oversample");
        train = hybrid_oversample(with_subflows, final.train_stats, over_rng);
        Rng val_rng = rng.substream("final-val-subflows");
        val = generate_subflows_with_factors(val_raw, final.train_stats, tcfg.augment, val_rng);
    }

    final.outcome = train_one(cfg, tcfg, train, val, rng.substream("final-train"));
    final.params = final.outcome.params;
    return final;
}

void write_train_log_jsonl(std::span<const EpochLog> log, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    for (const auto& e : log) {
        nlohmann::json j{{"epoch", e.epoch}, {"train_edl", e.train_edl}, {"val_edl", e.val_edl},
                         {"wall_ms", e.wall_ms}};
        os << j.dump() << '\n';
    }
}

void write_selection_csv(const SelectionResult& result, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << "encoding,fold,val_edl,best_epoch,epochs_run,accuracy,earliness,far,fnr,erde5,unreached_pct\n";
    os.precision(17);
    for (const auto& cell : result.cells) {
        os << to_string(cell.encoding) << ',' << cell.fold << ',' << cell.val_edl << ',' << cell.best_epoch << ','
           << cell.epochs_run << ',';
        const auto& m = cell.metrics;
        if (m.flows > 0) {
            os << m.accuracy_pct << ',' << m.earliness << ',';
            if (m.far_defined) os << m.far_pct;
            os << ',';
            if (m.fnr_defined) os << m.fnr_pct;
            os << ',';
            if (auto it = m.erde.find(5); it != m.erde.end()) os << it->second;
            os << ',' << m.unreached_pct;
        } else {
            os << ",,,,,";
        }
        os << '\n';
    }
    os << "# mean val EDL per encoding\n";
    for (std::size_t e = 0; e < result.candidates.size(); ++e)
        os << to_string(result.candidates[e]) << ",mean," << result.mean_val_edl[e] << ",stddev,"
           << result.stddev_val_edl[e] << ",,,,,,\n";
}

void write_selection_json(const SelectionResult& result, const std::filesystem::path& path) {
    nlohmann::json j;
    j["chosen"] = to_string(result.chosen);
    j["tie"] = result.tie;
    for (std::size_t e = 0; e < result.candidates.size(); ++e) {
        j["candidates"].push_back({{"encoding", to_string(result.candidates[e])},
                                   {"mean_val_edl", result.mean_val_edl[e]},
                                   {"stddev_val_edl", result.stddev_val_edl[e]}});
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace athena
