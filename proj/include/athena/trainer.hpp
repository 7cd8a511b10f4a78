#pragma once

#include "athena/augment.hpp"
#include "athena/evaluator.hpp"
#include "athena/model.hpp"
#include "athena/rng.hpp"

#include <filesystem>
#include <span>

namespace athena {

struct TrainConfig {
    int batch_size = 8;
    double learning_rate = 2e-4;
    int max_epochs = 200;
    int patience = 7;
    int folds = 5;
    double test_fraction = 0.10;
    double final_val_fraction = 0.10;  // internal split for final-model early stopping
    double edl_decay = 0.1;
    std::vector<EncodingKind> candidates{EncodingKind::TaSinusoidal, EncodingKind::TaFourier,
                                         EncodingKind::TaRope};
    AugmentConfig augment;
    bool online_augment = true;
    bool offline_augment = true;
    double fold_metrics_tau = 0.95;
    bool fold_metrics = true;
    int jobs = 1;

    void validate() const;
};

/// Strictly-lower-is-better early stopping on the validation loss.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}
    /// Returns true when this value improves on the best seen so far.
    bool observe(double val);
    bool should_stop() const { return since_improvement_ >= patience_; }
    double best() const { return best_; }
    int best_epoch() const { return best_epoch_; }

private:
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int epoch_ = 0;
    int since_improvement_ = 0;
};

struct SplitIndices {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};

/// Per-class proportional split; `second` receives ~fraction of each class.
SplitIndices stratified_split(const Dataset& dataset, double second_fraction, Rng rng);

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Stratified k folds. Throws DataError when a class has fewer samples than
/// folds (it would vanish from some fold).
std::vector<FoldIndices> stratified_kfold(const Dataset& dataset, int k, Rng rng);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

struct EpochLog {
    int epoch = 0;
    double train_edl = 0.0;  // per-sample mean over the epoch
    double val_edl = 0.0;    // per-sample mean
    double wall_ms = 0.0;
};

struct TrainOutcome {
    ModelParams params;  // weights from the best validation epoch
    double best_val_edl = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    std::vector<EpochLog> log;
};

/// One training run over already offline-augmented train/val sets.
TrainOutcome train_one(const ModelConfig& cfg, const TrainConfig& tcfg, const Dataset& train, const Dataset& val,
                       Rng rng);

struct FoldCell {
    EncodingKind encoding;
    int fold = 0;
    double val_edl = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    EarlyEvalReport metrics;  // populated when fold_metrics is on
};

struct SelectionResult {
    EncodingKind chosen;
    bool tie = false;
    std::vector<FoldCell> cells;               // candidates x folds
    std::vector<double> mean_val_edl;          // per candidate
    std::vector<double> stddev_val_edl;        // per candidate
    std::vector<EncodingKind> candidates;
};

/// Cross-validated encoding selection: trains every candidate on every fold
/// (offline augmentation applied per fold, validation folds get subflows
/// only) and picks the lowest mean validation EDL. Ties go to the first
/// candidate in configured order.
SelectionResult the_select(const Dataset& dev, ModelConfig cfg, const TrainConfig& tcfg, Rng rng);

struct FinalModel {
    ModelParams params;
    ModelConfig cfg;
    std::vector<std::string> class_names;
    TrainOutcome outcome;
    ClassStats train_stats;
};

/// Retrains the chosen encoding on the full development set with an internal
/// stratified 90/10 split for early stopping.
FinalModel train_final(const Dataset& dev, EncodingKind encoding, ModelConfig cfg, const TrainConfig& tcfg,
                       Rng rng);

void write_train_log_jsonl(std::span<const EpochLog> log, const std::filesystem::path& path);
void write_selection_csv(const SelectionResult& result, const std::filesystem::path& path);
void write_selection_json(const SelectionResult& result, const std::filesystem::path& path);

}  // namespace athena
