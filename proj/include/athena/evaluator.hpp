#pragma once

#include "athena/model.hpp"
#include "athena/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>

namespace athena {

/// Anything that maps a flow (or prefix) to class probabilities.
using Classifier = std::function<Vec(const FlowInput&)>;

Classifier make_classifier(ModelParams params, ModelConfig cfg);

struct EarlyDecision {
    std::uint64_t flow_id = 0;
    int true_label = 0;
    int predicted = 0;
    int packets_used = 0;      // k at the decision point
    double confidence = 0.0;   // top-1 probability at the decision point
    bool threshold_met = false;
};

/// Feeds growing prefixes to the classifier until the top-1 confidence
/// reaches tau; falls back to the full sequence when it never does.
EarlyDecision decide_early(const Classifier& clf, const PreparedSample& sample, double tau);

struct EarlyEvalReport {
    double tau = 0.0;
    std::size_t flows = 0;
    double accuracy_pct = 0.0;
    int earliness = 0;               // max packets over correctly classified flows
    bool earliness_defined = false;  // false when nothing was classified correctly
    double far_pct = 0.0;
    bool far_defined = false;  // needs a benign class and at least one benign flow
    double fnr_pct = 0.0;
    bool fnr_defined = false;
    std::map<int, double> erde;  // keyed by o
    bool erde_defined = false;
    double unreached_pct = 0.0;
    Eigen::MatrixXi confusion;  // row = true class, col = predicted
    std::vector<EarlyDecision> decisions;
};

/// Index of the class named "benign" (case-insensitive), if any.
std::optional<int> benign_class_index(const std::vector<std::string>& class_names);

/// Mean four-case early-risk penalty over a set of decisions:
/// TP -> 1 - 1/(1+exp(t_d - o)), FN -> 1, FP -> TP_count/|set|, TN -> 0,
/// with benign-vs-attack derived from the benign class index.
double erde_mean(std::span<const EarlyDecision> decisions, int o, int benign_label);

EarlyEvalReport evaluate(const Classifier& clf, const Dataset& test, double tau, std::span<const int> o_values,
                         std::optional<int> benign_label, int jobs = 1);

std::vector<double> default_tau_grid();  // {0.50, 0.55, ..., 0.95, 0.98, 0.99}

std::vector<EarlyEvalReport> tau_sweep(const Classifier& clf, const Dataset& test, std::span<const double> taus,
                                       std::span<const int> o_values, std::optional<int> benign_label,
                                       int jobs = 1);

void write_report_json(const EarlyEvalReport& report, const std::vector<std::string>& class_names,
                       const std::filesystem::path& path);
void write_report_csv(std::span<const EarlyEvalReport> reports, const std::filesystem::path& path);

}  // namespace athena
