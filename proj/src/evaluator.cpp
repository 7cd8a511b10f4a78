#include "athena/evaluator.hpp"

#include "athena/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace athena {

Classifier make_classifier(ModelParams params, ModelConfig cfg) {
    auto shared = std::make_shared<ModelParams>(std::move(params));
    return [shared, cfg](const FlowInput& in) { return forward(*shared, cfg, in); };
}

EarlyDecision decide_early(const Classifier& clf, const PreparedSample& sample, double tau) {
    if (tau <= 0.0 || tau > 1.0) throw ContractViolation("confidence threshold must be in (0, 1]");
    EarlyDecision d;
    d.flow_id = sample.id;
    d.true_label = sample.label;
    for (int k = 1; k <= sample.n; ++k) {
        Vec probs = clf(prefix_input(sample, k));
        Eigen::Index top;
        d.confidence = probs.maxCoeff(&top);
        d.predicted = static_cast<int>(top);
        d.packets_used = k;
        if (d.confidence >= tau) {
            d.threshold_met = true;
            return d;
        }
    }
    d.threshold_met = false;  // final full-sequence prediction stands
    return d;
}

std::optional<int> benign_class_index(const std::vector<std::string>& class_names) {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        std::string lower = class_names[i];
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lower == "benign") return static_cast<int>(i);
    }
    return std::nullopt;
}

double erde_mean(std::span<const EarlyDecision> decisions, int o, int benign_label) {
    if (decisions.empty()) return 0.0;
    std::size_t tp_count = 0;
    for (const auto& d : decisions)
        if (d.true_label != benign_label && d.predicted != benign_label) ++tp_count;

    double total = 0.0;
    const auto size = static_cast<double>(decisions.size());
    for (const auto& d : decisions) {
        const bool actual_attack = d.true_label != benign_label;
        const bool flagged_attack = d.predicted != benign_label;
        if (actual_attack && flagged_attack) {
            total += 1.0 - 1.0 / (1.0 + std::exp(static_cast<double>(d.packets_used) - o));
        } else if (actual_attack) {
            total += 1.0;  // missed attack
        } else if (flagged_attack) {
            total += static_cast<double>(tp_count) / size;
        }
        // true negative contributes 0
    }
    return total / size;
}

EarlyEvalReport evaluate(const Classifier& clf, const Dataset& test, double tau, std::span<const int> o_values,
                         std::optional<int> benign_label, int jobs) {
    EarlyEvalReport report;
    report.tau = tau;
    report.flows = test.size();
    report.confusion = Eigen::MatrixXi::Zero(test.num_classes(), test.num_classes());
    if (test.samples.empty()) throw DataError("cannot evaluate an empty dataset");

    report.decisions.resize(test.size());
    run_parallel(test.size(), jobs,
                 [&](std::size_t i) { report.decisions[i] = decide_early(clf, *test.samples[i], tau); });

    std::size_t correct = 0, unreached = 0;
    int max_correct_k = 0;
    std::size_t benign_total = 0, benign_flagged = 0;
    std::size_t attack_total = 0, attack_missed = 0;
    for (const auto& d : report.decisions) {
        report.confusion(d.true_label, d.predicted) += 1;
        if (d.predicted == d.true_label) {
            ++correct;
            max_correct_k = std::max(max_correct_k, d.packets_used);
        }
        if (!d.threshold_met) ++unreached;
        if (benign_label) {
            if (d.true_label == *benign_label) {
                ++benign_total;
                if (d.predicted != *benign_label) ++benign_flagged;
            } else {
                ++attack_total;
                if (d.predicted == *benign_label) ++attack_missed;
            }
        }
    }

    const auto size = static_cast<double>(test.size());
    report.accuracy_pct = 100.0 * correct / size;
    report.unreached_pct = 100.0 * unreached / size;
    if (correct > 0) {
        report.earliness = max_correct_k;
        report.earliness_defined = true;
    } else {
        report.earliness = test.max_len;  // reported as N by convention
        report.earliness_defined = false;
    }
    if (benign_label && benign_total > 0) {
        report.far_pct = 100.0 * benign_flagged / benign_total;
        report.far_defined = true;
    }
    if (benign_label && attack_total > 0) {
        report.fnr_pct = 100.0 * attack_missed / attack_total;
        report.fnr_defined = true;
    }
    if (benign_label) {
        report.erde_defined = true;
        for (int o : o_values) report.erde[o] = erde_mean(report.decisions, o, *benign_label);
    }
    return report;
}

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 9; ++i) grid.push_back(0.50 + 0.05 * i);
    grid.push_back(0.98);
    grid.push_back(0.99);
    return grid;
}

std::vector<EarlyEvalReport> tau_sweep(const Classifier& clf, const Dataset& test, std::span<const double> taus,
                                       std::span<const int> o_values, std::optional<int> benign_label, int jobs) {
    if (taus.empty()) throw ContractViolation("tau grid must be non-empty");
    std::vector<EarlyEvalReport> out;
    out.reserve(taus.size());
    for (double tau : taus) out.push_back(evaluate(clf, test, tau, o_values, benign_label, jobs));
    return out;
}

void write_report_json(const EarlyEvalReport& report, const std::vector<std::string>& class_names,
                       const std::filesystem::path& path) {
    nlohmann::json j;
    j["tau"] = report.tau;
    j["flows"] = report.flows;
    j["accuracy_pct"] = report.accuracy_pct;
    j["earliness"] = report.earliness;
    j["earliness_defined"] = report.earliness_defined;
    if (report.far_defined) j["far_pct"] = report.far_pct;
    if (report.fnr_defined) j["fnr_pct"] = report.fnr_pct;
    if (report.erde_defined)
        for (const auto& [o, value] : report.erde) j["erde"][std::to_string(o)] = value;
    j["unreached_pct"] = report.unreached_pct;
    j["classes"] = class_names;
    std::vector<std::vector<int>> confusion;
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
        std::vector<int> row;
        for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) row.push_back(report.confusion(r, c));
        confusion.push_back(std::move(row));
    }
    j["confusion"] = confusion;

    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
}

void write_report_csv(std::span<const EarlyEvalReport> reports, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << "tau,accuracy,earliness,far,fnr,erde5,unreached_pct\n";
    for (const auto& r : reports) {
        os << r.tau << ',' << r.accuracy_pct << ',' << r.earliness << ',';
        if (r.far_defined) os << r.far_pct;
        os << ',';
        if (r.fnr_defined) os << r.fnr_pct;
        os << ',';
        if (auto it = r.erde.find(5); it != r.erde.end()) os << it->second;
        os << ',' << r.unreached_pct << '\n';
    }
}

}  // namespace athena
