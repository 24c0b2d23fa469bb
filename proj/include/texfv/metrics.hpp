#pragma once

#include <string>
#include <vector>

namespace texfv {

struct RoundMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Accuracy plus macro-averaged precision/recall/F1 (0/0 ratios count as 0).
RoundMetrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                             std::size_t n_classes);

struct EvalReport {
    std::string variant;
    std::vector<RoundMetrics> rounds;
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    double mean_precision = 0.0, std_precision = 0.0;
    double mean_recall = 0.0, std_recall = 0.0;
    double mean_f1 = 0.0, std_f1 = 0.0;

    void aggregate();
    std::string to_text() const;
};

}  // namespace texfv
