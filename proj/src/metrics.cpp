#include "texfv/metrics.hpp"

#include <cmath>
#include <sstream>

#include "texfv/errors.hpp"

namespace texfv {

RoundMetrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                             std::size_t n_classes) {
    if (truth.size() != predicted.size())
        throw ValidationError("compute_metrics: label vector length mismatch");
    if (truth.empty()) throw ValidationError("compute_metrics: no samples");

    RoundMetrics m;
    m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t >= n_classes || p >= n_classes)
            throw ValidationError("compute_metrics: label out of range");
        ++m.confusion[t][p];
        if (t == p) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

    double psum = 0.0, rsum = 0.0, fsum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t tp = m.confusion[c][c], fp = 0, fn = 0;
        for (std::size_t o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += m.confusion[o][c];
            fn += m.confusion[c][o];
        }
        const double prec = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        psum += prec;
        rsum += rec;
        fsum += f1;
    }
    m.macro_precision = psum / static_cast<double>(n_classes);
    m.macro_recall = rsum / static_cast<double>(n_classes);
    m.macro_f1 = fsum / static_cast<double>(n_classes);
    return m;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

void EvalReport::aggregate() {
    std::vector<double> a, p, r, f;
    for (const auto& m : rounds) {
        a.push_back(m.accuracy);
        p.push_back(m.macro_precision);
        r.push_back(m.macro_recall);
        f.push_back(m.macro_f1);
    }
    mean_std(a, mean_accuracy, std_accuracy);
    mean_std(p, mean_precision, std_precision);
    mean_std(r, mean_recall, std_recall);
    mean_std(f, mean_f1, std_f1);
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out.precision(6);
    out << "variant\t" << variant << "\n";
    out << "round\taccuracy\tprecision\trecall\tf1\n";
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        const auto& m = rounds[i];
        out << i << "\t" << m.accuracy << "\t" << m.macro_precision << "\t"
            << m.macro_recall << "\t" << m.macro_f1 << "\n";
    }
    out << "aggregate\taccuracy\t" << mean_accuracy << "\t" << std_accuracy << "\n";
    out << "aggregate\tprecision\t" << mean_precision << "\t" << std_precision << "\n";
    out << "aggregate\trecall\t" << mean_recall << "\t" << std_recall << "\n";
    out << "aggregate\tf1\t" << mean_f1 << "\t" << std_f1 << "\n";
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        out << "confusion\tround " << i << "\n";
        for (const auto& row : rounds[i].confusion) {
            for (std::size_t j = 0; j < row.size(); ++j)
                out << row[j] << (j + 1 < row.size() ? '\t' : '\n');
        }
    }
    return out.str();
}

}  // namespace texfv
