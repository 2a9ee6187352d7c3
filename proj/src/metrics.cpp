#include "ecg/metrics.hpp"

#include "ecg/errors.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ecg {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        for (auto v : row)
            t += v;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i)
        t += counts[i][i];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const noexcept {
    std::uint64_t t = 0;
    for (auto v : counts[true_class])
        t += v;
    return t;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted_class) const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        t += row[predicted_class];
    return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size())
        throw InputError("got " + std::to_string(truth.size()) + " true labels but " +
                         std::to_string(predicted.size()) + " predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || t >= static_cast<int>(kNumClasses) ||
            p >= static_cast<int>(kNumClasses))
            throw InputError("label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                             ") at position " + std::to_string(i) + " is outside 0..4");
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.total = cm.total();
    if (r.total == 0)
        throw InputError("confusion matrix is empty");
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(r.total);

    double sens_sum = 0.0, spec_sum = 0.0, acc_sum = 0.0;
    std::size_t sens_n = 0, spec_n = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& m = r.per_class[c];
        m.tp = cm.counts[c][c];
        m.fn = cm.row_sum(c) - m.tp;
        m.fp = cm.column_sum(c) - m.tp;
        m.tn = r.total - m.tp - m.fn - m.fp;
        m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(r.total);
        m.sensitivity = ratio(m.tp, m.tp + m.fn);
        m.specificity = ratio(m.tn, m.tn + m.fp);
        acc_sum += m.accuracy;
        if (m.sensitivity) {
            sens_sum += *m.sensitivity;
            ++sens_n;
        }
        if (m.specificity) {
            spec_sum += *m.specificity;
            ++spec_n;
        }
    }
    r.macro_accuracy = acc_sum / static_cast<double>(kNumClasses);
    if (sens_n)
        r.macro_sensitivity = sens_sum / static_cast<double>(sens_n);
    if (spec_n)
        r.macro_specificity = spec_sum / static_cast<double>(spec_n);
    return r;
}

std::string metrics_json(const MetricsReport& report, const ConfusionMatrix& cm) {
    nlohmann::ordered_json j;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy;
    j["macro_accuracy"] = report.macro_accuracy;
    j["macro_sensitivity"] = optional_json(report.macro_sensitivity);
    j["macro_specificity"] = optional_json(report.macro_specificity);
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    nlohmann::ordered_json undefined = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& m = report.per_class[c];
        const std::string name(class_name(*class_from_id(c)));
        classes[name] = {{"tp", m.tp},
                         {"tn", m.tn},
                         {"fp", m.fp},
                         {"fn", m.fn},
                         {"support", m.tp + m.fn},
                         {"accuracy", m.accuracy},
                         {"sensitivity", optional_json(m.sensitivity)},
                         {"specificity", optional_json(m.specificity)}};
        if (!m.sensitivity)
            undefined.push_back(name + ".sensitivity");
        if (!m.specificity)
            undefined.push_back(name + ".specificity");
    }
    j["per_class"] = classes;
    j["undefined"] = undefined;
    nlohmann::ordered_json matrix = nlohmann::ordered_json::array();
    for (const auto& row : cm.counts)
        matrix.push_back(row);
    j["confusion"] = matrix;
    return j.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "true\\predicted";
    for (auto c : kAllClasses)
        out << ',' << class_name(c);
    out << '\n';
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        out << class_name(*class_from_id(t));
        for (auto v : cm.counts[t])
            out << ',' << v;
        out << '\n';
    }
    return out.str();
}

std::string curves_csv(const TrainLog& log) {
    std::ostringstream out;
    out << "epoch,train_loss,train_acc,test_acc,seconds\n";
    for (const auto& e : log.epochs) {
        out << e.epoch << ',' << format_double(e.train_loss) << ','
            << format_double(e.train_accuracy) << ','
            << (e.test_accuracy ? format_double(*e.test_accuracy) : std::string()) << ','
            << format_double(e.seconds) << '\n';
    }
    return out.str();
}

void write_evaluation(const MetricsReport& report, const ConfusionMatrix& cm,
                      const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "confusion.csv", confusion_csv(cm));
    write_text(dir / "metrics.json", metrics_json(report, cm));
}

void emit_report(const MetricsReport& report, const ConfusionMatrix& cm, const TrainLog& log,
                 const std::filesystem::path& dir) {
    write_evaluation(report, cm, dir);
    write_text(dir / "curves.csv", curves_csv(log));
}

} // namespace ecg
