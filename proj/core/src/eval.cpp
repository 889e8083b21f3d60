#include "symbio/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "symbio/io.hpp"
#include "symbio/rng.hpp"

namespace symbio {

Metrics precision_recall(const std::vector<Detection>& predictions, const LoopLabelSet& truth,
                         bool missing_is_negative) {
    Metrics m;
    std::set<std::pair<int64_t, int64_t>> predicted;
    for (const Detection& det : predictions) {
        auto label = truth.lookup(det.query, det.reference);
        if (!label) {
            if (!missing_is_negative)
                throw ValidationError("prediction (" + std::to_string(det.query) + "," +
                                      std::to_string(det.reference) + ") has no ground-truth label");
            label = false;
        }
        predicted.emplace(std::max(det.query, det.reference), std::min(det.query, det.reference));
        (*label ? m.tp : m.fp)++;
    }
    for (const auto& [pair, is_loop] : truth.pairs())
        if (is_loop && !predicted.count(pair)) ++m.fn;
    return m;
}

SplitIndices stratified_split(const Dataset& data, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("test fraction must be in (0,1)");
    std::vector<uint32_t> by_class[2];
    for (uint32_t i = 0; i < data.n_rows(); ++i) by_class[data.labels[i] == 1 ? 1 : 0].push_back(i);

    Rng rng(derive_seed(seed, "split"));
    SplitIndices split;
    for (auto& rows : by_class) {
        for (size_t i = rows.size(); i > 1; --i)  // Fisher-Yates
            std::swap(rows[i - 1], rows[rng.next_below(i)]);
        size_t n_test = size_t(std::llround(test_fraction * double(rows.size())));
        n_test = std::min(n_test, rows.size() > 0 ? rows.size() - 1 : size_t(0));
        for (size_t i = 0; i < rows.size(); ++i)
            (i < n_test ? split.test : split.train).push_back(rows[i]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Dataset take_rows(const Dataset& data, const std::vector<uint32_t>& indices) {
    Dataset out;
    out.feature_names = data.feature_names;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (uint32_t i : indices) {
        out.rows.push_back(data.rows[i]);
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

Metrics evaluate_split(const Dataset& train_set, const Dataset& test_set,
                       const ForestHyperparams& hp, double threshold, int n_threads) {
    ForestModel model = train(train_set, hp, n_threads);
    Metrics m;
    for (size_t i = 0; i < test_set.n_rows(); ++i) {
        Prediction pred = predict(model, test_set.rows[i]);
        bool positive = pred.prob >= threshold;
        bool actual = test_set.labels[i] == 1;
        if (positive && actual)
            ++m.tp;
        else if (positive && !actual)
            ++m.fp;
        else if (!positive && actual)
            ++m.fn;
    }
    return m;
}

RunSummary summarize(const std::vector<std::optional<double>>& values) {
    std::vector<double> defined;
    for (const auto& v : values)
        if (v) defined.push_back(*v);
    RunSummary s;
    s.defined_runs = defined.size();
    if (defined.empty()) return s;

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    s.median = median_of(defined);
    s.mean = std::accumulate(defined.begin(), defined.end(), 0.0) / double(defined.size());
    std::vector<double> dev;
    dev.reserve(defined.size());
    for (double v : defined) dev.push_back(std::abs(v - s.median));
    s.mad = median_of(dev);
    return s;
}

namespace {

void finalize_report(EvalReport& report) {
    std::vector<std::optional<double>> ps, rs;
    for (const auto& [p, r] : report.runs) {
        ps.push_back(p);
        rs.push_back(r);
    }
    report.precision_summary = summarize(ps);
    report.recall_summary = summarize(rs);
}

}  // namespace

AblationResult ablation(const Dataset& data, const ForestHyperparams& hp, double test_fraction,
                        double threshold, uint64_t split_seed, int n_runs, int n_threads) {
    data.validate();
    if (data.n_features() != 4)
        throw ValidationError("ablation expects the canonical 4-feature dataset");

    AblationResult result;
    result.cnn_only.name = "cnn-e";
    result.vbow_only.name = "vbow";
    result.both.name = "both";

    const std::vector<size_t> cnn_features = {0, 1, 2};
    const std::vector<size_t> vbow_features = {3};
    const std::vector<size_t> all_features = {0, 1, 2, 3};

    for (int run = 0; run < n_runs; ++run) {
        uint64_t run_seed = derive_seed(split_seed, "ablation-run", uint64_t(run));
        SplitIndices split = stratified_split(data, test_fraction, run_seed);

        ForestHyperparams run_hp = hp;
        run_hp.seed = derive_seed(hp.seed, "ablation-forest", uint64_t(run));

        struct Arm {
            EvalReport* report;
            const std::vector<size_t>* features;
        };
        for (Arm arm : {Arm{&result.cnn_only, &cnn_features}, Arm{&result.vbow_only, &vbow_features},
                        Arm{&result.both, &all_features}}) {
            Dataset projected = data.project(*arm.features);
            Dataset train_set = take_rows(projected, split.train);
            Dataset test_set = take_rows(projected, split.test);
            Metrics m = evaluate_split(train_set, test_set, run_hp, threshold, n_threads);
            arm.report->totals = m;
            arm.report->n_test_rows = test_set.n_rows();
            arm.report->n_test_positives = test_set.positive_count();
            arm.report->runs.emplace_back(m.precision(), m.recall());
        }
    }
    finalize_report(result.cnn_only);
    finalize_report(result.vbow_only);
    finalize_report(result.both);
    return result;
}

EvalReport repeated_eval(const Dataset& data, const ForestHyperparams& hp, double test_fraction,
                         double threshold, uint64_t base_seed, int n_runs, int n_threads) {
    if (n_runs < 1) throw ValidationError("n_runs must be >= 1");
    data.validate();

    EvalReport report;
    report.name = "random-forest";
    for (int run = 0; run < n_runs; ++run) {
        SplitIndices split = stratified_split(data, test_fraction, derive_seed(base_seed, "run-split", uint64_t(run)));
        ForestHyperparams run_hp = hp;
        run_hp.seed = derive_seed(hp.seed, "run-forest", uint64_t(run));
        Dataset train_set = take_rows(data, split.train);
        Dataset test_set = take_rows(data, split.test);
        Metrics m = evaluate_split(train_set, test_set, run_hp, threshold, n_threads);
        report.totals = m;
        report.n_test_rows = test_set.n_rows();
        report.n_test_positives = test_set.positive_count();
        report.runs.emplace_back(m.precision(), m.recall());
    }
    finalize_report(report);
    return report;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string format_report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    auto row = [&](const std::string& a, const std::string& b, const std::string& c,
                   const std::string& d, const std::string& e, const std::string& f,
                   const std::string& g, const std::string& h) {
        out << "  ";
        out.width(14);
        out << std::left << a;
        for (const std::string* col : {&b, &c, &d, &e, &f, &g, &h}) {
            out.width(10);
            out << std::right << *col;
        }
        out << '\n';
    };
    row("arm", "runs", "P(med)", "P(mean)", "P(mad)", "R(med)", "R(mean)", "R(mad)");
    for (const EvalReport& r : reports) {
        row(r.name, std::to_string(r.runs.size()), fmt4(r.precision_summary.median),
            fmt4(r.precision_summary.mean), fmt4(r.precision_summary.mad), fmt4(r.recall_summary.median),
            fmt4(r.recall_summary.mean), fmt4(r.recall_summary.mad));
    }
    return out.str();
}

std::string format_report_csv(const std::vector<EvalReport>& reports) {
    std::string out = "arm,run,precision,recall\n";
    for (const EvalReport& r : reports) {
        for (size_t i = 0; i < r.runs.size(); ++i) {
            out += r.name;
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += r.runs[i].first ? format_double(*r.runs[i].first) : "n/a";
            out += ',';
            out += r.runs[i].second ? format_double(*r.runs[i].second) : "n/a";
            out += '\n';
        }
    }
    return out;
}

}  // namespace symbio
