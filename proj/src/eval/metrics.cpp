#include "cse/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

namespace cse {

MetricsAtK metrics_at_k(const EvalSample& sample, size_t k) {
    if (k == 0) throw Error("metrics: k must be >= 1");
    if (sample.ranking.empty()) throw Error("metrics: empty ranking");
    if (sample.gold.empty()) throw Error("metrics: empty gold set");

    std::unordered_set<uint32_t> gold(sample.gold.begin(), sample.gold.end());
    const size_t top = std::min(k, sample.ranking.size());
    const size_t denom = std::min(gold.size(), k);

    MetricsAtK m;
    size_t hits = 0;
    double ap = 0.0, dcg = 0.0;
    for (size_t i = 0; i < top; ++i) {
        if (!gold.count(sample.ranking[i])) continue;
        ++hits;
        const double rank = static_cast<double>(i + 1);
        ap += static_cast<double>(hits) / rank;
        dcg += 1.0 / std::log2(rank + 1.0);
        if (m.rr == 0.0) m.rr = 1.0 / rank;
    }
    m.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
    m.ap = ap / static_cast<double>(denom);
    double idcg = 0.0;
    for (size_t i = 0; i < denom; ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    m.ndcg = dcg / idcg;
    return m;
}

const MetricsAtK& EvalReport::at(size_t cutoff) const {
    for (size_t i = 0; i < cutoffs.size(); ++i)
        if (cutoffs[i] == cutoff) return mean[i];
    throw Error("report: cutoff not evaluated");
}

std::vector<double> EvalReport::column(size_t cutoff,
                                       double MetricsAtK::*field) const {
    size_t ci = cutoffs.size();
    for (size_t i = 0; i < cutoffs.size(); ++i)
        if (cutoffs[i] == cutoff) ci = i;
    if (ci == cutoffs.size()) throw Error("report: cutoff not evaluated");
    std::vector<double> out(per_sample.size());
    for (size_t s = 0; s < per_sample.size(); ++s) out[s] = per_sample[s][ci].*field;
    return out;
}

EvalReport evaluate(std::vector<EvalSample> samples, std::vector<size_t> cutoffs) {
    if (samples.empty()) throw EmptyCorpusError("evaluate: empty test set");
    if (cutoffs.empty()) throw Error("evaluate: no cutoffs");
    for (const auto& s : samples) {
        if (s.gold.empty()) throw Error("evaluate: sample with empty gold set");
        if (s.ranking.empty()) throw Error("evaluate: sample with empty ranking");
    }

    std::stable_sort(samples.begin(), samples.end(),
                     [](const EvalSample& a, const EvalSample& b) {
                         if (a.sentence != b.sentence) return a.sentence < b.sentence;
                         return a.seed < b.seed;
                     });

    EvalReport rep;
    rep.cutoffs = cutoffs;
    rep.samples = samples.size();
    rep.keys.reserve(samples.size());
    rep.per_sample.assign(samples.size(), std::vector<MetricsAtK>(cutoffs.size()));
    for (const auto& s : samples) rep.keys.emplace_back(s.sentence, s.seed);

#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (long long si = 0; si < static_cast<long long>(samples.size()); ++si) {
        size_t i = static_cast<size_t>(si);
        for (size_t c = 0; c < cutoffs.size(); ++c)
            rep.per_sample[i][c] = metrics_at_k(samples[i], cutoffs[c]);
    }

    rep.mean.assign(cutoffs.size(), MetricsAtK{});
    for (size_t i = 0; i < samples.size(); ++i) {
        for (size_t c = 0; c < cutoffs.size(); ++c) {
            rep.mean[c].recall += rep.per_sample[i][c].recall;
            rep.mean[c].ap += rep.per_sample[i][c].ap;
            rep.mean[c].rr += rep.per_sample[i][c].rr;
            rep.mean[c].ndcg += rep.per_sample[i][c].ndcg;
        }
    }
    const double n = static_cast<double>(samples.size());
    for (auto& m : rep.mean) {
        m.recall /= n;
        m.ap /= n;
        m.rr /= n;
        m.ndcg /= n;
    }
    return rep;
}

std::string report_tsv(
    const std::vector<std::pair<std::string, EvalReport>>& systems) {
    if (systems.empty()) throw Error("report_tsv: no systems");
    const auto& cuts = systems.front().second.cutoffs;
    for (const auto& [name, rep] : systems)
        if (rep.cutoffs != cuts)
            throw Error("report_tsv: cutoff sets differ across systems");

    std::ostringstream out;
    out << "# macro-averaged over (sentence, seed) samples\n";
    out << "system";
    for (size_t k : cuts)
        out << "\trecall@" << k << "\tmap@" << k << "\tmrr@" << k << "\tndcg@" << k;
    out << "\tsamples\n";
    char buf[32];
    for (const auto& [name, rep] : systems) {
        out << name;
        for (const auto& m : rep.mean) {
            for (double v : {m.recall, m.ap, m.rr, m.ndcg}) {
                snprintf(buf, sizeof(buf), "%.6f", v);
                out << '\t' << buf;
            }
        }
        out << '\t' << rep.samples << '\n';
    }
    return out.str();
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("t-test: length mismatch");
    const size_t n = a.size();
    if (n < 2) throw Error("t-test: need at least 2 pairs");

    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTest res;
    if (sd == 0.0) {
        if (mean == 0.0) return {0.0, 1.0};
        res.t = mean > 0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
        res.p = 0.0;
        return res;
    }
    res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double abs_t = std::abs(res.t);
    if (n >= 1000) {
        res.p = std::erfc(abs_t / std::sqrt(2.0));
    } else {
        boost::math::students_t dist(static_cast<double>(n - 1));
        res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, abs_t));
    }
    return res;
}

}  // namespace cse
