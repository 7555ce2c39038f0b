#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cse/common.hpp"

namespace cse {

// One ranking task: recover the gold labels from the system's ordered list.
// The seed identifies the sample (with the sentence id) and never appears in
// gold or ranking.
struct EvalSample {
    std::string sentence;
    std::string seed;
    std::vector<uint32_t> gold;      // nonempty
    std::vector<uint32_t> ranking;   // ordered, best first
};

struct MetricsAtK {
    double recall = 0.0;
    double ap = 0.0;     // truncated AP, denominator min(|G|, k)
    double rr = 0.0;
    double ndcg = 0.0;   // binary gains, log2(rank+1) discounts
};

MetricsAtK metrics_at_k(const EvalSample& sample, size_t k);

// Macro-averaged report. Samples are kept in canonical (sentence, seed)
// order so per-sample columns from two systems pair up for t-tests.
struct EvalReport {
    std::vector<size_t> cutoffs;
    std::vector<MetricsAtK> mean;                      // per cutoff
    size_t samples = 0;
    std::vector<std::pair<std::string, std::string>> keys;   // (sentence, seed)
    std::vector<std::vector<MetricsAtK>> per_sample;   // [sample][cutoff]

    const MetricsAtK& at(size_t cutoff) const;
    std::vector<double> column(size_t cutoff, double MetricsAtK::*field) const;
};

EvalReport evaluate(std::vector<EvalSample> samples,
                    std::vector<size_t> cutoffs = {5, 10, 20});

// rows = systems, columns = metric@cutoff
std::string report_tsv(
    const std::vector<std::pair<std::string, EvalReport>>& systems);

struct TTest {
    double t = 0.0;
    double p = 1.0;
};

// Paired two-sided test on per-sample metric columns. Normal approximation
// for n >= 1000, Student's t with n-1 degrees of freedom below that.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace cse
