#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "selflearn/datamodel.hpp"

namespace selflearn {

/// Raised when a metric is not defined for its input (e.g. AUROC with only
/// one outcome class).
class UndefinedMetric : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AurocSample {
    double gamma = 0.0;
    bool correct = false;
};

/// Mann-Whitney AUROC of -gamma as a predictor of correctness, with midranks
/// for ties. High when confident items are right and uncertain ones wrong.
double auroc(const std::vector<AurocSample>& samples);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long true_positive = 0;
    long predicted = 0;
    long gold = 0;
};

/// Micro span-F1 over exact (begin, end, type) matches. Each inner vector
/// holds the spans of one sequence.
PRF span_f1(const std::vector<std::vector<Span>>& gold, const std::vector<std::vector<Span>>& pred);
PRF prf_from_counts(long tp, long predicted, long gold);

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred);

struct Histogram {
    std::string language;
    double low = 0.0;
    double high = 0.0;
    std::vector<long> counts;
};

/// Equal-width bins over [min, max] of each language's scores; the maximum
/// falls in the last bin. Constant scores put everything in bin 0.
std::vector<Histogram> gamma_histogram(const std::vector<std::string>& languages,
                                       const std::vector<std::vector<double>>& scores, int bins);
void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists);

}  // namespace selflearn
