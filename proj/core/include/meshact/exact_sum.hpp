#pragma once

#include <vector>

namespace meshact {

// Exact accumulator for sums of doubles, kept as a nonoverlapping expansion
// (components in increasing magnitude order). The represented value is the
// exact real sum of everything added, so comparisons and the final rounding
// are independent of addition order. Shortest-path distances built on top of
// this are bit-reproducible and exactly symmetric.
class ExactSum {
public:
    ExactSum() = default;
    explicit ExactSum(double v);

    void add(double x);
    void add(const ExactSum& other);

    // Nearest double to the exact value.
    double rounded() const;

    // Sign of (this - other): -1, 0, or +1. Exact.
    int compare(const ExactSum& other) const;

    bool operator<(const ExactSum& other) const { return compare(other) < 0; }

    const std::vector<double>& components() const { return comps_; }

private:
    void maybe_compress();

    std::vector<double> comps_;
};

}  // namespace meshact
