#include "meshact/exact_sum.hpp"

#include <cmath>
#include <cstddef>

namespace meshact {
namespace {

struct SumPair {
    double hi;
    double lo;
};

// Knuth two-sum: hi + lo == a + b exactly, no magnitude precondition.
inline SumPair two_sum(double a, double b) {
    double hi = a + b;
    double bv = hi - a;
    double av = hi - bv;
    double lo = (a - av) + (b - bv);
    return {hi, lo};
}

// Dekker fast two-sum, requires |a| >= |b|.
inline SumPair fast_two_sum(double a, double b) {
    double hi = a + b;
    double lo = b - (hi - a);
    return {hi, lo};
}

// Shewchuk GROW-EXPANSION with zero elimination. `e` is a nonoverlapping
// expansion in increasing magnitude order; the result keeps that invariant.
void grow(std::vector<double>& e, double b) {
    if (b == 0.0) return;
    double q = b;
    std::size_t out = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        SumPair s = two_sum(q, e[i]);
        q = s.hi;
        if (s.lo != 0.0) e[out++] = s.lo;
    }
    e.resize(out);
    if (q != 0.0) e.push_back(q);
}

// Shewchuk COMPRESS. Preserves the exact value, shrinks the representation,
// and leaves the largest component within half an ulp of the exact sum.
void compress(std::vector<double>& e) {
    if (e.size() <= 1) return;
    const std::size_t m = e.size();
    std::vector<double> g(m, 0.0);
    double q = e[m - 1];
    std::size_t bottom = m - 1;
    for (std::size_t ii = m - 1; ii-- > 0;) {
        SumPair s = fast_two_sum(q, e[ii]);
        q = s.hi;
        if (s.lo != 0.0) {
            g[bottom--] = q;
            q = s.lo;
        }
    }
    g[bottom] = q;

    std::vector<double> h;
    h.reserve(m);
    q = g[bottom];
    for (std::size_t i = bottom + 1; i < m; ++i) {
        SumPair s = fast_two_sum(g[i], q);
        q = s.hi;
        if (s.lo != 0.0) h.push_back(s.lo);
    }
    h.push_back(q);
    e = std::move(h);
}

}  // namespace

ExactSum::ExactSum(double v) {
    if (v != 0.0) comps_.push_back(v);
}

void ExactSum::add(double x) {
    grow(comps_, x);
    maybe_compress();
}

void ExactSum::add(const ExactSum& other) {
    for (double c : other.comps_) grow(comps_, c);
    maybe_compress();
}

void ExactSum::maybe_compress() {
    if (comps_.size() > 16) compress(comps_);
}

double ExactSum::rounded() const {
    if (comps_.empty()) return 0.0;
    if (comps_.size() == 1) return comps_[0];
    std::vector<double> tmp = comps_;
    compress(tmp);
    return tmp.back();
}

int ExactSum::compare(const ExactSum& other) const {
    std::vector<double> diff = comps_;
    for (double c : other.comps_) grow(diff, -c);
    if (diff.empty()) return 0;
    // Nonoverlapping expansion: the largest component carries the sign.
    return diff.back() > 0.0 ? 1 : -1;
}

}  // namespace meshact
