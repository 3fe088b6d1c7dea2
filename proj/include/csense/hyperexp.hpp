#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace csense {

/// Posterior mixture probabilities over the phases of a HyperExp, i.e. the
/// state the sensing policy carries: entry i is the probability the running
/// idle period was drawn from phase i given everything observed so far.
struct PhaseVector {
    std::vector<double> p;
    /// Set when residual_update had to clamp to the limit vector because the
    /// elapsed time was too large for finite arithmetic.
    bool underflow_clamped = false;
};

/// K-phase hyper-exponential distribution: with probability p_i the variate
/// is exponential with rate lambda_i. Canonical form sorts rates ascending,
/// merges duplicate rates and drops zero-probability phases.
class HyperExp {
public:
    HyperExp(std::vector<double> probs, std::vector<double> rates) {
        if (probs.empty() || probs.size() != rates.size())
            throw std::invalid_argument("HyperExp: need equally sized, nonempty probs/rates");
        double total = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
                throw std::invalid_argument("HyperExp: phase probabilities must be >= 0");
            if (!(rates[i] > 0.0) || !std::isfinite(rates[i]))
                throw std::invalid_argument("HyperExp: phase rates must be positive and finite");
            total += probs[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("HyperExp: phase probabilities must sum to 1");

        std::vector<std::size_t> order(probs.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return rates[a] < rates[b]; });
        for (std::size_t idx : order) {
            if (probs[idx] == 0.0) continue; // a never-drawn phase carries no information
            if (!rates_.empty() && rates[idx] <= rates_.back() * (1.0 + 1e-12)) {
                probs_.back() += probs[idx]; // merge duplicate rate
            } else {
                probs_.push_back(probs[idx]);
                rates_.push_back(rates[idx]);
            }
        }
        if (probs_.empty()) throw std::invalid_argument("HyperExp: all phases had zero probability");
    }

    std::size_t k() const { return rates_.size(); }
    double prob(std::size_t i) const { return probs_[i]; }
    double rate(std::size_t i) const { return rates_[i]; }
    double min_rate() const { return rates_.front(); }
    double max_rate() const { return rates_.back(); }
    const std::vector<double>& probs() const { return probs_; }
    const std::vector<double>& rates() const { return rates_; }

    /// Prior phase probabilities (the state before any observation).
    PhaseVector initial_pv() const { return {probs_, false}; }

private:
    std::vector<double> probs_;
    std::vector<double> rates_;
};

/// Throws unless pv is a valid state for d (matching length, nonnegative
/// entries summing to 1). Operations below assume validity; call this at
/// module boundaries rather than in inner loops.
inline void validate_phase_vector(const HyperExp& d, const PhaseVector& pv) {
    if (pv.p.size() != d.k())
        throw std::invalid_argument("PhaseVector: length must match the distribution's phase count");
    double total = 0.0;
    for (double v : pv.p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("PhaseVector: entries must be finite and >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("PhaseVector: entries must sum to 1");
}

/// Draw one idle time: pick a phase by its probability, then an exponential
/// of that phase's rate. Always consumes exactly two words of the stream, so
/// stream shape never depends on which phase was hit.
inline double sample(const HyperExp& d, RngStream& rng) {
    const double u = rng.uniform01();
    std::size_t i = 0;
    double acc = d.prob(0);
    while (i + 1 < d.k() && u >= acc) {
        ++i;
        acc += d.prob(i);
    }
    return rng.exponential(d.rate(i));
}

/// P(X > t) under the mixture pv: sum_i pv_i e^{-lambda_i t}.
inline double survival(const HyperExp& d, const PhaseVector& pv, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("survival: t must be >= 0");
    double s = 0.0;
    for (std::size_t i = 0; i < d.k(); ++i) s += pv.p[i] * std::exp(-d.rate(i) * t);
    return s;
}

/// E[X] under the mixture pv: sum_i pv_i / lambda_i.
inline double mean(const HyperExp& d, const PhaseVector& pv) {
    double m = 0.0;
    for (std::size_t i = 0; i < d.k(); ++i) m += pv.p[i] / d.rate(i);
    return m;
}

/// Posterior phase probabilities after observing the channel stay idle for
/// `interval` more time: pv_i e^{-lambda_i dt}, renormalized. Computed in the
/// log domain (subtract the max exponent) so widely spread rates cannot
/// produce 0/0; if even that overflows, clamps to the limit vector
/// [1, 0, ..., 0] (all mass on the smallest rate) and flags it.
inline PhaseVector residual_update(const HyperExp& d, const PhaseVector& pv, double interval) {
    if (!(interval >= 0.0)) throw std::invalid_argument("residual_update: interval must be >= 0");
    if (interval == 0.0) return pv; // exact identity

    const std::size_t k = d.k();
    std::vector<double> w(k);
    double max_w = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = (pv.p[i] > 0.0) ? std::log(pv.p[i]) - d.rate(i) * interval
                               : -std::numeric_limits<double>::infinity();
        max_w = std::max(max_w, w[i]);
    }

    PhaseVector out;
    out.p.assign(k, 0.0);
    if (!std::isfinite(max_w)) {
        out.p[0] = 1.0; // smallest rate dominates in the limit
        out.underflow_clamped = true;
        return out;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out.p[i] = std::exp(w[i] - max_w);
        total += out.p[i];
    }
    for (std::size_t i = 0; i < k; ++i) out.p[i] /= total;
    return out;
}

/// Expected overshoot E[(I - X) 1{X <= I}] under the mixture pv: the average
/// time the user would keep transmitting past the idle period's end if it
/// waited the full interval I before sensing:
///   I - sum_i pv_i (1 - e^{-lambda_i I}) / lambda_i.
inline double interference_expectation(const HyperExp& d, const PhaseVector& pv, double interval) {
    if (!(interval >= 0.0))
        throw std::invalid_argument("interference_expectation: interval must be >= 0");
    double taken = 0.0;
    for (std::size_t i = 0; i < d.k(); ++i)
        taken += pv.p[i] * (-std::expm1(-d.rate(i) * interval)) / d.rate(i);
    const double v = interval - taken;
    return v > 0.0 ? v : 0.0;
}

} // namespace csense
