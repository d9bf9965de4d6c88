#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcbf/concentration.hpp"

namespace pcbf {

/// Unordered realizations w_1..w_n. All entries finite, n >= 1.
class SampleVector {
public:
    explicit SampleVector(std::vector<double> values);

    template <class Derived>
    static SampleVector from_eigen(const Derived& v) {
        return SampleVector(std::vector<double>(v.data(), v.data() + v.size()));
    }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double> sorted() const;
    double max() const;

    /// FNV-1a over the raw bit patterns, in order.
    std::uint64_t digest() const;

    SampleVector shifted_by(double c) const;

private:
    std::vector<double> values_;
};

/// Rockafellar-Uryasev objective theta + sum (w_i - theta)_+ / (n alpha).
double ru_objective(const SampleVector& samples, double alpha, double theta);

/// inf_theta of the RU objective, found exactly by scanning theta over the
/// order statistics.
double empirical_cvar(const SampleVector& samples, double alpha);

/// w_(n) - (1/alpha) sum_j (w_(j+1) - w_(j)) (j/n - shift - (1 - alpha))_+.
/// With shift = 0 this is the order-statistic form of empirical_cvar.
double order_statistic_cvar(const SampleVector& samples, double alpha, double shift = 0.0);

/// (B/alpha) w_(n) + ((alpha - B)/alpha) empirical_cvar(samples, alpha - B), B in (0, alpha).
double shifted_cvar(const SampleVector& samples, double alpha, double shift);

struct CvarCertificate {
    double bound = 0.0;
    double empirical_cvar = 0.0;
    double tail_term = 0.0;
    double band_term = 0.0; // shifted_cvar - empirical_cvar
    double alpha = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
    double sigma_bar = 0.0;
    std::uint64_t sample_digest = 0;

    double recomposed() const { return empirical_cvar + band_term + tail_term; }
};

/// High-probability upper bound on CVaR_alpha: shifted_cvar at B = eps_n(delta)
/// plus the sub-Gaussian tail correction.
CvarCertificate certified_cvar_bound(const SampleVector& samples, const RiskConfig& cfg,
                                     double sigma_bar);

/// mu + sigma phi(Phi^-1(1 - alpha)) / alpha.
double gaussian_cvar_closed_form(double mu, double sigma, double alpha);

/// Truncation baseline: shifted_cvar at eps_n(delta) plus
/// (support_max - w_(n)) eps_n(delta) / alpha. Requires support_max >= max sample.
double dkw_truncation_bound(const SampleVector& samples, double alpha, double delta,
                            double support_max);

/// max(mean + 6 sd, w_(n)); the baseline's support when none is given.
double default_support_max(const SampleVector& samples, double num_sigmas = 6.0);

struct VerificationReport {
    double original_bound = 0.0;
    double fresh_bound = 0.0;
    bool original_safe = false; // original_bound <= 0
    bool fresh_safe = false;    // fresh_bound <= 0
    bool reused = false;        // fresh samples identical to the certified ones
    bool passed = false;        // fresh_safe && !reused
};

/// Re-evaluates the certificate's bound on an independent sample set.
VerificationReport verify_certificate(const SampleVector& fresh_samples,
                                      const CvarCertificate& certificate);

namespace detail {

struct SortedCvar {
    double value;
    double theta; // a minimizer of the RU objective
};

/// RU minimum over ascending-sorted values at level alpha in (0, 1].
SortedCvar empirical_cvar_sorted(std::span<const double> sorted, double alpha);

/// Shifted form on ascending-sorted values, shift in [0, alpha).
double shifted_cvar_sorted(std::span<const double> sorted, double alpha, double shift);

} // namespace detail

} // namespace pcbf
