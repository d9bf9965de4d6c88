#include "pcbf/cvar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "pcbf/error.hpp"

namespace pcbf {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1), got " + std::to_string(alpha));
}

} // namespace

SampleVector::SampleVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::InvalidInput, "sample vector is empty");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "sample vector has non-finite entries");
}

std::vector<double> SampleVector::sorted() const {
    std::vector<double> s = values_;
    std::stable_sort(s.begin(), s.end());
    return s;
}

double SampleVector::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::uint64_t SampleVector::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values_) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

SampleVector SampleVector::shifted_by(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x += c;
    return SampleVector(std::move(v));
}

namespace detail {

SortedCvar empirical_cvar_sorted(std::span<const double> sorted, double alpha) {
    const auto n = sorted.size();
    const double scale = 1.0 / (static_cast<double>(n) * alpha);
    // Candidate theta = sorted[k]. excess = sum over j > k of (sorted[j] - theta),
    // built from nonnegative gaps so equal samples give exactly zero.
    SortedCvar best{std::numeric_limits<double>::infinity(), sorted.back()};
    double excess = 0.0;
    for (std::size_t idx = n; idx-- > 0;) {
        const double theta = sorted[idx];
        if (idx + 1 < n) excess += static_cast<double>(n - 1 - idx) * (sorted[idx + 1] - theta);
        const double value = theta + scale * excess;
        if (value < best.value) best = {value, theta};
    }
    return best;
}

double shifted_cvar_sorted(std::span<const double> sorted, double alpha, double shift) {
    const double wmax = sorted.back();
    const double inner = empirical_cvar_sorted(sorted, alpha - shift).value;
    return (shift / alpha) * wmax + ((alpha - shift) / alpha) * inner;
}

} // namespace detail

double ru_objective(const SampleVector& samples, double alpha, double theta) {
    check_alpha(alpha);
    double acc = 0.0;
    for (double w : samples.values()) acc += std::max(0.0, w - theta);
    return theta + acc / (static_cast<double>(samples.size()) * alpha);
}

double empirical_cvar(const SampleVector& samples, double alpha) {
    check_alpha(alpha);
    const auto s = samples.sorted();
    return detail::empirical_cvar_sorted(s, alpha).value;
}

double order_statistic_cvar(const SampleVector& samples, double alpha, double shift) {
    check_alpha(alpha);
    if (!(shift >= 0.0 && shift < alpha))
        throw Error(ErrorCode::InvalidShift, "shift must lie in [0, alpha)");
    const auto s = samples.sorted();
    const auto n = s.size();
    double acc = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double weight = static_cast<double>(j) / static_cast<double>(n) - shift - (1.0 - alpha);
        if (weight > 0.0) acc += (s[j] - s[j - 1]) * weight;
    }
    return s.back() - acc / alpha;
}

double shifted_cvar(const SampleVector& samples, double alpha, double shift) {
    check_alpha(alpha);
    if (!(shift > 0.0 && shift < alpha))
        throw Error(ErrorCode::InvalidShift, "shift B must lie in (0, alpha)");
    const auto s = samples.sorted();
    return detail::shifted_cvar_sorted(s, alpha, shift);
}

CvarCertificate certified_cvar_bound(const SampleVector& samples, const RiskConfig& cfg,
                                     double sigma_bar) {
    if (samples.size() != cfg.n())
        throw Error(ErrorCode::DimensionMismatch,
                    "risk config n = " + std::to_string(cfg.n()) + " but " +
                        std::to_string(samples.size()) + " samples");
    const double eps = cfg.band();
    const auto s = samples.sorted();
    CvarCertificate c;
    c.alpha = cfg.alpha();
    c.delta = cfg.delta();
    c.n = samples.size();
    c.sigma_bar = sigma_bar;
    c.sample_digest = samples.digest();
    c.empirical_cvar = detail::empirical_cvar_sorted(s, cfg.alpha()).value;
    const double shifted = detail::shifted_cvar_sorted(s, cfg.alpha(), eps);
    c.band_term = shifted - c.empirical_cvar;
    c.tail_term = tail_correction(sigma_bar, samples.size(), cfg.delta(), cfg.alpha());
    c.bound = shifted + c.tail_term;
    return c;
}

double gaussian_cvar_closed_form(double mu, double sigma, double alpha) {
    check_alpha(alpha);
    if (!(sigma >= 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidInput, "sigma must be finite and >= 0");
    if (sigma == 0.0) return mu;
    const boost::math::normal_distribution<double> standard;
    const double z = boost::math::quantile(standard, 1.0 - alpha);
    return mu + sigma * boost::math::pdf(standard, z) / alpha;
}

double dkw_truncation_bound(const SampleVector& samples, double alpha, double delta,
                            double support_max) {
    check_alpha(alpha);
    const double wmax = samples.max();
    if (!(support_max >= wmax))
        throw Error(ErrorCode::SupportViolated, "a sample exceeds support_max");
    const double eps = dkw_epsilon(samples.size(), delta);
    if (alpha <= eps)
        throw Error(ErrorCode::InvalidAlpha, "alpha must exceed eps_n(delta)");
    return shifted_cvar(samples, alpha, eps) + (support_max - wmax) * eps / alpha;
}

double default_support_max(const SampleVector& samples, double num_sigmas) {
    const auto& v = samples.values();
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return std::max(mean + num_sigmas * sd, samples.max());
}

VerificationReport verify_certificate(const SampleVector& fresh_samples,
                                      const CvarCertificate& certificate) {
    VerificationReport r;
    r.original_bound = certificate.bound;
    r.original_safe = certificate.bound <= 0.0;
    r.reused = fresh_samples.size() == certificate.n &&
               fresh_samples.digest() == certificate.sample_digest;
    const RiskConfig cfg(certificate.alpha, certificate.delta, fresh_samples.size());
    r.fresh_bound = certified_cvar_bound(fresh_samples, cfg, certificate.sigma_bar).bound;
    r.fresh_safe = r.fresh_bound <= 0.0;
    r.passed = r.fresh_safe && !r.reused;
    return r;
}

} // namespace pcbf
