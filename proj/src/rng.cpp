#include "bhmm/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bhmm {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open() {
    // 52-bit mantissa in (0,1): (k + 0.5) * 2^-52 never hits the endpoints
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

Rng Rng::split(std::uint64_t label) const {
    return Rng(mix64(seed_ ^ mix64(label + 0x632BE59BD9B4E019ULL)));
}

Rng Rng::split(std::string_view label) const {
    return split(fnv1a(label));
}

double sample_normal(Rng& rng, double mean, double variance) {
    if (!(variance > 0.0))
        throw std::domain_error("sample_normal: variance must be positive");
    const double u1 = rng.next_open(), u2 = rng.next_double();
    const double z = std::sqrt(-2.0 * std::log(u1)) *
                     std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + std::sqrt(variance) * z;
}

// Marsaglia-Tsang; boost to shape >= 1 for shape < 1.
double sample_gamma(Rng& rng, double shape) {
    if (!(shape > 0.0))
        throw std::domain_error("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        const double u = rng.next_open();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_normal(rng, 0.0, 1.0);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_open();
        if (u < 1.0 - 0.0331 * x * x * x * x)
            return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

double sample_scaled_inv_chisq(Rng& rng, double nu, double tau_sq) {
    if (!(nu > 0.0) || !(tau_sq > 0.0))
        throw std::domain_error("sample_scaled_inv_chisq: nu, tau^2 must be positive");
    const double chisq = 2.0 * sample_gamma(rng, 0.5 * nu);
    return nu * tau_sq / chisq;
}

std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha) {
    if (alpha.empty())
        throw std::domain_error("sample_dirichlet: empty alpha");
    std::vector<double> x(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0))
            throw std::domain_error("sample_dirichlet: alpha entries must be positive");
        x[i] = sample_gamma(rng, alpha[i]);
        total += x[i];
    }
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        x[i] /= total;
        partial += x[i];
    }
    x.back() = 1.0 - partial;  // exact simplex closure
    return x;
}

int sample_categorical(Rng& rng, std::span<const double> probs) {
    if (probs.empty())
        throw std::domain_error("sample_categorical: empty probabilities");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0))
            throw std::domain_error("sample_categorical: negative probability");
        total += p;
    }
    if (!(total > 0.0))
        throw std::domain_error("sample_categorical: zero mass");
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc)
            return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace bhmm
