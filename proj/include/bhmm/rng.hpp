#ifndef BHMM_RNG_HPP
#define BHMM_RNG_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace bhmm {

// Splittable counter-style generator (splitmix64 core).  A given seed
// always produces the same stream; children split off distinct labels are
// independent streams regardless of how much the parent has been consumed.
// Instances are single-owner; share work across threads by splitting.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double next_double();  // uniform on [0, 1)
    double next_open();    // uniform on (0, 1), safe under log()

    Rng split(std::uint64_t label) const;
    Rng split(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

double sample_normal(Rng& rng, double mean, double variance);
double sample_gamma(Rng& rng, double shape);  // unit scale
double sample_scaled_inv_chisq(Rng& rng, double nu, double tau_sq);
std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha);
int sample_categorical(Rng& rng, std::span<const double> probs);

}  // namespace bhmm

#endif
