#pragma once

#include <optional>
#include <vector>

#include "wtw/corpus.hpp"
#include "wtw/likelihood.hpp"

// Reference implementations written independently of the library code.
namespace wtw::testing {

/// log of the binomial probability, coefficient included.
double log_binomial(double k, double n, double p);

/// G^2 as -2 log of the ratio of the null-hypothesis and alternative
/// binomial likelihoods.
double g2_binomial_oracle(double a, double b, double c, double d);

/// 2 N I(U; V) in nats over the 2x2 table.
double g2_mutual_information(double a, double b, double c, double d);

/// Probability of at least two successes in gamma trials, by summing over
/// all 2^gamma outcome sequences.
double multi_rare_enumeration(int gamma, double p);

/// Best achievable sum of like over one-to-one assignments of the segment,
/// tokens left over going to NULL. Links without an entry are not allowed.
/// Returns nullopt if no assignment is admissible.
std::optional<double> best_assignment_score(const SegmentPair& pair, const LikelihoodTable& like);

}  // namespace wtw::testing
