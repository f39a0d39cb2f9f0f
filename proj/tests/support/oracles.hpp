#pragma once

// Independent reference implementations used to check the library: brute
// force enumerators, a direct entropy maximizer and numerical integration.

#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tilechain/explorer.hpp"

namespace oracle {

using tilechain::Index;

using Rect = std::pair<std::vector<Index>, std::vector<Index>>;

/// Every closed (left, right) pair of the relation with |left| >= min_support
/// and right nonempty, found by trying every subset of right-side entities.
std::set<Rect> closed_biclusters(const tilechain::Relation& relation, std::size_t min_support);

/// (e, f) pairs sharing a row, by a double loop over each row's entities.
std::set<std::pair<Index, Index>> cooccurring_pairs(const tilechain::Dataset& dataset,
                                                    tilechain::DomainId left,
                                                    tilechain::DomainId right);

/// All member sequences through `seed` that step one relation at a time,
/// satisfy the Jaccard condition at each link, and cannot be extended at
/// either end. Found by enumerating every sequence over consecutive
/// relations.
std::set<std::vector<std::string>> maximal_chains(const tilechain::Schema& schema,
                                                  const std::vector<tilechain::Bicluster>& bcs,
                                                  const std::string& seed, double threshold);

/// Maximizes the summed Bernoulli entropy of an n x m grid subject to the
/// given expected row and column sums, by Newton ascent inside the affine
/// subspace of feasible grids starting from `start` (feasible, interior).
/// Returns row-major probabilities.
std::vector<double> max_entropy_margins(Index n, Index m, const std::vector<double>& start);

/// Composite Simpson rule with `intervals` (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int intervals);

tilechain::TransactionMatrix random_binary(std::mt19937_64& rng, Index n, Index m, double density);
tilechain::TransactionMatrix random_real(std::mt19937_64& rng, Index n, Index m, double density);

/// Dataset with `domains` domains of `per_domain` entities, rows drawn at
/// the given density, labels "d<k>"/"e<k>"/"D<k>".
tilechain::Dataset random_dataset(std::mt19937_64& rng, Index docs, int domains, Index per_domain,
                                  double density);

}  // namespace oracle
