#pragma once

// Representative selection: DBSCAN over a precomputed perceptual distance
// matrix, then the discriminator's favourite member of each cluster.

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/generator.hpp"
#include "ganspire/perception.hpp"
#include "ganspire/stylemerge.hpp"

namespace ganspire::selection {

inline constexpr int kNoise = -1;
inline constexpr double kDefaultEps = 0.9;

struct Clustering {
    std::vector<int> assignments;  // cluster id per point, or kNoise
    int cluster_count = 0;
    double eps = kDefaultEps;
    int min_points = 1;
};

// Neighbourhoods are {j : d(i, j) <= eps}, including i itself; a core point has
// at least min_points neighbours. Points are scanned in index order and border
// points join the first cluster that reaches them. Throws ContractError on an
// invalid matrix and InputError on eps outside (0, 1] or min_points < 1.
Clustering dbscan(const perception::DistanceMatrix& dm, double eps = kDefaultEps, int min_points = 1);

struct RepresentativeSet {
    std::vector<std::size_t> indices;  // chosen member per output group
    std::vector<double> scores;        // score of each chosen member
    std::vector<int> cluster_ids;      // cluster per output group (kNoise for noise singletons)
    std::vector<std::vector<std::size_t>> members;
    std::vector<double> all_scores;
};

// One representative per cluster (highest score, lowest index on ties), then
// every noise point as its own singleton, in index order.
RepresentativeSet select_representatives(std::span<const double> scores, const Clustering& clustering);
RepresentativeSet select_representatives(std::span<const Image> images, const Clustering& clustering,
                                         const gan::Model& model);

// pairwise -> dbscan -> select_representatives.
struct Selection {
    perception::DistanceMatrix distances;
    Clustering clustering;
    RepresentativeSet representatives;
};
Selection select_from_images(std::span<const Image> images, const gan::Model& model,
                             const perception::Backend& backend, double eps = kDefaultEps, int min_points = 1);
Selection select_from_batch(const stylemerge::MergeBatch& batch, const gan::Model& model,
                            const perception::Backend& backend, double eps = kDefaultEps, int min_points = 1);

nlohmann::json report_json(const Selection& s);

}  // namespace ganspire::selection
