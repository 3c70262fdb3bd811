#pragma once

// Frechet distance between Gaussian fits of two feature sets:
//
//   FID = |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)
//
// Features come from a frozen random convolutional embedder (the per-layer
// channel means of a seeded FeatureNet, 16 + 32 + 32 = 80 dimensions), pinned
// by the hash of its weights. This stands in for Inception at desk scale.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ganspire/image.hpp"
#include "ganspire/perception.hpp"

namespace ganspire::fid {

inline constexpr std::uint64_t kFeatureSeed = 0x46494446ULL;

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // unbiased (n - 1)
    std::size_t count = 0;
};

// Throws InputError with fewer than 2 rows or ragged rows.
GaussianStats fit_gaussian(const std::vector<std::vector<double>>& features);

double frechet_distance(const GaussianStats& a, const GaussianStats& b);

double compute_fid(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake);

class FeatureExtractor {
public:
    explicit FeatureExtractor(std::uint64_t seed = kFeatureSeed);
    std::vector<double> features(const Image& img) const;
    std::vector<std::vector<double>> features(std::span<const Image> images) const;
    std::size_t dimension() const;
    std::uint64_t hash() const { return hash_; }

private:
    perception::FeatureNetT<float> net_;
    std::uint64_t hash_;
};

double compute_fid(const FeatureExtractor& fx, std::span<const Image> real, std::span<const Image> fake);

}  // namespace ganspire::fid
