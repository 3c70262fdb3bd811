#include "ganspire/fid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ganspire/errors.hpp"

namespace ganspire::fid {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GaussianStats fit_gaussian(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2)
        throw InputError("FID needs at least 2 feature vectors per set, got " + std::to_string(features.size()));
    const std::size_t n = features.size();
    const std::size_t d = features[0].size();
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i].size() != d) throw InputError("FID feature vectors have different lengths");
        for (std::size_t k = 0; k < d; ++k) x(i, k) = features[i][k];
    }
    GaussianStats s;
    s.count = n;
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
    s.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    if (a.mean.size() != b.mean.size()) throw InputError("FID feature dimensions differ");
    const Eigen::MatrixXd s1 = psd_sqrt(a.cov);
    Eigen::MatrixXd inner = s1 * b.cov * s1;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
    const double tr_covmean = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr_covmean;
    return std::max(value, 0.0);
}

double compute_fid(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake) {
    return frechet_distance(fit_gaussian(real), fit_gaussian(fake));
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed)
    : net_(perception::make_feature_net(seed)), hash_(perception::weights_hash(net_)) {}

std::size_t FeatureExtractor::dimension() const {
    std::size_t d = 0;
    for (const auto& c : net_.convs) d += static_cast<std::size_t>(c.cout);
    return d;
}

std::vector<double> FeatureExtractor::features(const Image& img) const {
    nn::Tensor<float> x(3, img.height, img.width);
    for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = 2.0f * img.data[i] - 1.0f;
    perception::FeatureCache<float> cache;
    perception::feature_forward(net_, x, cache);
    std::vector<double> out;
    out.reserve(dimension());
    for (const auto& f : cache.features) {
        const std::size_t hw = f.plane_size();
        for (int c = 0; c < f.c; ++c) {
            double acc = 0.0;
            const float* p = f.plane(c);
            for (std::size_t i = 0; i < hw; ++i) acc += p[i];
            out.push_back(acc / static_cast<double>(hw));
        }
    }
    return out;
}

std::vector<std::vector<double>> FeatureExtractor::features(std::span<const Image> images) const {
    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(features(img));
    return out;
}

double compute_fid(const FeatureExtractor& fx, std::span<const Image> real, std::span<const Image> fake) {
    return compute_fid(fx.features(real), fx.features(fake));
}

}  // namespace ganspire::fid
