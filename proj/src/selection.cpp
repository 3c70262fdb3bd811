#include "ganspire/selection.hpp"

#include <deque>

#include "ganspire/errors.hpp"

namespace ganspire::selection {

Clustering dbscan(const perception::DistanceMatrix& dm, double eps, int min_points) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
    if (min_points < 1) throw InputError("min_points must be >= 1");
    if (!dm.valid()) throw ContractError("dbscan: distance matrix is not symmetric with zero diagonal in [0,1]");

    const int n = dm.n;
    constexpr int kUnvisited = -2;
    Clustering c;
    c.eps = eps;
    c.min_points = min_points;
    c.assignments.assign(n, kUnvisited);

    auto neighbours = [&](int i) {
        std::vector<int> out;
        for (int j = 0; j < n; ++j)
            if (dm.at(i, j) <= eps) out.push_back(j);
        return out;
    };

    for (int i = 0; i < n; ++i) {
        if (c.assignments[i] != kUnvisited) continue;
        auto nb = neighbours(i);
        if (static_cast<int>(nb.size()) < min_points) {
            c.assignments[i] = kNoise;
            continue;
        }
        const int id = c.cluster_count++;
        c.assignments[i] = id;
        std::deque<int> queue(nb.begin(), nb.end());
        while (!queue.empty()) {
            const int j = queue.front();
            queue.pop_front();
            if (c.assignments[j] == kNoise) c.assignments[j] = id;  // border point
            if (c.assignments[j] != kUnvisited) continue;
            c.assignments[j] = id;
            auto nj = neighbours(j);
            if (static_cast<int>(nj.size()) >= min_points) queue.insert(queue.end(), nj.begin(), nj.end());
        }
    }
    return c;
}

RepresentativeSet select_representatives(std::span<const double> scores, const Clustering& clustering) {
    if (scores.size() != clustering.assignments.size())
        throw ContractError("select_representatives: " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(clustering.assignments.size()) + " points");
    RepresentativeSet out;
    out.all_scores.assign(scores.begin(), scores.end());
    std::vector<std::vector<std::size_t>> members(clustering.cluster_count);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int a = clustering.assignments[i];
        if (a >= 0) members.at(a).push_back(i);
    }
    for (int c = 0; c < clustering.cluster_count; ++c) {
        if (members[c].empty()) throw ContractError("cluster " + std::to_string(c) + " has no members");
        std::size_t best = members[c].front();
        for (std::size_t i : members[c])
            if (scores[i] > scores[best]) best = i;
        out.indices.push_back(best);
        out.scores.push_back(scores[best]);
        out.cluster_ids.push_back(c);
        out.members.push_back(members[c]);
    }
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (clustering.assignments[i] == kNoise) {
            out.indices.push_back(i);
            out.scores.push_back(scores[i]);
            out.cluster_ids.push_back(kNoise);
            out.members.push_back({i});
        }
    return out;
}

RepresentativeSet select_representatives(std::span<const Image> images, const Clustering& clustering,
                                         const gan::Model& model) {
    std::vector<double> scores;
    scores.reserve(images.size());
    for (const auto& img : images) scores.push_back(gan::discriminator_score(model, img));
    return select_representatives(scores, clustering);
}

Selection select_from_images(std::span<const Image> images, const gan::Model& model,
                             const perception::Backend& backend, double eps, int min_points) {
    if (images.empty()) throw InputError("selection needs at least one image");
    Selection s;
    s.distances = perception::pairwise(backend, images);
    s.clustering = dbscan(s.distances, eps, min_points);
    s.representatives = select_representatives(images, s.clustering, model);
    return s;
}

Selection select_from_batch(const stylemerge::MergeBatch& batch, const gan::Model& model,
                            const perception::Backend& backend, double eps, int min_points) {
    std::vector<Image> images;
    images.reserve(batch.items.size());
    for (const auto& item : batch.items) images.push_back(item.image);
    return select_from_images(images, model, backend, eps, min_points);
}

nlohmann::json report_json(const Selection& s) {
    nlohmann::json clusters = nlohmann::json::array();
    const auto& r = s.representatives;
    for (std::size_t k = 0; k < r.indices.size(); ++k)
        clusters.push_back({{"cluster", r.cluster_ids[k]},
                            {"representative", r.indices[k]},
                            {"score", r.scores[k]},
                            {"members", r.members[k]}});
    return {{"eps", s.clustering.eps},
            {"min_points", s.clustering.min_points},
            {"cluster_count", s.clustering.cluster_count},
            {"assignments", s.clustering.assignments},
            {"scores", r.all_scores},
            {"representatives", clusters}};
}

}  // namespace ganspire::selection
