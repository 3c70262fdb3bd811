#pragma once

// Independent reference implementations shared by unit tests and the
// acceptance binary.

#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/perception.hpp"

namespace oracle {

// Flatten the raw record and collect every value stored under a
// "componentLabel" key, wherever it sits.
inline std::set<std::string> flat_scan(const nlohmann::json& doc) {
    std::set<std::string> labels;
    const nlohmann::json flat = doc.flatten();
    for (const auto& [path, value] : flat.items()) {
        const std::string suffix = "/componentLabel";
        if (path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
            labels.insert(value.get<std::string>());
    }
    return labels;
}

// Union-find components of the graph d(i, j) <= eps, labelled by first member.
inline std::vector<int> components(const ganspire::perception::DistanceMatrix& m, double eps) {
    std::vector<int> parent(m.n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (int i = 0; i < m.n; ++i)
        for (int j = i + 1; j < m.n; ++j)
            if (m.at(i, j) <= eps) {
                const int a = find(i), b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
    std::map<int, int> label;
    std::vector<int> out(m.n);
    for (int i = 0; i < m.n; ++i) {
        const int r = find(i);
        if (!label.count(r)) label[r] = static_cast<int>(label.size());
        out[i] = label[r];
    }
    return out;
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

}  // namespace oracle
