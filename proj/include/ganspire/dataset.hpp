#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/image.hpp"

namespace ganspire::dataset {

struct ViewNode {
    std::string component_label;
    std::array<int, 4> bounds{0, 0, 0, 0};  // x1, y1, x2, y2
    std::vector<ViewNode> children;
};

struct ViewHierarchy {
    ViewNode root;
};

// Which JSON keys carry the component label of a node. The primary key is
// tried first; nodes lacking it fall back to `fallback_key` (Rico's raw
// hierarchies only carry "class"). Empty fallback disables the fallback.
struct HierarchyKeys {
    std::string label_key = "componentLabel";
    std::string fallback_key = "class";
    std::string children_key = "children";
    std::string bounds_key = "bounds";
};

// Accepts a bare node object, {"root": node} or Rico's {"activity": {"root": node}}.
// Throws ParseError whose where() is the offending node path, e.g. "root/children[2]".
ViewHierarchy parse_hierarchy(const nlohmann::json& doc, const HierarchyKeys& keys = {});
ViewHierarchy load_hierarchy(const std::filesystem::path& path, const HierarchyKeys& keys = {});

std::set<std::string> unique_components(const ViewHierarchy& h);
std::size_t count_unique_components(const ViewHierarchy& h);

struct Screenshot {
    std::string id;
    Rgb8Image image;
    std::set<std::string> labels;
    std::string source_path;
};

struct ManifestEntry {
    std::string id;
    std::string image;  // relative to the manifest directory
    int unique_components = 0;
    std::vector<std::string> labels;
};

struct CorpusManifest {
    int resolution = 64;
    std::vector<ManifestEntry> entries;
};

inline int label_count(const Screenshot& s) { return static_cast<int>(s.labels.size()); }
inline int label_count(const ManifestEntry& e) { return e.unique_components; }
inline int label_count(int n) { return n; }

template <class Entry>
struct Partition {
    std::vector<Entry> kept;
    std::vector<Entry> removed;
};

// Stable partition on |labels| >= min_unique.
template <class Entry>
Partition<Entry> filter_corpus(const std::vector<Entry>& entries, int min_unique) {
    Partition<Entry> out;
    for (const auto& e : entries) {
        if (label_count(e) >= min_unique)
            out.kept.push_back(e);
        else
            out.removed.push_back(e);
    }
    return out;
}

template <class Entry>
std::map<int, std::size_t> histogram_by_label_count(const std::vector<Entry>& entries) {
    std::map<int, std::size_t> hist;
    for (const auto& e : entries) ++hist[label_count(e)];
    return hist;
}

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);
void to_json(nlohmann::json& j, const CorpusManifest& m);
void from_json(const nlohmann::json& j, CorpusManifest& m);

// Manifest lives at <dir>/manifest.json; image paths are relative to <dir>.
CorpusManifest load_manifest(const std::filesystem::path& dir);
void save_manifest(const std::filesystem::path& dir, const CorpusManifest& m);

// Loads every manifest entry's image. Throws InputError if an image is missing
// or its size disagrees with the manifest resolution.
std::vector<Screenshot> load_corpus(const std::filesystem::path& dir);

struct PreprocessOptions {
    int min_unique = 3;
    int resolution = 64;
    HierarchyKeys keys{};
};

struct PreprocessSummary {
    std::size_t scanned = 0;
    std::size_t kept = 0;
    std::size_t removed = 0;
    std::map<int, std::size_t> histogram;  // over kept entries
};

// Reads <src>/*.png|*.jpg|*.jpeg, each with a sibling <stem>.json hierarchy,
// and writes <out>/images/<id>.png plus <out>/manifest.json.
PreprocessSummary preprocess(const std::filesystem::path& src, const std::filesystem::path& out,
                             const PreprocessOptions& opts);

}  // namespace ganspire::dataset
