#include "ganspire/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "ganspire/errors.hpp"

namespace ganspire::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ViewNode parse_node(const json& j, const HierarchyKeys& keys, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "node is not an object");
    ViewNode node;

    auto label_of = [&](const std::string& key) -> const json* {
        if (key.empty()) return nullptr;
        auto it = j.find(key);
        return it == j.end() || it->is_null() ? nullptr : &*it;
    };
    const json* label = label_of(keys.label_key);
    if (label == nullptr) label = label_of(keys.fallback_key);
    if (label == nullptr) throw ParseError(path, "missing component label");
    if (!label->is_string() || label->get_ref<const std::string&>().empty())
        throw ParseError(path, "component label must be a non-empty string");
    node.component_label = label->get<std::string>();

    if (auto it = j.find(keys.bounds_key); it != j.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 4) throw ParseError(path, "bounds must hold 4 integers");
        for (std::size_t i = 0; i < 4; ++i) {
            if (!(*it)[i].is_number_integer()) throw ParseError(path, "bounds must hold 4 integers");
            node.bounds[i] = (*it)[i].get<int>();
        }
        if (node.bounds[2] < node.bounds[0] || node.bounds[3] < node.bounds[1])
            throw ParseError(path, "bounds have negative extent");
    }

    if (auto it = j.find(keys.children_key); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError(path, "children must be an array");
        node.children.reserve(it->size());
        for (std::size_t i = 0; i < it->size(); ++i) {
            // Rico sometimes stores null placeholders for pruned children.
            if ((*it)[i].is_null()) continue;
            node.children.push_back(
                parse_node((*it)[i], keys, path + "/" + keys.children_key + "[" + std::to_string(i) + "]"));
        }
    }
    return node;
}

void collect(const ViewNode& n, std::set<std::string>& out) {
    out.insert(n.component_label);
    for (const auto& c : n.children) collect(c, out);
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), e.what());
    }
}

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

ViewHierarchy parse_hierarchy(const json& doc, const HierarchyKeys& keys) {
    if (doc.is_object()) {
        if (auto a = doc.find("activity"); a != doc.end() && a->is_object()) {
            auto r = a->find("root");
            if (r == a->end()) throw ParseError("activity", "missing root");
            return {parse_node(*r, keys, "activity/root")};
        }
        if (auto r = doc.find("root"); r != doc.end() && r->is_object()) return {parse_node(*r, keys, "root")};
    }
    return {parse_node(doc, keys, "root")};
}

ViewHierarchy load_hierarchy(const fs::path& path, const HierarchyKeys& keys) {
    const json doc = read_json(path);
    try {
        return parse_hierarchy(doc, keys);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ":" + e.where(), e.what());
    }
}

std::set<std::string> unique_components(const ViewHierarchy& h) {
    std::set<std::string> out;
    collect(h.root, out);
    return out;
}

std::size_t count_unique_components(const ViewHierarchy& h) { return unique_components(h).size(); }

void to_json(json& j, const ManifestEntry& e) {
    j = json{{"id", e.id}, {"image", e.image}, {"unique_components", e.unique_components}, {"labels", e.labels}};
}

void from_json(const json& j, ManifestEntry& e) {
    j.at("id").get_to(e.id);
    j.at("image").get_to(e.image);
    j.at("unique_components").get_to(e.unique_components);
    e.labels = j.value("labels", std::vector<std::string>{});
}

void to_json(json& j, const CorpusManifest& m) {
    j = json{{"format", "ganspire-corpus/1"}, {"resolution", m.resolution}, {"entries", m.entries}};
}

void from_json(const json& j, CorpusManifest& m) {
    j.at("resolution").get_to(m.resolution);
    j.at("entries").get_to(m.entries);
}

CorpusManifest load_manifest(const fs::path& dir) {
    const json j = read_json(dir / "manifest.json");
    try {
        return j.get<CorpusManifest>();
    } catch (const json::exception& e) {
        throw ParseError((dir / "manifest.json").string(), e.what());
    }
}

void save_manifest(const fs::path& dir, const CorpusManifest& m) {
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw InputError("cannot write manifest in " + dir.string());
    out << json(m).dump(2) << '\n';
}

std::vector<Screenshot> load_corpus(const fs::path& dir) {
    const CorpusManifest m = load_manifest(dir);
    std::vector<Screenshot> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        Screenshot s;
        s.id = e.id;
        s.source_path = (dir / e.image).string();
        s.image = read_image(dir / e.image);
        if (s.image.width != m.resolution || s.image.height != m.resolution)
            throw InputError(s.source_path + ": image size disagrees with manifest resolution");
        s.labels.insert(e.labels.begin(), e.labels.end());
        if (static_cast<int>(s.labels.size()) != e.unique_components)
            throw ParseError(e.id, "label list disagrees with unique_components");
        out.push_back(std::move(s));
    }
    return out;
}

PreprocessSummary preprocess(const fs::path& src, const fs::path& out, const PreprocessOptions& opts) {
    if (opts.min_unique < 1) throw InputError("min_unique must be >= 1");
    if (opts.resolution < 32 || (opts.resolution & (opts.resolution - 1)) != 0)
        throw InputError("resolution must be a power of two >= 32");
    if (!fs::is_directory(src)) throw InputError("not a directory: " + src.string());

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(src))
        if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    std::vector<ManifestEntry> scanned;
    for (const auto& img : images) {
        fs::path hierarchy = img;
        hierarchy.replace_extension(".json");
        if (!fs::exists(hierarchy)) throw InputError("missing view hierarchy for " + img.string());
        const auto labels = unique_components(load_hierarchy(hierarchy, opts.keys));
        ManifestEntry e;
        e.id = img.stem().string();
        e.image = img.string();
        e.unique_components = static_cast<int>(labels.size());
        e.labels.assign(labels.begin(), labels.end());
        scanned.push_back(std::move(e));
    }

    auto parts = filter_corpus(scanned, opts.min_unique);
    fs::create_directories(out / "images");
    CorpusManifest manifest;
    manifest.resolution = opts.resolution;
    for (auto e : parts.kept) {
        const auto resized = resize_to_square(read_image(e.image), opts.resolution);
        const std::string rel = "images/" + e.id + ".png";
        write_png(out / rel, resized);
        e.image = rel;
        manifest.entries.push_back(std::move(e));
    }
    save_manifest(out, manifest);

    PreprocessSummary summary;
    summary.scanned = scanned.size();
    summary.kept = parts.kept.size();
    summary.removed = parts.removed.size();
    summary.histogram = histogram_by_label_count(parts.kept);
    return summary;
}

}  // namespace ganspire::dataset
