#include "ganspire/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ganspire/errors.hpp"

namespace fs = std::filesystem;

namespace ganspire::experiments {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string safe_name(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

std::string mw_method_name(stats::MwMethod m) {
    switch (m) {
        case stats::MwMethod::exact: return "exact";
        case stats::MwMethod::asymptotic: return "asymptotic";
        default: return "auto";
    }
}

}  // namespace

Complexity complexity_group(int label_count) {
    if (label_count < 6) return Complexity::low;
    if (label_count <= 8) return Complexity::medium;
    return Complexity::high;
}

std::string to_string(Complexity c) {
    switch (c) {
        case Complexity::low: return "low";
        case Complexity::medium: return "medium";
        default: return "high";
    }
}

Corpus load_experiment_corpus(const fs::path& dir) {
    Corpus c;
    for (auto& s : dataset::load_corpus(dir)) {
        c.ids.push_back(s.id);
        c.label_counts.push_back(dataset::label_count(s));
        c.images.push_back(to_float(s.image));
    }
    if (c.images.empty()) throw InputError("corpus at " + dir.string() + " is empty");
    return c;
}

InputSample stratified_sample(std::span<const int> label_counts, int lo, int hi, int per_stratum,
                              std::uint64_t seed) {
    if (lo > hi) throw InputError("empty label-count range");
    if (per_stratum < 1) throw InputError("per_stratum must be >= 1");
    InputSample out;
    for (int l = lo; l <= hi; ++l) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < label_counts.size(); ++i)
            if (label_counts[i] == l) members.push_back(i);
        if (members.size() < static_cast<std::size_t>(per_stratum))
            throw InputError("stratum " + std::to_string(l) + " has " + std::to_string(members.size()) +
                             " members, need " + std::to_string(per_stratum));
        const auto picks = stylemerge::sample_without_replacement(members.size(), static_cast<std::size_t>(per_stratum),
                                                                  splitmix64(seed ^ static_cast<std::uint64_t>(l)));
        auto& stratum = out.strata[l];
        for (std::size_t p : picks) {
            stratum.push_back(members[p]);
            out.indices.push_back(members[p]);
        }
    }
    return out;
}

std::vector<std::size_t> nearest_real(const perception::Backend& backend, const perception::Embedding& query,
                                      std::span<const perception::Embedding> corpus, std::size_t k) {
    if (k < 1 || k > corpus.size())
        throw InputError("nearest_real: k = " + std::to_string(k) + " with a corpus of " +
                         std::to_string(corpus.size()));
    std::vector<double> d(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) d[i] = perception::dist(backend, query, corpus[i]);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    order.resize(k);
    return order;
}

std::vector<std::size_t> nearest_real(const perception::Backend& backend, const Image& query,
                                      std::span<const Image> corpus, std::size_t k) {
    std::vector<perception::Embedding> emb;
    emb.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].same_shape(query))
            throw ContractError("nearest_real: corpus image " + std::to_string(i) + " differs in resolution");
        emb.push_back(backend.embed(corpus[i]));
    }
    return nearest_real(backend, backend.embed(query), emb, k);
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (label_min > label_max) throw InputError("label_min > label_max");
    if (per_stratum < 1) throw InputError("per_stratum must be >= 1");
    if (k_targets < 1) throw InputError("k_targets must be >= 1");
    if (random_examples < 1 || nearest_examples < 1) throw InputError("example counts must be >= 1");
    if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
    if (min_points < 1) throw InputError("min_points must be >= 1");
    if (workers < 1) throw InputError("workers must be >= 1");
    for (int c : conditions)
        if (c < 1 || c > 6) throw InputError("condition " + std::to_string(c) + " is not in 1..6");
    encode.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"label_min", c.label_min},
                       {"label_max", c.label_max},
                       {"per_stratum", c.per_stratum},
                       {"k_targets", c.k_targets},
                       {"random_examples", c.random_examples},
                       {"nearest_examples", c.nearest_examples},
                       {"eps", c.eps},
                       {"min_points", c.min_points},
                       {"per_target", c.per_target},
                       {"dedupe_real", c.dedupe_real},
                       {"conditions", c.conditions},
                       {"workers", c.workers},
                       {"seed", c.seed},
                       {"alpha", c.alpha},
                       {"mw_method", mw_method_name(c.mw_method)},
                       {"encode", c.encode}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    const ExperimentConfig d;
    c.label_min = j.value("label_min", d.label_min);
    c.label_max = j.value("label_max", d.label_max);
    c.per_stratum = j.value("per_stratum", d.per_stratum);
    c.k_targets = j.value("k_targets", d.k_targets);
    c.random_examples = j.value("random_examples", d.random_examples);
    c.nearest_examples = j.value("nearest_examples", d.nearest_examples);
    c.eps = j.value("eps", d.eps);
    c.min_points = j.value("min_points", d.min_points);
    c.per_target = j.value("per_target", d.per_target);
    c.dedupe_real = j.value("dedupe_real", d.dedupe_real);
    c.conditions = j.value("conditions", d.conditions);
    c.workers = j.value("workers", d.workers);
    c.seed = j.value("seed", d.seed);
    c.alpha = j.value("alpha", d.alpha);
    c.mw_method = stats::parse_mw_method(j.value("mw_method", std::string("auto")));
    c.encode = j.contains("encode") ? j.at("encode").get<encoder::EncodeConfig>() : d.encode;
}

// ---------------------------------------------------------------------------

template <class K, class V>
const V& Context::Memo<K, V>::get(const K& key, const std::function<V()>& make) {
    std::promise<V> promise;
    std::shared_future<V> fut;
    bool owner = false;
    {
        std::lock_guard lock(mu);
        auto it = slots.find(key);
        if (it != slots.end()) {
            fut = it->second;
        } else {
            fut = promise.get_future().share();
            slots.emplace(key, fut);
            owner = true;
        }
    }
    if (owner) {
        try {
            promise.set_value(make());
        } catch (...) {
            promise.set_exception(std::current_exception());
        }
    }
    return fut.get();
}

Context::Context(const gan::Model& model, const perception::Backend& backend, const Corpus& corpus,
                 const Corpus& search, ExperimentConfig cfg)
    : model_(model), backend_(backend), corpus_(corpus), search_(search), cfg_(std::move(cfg)) {
    cfg_.validate();
    const int res = model.config.final_resolution();
    for (const Corpus* c : {&corpus_, &search_})
        for (std::size_t i = 0; i < c->size(); ++i)
            if (c->images[i].width != res || c->images[i].height != res)
                throw ContractError("corpus image " + c->ids[i] + " does not match the model resolution");
    if (corpus_.label_counts.size() != corpus_.size() || corpus_.ids.size() != corpus_.size())
        throw ContractError("corpus ids, images and label counts differ in length");
    if (search_.ids.size() != search_.size()) throw ContractError("search corpus ids and images differ in length");
}

std::uint64_t Context::derive_seed(std::uint64_t tag, std::uint64_t index) const {
    return splitmix64(cfg_.seed ^ splitmix64(tag * 0x100000001b3ULL + index));
}

const std::vector<float>& Context::mean_w() const {
    return mean_w_.get(0, [&] { return gan::mean_w(model_, cfg_.encode.mean_w_samples, cfg_.encode.seed); });
}

const std::vector<perception::Embedding>& Context::search_embeddings() const {
    return search_emb_.get(0, [&] {
        std::vector<perception::Embedding> out;
        out.reserve(search_.size());
        for (const auto& img : search_.images) out.push_back(backend_.embed(img));
        return out;
    });
}

gan::StyleCode Context::encode_image(const Image& img) const {
    const std::vector<float>* mw = cfg_.encode.init_mode == "mean_w" ? &mean_w() : nullptr;
    return encoder::encode(img, model_, backend_, cfg_.encode, mw).code;
}

const gan::StyleCode& Context::corpus_code(std::size_t i) const {
    if (i >= corpus_.size()) throw InputError("corpus index " + std::to_string(i) + " out of range");
    return codes_.get(i, [&] { return encode_image(corpus_.images[i]); });
}

Generation Context::generate(const gan::StyleCode& source, const GenerationParams& params) const {
    if (params.k < 1) throw InputError("k must be >= 1");
    const int S = model_.config.slots();
    std::vector<stylemerge::SlotRange> ranges;
    for (const auto& r : stylemerge::enumerate_ranges(S))
        if (stylemerge::matches(params.granularity, r, S)) ranges.push_back(r);

    std::vector<gan::StyleCode> targets;
    Generation g;
    if (params.mode == stylemerge::TargetMode::random_latent) {
        auto ts = stylemerge::make_targets(params.mode, params.k, model_, params.seed);
        targets = std::move(ts.codes);
        g.target_ids = std::move(ts.ids);
    } else {
        const auto picks =
            stylemerge::sample_without_replacement(corpus_.size(), static_cast<std::size_t>(params.k), params.seed);
        for (std::size_t idx : picks) {
            targets.push_back(corpus_code(idx));
            g.target_ids.push_back(corpus_.ids[idx]);
        }
    }

    std::vector<stylemerge::MergeBatch> batches;
    for (std::size_t t = 0; t < targets.size(); ++t)
        batches.push_back(stylemerge::synthesize_pair(source, targets[t], model_, "source", g.target_ids[t], ranges));

    auto emit = [&](const std::vector<const stylemerge::MergeItem*>& items, const std::vector<std::size_t>& owner) {
        std::vector<Image> images;
        images.reserve(items.size());
        for (const auto* it : items) images.push_back(it->image);
        const auto sel = selection::select_from_images(images, model_, backend_, params.eps, params.min_points);
        g.cluster_count += static_cast<std::size_t>(sel.clustering.cluster_count);
        const auto& reps = sel.representatives;
        for (std::size_t r = 0; r < reps.indices.size(); ++r) {
            const std::size_t i = reps.indices[r];
            Example e;
            e.provenance = "generated";
            e.image = items[i]->image;
            e.target_id = batches[owner[i]].target_id;
            e.range = items[i]->range;
            e.score = reps.scores[r];
            g.representatives.push_back(std::move(e));
        }
    };

    if (params.per_target) {
        for (std::size_t t = 0; t < batches.size(); ++t) {
            std::vector<const stylemerge::MergeItem*> items;
            for (const auto& it : batches[t].items) items.push_back(&it);
            g.generated += items.size();
            emit(items, std::vector<std::size_t>(items.size(), t));
        }
    } else {
        std::vector<const stylemerge::MergeItem*> items;
        std::vector<std::size_t> owner;
        for (std::size_t t = 0; t < batches.size(); ++t)
            for (const auto& it : batches[t].items) {
                items.push_back(&it);
                owner.push_back(t);
            }
        g.generated = items.size();
        emit(items, owner);
    }
    return g;
}

Generation Context::generation_for(int condition, const gan::StyleCode& source, std::uint64_t seed_index) const {
    if (condition != 1 && condition != 2) throw InputError("only conditions 1 and 2 generate examples");
    GenerationParams p;
    p.mode = condition == 1 ? stylemerge::TargetMode::random_latent : stylemerge::TargetMode::corpus_image;
    p.k = cfg_.k_targets;
    p.seed = derive_seed(static_cast<std::uint64_t>(condition), seed_index);
    p.eps = cfg_.eps;
    p.min_points = cfg_.min_points;
    p.per_target = cfg_.per_target;
    try {
        return generate(source, p);
    } catch (const std::exception& e) {
        throw StageError(condition, "generation", e.what());
    }
}

const Generation& Context::condition_generation(int condition, std::size_t input_index) const {
    if (condition != 1 && condition != 2) throw InputError("only conditions 1 and 2 generate examples");
    return generations_.get({condition, input_index}, [&] {
        const gan::StyleCode* source = nullptr;
        try {
            source = &corpus_code(input_index);
        } catch (const std::exception& e) {
            throw StageError(condition, "encode", e.what());
        }
        return generation_for(condition, *source, input_index);
    });
}

std::vector<Example> Context::to_real(std::span<const Example> generated, bool dedupe) const {
    const auto& emb = search_embeddings();
    std::vector<Example> out;
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const std::size_t idx = nearest_real(backend_, backend_.embed(generated[i].image), emb, 1).front();
        if (dedupe && !seen.insert(idx).second) continue;
        Example e;
        e.provenance = "real";
        e.image = search_.images[idx];
        e.corpus_id = search_.ids[idx];
        e.corpus_index = idx;
        e.matched_from = i;
        e.target_id = generated[i].target_id;
        e.range = generated[i].range;
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

ConditionReport run_condition_impl(int condition, const Context& ctx, const std::string& input_id, const Image& input,
                                   int label_count, std::uint64_t seed_index,
                                   const std::function<const Generation&(int)>& generation) {
    if (condition < 1 || condition > 6) throw InputError("condition must be in 1..6");
    const Corpus& corpus = ctx.corpus();
    const auto& cfg = ctx.config();

    ConditionReport r;
    r.condition = condition;
    r.input_index = seed_index;
    r.input_id = input_id;
    r.label_count = label_count;
    r.complexity = complexity_group(label_count);

    auto stage = [&](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(condition, name, e.what());
        }
    };

    switch (condition) {
        case 1:
        case 2: {
            const auto& g = generation(condition);
            r.examples = g.representatives;
            r.generated = g.generated;
            r.cluster_count = g.cluster_count;
            break;
        }
        case 3:
        case 4: {
            const auto& g = generation(condition - 2);
            r.generated = g.generated;
            r.cluster_count = g.cluster_count;
            stage("search", [&] { r.examples = ctx.to_real(g.representatives, cfg.dedupe_real); });
            break;
        }
        case 5:
            stage("sample", [&] {
                const auto picks = stylemerge::sample_without_replacement(
                    corpus.size(), static_cast<std::size_t>(cfg.random_examples), ctx.derive_seed(5, seed_index));
                for (std::size_t idx : picks) {
                    Example e;
                    e.provenance = "real";
                    e.image = corpus.images[idx];
                    e.corpus_id = corpus.ids[idx];
                    e.corpus_index = idx;
                    r.examples.push_back(std::move(e));
                }
            });
            break;
        case 6:
            stage("search", [&] {
                const auto& search = ctx.search();
                const auto picks = nearest_real(ctx.backend(), ctx.backend().embed(input), ctx.search_embeddings(),
                                                static_cast<std::size_t>(cfg.nearest_examples));
                for (std::size_t idx : picks) {
                    Example e;
                    e.provenance = "real";
                    e.image = search.images[idx];
                    e.corpus_id = search.ids[idx];
                    e.corpus_index = idx;
                    r.examples.push_back(std::move(e));
                }
            });
            break;
    }

    stage("metrics", [&] {
        std::vector<Image> images;
        images.reserve(r.examples.size());
        for (const auto& e : r.examples) images.push_back(e.image);
        r.metrics = metrics::evaluate_set(ctx.backend(), r.input_id, condition, input, images);
    });
    return r;
}

}  // namespace

ConditionReport run_condition(int condition, std::size_t input_index, const Context& ctx) {
    const Corpus& corpus = ctx.corpus();
    if (input_index >= corpus.size()) throw InputError("input index out of range");
    return run_condition_impl(condition, ctx, corpus.ids[input_index], corpus.images[input_index],
                              corpus.label_counts[input_index], input_index,
                              [&](int c) -> const Generation& { return ctx.condition_generation(c, input_index); });
}

ConditionReport run_condition(int condition, const std::string& input_id, const Image& input,
                              std::uint64_t seed_index, const Context& ctx, int label_count) {
    if (input.width != ctx.model().config.final_resolution() || input.height != input.width)
        throw ContractError("input image does not match the model resolution");
    std::optional<Generation> cached;
    return run_condition_impl(condition, ctx, input_id, input, label_count, seed_index,
                              [&](int c) -> const Generation& {
                                  if (!cached) {
                                      gan::StyleCode source;
                                      try {
                                          source = ctx.encode_image(input);
                                      } catch (const std::exception& e) {
                                          throw StageError(condition, "encode", e.what());
                                      }
                                      cached = ctx.generation_for(c, source, seed_index);
                                  }
                                  return *cached;
                              });
}

nlohmann::json to_json(const ConditionReport& r) {
    nlohmann::json examples = nlohmann::json::array();
    for (const auto& e : r.examples) {
        nlohmann::json x{{"provenance", e.provenance}};
        if (!e.target_id.empty()) x["target_id"] = e.target_id;
        if (e.range) x["range"] = *e.range;
        if (e.provenance == "generated") x["score"] = e.score;
        if (!e.corpus_id.empty()) x["corpus_id"] = e.corpus_id;
        if (e.corpus_index) x["corpus_index"] = *e.corpus_index;
        if (e.matched_from) x["matched_from"] = *e.matched_from;
        examples.push_back(std::move(x));
    }
    return {{"condition", r.condition},
            {"input_id", r.input_id},
            {"input_index", r.input_index},
            {"label_count", r.label_count},
            {"complexity", to_string(r.complexity)},
            {"generated", r.generated},
            {"cluster_count", r.cluster_count},
            {"metrics", r.metrics},
            {"examples", examples}};
}

// ---------------------------------------------------------------------------

namespace {

MetricStats metric_stats(const std::map<int, std::vector<double>>& by_condition, double alpha,
                         stats::MwMethod method) {
    MetricStats m;
    stats::Groups groups;
    for (const auto& [c, values] : by_condition) {
        if (values.empty()) continue;
        m.conditions.push_back(c);
        m.counts.push_back(values.size());
        groups.push_back(values);
    }
    if (groups.size() >= 2) {
        m.kruskal_wallis = stats::kruskal_wallis(groups);
        m.pairwise = stats::mannwhitney_bonferroni(groups, alpha, method);
    }
    return m;
}

nlohmann::json metric_stats_json(const MetricStats& m) {
    nlohmann::json j{{"conditions", m.conditions}, {"counts", m.counts}};
    j["kruskal_wallis"] = m.kruskal_wallis ? nlohmann::json(*m.kruskal_wallis) : nlohmann::json(nullptr);
    if (m.pairwise) {
        nlohmann::json p = *m.pairwise;
        // Relabel group indices with condition numbers.
        for (auto& e : p["entries"]) {
            e["row"] = m.conditions[e["row"].get<std::size_t>()];
            e["col"] = m.conditions[e["col"].get<std::size_t>()];
        }
        p["median_diff_matrix"] = m.pairwise->median_diff_matrix();
        j["pairwise"] = p;
    } else {
        j["pairwise"] = nullptr;
    }
    return j;
}

}  // namespace

std::vector<GroupStats> aggregate_stats(std::span<const ConditionReport> cells, double alpha,
                                        stats::MwMethod method) {
    std::vector<std::string> names{"all"};
    for (Complexity c : {Complexity::low, Complexity::medium, Complexity::high})
        if (std::any_of(cells.begin(), cells.end(), [&](const ConditionReport& r) { return r.complexity == c; }))
            names.push_back(to_string(c));

    std::vector<GroupStats> out;
    for (const auto& name : names) {
        std::map<int, std::vector<double>> sim, div;
        std::set<std::string> inputs;
        for (const auto& r : cells) {
            if (name != "all" && to_string(r.complexity) != name) continue;
            inputs.insert(r.input_id);
            sim[r.condition].push_back(r.metrics.similarity);
            auto& d = div[r.condition];
            if (r.metrics.diversity) d.push_back(*r.metrics.diversity);
        }
        GroupStats g;
        g.group = name;
        g.inputs = inputs.size();
        g.similarity = metric_stats(sim, alpha, method);
        g.diversity = metric_stats(div, alpha, method);
        out.push_back(std::move(g));
    }
    return out;
}

ExperimentReport run_experiment(const Context& ctx) {
    const auto& cfg = ctx.config();
    ExperimentReport rep;
    rep.sample = stratified_sample(ctx.corpus().label_counts, cfg.label_min, cfg.label_max, cfg.per_stratum,
                                   ctx.derive_seed(0, 0));

    struct Cell {
        std::size_t input;
        int condition;
    };
    std::vector<Cell> cells;
    for (std::size_t idx : rep.sample.indices)
        for (int c : cfg.conditions) cells.push_back({idx, c});

    std::vector<std::optional<ConditionReport>> done(cells.size());
    std::vector<std::optional<CellFailure>> failed(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            const auto& cell = cells[i];
            try {
                done[i] = run_condition(cell.condition, cell.input, ctx);
            } catch (const StageError& e) {
                failed[i] = CellFailure{ctx.corpus().ids[cell.input], cell.condition, e.stage(), e.message()};
            } catch (const std::exception& e) {
                failed[i] = CellFailure{ctx.corpus().ids[cell.input], cell.condition, "unknown", e.what()};
            }
        }
    };
    const int n_threads = std::min<int>(cfg.workers, static_cast<int>(cells.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (done[i]) rep.cells.push_back(std::move(*done[i]));
        if (failed[i]) rep.failures.push_back(std::move(*failed[i]));
    }
    rep.stats = aggregate_stats(rep.cells, cfg.alpha, cfg.mw_method);
    return rep;
}

std::string aggregate_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "condition,input_id,label_count,complexity,n,similarity,diversity\n";
    for (const auto& c : r.cells)
        os << c.condition << ',' << c.input_id << ',' << c.label_count << ',' << to_string(c.complexity) << ','
           << c.metrics.n << ',' << fmt_double(c.metrics.similarity) << ','
           << (c.metrics.diversity ? fmt_double(*c.metrics.diversity) : "NA") << '\n';
    return os.str();
}

std::string long_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "condition,input_id,complexity,metric,value\n";
    for (const auto& c : r.cells) {
        os << c.condition << ',' << c.input_id << ',' << to_string(c.complexity) << ",similarity,"
           << fmt_double(c.metrics.similarity) << '\n';
        if (c.metrics.diversity)
            os << c.condition << ',' << c.input_id << ',' << to_string(c.complexity) << ",diversity,"
               << fmt_double(*c.metrics.diversity) << '\n';
    }
    return os.str();
}

nlohmann::json stats_json(const ExperimentReport& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.stats)
        groups.push_back({{"group", g.group},
                          {"inputs", g.inputs},
                          {"similarity", metric_stats_json(g.similarity)},
                          {"diversity", metric_stats_json(g.diversity)}});
    return {{"unit", "per-input metric value"}, {"groups", groups}};
}

void write_report(const ExperimentReport& r, const fs::path& dir) {
    fs::create_directories(dir / "cells");
    auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw InputError("cannot write " + p.string());
        f << text;
    };
    for (const auto& c : r.cells)
        write(dir / "cells" / (safe_name(c.input_id) + "_c" + std::to_string(c.condition) + ".json"),
              to_json(c).dump(2) + "\n");
    write(dir / "aggregate.csv", aggregate_csv(r));
    write(dir / "long.csv", long_csv(r));
    write(dir / "stats.json", stats_json(r).dump(2) + "\n");
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : r.failures)
        failures.push_back(
            {{"input_id", f.input_id}, {"condition", f.condition}, {"stage", f.stage}, {"message", f.message}});
    write(dir / "failures.json", failures.dump(2) + "\n");
    nlohmann::json strata = nlohmann::json::object();
    for (const auto& [l, idx] : r.sample.strata) strata[std::to_string(l)] = idx;
    write(dir / "sample.json", nlohmann::json{{"indices", r.sample.indices}, {"strata", strata}}.dump(2) + "\n");
}

}  // namespace ganspire::experiments
