#include "ganspire/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include <httplib.h>

#include "ganspire/checkpoint.hpp"
#include "ganspire/errors.hpp"

namespace fs = std::filesystem;

namespace ganspire::service {

namespace {

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw InputError("cannot read " + p.string());
    return nlohmann::json::parse(f);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw InputError("cannot write " + p.string());
        f << j.dump(2) << '\n';
    }
    fs::rename(tmp, p);
}

int rank(JobState s) {
    switch (s) {
        case JobState::queued: return 0;
        case JobState::running: return 1;
        default: return 2;
    }
}

bool terminal(JobState s) { return s == JobState::done || s == JobState::failed; }

std::int64_t id_number(const std::string& id) {
    try {
        return id.size() > 1 ? std::stoll(id.substr(1)) : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

nlohmann::json params_json(const JobParams& p) {
    return {{"targets", p.targets}, {"k", p.k}, {"eps", p.eps}, {"granularity", p.granularity}, {"real", p.real}};
}

}  // namespace

void to_json(nlohmann::json& j, const ServiceConfig& c) {
    j = nlohmann::json{{"host", c.host},
                       {"port", c.port},
                       {"checkpoint", c.checkpoint},
                       {"corpus", c.corpus},
                       {"search_corpus", c.search_corpus},
                       {"data_dir", c.data_dir},
                       {"workers", c.workers},
                       {"seed", c.seed},
                       {"max_upload_bytes", c.max_upload_bytes},
                       {"backend", c.backend},
                       {"experiment", c.experiment}};
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
    const ServiceConfig d;
    c.host = j.value("host", d.host);
    c.port = j.value("port", d.port);
    c.checkpoint = j.value("checkpoint", d.checkpoint);
    c.corpus = j.value("corpus", d.corpus);
    c.search_corpus = j.value("search_corpus", d.search_corpus);
    c.data_dir = j.value("data_dir", d.data_dir);
    c.workers = j.value("workers", d.workers);
    c.seed = j.value("seed", d.seed);
    c.max_upload_bytes = j.value("max_upload_bytes", d.max_upload_bytes);
    c.backend = j.contains("backend") ? j.at("backend").get<perception::BackendConfig>() : d.backend;
    c.experiment = j.contains("experiment") ? j.at("experiment").get<experiments::ExperimentConfig>() : d.experiment;
}

ServiceConfig load_config(const fs::path& path) {
    try {
        return read_json(path).get<ServiceConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), e.what());
    }
}

std::string to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        default: return "failed";
    }
}

JobState parse_job_state(const std::string& s) {
    if (s == "queued") return JobState::queued;
    if (s == "running") return JobState::running;
    if (s == "done") return JobState::done;
    if (s == "failed") return JobState::failed;
    throw InputError("unknown job state '" + s + "'");
}

nlohmann::json to_json(const Job& j) {
    nlohmann::json out{{"id", j.id},
                       {"input_id", j.input_id},
                       {"seed", j.seed},
                       {"state", to_string(j.state)},
                       {"created_at", j.created_at}};
    out["condition"] = j.condition ? nlohmann::json(*j.condition) : nlohmann::json(nullptr);
    out["params"] = j.params ? params_json(*j.params) : nlohmann::json(nullptr);
    if (j.state == JobState::failed) out["error"] = j.error;
    return out;
}

Job job_from_json(const nlohmann::json& j) {
    Job out;
    out.id = j.at("id").get<std::string>();
    out.input_id = j.at("input_id").get<std::string>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.state = parse_job_state(j.at("state").get<std::string>());
    out.created_at = j.value("created_at", std::int64_t{0});
    if (!j.at("condition").is_null()) out.condition = j.at("condition").get<int>();
    if (!j.at("params").is_null()) {
        const auto& p = j.at("params");
        JobParams jp;
        jp.targets = p.at("targets").get<std::string>();
        jp.k = p.at("k").get<int>();
        jp.eps = p.at("eps").get<double>();
        jp.granularity = p.at("granularity").get<std::string>();
        jp.real = p.at("real").get<bool>();
        out.params = jp;
    }
    out.error = j.value("error", std::string{});
    return out;
}

// ---------------------------------------------------------------------------

Service::Service(ServiceConfig cfg, gan::Model model, experiments::Corpus corpus, experiments::Corpus search)
    : cfg_(std::move(cfg)),
      data_(cfg_.data_dir),
      model_(std::move(model)),
      corpus_(std::move(corpus)),
      search_(std::move(search)) {
    if (cfg_.workers < 1) throw InputError("workers must be >= 1");
    backend_ = perception::make_backend(cfg_.backend);
    auto ecfg = cfg_.experiment;
    ecfg.seed = cfg_.seed;
    ctx_ = std::make_unique<experiments::Context>(model_, *backend_, corpus_, search_, ecfg);
    for (const char* sub : {"inputs", "jobs", "images/inputs"}) fs::create_directories(data_ / sub);
    restore();
    for (int i = 0; i < cfg_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() { stop(); }

std::unique_ptr<Service> Service::from_config(const ServiceConfig& cfg) {
    auto model = gan::load_checkpoint(cfg.checkpoint).model;
    auto corpus = experiments::load_experiment_corpus(cfg.corpus);
    auto search = cfg.search_corpus.empty() ? corpus : experiments::load_experiment_corpus(cfg.search_corpus);
    return std::make_unique<Service>(cfg, std::move(model), std::move(corpus), std::move(search));
}

void Service::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_)
        if (t.joinable()) t.join();
    workers_.clear();
}

std::string Service::next_id(char prefix, std::int64_t& counter) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06lld", prefix, static_cast<long long>(++counter));
    return buf;
}

void Service::restore() {
    for (const auto& e : fs::directory_iterator(data_ / "inputs")) {
        if (e.path().extension() != ".json") continue;
        const std::string id = e.path().stem().string();
        inputs_[id] = true;
        input_counter_ = std::max(input_counter_, id_number(id));
    }
    std::vector<std::string> pending;
    for (const auto& e : fs::directory_iterator(data_ / "jobs")) {
        const fs::path rec = e.path() / "job.json";
        if (!fs::exists(rec)) continue;
        Job j = job_from_json(read_json(rec));
        job_counter_ = std::max(job_counter_, id_number(j.id));
        if (!terminal(j.state)) pending.push_back(j.id);
        jobs_[j.id] = std::move(j);
    }
    std::sort(pending.begin(), pending.end());
    for (auto& id : pending) queue_.push_back(id);
}

std::string Service::add_input(std::span<const std::uint8_t> bytes) {
    if (bytes.size() > cfg_.max_upload_bytes)
        throw HttpError(413, "upload of " + std::to_string(bytes.size()) + " bytes exceeds the " +
                                 std::to_string(cfg_.max_upload_bytes) + "-byte limit");
    const auto format = sniff_format(bytes);
    if (format == ImageFormat::unknown) throw HttpError(415, "only PNG and JPEG uploads are accepted");
    Rgb8Image img;
    try {
        img = resize_to_square(decode_image(bytes), model_.config.final_resolution());
    } catch (const std::exception& e) {
        throw HttpError(400, std::string("cannot decode image: ") + e.what());
    }
    std::string id;
    {
        std::lock_guard lock(mu_);
        id = next_id('i', input_counter_);
    }
    write_png(data_ / "images" / "inputs" / (id + ".png"), img);
    write_json(data_ / "inputs" / (id + ".json"),
               {{"id", id}, {"format", format == ImageFormat::png ? "png" : "jpeg"}, {"bytes", bytes.size()}});
    std::lock_guard lock(mu_);
    inputs_[id] = true;
    return id;
}

std::string Service::submit(const nlohmann::json& body) {
    if (!body.is_object()) throw HttpError(400, "request body must be a JSON object");
    if (!body.contains("input_id") || !body["input_id"].is_string()) throw HttpError(400, "input_id is required");
    Job j;
    j.input_id = body["input_id"].get<std::string>();
    {
        std::lock_guard lock(mu_);
        if (!inputs_.count(j.input_id)) throw HttpError(404, "unknown input " + j.input_id);
    }
    const bool has_condition = body.contains("condition") && !body["condition"].is_null();
    const bool has_params = body.contains("params") && !body["params"].is_null();
    if (has_condition == has_params) throw HttpError(422, "give exactly one of condition or params");
    if (has_condition) {
        const auto& c = body["condition"];
        if (!c.is_number_integer() || c.get<int>() < 1 || c.get<int>() > 6)
            throw HttpError(422, "condition must be an integer in 1..6");
        j.condition = c.get<int>();
    } else {
        const auto& p = body["params"];
        if (!p.is_object()) throw HttpError(422, "params must be an object");
        JobParams jp;
        jp.k = cfg_.experiment.k_targets;
        jp.eps = cfg_.experiment.eps;
        try {
            jp.targets = p.value("targets", jp.targets);
            jp.k = p.value("k", jp.k);
            jp.eps = p.value("eps", jp.eps);
            jp.granularity = p.value("granularity", jp.granularity);
            jp.real = p.value("real", jp.real);
        } catch (const nlohmann::json::exception& e) {
            throw HttpError(422, std::string("invalid params: ") + e.what());
        }
        if (jp.targets != "random" && jp.targets != "corpus") throw HttpError(422, "targets must be random or corpus");
        if (jp.k < 1) throw HttpError(422, "k must be >= 1");
        if (jp.targets == "corpus" && static_cast<std::size_t>(jp.k) > corpus_.size())
            throw HttpError(422, "k exceeds the corpus size");
        if (!(jp.eps > 0.0 && jp.eps <= 1.0)) throw HttpError(422, "eps must lie in (0, 1]");
        try {
            stylemerge::parse_granularity(jp.granularity);
        } catch (const std::exception& e) {
            throw HttpError(422, e.what());
        }
        j.params = jp;
    }
    j.seed = cfg_.seed;
    if (body.contains("seed")) {
        const auto& seed = body["seed"];
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
            throw HttpError(422, "seed must be a non-negative integer");
        j.seed = body["seed"].get<std::uint64_t>();
    }
    j.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
    {
        std::lock_guard lock(mu_);
        j.id = next_id('j', job_counter_);
        fs::create_directories(data_ / "jobs" / j.id);
        persist(j);
        jobs_[j.id] = j;
        queue_.push_back(j.id);
    }
    cv_.notify_all();
    return j.id;
}

std::optional<Job> Service::job(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

std::optional<nlohmann::json> Service::manifest(const std::string& id) const {
    auto j = job(id);
    if (!j || j->state != JobState::done) return std::nullopt;
    return read_json(data_ / "jobs" / id / "manifest.json");
}

Job Service::wait(const std::string& id) const {
    std::unique_lock lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw HttpError(404, "unknown job " + id);
    cv_.wait(lock, [&] { return terminal(jobs_.at(id).state); });
    return jobs_.at(id);
}

void Service::persist(const Job& j) const { write_json(data_ / "jobs" / j.id / "job.json", to_json(j)); }

void Service::set_state(const std::string& id, JobState s, const std::string& error) {
    {
        std::lock_guard lock(mu_);
        Job& j = jobs_.at(id);
        if (terminal(j.state) || rank(s) < rank(j.state))
            throw ContractError("job " + id + ": illegal transition " + to_string(j.state) + " -> " + to_string(s));
        j.state = s;
        j.error = error;
        persist(j);
    }
    cv_.notify_all();
}

void Service::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
        }
        run_job(id);
    }
}

void Service::run_job(const std::string& id) {
    const Job j = *job(id);
    try {
        set_state(id, JobState::running);
        const Image input = to_float(read_image(data_ / "images" / "inputs" / (j.input_id + ".png")));
        std::vector<experiments::Example> examples;
        metrics::MetricReport metrics;
        nlohmann::json extra;
        if (j.condition) {
            auto r = experiments::run_condition(*j.condition, j.input_id, input, j.seed, *ctx_);
            examples = std::move(r.examples);
            metrics = r.metrics;
            extra = {{"generated", r.generated}, {"cluster_count", r.cluster_count}};
        } else {
            const JobParams& p = *j.params;
            experiments::GenerationParams gp;
            gp.mode = stylemerge::parse_target_mode(p.targets);
            gp.k = p.k;
            gp.seed = ctx_->derive_seed(100, j.seed);
            gp.eps = p.eps;
            gp.min_points = cfg_.experiment.min_points;
            gp.per_target = cfg_.experiment.per_target;
            gp.granularity = stylemerge::parse_granularity(p.granularity);
            const auto g = ctx_->generate(ctx_->encode_image(input), gp);
            examples = p.real ? ctx_->to_real(g.representatives, cfg_.experiment.dedupe_real) : g.representatives;
            std::vector<Image> images;
            for (const auto& e : examples) images.push_back(e.image);
            metrics = metrics::evaluate_set(*backend_, j.input_id, 0, input, images);
            extra = {{"generated", g.generated}, {"cluster_count", g.cluster_count}};
        }

        const fs::path img_dir = data_ / "images" / id;
        fs::create_directories(img_dir);
        const int S = model_.config.slots();
        nlohmann::json items = nlohmann::json::array();
        for (std::size_t n = 0; n < examples.size(); ++n) {
            const auto& e = examples[n];
            const std::string file = std::to_string(n) + ".png";
            write_png(img_dir / file, to_rgb8(e.image));
            nlohmann::json x{{"index", n}, {"url", "/images/" + id + "/" + file}, {"provenance", e.provenance}};
            if (!e.target_id.empty()) x["target_id"] = e.target_id;
            if (e.range) {
                x["range"] = *e.range;
                x["granularity"] = stylemerge::to_string(stylemerge::classify(*e.range, S));
            }
            if (e.provenance == "generated") x["score"] = e.score;
            if (!e.corpus_id.empty()) x["corpus_id"] = e.corpus_id;
            items.push_back(std::move(x));
        }
        nlohmann::json m{{"job_id", id},
                         {"input_id", j.input_id},
                         {"seed", j.seed},
                         {"n", examples.size()},
                         {"similarity", metrics.similarity},
                         {"diversity", metrics.diversity ? nlohmann::json(*metrics.diversity) : nlohmann::json(nullptr)},
                         {"backend_id", backend_->id()},
                         {"examples", items}};
        m["condition"] = j.condition ? nlohmann::json(*j.condition) : nlohmann::json(nullptr);
        m["params"] = j.params ? params_json(*j.params) : nlohmann::json(nullptr);
        m.update(extra);
        write_json(data_ / "jobs" / id / "manifest.json", m);
        set_state(id, JobState::done);
    } catch (const std::exception& e) {
        try {
            set_state(id, JobState::failed, e.what());
        } catch (const std::exception&) {
        }
    }
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
    explicit Impl(Service& s) : svc(s) {}
    Service& svc;
    httplib::Server server;
    std::thread thread;
};

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(Service& svc) : impl_(std::make_unique<Impl>(svc)) {
    auto& server = impl_->server;
    Service& s = svc;
    server.set_payload_max_length(s.config().max_upload_bytes + (1u << 20));

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const HttpError& e) {
            reply(res, e.status(), {{"error", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", e.what()}});
        }
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

    server.Post("/inputs", [&s](const httplib::Request& req, httplib::Response& res) {
        std::string body = req.body;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("image")) throw HttpError(400, "multipart upload needs an 'image' field");
            body = req.get_file_value("image").content;
        }
        const auto* p = reinterpret_cast<const std::uint8_t*>(body.data());
        const std::string id = s.add_input({p, body.size()});
        reply(res, 201, {{"input_id", id}, {"url", "/images/inputs/" + id + ".png"}});
    });

    server.Post("/jobs", [&s](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw HttpError(400, "request body is not valid JSON");
        const std::string id = s.submit(body);
        reply(res, 202, {{"job_id", id}, {"state", "queued"}});
    });

    server.Get(R"(/jobs/([A-Za-z0-9]+))", [&s](const httplib::Request& req, httplib::Response& res) {
        auto j = s.job(req.matches[1]);
        if (!j) throw HttpError(404, "unknown job " + std::string(req.matches[1]));
        reply(res, 200, to_json(*j));
    });

    server.Get(R"(/jobs/([A-Za-z0-9]+)/examples)", [&s](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto j = s.job(id);
        if (!j) throw HttpError(404, "unknown job " + id);
        if (j->state == JobState::failed) {
            reply(res, 200, {{"job_id", id}, {"state", "failed"}, {"error", j->error}});
        } else if (j->state != JobState::done) {
            reply(res, 409, {{"job_id", id}, {"state", to_string(j->state)}});
        } else {
            auto m = *s.manifest(id);
            m["state"] = "done";
            reply(res, 200, m);
        }
    });

    server.set_mount_point("/images", s.images_dir().string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ganspire::service
