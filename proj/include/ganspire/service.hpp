#pragma once

// HTTP job service for the gallery client.
//
//   POST /inputs             image bytes (PNG/JPEG) -> 201 {input_id}
//   POST /jobs               {input_id, condition? | params?, seed?} -> 202 {job_id}
//   GET  /jobs/{id}          job record
//   GET  /jobs/{id}/examples manifest once done; error string once failed
//   GET  /healthz
//   GET  /images/...         stored inputs and job outputs
//
// On disk (data_dir):
//   inputs/<id>.json, images/inputs/<id>.png
//   jobs/<id>/job.json, jobs/<id>/manifest.json, images/<job id>/<n>.png

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/experiments.hpp"
#include "ganspire/perception.hpp"

namespace ganspire::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string checkpoint;
    std::string corpus;
    std::string search_corpus;  // defaults to `corpus` when empty
    std::string data_dir = "ganspire-data";
    int workers = 1;
    std::uint64_t seed = 1;
    std::size_t max_upload_bytes = 8u << 20;
    perception::BackendConfig backend{};
    experiments::ExperimentConfig experiment{};
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);
ServiceConfig load_config(const std::filesystem::path& path);

enum class JobState { queued, running, done, failed };
std::string to_string(JobState s);
JobState parse_job_state(const std::string& s);

// Custom generation parameters, the alternative to a fixed condition.
struct JobParams {
    std::string targets = "random";  // "random" | "corpus"
    int k = 5;
    double eps = selection::kDefaultEps;
    std::string granularity = "all";
    bool real = false;  // replace generated representatives by nearest real screenshots
};

struct Job {
    std::string id;
    std::string input_id;
    std::optional<int> condition;
    std::optional<JobParams> params;
    std::uint64_t seed = 1;
    JobState state = JobState::queued;
    std::int64_t created_at = 0;  // unix seconds
    std::string error;            // failed jobs only
};

nlohmann::json to_json(const Job& j);
Job job_from_json(const nlohmann::json& j);

// Maps to an HTTP status by the server.
class HttpError : public std::runtime_error {
public:
    HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

// Everything except the socket: storage, queue and workers. Handlers call
// these methods; the tests call them directly.
class Service {
public:
    Service(ServiceConfig cfg, gan::Model model, experiments::Corpus corpus, experiments::Corpus search);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Loads the checkpoint and corpora named in the config.
    static std::unique_ptr<Service> from_config(const ServiceConfig& cfg);

    // 413 above the size cap, 415 for anything but PNG/JPEG.
    std::string add_input(std::span<const std::uint8_t> bytes);
    // 400 malformed body, 404 unknown input, 422 invalid condition or params.
    std::string submit(const nlohmann::json& body);
    std::optional<Job> job(const std::string& id) const;
    // Manifest of a done job; nullopt otherwise.
    std::optional<nlohmann::json> manifest(const std::string& id) const;
    // Blocks until the job is done or failed.
    Job wait(const std::string& id) const;

    const ServiceConfig& config() const { return cfg_; }
    std::filesystem::path images_dir() const { return data_ / "images"; }

    void stop();

private:
    void restore();
    void worker_loop();
    void run_job(const std::string& id);
    void set_state(const std::string& id, JobState s, const std::string& error = {});
    void persist(const Job& j) const;
    std::string next_id(char prefix, std::int64_t& counter);

    ServiceConfig cfg_;
    std::filesystem::path data_;
    gan::Model model_;
    experiments::Corpus corpus_;
    experiments::Corpus search_;
    std::unique_ptr<perception::Backend> backend_;
    std::unique_ptr<experiments::Context> ctx_;

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, bool> inputs_;
    std::deque<std::string> queue_;
    std::int64_t input_counter_ = 0;
    std::int64_t job_counter_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

// httplib front end. bind() with port 0 picks a free port.
class HttpServer {
public:
    explicit HttpServer(Service& svc);
    ~HttpServer();
    int bind(const std::string& host, int port);  // returns the bound port, -1 on failure
    void listen();                                // blocks until stop()
    void start();                                 // listen() on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ganspire::service
