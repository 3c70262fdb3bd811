// ganspire command-line front end.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ganspire/checkpoint.hpp"
#include "ganspire/dataset.hpp"
#include "ganspire/encoder.hpp"
#include "ganspire/errors.hpp"
#include "ganspire/experiments.hpp"
#include "ganspire/fid.hpp"
#include "ganspire/perception.hpp"
#include "ganspire/selection.hpp"
#include "ganspire/service.hpp"
#include "ganspire/stylemerge.hpp"
#include "ganspire/synth.hpp"
#include "ganspire/training.hpp"

namespace fs = std::filesystem;
using namespace ganspire;

namespace {

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    f << s;
}

bool is_image(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// A manifest directory, or a plain directory of images (sorted by name).
std::vector<Image> load_images(const fs::path& dir) {
    std::vector<Image> out;
    if (fs::exists(dir / "manifest.json")) {
        for (auto& s : dataset::load_corpus(dir)) out.push_back(to_float(s.image));
        return out;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(to_float(read_image(f)));
    if (out.empty()) throw InputError("no images in " + dir.string());
    return out;
}

service::HttpServer* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ganspire: style-merged design examples from a UI screenshot"};
    app.require_subcommand(1);

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Filter and resize a Rico-layout screenshot directory");
    std::string pre_src, pre_out;
    dataset::PreprocessOptions pre_opts;
    pre->add_option("--src", pre_src, "Screenshots with sibling JSON hierarchies")->required();
    pre->add_option("--out", pre_out, "Output corpus directory")->required();
    pre->add_option("--min-unique", pre_opts.min_unique, "Minimum unique component types")->capture_default_str();
    pre->add_option("--resolution", pre_opts.resolution, "Square output size")->capture_default_str();
    pre->add_option("--label-key", pre_opts.keys.label_key, "Node key holding the component label")->capture_default_str();
    pre->add_option("--fallback-key", pre_opts.keys.fallback_key, "Key used when the label key is absent ('' to disable)")
        ->capture_default_str();

    // train
    auto* tr = app.add_subcommand("train", "Train the generator / discriminator pair");
    std::string tr_corpus, tr_out, tr_log;
    gan::GeneratorConfig gcfg;
    gan::TrainConfig tcfg;
    int tr_resolution = 0;
    tr->add_option("--corpus", tr_corpus, "Preprocessed corpus directory")->required();
    tr->add_option("--out", tr_out, "Checkpoint path")->required();
    tr->add_option("--levels", gcfg.levels, "Resolution levels R (S = 2R slots)")->capture_default_str();
    tr->add_option("--resolution", tr_resolution, "Must equal 4 * 2^(R-1) when given");
    tr->add_option("--latent-dim", gcfg.latent_dim)->capture_default_str();
    tr->add_option("--steps", tcfg.max_steps, "Generator steps")->capture_default_str();
    tr->add_option("--batch", tcfg.batch)->capture_default_str();
    tr->add_option("--fid-interval", tcfg.fid_interval)->capture_default_str();
    tr->add_option("--fid-samples", tcfg.fid_samples)->capture_default_str();
    tr->add_option("--patience", tcfg.patience)->capture_default_str();
    tr->add_option("--seed", tcfg.seed)->capture_default_str();
    tr->add_option("--init-seed", gcfg.seed, "Parameter initialisation seed")->capture_default_str();
    tr->add_option("--log", tr_log, "JSON-lines training log");

    // fid
    auto* fidc = app.add_subcommand("fid", "FID between two image directories");
    std::string fid_real, fid_fake;
    fidc->add_option("--real", fid_real)->required();
    fidc->add_option("--fake", fid_fake)->required();

    // shared backend flag
    perception::BackendConfig bcfg;
    auto add_backend = [&](CLI::App* sub) {
        sub->add_option("--backend", bcfg.kind, "Perceptual backend: deep | pixel")->capture_default_str();
    };

    // encode
    auto* enc = app.add_subcommand("encode", "Recover a style code for an image");
    std::string enc_ckpt, enc_image, enc_out;
    encoder::EncodeConfig ecfg;
    enc->add_option("--ckpt", enc_ckpt)->required();
    enc->add_option("--image", enc_image)->required();
    enc->add_option("--out", enc_out, "Code path (.json sidecar written next to it)")->required();
    enc->add_option("--iterations", ecfg.max_iterations)->capture_default_str();
    enc->add_option("--step", ecfg.step_size)->capture_default_str();
    enc->add_option("--init", ecfg.init_mode, "mean_w | seeded_random")->capture_default_str();
    enc->add_option("--seed", ecfg.seed)->capture_default_str();
    enc->add_option("--loss-floor", ecfg.loss_floor)->capture_default_str();
    add_backend(enc);

    // synthesize
    auto* syn = app.add_subcommand("synthesize", "Merge a source code with k targets over every slot range");
    std::string syn_ckpt, syn_source, syn_mode = "random", syn_out, syn_corpus, syn_gran = "all";
    int syn_k = 5;
    std::uint64_t syn_seed = 1;
    syn->add_option("--ckpt", syn_ckpt)->required();
    syn->add_option("--source", syn_source, "Code written by encode")->required();
    syn->add_option("--targets-mode", syn_mode, "random | corpus")->capture_default_str();
    syn->add_option("-k", syn_k)->capture_default_str();
    syn->add_option("--corpus", syn_corpus, "Corpus for --targets-mode corpus");
    syn->add_option("--seed", syn_seed)->capture_default_str();
    syn->add_option("--granularity", syn_gran, "all | coarse | middle | fine")->capture_default_str();
    syn->add_option("--out", syn_out)->required();
    syn->add_option("--iterations", ecfg.max_iterations, "Encoder iterations for corpus targets")->capture_default_str();
    add_backend(syn);

    // select
    auto* sel = app.add_subcommand("select", "Cluster a merge batch and keep one image per cluster");
    std::string sel_batch, sel_ckpt, sel_out;
    double sel_eps = selection::kDefaultEps;
    int sel_min_points = 1;
    sel->add_option("--batch", sel_batch, "Directory written by synthesize")->required();
    sel->add_option("--ckpt", sel_ckpt)->required();
    sel->add_option("--eps", sel_eps)->capture_default_str();
    sel->add_option("--min-points", sel_min_points)->capture_default_str();
    sel->add_option("--out", sel_out)->required();
    add_backend(sel);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Run the six-condition experiment");
    std::string ev_corpus, ev_search, ev_ckpt, ev_out, ev_config;
    int ev_inputs = 0;
    experiments::ExperimentConfig xcfg;
    ev->add_option("--corpus", ev_corpus)->required();
    ev->add_option("--search-corpus", ev_search, "Defaults to --corpus");
    ev->add_option("--ckpt", ev_ckpt)->required();
    ev->add_option("--out", ev_out)->required();
    ev->add_option("--config", ev_config, "JSON experiment config; flags override it");
    ev->add_option("--inputs", ev_inputs, "Total inputs, spread evenly over the label-count strata");
    ev->add_option("--per-stratum", xcfg.per_stratum);
    ev->add_option("--label-min", xcfg.label_min);
    ev->add_option("--label-max", xcfg.label_max);
    ev->add_option("--seed", xcfg.seed);
    ev->add_option("--workers", xcfg.workers);
    ev->add_option("--encode-iterations", xcfg.encode.max_iterations);
    ev->add_option("--eps", xcfg.eps);
    ev->add_flag("--per-target", xcfg.per_target, "Cluster each target's batch separately");
    ev->add_flag("--dedupe-real", xcfg.dedupe_real, "Drop repeated nearest-real matches in c3/c4");
    add_backend(ev);

    // serve
    auto* sv = app.add_subcommand("serve", "Start the HTTP job service");
    std::string sv_config;
    sv->add_option("--config", sv_config, "JSON service config")->required();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Largest raw distance over a corpus plus black and white");
    std::string cal_corpus;
    cal->add_option("--corpus", cal_corpus)->required();
    add_backend(cal);

    // make-fixtures
    auto* mf = app.add_subcommand("make-fixtures", "Write a procedural Rico-layout fixture corpus");
    std::string mf_out;
    synth::FixtureOptions fopts;
    mf->add_option("--out", mf_out)->required();
    mf->add_option("--count", fopts.count)->capture_default_str();
    mf->add_option("--min-labels", fopts.min_labels)->capture_default_str();
    mf->add_option("--max-labels", fopts.max_labels)->capture_default_str();
    mf->add_option("--width", fopts.width)->capture_default_str();
    mf->add_option("--height", fopts.height)->capture_default_str();
    mf->add_option("--seed", fopts.seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*pre) {
            const auto s = dataset::preprocess(pre_src, pre_out, pre_opts);
            nlohmann::json hist = nlohmann::json::object();
            for (auto [k, v] : s.histogram) hist[std::to_string(k)] = v;
            std::cout << nlohmann::json{{"scanned", s.scanned}, {"kept", s.kept}, {"removed", s.removed},
                                        {"histogram", hist}}
                             .dump(2)
                      << '\n';
        } else if (*tr) {
            gcfg.validate();
            if (tr_resolution && tr_resolution != gcfg.final_resolution())
                throw InputError("--resolution " + std::to_string(tr_resolution) + " needs --levels " +
                                 "such that 4 * 2^(R-1) matches (R=" + std::to_string(gcfg.levels) + " gives " +
                                 std::to_string(gcfg.final_resolution()) + ")");
            std::vector<Image> corpus;
            for (auto& s : dataset::load_corpus(tr_corpus)) {
                const int r = gcfg.final_resolution();
                corpus.push_back(to_float(s.image.width == r && s.image.height == r ? s.image
                                                                                     : resize_to_square(s.image, r)));
            }
            std::ofstream log;
            if (!tr_log.empty()) log.open(tr_log);
            auto res = gan::train(corpus, gcfg, tcfg, [&](const gan::StepLog& l, std::optional<double> fid) {
                nlohmann::json j{{"step", l.step}, {"d_loss", l.d_loss}, {"g_loss", l.g_loss}, {"r1", l.r1},
                                 {"lr", l.learning_rate}};
                if (fid) j["fid"] = *fid;
                if (log) log << j.dump() << '\n';
                if (fid) std::cerr << "step " << l.step << " fid " << *fid << '\n';
            });
            gan::save_checkpoint(res.best, tr_out);
            std::cout << nlohmann::json{{"checkpoint", tr_out},
                                        {"best_step", res.best.step},
                                        {"steps_run", res.steps_run},
                                        {"early_stopped", res.early_stopped},
                                        {"fid_history", res.fid_history.size()}}
                             .dump(2)
                      << '\n';
        } else if (*fidc) {
            const auto real = load_images(fid_real);
            const auto fake = load_images(fid_fake);
            fid::FeatureExtractor fx;
            std::printf("%.9g\n", fid::compute_fid(fx, real, fake));
        } else if (*enc) {
            const auto model = gan::load_checkpoint(enc_ckpt).model;
            const int r = model.config.final_resolution();
            const Image target = to_float(resize_to_square(read_image(enc_image), r));
            const auto backend = perception::make_backend(bcfg);
            const auto res = encoder::encode(target, model, *backend, ecfg);
            encoder::save_code(enc_out, res.code, res.final_loss);
            std::cout << nlohmann::json{{"initial_loss", res.loss_trace.front()},
                                        {"final_loss", res.final_loss},
                                        {"best_iteration", res.best_iteration}}
                             .dump(2)
                      << '\n';
        } else if (*syn) {
            const auto model = gan::load_checkpoint(syn_ckpt).model;
            const auto source = encoder::load_code(syn_source);
            const auto mode = stylemerge::parse_target_mode(syn_mode);
            const auto gran = stylemerge::parse_granularity(syn_gran);
            const int S = model.config.slots();
            std::vector<stylemerge::SlotRange> ranges;
            for (auto r : stylemerge::enumerate_ranges(S))
                if (stylemerge::matches(gran, r, S)) ranges.push_back(r);
            experiments::Corpus corpus;
            std::unique_ptr<perception::Backend> backend;
            if (mode == stylemerge::TargetMode::corpus_image) {
                if (syn_corpus.empty()) throw InputError("--targets-mode corpus needs --corpus");
                corpus = experiments::load_experiment_corpus(syn_corpus);
                backend = perception::make_backend(bcfg);
            }
            std::vector<float> mw;
            if (mode == stylemerge::TargetMode::corpus_image && ecfg.init_mode == "mean_w")
                mw = gan::mean_w(model, ecfg.mean_w_samples, ecfg.seed);
            const auto targets = stylemerge::make_targets(mode, syn_k, model, syn_seed, corpus.view(), backend.get(),
                                                          ecfg, mw.empty() ? nullptr : &mw);
            fs::create_directories(syn_out);
            nlohmann::json items = nlohmann::json::array();
            for (std::size_t t = 0; t < targets.codes.size(); ++t) {
                const auto batch =
                    stylemerge::synthesize_pair(source, targets.codes[t], model, "source", targets.ids[t], ranges);
                for (const auto& it : batch.items) {
                    const std::string file = std::to_string(t) + "_" + std::to_string(it.range.start) + "_" +
                                             std::to_string(it.range.end) + ".png";
                    write_png(fs::path(syn_out) / file, to_rgb8(it.image));
                    items.push_back({{"file", file},
                                     {"target_index", t},
                                     {"target_id", targets.ids[t]},
                                     {"range", it.range},
                                     {"granularity", stylemerge::to_string(stylemerge::classify(it.range, S))}});
                }
            }
            write_text(fs::path(syn_out) / "batch.json",
                       nlohmann::json{{"source", syn_source}, {"slots", S}, {"targets", targets.ids}, {"items", items}}
                               .dump(2) +
                           "\n");
            std::cout << items.size() << " images written to " << syn_out << '\n';
        } else if (*sel) {
            const auto model = gan::load_checkpoint(sel_ckpt).model;
            std::ifstream f(fs::path(sel_batch) / "batch.json");
            if (!f) throw InputError("no batch.json in " + sel_batch);
            const auto batch = nlohmann::json::parse(f);
            std::vector<Image> images;
            for (const auto& it : batch.at("items"))
                images.push_back(to_float(read_image(fs::path(sel_batch) / it.at("file").get<std::string>())));
            const auto backend = perception::make_backend(bcfg);
            const auto s = selection::select_from_images(images, model, *backend, sel_eps, sel_min_points);
            fs::create_directories(sel_out);
            auto report = selection::report_json(s);
            nlohmann::json reps = nlohmann::json::array();
            for (std::size_t k = 0; k < s.representatives.indices.size(); ++k) {
                const auto& item = batch.at("items").at(s.representatives.indices[k]);
                const std::string file = "rep" + std::to_string(k) + ".png";
                write_png(fs::path(sel_out) / file, to_rgb8(images[s.representatives.indices[k]]));
                reps.push_back({{"file", file}, {"source_file", item.at("file")}, {"range", item.at("range")},
                                {"score", s.representatives.scores[k]}});
            }
            report["files"] = reps;
            report["backend_id"] = backend->id();
            write_text(fs::path(sel_out) / "report.json", report.dump(2) + "\n");
            std::cout << reps.size() << " representatives from " << images.size() << " images\n";
        } else if (*ev) {
            if (!ev_config.empty()) {
                std::ifstream f(ev_config);
                if (!f) throw InputError("cannot read " + ev_config);
                auto base = nlohmann::json::parse(f).get<experiments::ExperimentConfig>();
                // Re-apply explicitly given flags over the file.
                auto over = xcfg;
                xcfg = base;
                if (ev->count("--per-stratum")) xcfg.per_stratum = over.per_stratum;
                if (ev->count("--label-min")) xcfg.label_min = over.label_min;
                if (ev->count("--label-max")) xcfg.label_max = over.label_max;
                if (ev->count("--seed")) xcfg.seed = over.seed;
                if (ev->count("--workers")) xcfg.workers = over.workers;
                if (ev->count("--encode-iterations")) xcfg.encode.max_iterations = over.encode.max_iterations;
                if (ev->count("--eps")) xcfg.eps = over.eps;
                if (over.per_target) xcfg.per_target = true;
                if (over.dedupe_real) xcfg.dedupe_real = true;
            }
            if (ev_inputs > 0) {
                const int strata = xcfg.label_max - xcfg.label_min + 1;
                if (strata <= 0 || ev_inputs % strata != 0)
                    throw InputError("--inputs " + std::to_string(ev_inputs) + " does not split evenly over " +
                                     std::to_string(strata) + " strata; adjust --label-min/--label-max");
                xcfg.per_stratum = ev_inputs / strata;
            }
            const auto model = gan::load_checkpoint(ev_ckpt).model;
            const auto corpus = experiments::load_experiment_corpus(ev_corpus);
            const auto search = ev_search.empty() ? corpus : experiments::load_experiment_corpus(ev_search);
            const auto backend = perception::make_backend(bcfg);
            experiments::Context ctx(model, *backend, corpus, search, xcfg);
            const auto rep = experiments::run_experiment(ctx);
            experiments::write_report(rep, ev_out);
            write_text(fs::path(ev_out) / "config.json", nlohmann::json(xcfg).dump(2) + "\n");
            std::cout << rep.cells.size() << " cells, " << rep.failures.size() << " failures; report in " << ev_out
                      << '\n';
            return rep.failures.empty() ? 0 : 3;
        } else if (*sv) {
            const auto cfg = service::load_config(sv_config);
            auto svc = service::Service::from_config(cfg);
            service::HttpServer server(*svc);
            const int port = server.bind(cfg.host, cfg.port);
            if (port < 0) throw InputError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on http://" << cfg.host << ":" << port << '\n';
            server.listen();
            g_server = nullptr;
            svc->stop();
        } else if (*cal) {
            const auto images = load_images(cal_corpus);
            const auto backend = perception::make_backend(bcfg);
            std::printf("%s %.9g\n", backend->id().c_str(), perception::measure_calibration(*backend, images));
        } else if (*mf) {
            const auto ids = synth::write_fixture_corpus(mf_out, fopts);
            std::cout << ids.size() << " fixtures written to " << mf_out << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
