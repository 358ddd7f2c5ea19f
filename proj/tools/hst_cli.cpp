#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "hst/interpret/embeddings.hpp"
#include "hst/interpret/gradcam.hpp"
#include "hst/interpret/pca.hpp"
#include "hst/model/flops.hpp"
#include "hst/run/cv.hpp"
#include "hst/synth/corpus.hpp"

namespace fs = std::filesystem;
using namespace hst;

namespace {

RunConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
    for (const auto& o : overrides) apply_override(o, cfg);
    cfg.validate();
    return cfg;
}

std::size_t num_workers() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* cap = std::getenv("HST_NUM_WORKERS")) {
        const long v = std::strtol(cap, nullptr, 10);
        if (v >= 1 && std::size_t(v) < n) n = std::size_t(v);
    }
    return n;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

// cache key: audio bytes + the dsp section, so dsp ablations repopulate
std::uint64_t content_hash(const std::string& wav_path, const RunConfig& cfg) {
    std::ifstream in(wav_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + wav_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    const std::string dsp = run_config_to_json(cfg).at("dsp").dump();
    std::uint64_t h = fnv1a(bytes.data(), bytes.size(), 1469598103934665603ull);
    return fnv1a(dsp.data(), dsp.size(), h);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string safe_name(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') {
            c = '_';
        }
    }
    return out;
}

std::map<std::string, std::string> read_prep_index(const std::string& path) {
    std::map<std::string, std::string> hashes;  // id -> hex hash
    std::ifstream in(path);
    if (!in) return hashes;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        if (c1 == std::string::npos) continue;
        const auto c2 = line.find(',', c1 + 1);
        hashes[line.substr(0, c1)] = line.substr(c1 + 1, c2 - c1 - 1);
    }
    return hashes;
}

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
    const auto records = generate_corpus(spec, out_dir);
    std::cout << "wrote " << records.size() << " clips (" << spec.per_class << " per class) and "
              << (fs::path(out_dir) / "manifest.jsonl").string() << "\n";
    return 0;
}

int cmd_prep(const RunConfig& cfg, const std::string& manifest_path, const std::string& cache_dir,
             bool skip_bad) {
    cfg.dsp.validate();
    const auto records = read_manifest(manifest_path);
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    if (ec) throw IoError("cannot create " + cache_dir + ": " + ec.message());
    echo_config((fs::path(cache_dir) / "config.json").string(), cfg);

    const std::string index_path = (fs::path(cache_dir) / "index.csv").string();
    const auto old_index = read_prep_index(index_path);

    struct Item {
        std::string hash;
        Image img;
        bool fresh = false;  // computed this run
        std::string error;
    };
    std::vector<Item> items(records.size());
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= records.size()) return;
            Item& it = items[i];
            try {
                it.hash = hex64(content_hash(records[i].path, cfg));
                const auto prev = old_index.find(records[i].id);
                const std::string spec_path =
                    (fs::path(cache_dir) / (records[i].id + ".spec")).string();
                if (prev != old_index.end() && prev->second == it.hash && fs::exists(spec_path)) {
                    it.img = load_spectrogram_cache(spec_path);
                } else {
                    it.img = spectrogram_for_clip(load_admissible_clip(records[i].path, cfg.dsp),
                                                  cfg.dsp);
                    it.fresh = true;
                }
            } catch (const Error& e) {
                it.error = e.what();
            }
        }
    };
    const std::size_t workers = std::min(num_workers(), std::max<std::size_t>(records.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    // single-writer pass: cache files, index, exclusions
    std::size_t fresh = 0, reused = 0;
    std::ofstream index(index_path);
    if (!index) throw IoError("cannot write " + index_path);
    index << "id,hash,height,width,file\n";
    std::vector<std::pair<std::string, std::string>> failures;  // id, error
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Item& it = items[i];
        if (!it.error.empty()) {
            failures.emplace_back(records[i].id, it.error);
            continue;
        }
        const std::string file = records[i].id + ".spec";
        if (it.fresh) {
            save_spectrogram_cache((fs::path(cache_dir) / file).string(), it.img);
            ++fresh;
        } else {
            ++reused;
        }
        index << records[i].id << "," << it.hash << "," << it.img.h << "," << it.img.w << ","
              << file << "\n";
    }
    index.close();

    if (!failures.empty() && skip_bad) {
        std::ofstream excl((fs::path(cache_dir) / "exclusions.csv").string());
        excl << "id,error\n";
        for (const auto& [id, err] : failures) excl << id << ",\"" << err << "\"\n";
    }
    std::cout << "prepared " << fresh << ", reused " << reused << ", failed " << failures.size()
              << " of " << records.size() << " clips\n";
    for (const auto& [id, err] : failures) std::cerr << "  " << id << ": " << err << "\n";
    if (!failures.empty() && !skip_bad) {
        throw InputError(std::to_string(failures.size()) +
                         " clips failed preprocessing (use --skip-bad to exclude them)");
    }
    return 0;
}

void print_metrics(const char* tag, const FoldMetrics& m) {
    std::printf("%s auc=%.4f precision=%.4f recall=%.4f f1=%.4f\n", tag, m.auc, m.precision,
                m.recall, m.f1);
}

int cmd_train(const RunConfig& cfg, const std::string& manifest_path, const std::string& cache_dir,
              const std::string& out_dir) {
    cfg.validate();
    const auto records = read_manifest(manifest_path);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    echo_config((fs::path(out_dir) / "config.json").string(), cfg);

    // fold 0 of the cv plan: one stratified 70/20/10 split
    const FoldPlan plan = make_cv_folds(records, cfg.eval.folds, cfg.eval.seed);
    SpectrogramSource source(cfg.dsp, cache_dir);
    auto train = load_samples<float>(records, plan.folds[0].train, source);
    auto val = load_samples<float>(records, plan.folds[0].val, source);
    auto test = load_samples<float>(records, plan.folds[0].test, source);
    oversample_minority(train, records, source, derive_seed(cfg.eval.seed, "fold-0"));

    HstParams<float> params(cfg.model);
    params.init(derive_seed(cfg.train.seed, "fold-init-0"));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.train.seed, "fold-train-0");
    const FitResult res = fit(params, cfg.model, train, val, tc);

    save_checkpoint(params, cfg.model, (fs::path(out_dir) / "model.ckpt").string());
    write_history_csv((fs::path(out_dir) / "history.csv").string(), res.history);
    RocResult roc;
    const FoldMetrics m = evaluate_samples(params, cfg.model, test, cfg.eval.threshold, &roc);
    write_roc_csv((fs::path(out_dir) / "roc.csv").string(), roc);
    {
        std::ofstream metrics((fs::path(out_dir) / "metrics.csv").string());
        metrics << "fold,auc,precision,recall,f1\n" << detail::fold_row(0, m) << "\n";
    }
    std::printf("best val f1 %.4f at epoch %zu%s (%zu epochs run)\n", res.best_val_f1,
                res.best_epoch, res.diverged ? ", diverged" : "", res.history.size());
    print_metrics("test", m);
    return 0;
}

int cmd_cv(const RunConfig& cfg, const std::string& manifest_path, const std::string& cache_dir,
           const std::string& out_dir) {
    cfg.validate();
    const auto records = read_manifest(manifest_path);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    echo_config((fs::path(out_dir) / "config.json").string(), cfg);

    SpectrogramSource source(cfg.dsp, cache_dir);
    const CvResult result = run_cv<float>(records, cfg, source, out_dir);
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        print_metrics(("fold " + std::to_string(f)).c_str(), result.folds[f]);
    }
    std::printf("aggregate auc=%.4f±%.4f precision=%.4f±%.4f recall=%.4f±%.4f f1=%.4f±%.4f\n",
                result.auc.mean, result.auc.std, result.precision.mean, result.precision.std,
                result.recall.mean, result.recall.std, result.f1.mean, result.f1.std);
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path, const std::string& manifest_path,
             const std::string& cache_dir, const std::string& out_dir) {
    const HstConfig model_cfg = load_checkpoint_config(ckpt_path);
    if (cfg.dsp.out_size != model_cfg.image_size) {
        throw ConfigError("dsp.out_size " + std::to_string(cfg.dsp.out_size) +
                          " does not match checkpoint image size " +
                          std::to_string(model_cfg.image_size));
    }
    HstParams<float> params = load_checkpoint<float>(ckpt_path, model_cfg);
    const auto records = read_manifest(manifest_path);
    SpectrogramSource source(cfg.dsp, cache_dir);
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.id);
    const auto samples = load_samples<float>(records, ids, source);

    RocResult roc;
    const FoldMetrics m = evaluate_samples(params, model_cfg, samples, cfg.eval.threshold, &roc);
    print_metrics("eval", m);
    if (m.degenerate) std::cerr << "warning: single-class sample set, auc/recall degenerate\n";
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
        echo_config((fs::path(out_dir) / "config.json").string(), cfg);
        std::ofstream metrics((fs::path(out_dir) / "metrics.csv").string());
        metrics << "fold,auc,precision,recall,f1\n" << detail::fold_row(0, m) << "\n";
        write_roc_csv((fs::path(out_dir) / "roc.csv").string(), roc);
    }
    return 0;
}

int cmd_explain(const RunConfig& cfg, const std::string& ckpt_path,
                const std::string& manifest_path, const std::string& cache_dir,
                const std::string& out_dir, bool embeddings) {
    const HstConfig model_cfg = load_checkpoint_config(ckpt_path);
    if (cfg.dsp.out_size != model_cfg.image_size) {
        throw ConfigError("dsp.out_size does not match checkpoint image size");
    }
    HstParams<float> params = load_checkpoint<float>(ckpt_path, model_cfg);
    const auto records = read_manifest(manifest_path);
    SpectrogramSource source(cfg.dsp, cache_dir);
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.id);
    const auto samples = load_samples<float>(records, ids, source);

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "maps", ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    echo_config((fs::path(out_dir) / "config.json").string(), cfg);

    const std::vector<double> scores = score_samples(params, model_cfg, samples);
    const std::size_t tap = cfg.eval.gradcam_stage - 1;

    std::ofstream pred((fs::path(out_dir) / "predictions.csv").string());
    pred << "id,group,label,score,correct,map\n";
    std::map<std::string, std::vector<ActivationMap>> group_maps;
    std::set<std::string> all_groups;
    std::size_t correct_n = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& rec = records[i];
        const std::string group = rec.group.empty() ? rec.modality : rec.group;
        all_groups.insert(group);
        const bool correct = (scores[i] >= cfg.eval.threshold) == (rec.label == 1);
        std::string map_file;
        if (correct) {
            ++correct_n;
            ActivationMap map = grad_cam(params, model_cfg, samples[i].image, rec.label, tap);
            map.id = rec.id;
            map_file = "maps/" + safe_name(rec.id) + ".csv";
            write_map_csv((fs::path(out_dir) / map_file).string(), map);
            write_map_pgm((fs::path(out_dir) / "maps" / (safe_name(rec.id) + ".pgm")).string(),
                          map);
            group_maps[group].push_back(std::move(map));
        }
        pred << rec.id << "," << group << "," << rec.label << "," << scores[i] << ","
             << (correct ? 1 : 0) << "," << map_file << "\n";
    }

    // one PC1 relevance map per group, over its correctly classified samples
    std::ofstream groups_csv((fs::path(out_dir) / "groups.csv").string());
    groups_csv << "group,correct,explained_variance,file\n";
    for (const auto& group : all_groups) {
        const auto it = group_maps.find(group);
        const std::size_t n = it == group_maps.end() ? 0 : it->second.size();
        if (n < 2) {
            std::cerr << "warning: group " << group << " has " << n
                      << " correctly classified samples, skipping PC1\n";
            groups_csv << group << "," << n << ",,\n";
            continue;
        }
        const PcaResult pc = pca_first_component(it->second);
        const std::string file = "pc1_" + safe_name(group) + ".csv";
        ActivationMap as_map;
        as_map.h = it->second[0].h;
        as_map.w = it->second[0].w;
        as_map.values = pc.component;
        write_map_csv((fs::path(out_dir) / file).string(), as_map);
        groups_csv << group << "," << n << "," << pc.explained_variance << "," << file << "\n";
        std::printf("group %s: %zu maps, PC1 explains %.1f%% of variance\n", group.c_str(), n,
                    100.0 * pc.explained_variance);
    }

    if (embeddings) {
        const auto emb =
            export_stage_embeddings(params, model_cfg, samples, cfg.eval.gradcam_stage);
        write_embeddings_csv((fs::path(out_dir) / "embeddings.csv").string(), emb);
    }
    std::cout << "explained " << correct_n << " of " << samples.size()
              << " samples (correctly classified only)\n";
    return 0;
}

// one attention layer forward, mirroring the lwmsa data flow, no tape
double bench_attention_ms(std::size_t nw, std::size_t tokens, std::size_t c, std::size_t heads,
                          std::size_t reps) {
    Rng rng(derive_seed(41, "bench-attn"));
    Tensor<float> x({nw, tokens, c}), wqkv({c, 3 * c}), wo({c, c});
    for (auto& v : x.values()) v = float(rng.normal(0.0, 0.5));
    for (auto& v : wqkv.values()) v = float(rng.normal(0.0, 0.05));
    for (auto& v : wo.values()) v = float(rng.normal(0.0, 0.05));
    const std::size_t dh = c / heads;

    double best = 1e300;
    float sink = 0.0f;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor<float> qkv = matmul<float>(nullptr, x, wqkv);
        auto heads_of = [&](std::size_t off) {
            Tensor<float> part = slice<float>(nullptr, qkv, 2, off * c, c);
            part = reshape<float>(nullptr, part, {nw, tokens, heads, dh});
            return transpose<float>(nullptr, part, 1, 2);  // [nw, heads, tokens, dh]
        };
        Tensor<float> q = heads_of(0), k = heads_of(1), v = heads_of(2);
        Tensor<float> scores = scale<float>(nullptr, matmul<float>(nullptr, q, transpose<float>(nullptr, k, 2, 3)),
                                            1.0f / std::sqrt(float(dh)));
        Tensor<float> probs = softmax_lastdim<float>(nullptr, scores);
        Tensor<float> ctx = matmul<float>(nullptr, probs, v);
        ctx = reshape<float>(nullptr, transpose<float>(nullptr, ctx, 1, 2), {nw, tokens, c});
        Tensor<float> out = matmul<float>(nullptr, ctx, wo);
        const auto t1 = std::chrono::steady_clock::now();
        sink += out.values()[0];
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    if (!std::isfinite(sink)) std::cerr << "warning: non-finite benchmark output\n";
    return best;
}

int cmd_bench_attn(const std::string& out_path, std::size_t reps, double max_kernel_macs) {
    struct Row {
        std::string variant;
        std::size_t image = 0;
    };
    const Row rows[] = {{"micro", 0}, {"small", 0}, {"base", 0}, {"large", 0}, {"base", 448}};
    std::ostringstream csv;
    csv << "variant,mode,image,p,m,c,heads,score_macs,proj_macs,total_macs,params,peak_bytes,"
           "kernel_ms\n";
    for (const Row& row : rows) {
        HstConfig cfg = HstConfig::named(row.variant);
        if (row.image != 0) cfg.image_size = row.image;
        for (const AttnKind kind : {AttnKind::windowed, AttnKind::global}) {
            const bool global = kind == AttnKind::global;
            const std::size_t p = cfg.grid(0);
            const std::size_t m = global ? p : cfg.window_at(0);
            const std::size_t c = cfg.dims[0];
            const std::size_t heads = cfg.heads[0];
            const FlopsEstimate est = flops_estimate(cfg, kind);
            std::size_t score_macs = 0, proj_macs = 0;
            for (const auto& s : est.stages) {
                score_macs += s.scores;
                proj_macs += s.proj;
            }

            // stage-1 kernel geometry: all tokens in one window when global
            const std::size_t nw = global ? 1 : (p / m) * (p / m);
            const std::size_t tokens = global ? p * p : m * m;
            const double kernel_macs =
                double(nw) * (4.0 * tokens * c * c + 2.0 * double(tokens) * tokens * c);
            const std::size_t peak_bytes =
                4 * (6 * nw * tokens * c + 2 * nw * heads * tokens * tokens);
            std::string kernel_ms;
            if (kernel_macs <= max_kernel_macs) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f",
                              bench_attention_ms(nw, tokens, c, heads, reps));
                kernel_ms = buf;
            }
            csv << row.variant << "," << (global ? "global" : "windowed") << ","
                << cfg.image_size << "," << p << "," << m << "," << c << "," << heads << ","
                << score_macs << "," << proj_macs << "," << est.total() << ","
                << hst_param_count(cfg) << "," << peak_bytes << "," << kernel_ms << "\n";
        }
    }
    std::cout << csv.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write " + out_path);
        out << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical spectrogram transformer toolkit"};
    app.require_subcommand(1);
    app.footer(
        "exit codes: 0 ok; 2 configuration or usage error; 3 bad input data;\n"
        "            4 numeric failure; 5 i/o failure; 6 internal invariant; 1 unexpected\n"
        "HST_NUM_WORKERS caps prep parallelism.");

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "run configuration JSON (defaults when omitted)")
        ->envname("HST_CONFIG");
    app.add_option("--set", overrides, "override, e.g. --set train.lr=1e-4 (repeatable)");

    auto* synth = app.add_subcommand("synth", "generate the labeled synthetic corpus");
    SynthSpec spec;
    std::string synth_out;
    synth->add_option("--out", synth_out, "corpus directory")->required();
    synth->add_option("--per-class", spec.per_class, "clips per class");
    synth->add_option("--seed", spec.seed, "corpus seed");
    synth->add_flag("--overlapping", [&spec](std::int64_t) { spec.separable = false; },
                    "overlap the class bands (non-separable control corpus)");

    std::string manifest_path, cache_dir, out_dir, ckpt_path;
    auto* prep = app.add_subcommand("prep", "compute and cache spectrograms");
    bool skip_bad = false;
    prep->add_option("--manifest", manifest_path, "JSONL manifest")->required();
    prep->add_option("--cache", cache_dir, "cache directory")->required();
    prep->add_flag("--skip-bad", skip_bad, "exclude failing clips instead of aborting");

    auto* train = app.add_subcommand("train", "train one stratified split (fold 0)");
    train->add_option("--manifest", manifest_path, "JSONL manifest")->required();
    train->add_option("--cache", cache_dir, "spectrogram cache (computed inline when empty)");
    train->add_option("--out", out_dir, "run directory")->required();

    auto* cv = app.add_subcommand("cv", "k-fold cross validation");
    cv->add_option("--manifest", manifest_path, "JSONL manifest")->required();
    cv->add_option("--cache", cache_dir, "spectrogram cache (computed inline when empty)");
    cv->add_option("--out", out_dir, "run directory")->required();

    auto* eval = app.add_subcommand("eval", "score a manifest with a checkpoint");
    eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    eval->add_option("--manifest", manifest_path, "JSONL manifest")->required();
    eval->add_option("--cache", cache_dir, "spectrogram cache (computed inline when empty)");
    eval->add_option("--out", out_dir, "write metrics.csv and roc.csv here");

    auto* explain = app.add_subcommand("explain", "relevance maps for correct classifications");
    bool embeddings = false;
    explain->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    explain->add_option("--manifest", manifest_path, "JSONL manifest")->required();
    explain->add_option("--cache", cache_dir, "spectrogram cache (computed inline when empty)");
    explain->add_option("--out", out_dir, "output directory")->required();
    explain->add_flag("--embeddings", embeddings, "also export pooled stage embeddings");

    auto* bench = app.add_subcommand("bench-attn", "attention complexity report");
    std::string bench_out;
    std::size_t reps = 3;
    double max_kernel_macs = 8e9;
    bench->add_option("--out", bench_out, "also write the CSV here");
    bench->add_option("--reps", reps, "timing repetitions (best-of)");
    bench->add_option("--max-kernel-macs", max_kernel_macs,
                      "skip timing kernels above this analytic cost");

    try {
        app.parse(argc, argv);
        const RunConfig cfg = make_config(config_path, overrides);
        if (synth->parsed()) return cmd_synth(spec, synth_out);
        if (prep->parsed()) return cmd_prep(cfg, manifest_path, cache_dir, skip_bad);
        if (train->parsed()) return cmd_train(cfg, manifest_path, cache_dir, out_dir);
        if (cv->parsed()) return cmd_cv(cfg, manifest_path, cache_dir, out_dir);
        if (eval->parsed()) return cmd_eval(cfg, ckpt_path, manifest_path, cache_dir, out_dir);
        if (explain->parsed()) {
            return cmd_explain(cfg, ckpt_path, manifest_path, cache_dir, out_dir, embeddings);
        }
        if (bench->parsed()) return cmd_bench_attn(bench_out, reps, max_kernel_macs);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
            return app.exit(e);
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
