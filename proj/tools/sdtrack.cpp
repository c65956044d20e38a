// sdtrack: dataset generation, tensor rendering, tracking, evaluation,
// gradient checks and plots for line-source debris sequences.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "sdtrack/config.hpp"
#include "sdtrack/dataset_io.hpp"
#include "sdtrack/errors.hpp"
#include "sdtrack/gradcheck.hpp"
#include "sdtrack/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sdt;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string config;

    AppConfig load() const { return config.empty() ? AppConfig{} : load_config(config); }
};

template <typename T>
void override_with(const std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

struct SimulateArgs {
    std::string out = "dataset";
    std::string preset = "mixed";
    std::string split;
    std::optional<int> num_sequences;
    bool recipe = false;
    std::string backgrounds;
    bool force = false;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
    AppConfig cfg = g.load();
    std::vector<SplitPlan> plans;
    if (a.recipe) {
        for (SplitPlan& p : default_recipe(cfg.sim)) {
            if (!a.split.empty() && p.name != a.split) continue;
            if (a.num_sequences) p.count = *a.num_sequences;
            plans.push_back(std::move(p));
        }
        if (plans.empty()) throw ValidationError("--split: no recipe split named '" + a.split + "'");
    } else {
        plans.push_back({a.split.empty() ? "data" : a.split, apply_preset(a.preset, cfg.sim), a.num_sequences.value_or(10)});
    }
    if (a.num_sequences && *a.num_sequences < 0) throw ValidationError("--num-sequences: must be non-negative");

    GenerateOptions opts;
    opts.seed = g.seed;
    opts.threads = g.threads;
    opts.force = a.force;
    opts.background = cfg.background;
    if (!a.backgrounds.empty()) opts.backgrounds = load_backgrounds(a.backgrounds);
    generate_dataset(a.out, plans, opts);
    for (const SplitPlan& p : plans) {
        std::printf("%s: %d sequences, %d-%d objects per frame -> %s\n", p.name.c_str(), p.count, p.sim.debris_count.min,
                    p.sim.debris_count.max, (fs::path(a.out) / p.name).string().c_str());
    }
    return 0;
}

struct TrackArgs {
    std::string dataset;
    std::string source = "oracle";
    std::string tensors_dir;
    std::string out = "predictions";
    std::optional<double> jitter, drop_prob, fp_rate, radius;
    std::optional<int> max_missed, min_length;
    bool no_offsets = false;
    bool optimal = false;
};

int run_track(const Globals& g, const TrackArgs& a) {
    AppConfig cfg = g.load();
    override_with(a.jitter, cfg.oracle.endpoint_jitter_std);
    override_with(a.drop_prob, cfg.oracle.drop_prob);
    override_with(a.fp_rate, cfg.oracle.false_positive_rate);
    override_with(a.radius, cfg.tracker.association_radius);
    override_with(a.max_missed, cfg.tracker.max_missed_frames);
    override_with(a.min_length, cfg.tracker.min_track_length);
    if (a.no_offsets) cfg.oracle.with_offsets = false;
    if (a.optimal) cfg.tracker.optimal = true;
    cfg.validate();

    TrackOptions opts;
    opts.seed = g.seed;
    opts.threads = g.threads;
    if (a.source == "tensors") {
        if (a.tensors_dir.empty()) throw ValidationError("--tensors-dir is required with --source tensors");
        opts.source = DetectionSource::Tensors;
        opts.tensors_dir = a.tensors_dir;
    }
    const TrackSummary s = track_split(a.dataset, a.out, cfg, opts);
    std::printf("tracked %d sequences -> %s\n", s.sequences, a.out.c_str());
    if (opts.source == DetectionSource::Oracle) {
        std::printf("gt objects %ld, dropped %ld, false positives %ld (log: %s)\n", s.gt_objects, s.dropped,
                    s.false_positives, (fs::path(a.out) / "dropouts.csv").string().c_str());
    }
    return 0;
}

struct EvaluateArgs {
    std::string gt;
    std::string pred;
    std::string report;
    std::optional<std::string> similarity;
    std::optional<double> threshold;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
    AppConfig cfg = g.load();
    if (a.similarity) {
        if (*a.similarity == "endpoint_l1") cfg.match.similarity = SimilarityKind::EndpointL1;
        else if (*a.similarity == "bbox_iou") cfg.match.similarity = SimilarityKind::BBoxIoU;
        else throw ValidationError("--similarity: expected endpoint_l1 or bbox_iou");
    }
    if (a.threshold) {
        if (cfg.match.similarity == SimilarityKind::BBoxIoU) cfg.match.iou_threshold = *a.threshold;
        else cfg.match.endpoint_l1_threshold = *a.threshold;
    }
    cfg.match.validate();
    const EvalReport report = evaluate_dirs(a.gt, a.pred, cfg.match, g.threads);
    for (const std::string& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fputs(report_table(report).c_str(), stdout);
    if (!a.report.empty()) write_report(a.report, report, cfg.match);
    return 0;
}

int run_check_gradients(const Globals& g, int trials, bool wrong_sign) {
    if (trials < 0) throw ValidationError("--trials: must be non-negative");
    if (trials == 0) {
        std::puts("no trials requested");
        return 0;
    }
    GradCheckOptions opts;
    opts.trials = trials;
    opts.seed = g.seed;
    opts.flip_sign = wrong_sign;
    bool ok = true;
    for (const GradCheckOutcome& o : run_gradient_checks(opts)) {
        const bool pass = o.failures == 0;
        ok = ok && pass;
        std::printf("%-7s %s  %d/%d within %.0e  max rel err %.3e\n", o.loss.c_str(), pass ? "PASS" : "FAIL",
                    o.trials - o.failures, o.trials, opts.tolerance, o.max_error);
    }
    return ok ? 0 : 1;
}

struct RenderArgs {
    std::string dataset;
    std::string out = "tensors";
};

int run_render(const Globals& g, const RenderArgs& a) {
    const AppConfig cfg = g.load();
    render_split_tensors(a.dataset, a.out, cfg, g.threads);
    std::printf("rendered ground-truth tensors -> %s\n", a.out.c_str());
    return 0;
}

struct PlotArgs {
    std::string dataset;
    std::string report;
    std::string pred;
    std::string out = "plots";
};

int run_plot(const PlotArgs& a) {
    if (a.dataset.empty() == a.report.empty()) throw ValidationError("plot: give exactly one of --dataset or --report");
    if (!a.report.empty()) {
        const std::string svg = metrics_bar_svg(read_text_file(a.report));
        fs::create_directories(a.out);
        write_text_file(fs::path(a.out) / "metrics.svg", svg);
        std::printf("wrote %s\n", (fs::path(a.out) / "metrics.svg").string().c_str());
        return 0;
    }
    if (!fs::is_directory(a.dataset)) throw IoError("not a directory: " + a.dataset);
    const PlotSummary s = plot_dataset(a.dataset, a.pred, a.out);
    if (s.sequences == 0) {
        std::printf("no sequences found in %s; nothing to plot\n", a.dataset.c_str());
        return 0;
    }
    std::printf("plotted %d sequences (%d images) -> %s\n", s.sequences, s.images, a.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Line-source debris simulation, tracking and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "JSON config file");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a dataset");
    simulate->add_option("--out", sim.out, "Dataset root")->capture_default_str();
    simulate->add_option("--preset", sim.preset, "debris, dense or mixed")
        ->check(CLI::IsMember({"debris", "dense", "mixed"}))
        ->capture_default_str();
    simulate->add_option("--split", sim.split, "Split name (with --recipe: only this split)");
    simulate->add_option("--num-sequences", sim.num_sequences, "Sequences per split");
    simulate->add_flag("--recipe", sim.recipe, "Generate the train/test_debris/test_dense recipe");
    simulate->add_option("--backgrounds", sim.backgrounds, "Directory of raw background PNGs");
    simulate->add_flag("--force", sim.force, "Replace existing splits");

    RenderArgs ren;
    auto* render = app.add_subcommand("render", "Write ground-truth tensor maps");
    render->add_option("--dataset", ren.dataset, "Split directory")->required();
    render->add_option("--out", ren.out, "Output directory")->capture_default_str();

    TrackArgs tr;
    auto* track = app.add_subcommand("track", "Track a split");
    track->add_option("--dataset", tr.dataset, "Split directory")->required();
    track->add_option("--source", tr.source, "oracle or tensors")
        ->check(CLI::IsMember({"oracle", "tensors"}))
        ->capture_default_str();
    track->add_option("--tensors-dir", tr.tensors_dir, "Tensor maps (with --source tensors)");
    track->add_option("--out", tr.out, "Prediction directory")->capture_default_str();
    track->add_option("--jitter", tr.jitter, "Oracle endpoint jitter std (px)");
    track->add_option("--drop-prob", tr.drop_prob, "Oracle drop probability");
    track->add_option("--fp-rate", tr.fp_rate, "Oracle false positives per frame");
    track->add_flag("--no-offsets", tr.no_offsets, "Oracle emits zero offsets");
    track->add_option("--radius", tr.radius, "Association radius (px)");
    track->add_option("--max-missed", tr.max_missed, "Frames a track may coast");
    track->add_option("--min-length", tr.min_length, "Minimum track length");
    track->add_flag("--optimal", tr.optimal, "Optimal instead of greedy association");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
    evaluate->add_option("--gt", ev.gt, "Ground-truth split directory")->required();
    evaluate->add_option("--pred", ev.pred, "Prediction directory")->required();
    evaluate->add_option("--report", ev.report, "Directory for metrics.json and metrics.txt");
    evaluate->add_option("--similarity", ev.similarity, "endpoint_l1 or bbox_iou");
    evaluate->add_option("--threshold", ev.threshold, "Endpoint L1 distance (px) or IoU cutoff");

    int trials = 100;
    bool wrong_sign = false;
    auto* check = app.add_subcommand("check-gradients", "Finite-difference checks of the loss gradients");
    check->add_option("--trials", trials, "Random instances per loss")->capture_default_str();
    check->add_flag("--inject-wrong-sign", wrong_sign)->group("");

    PlotArgs pl;
    auto* plot = app.add_subcommand("plot", "Static figures");
    plot->add_option("--dataset", pl.dataset, "Split directory");
    plot->add_option("--report", pl.report, "metrics.json");
    plot->add_option("--pred", pl.pred, "Prediction directory for overlays");
    plot->add_option("--out", pl.out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*simulate) return run_simulate(g, sim);
        if (*render) return run_render(g, ren);
        if (*track) return run_track(g, tr);
        if (*evaluate) return run_evaluate(g, ev);
        if (*check) return run_check_gradients(g, trials, wrong_sign);
        if (*plot) return run_plot(pl);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 2;
    }
    return 1;
}
