// micc: batch color-constancy toolkit front end.

#include "micc/errors.hpp"
#include "micc/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace micc::harness;

// Flags override config-file values, which override defaults; only flags the
// user actually set are applied on top.
struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<uint64_t> rng_seed;
    std::optional<int> jobs;
    std::optional<std::string> format;
    std::optional<bool> visualize;

    void attach(CLI::App *cmd) {
        cmd->add_option("--config", config,
                        "JSON run-config document (flags win)");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--rng-seed", rng_seed, "master random seed");
        cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)");
        cmd->add_option("--format", format, "image output format: png16|pfm");
        cmd->add_flag("--visualize", visualize,
                      "write gamma-adjusted inspection PNGs");
    }

    void apply(CommonOptions &run) const {
        if (out)
            run.out_dir = *out;
        if (rng_seed)
            run.rng_seed = *rng_seed;
        if (jobs)
            run.jobs = *jobs;
        if (format)
            run.format = *format;
        if (visualize)
            run.visualize = *visualize;
    }
};

template <typename Options, typename Fn>
int run_command(const CommonFlags &common, Options &opt, const Fn &apply_flags,
                int (*cmd)(const Options &)) {
    if (common.config)
        load_config_file(*common.config, opt);
    common.apply(opt.run);
    apply_flags(opt);
    return cmd(opt);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"micc - multi-illumination color constancy toolkit"};
    app.require_subcommand(1);

    // augment
    auto *c_augment = app.add_subcommand(
        "augment", "synthesize multi-illumination samples from single-"
                   "illumination images");
    CommonFlags f_augment;
    f_augment.attach(c_augment);
    std::optional<std::string> a_input, a_pool;
    std::optional<int> a_n, a_k;
    std::optional<double> a_sigma;
    std::optional<bool> a_synth;
    c_augment->add_option("--input", a_input, "input image manifest (JSON)");
    c_augment->add_option("--pool", a_pool, "illuminant pool (JSON triples)");
    c_augment->add_option("--n", a_n, "illuminants per sample");
    c_augment->add_option("--k", a_k, "seed points per illuminant");
    c_augment->add_option("--feather-sigma", a_sigma,
                          "segment boundary feathering in pixels");
    c_augment->add_flag("--synthetic-segments", a_synth,
                        "use Voronoi partitions instead of segment files");

    // seeds
    auto *c_seeds = app.add_subcommand(
        "seeds", "grayness scoring and gray-pixel seed clustering");
    CommonFlags f_seeds;
    f_seeds.attach(c_seeds);
    std::optional<std::string> s_dataset;
    std::optional<int> s_clusters;
    std::optional<double> s_fraction;
    std::optional<bool> s_gray;
    c_seeds->add_option("--dataset", s_dataset, "dataset manifest");
    c_seeds->add_option("--clusters", s_clusters, "illuminant clusters");
    c_seeds->add_option("--gray-top-fraction", s_fraction,
                        "grayest fraction entering clustering");
    c_seeds->add_flag("--write-grayness", s_gray,
                      "dump grayness maps as PNGs");

    // estimate
    auto *c_estimate =
        app.add_subcommand("estimate", "predict illumination per image");
    CommonFlags f_estimate;
    f_estimate.attach(c_estimate);
    std::optional<std::string> e_dataset, e_name, e_probmaps;
    std::optional<int> e_clusters;
    std::optional<double> e_fraction, e_schroma, e_sspatial;
    std::optional<bool> e_ppngs;
    c_estimate->add_option("--dataset", e_dataset, "dataset manifest");
    c_estimate->add_option(
        "--estimator", e_name,
        "grey-world|white-patch|shades-of-grey|general-grey-world|grey-edge|"
        "grey-edge2|doing-nothing|seed-diffusion|import");
    c_estimate->add_option("--clusters", e_clusters,
                           "seed-diffusion: illuminant clusters");
    c_estimate->add_option("--gray-top-fraction", e_fraction,
                           "seed-diffusion: grayest fraction");
    c_estimate->add_option("--sigma-chroma", e_schroma,
                           "seed-diffusion: chroma kernel width");
    c_estimate->add_option("--sigma-spatial-frac", e_sspatial,
                           "seed-diffusion: spatial kernel width "
                           "(fraction of diagonal)");
    c_estimate->add_option("--probmaps", e_probmaps,
                           "import: directory with <id>.pmap + <id>.seeds.json");
    c_estimate->add_flag("--write-probability-pngs", e_ppngs,
                         "dump probability channels as PNGs");

    // correct
    auto *c_correct = app.add_subcommand(
        "correct", "apply per-channel correction with predicted illumination");
    CommonFlags f_correct;
    f_correct.attach(c_correct);
    std::optional<std::string> co_dataset, co_preds;
    c_correct->add_option("--dataset", co_dataset, "dataset manifest");
    c_correct->add_option("--predictions", co_preds, "predictions manifest");

    // evaluate
    auto *c_evaluate = app.add_subcommand(
        "evaluate", "angular-error report against ground truth");
    CommonFlags f_evaluate;
    f_evaluate.attach(c_evaluate);
    std::optional<std::string> ev_gt, ev_preds;
    c_evaluate->add_option("--gt", ev_gt, "ground-truth dataset manifest");
    c_evaluate->add_option("--predictions", ev_preds, "predictions manifest");

    // losses
    auto *c_losses = app.add_subcommand(
        "losses", "supervised loss suite over a dataset");
    CommonFlags f_losses;
    f_losses.attach(c_losses);
    std::optional<std::string> l_dataset, l_probmaps;
    std::optional<double> l_lambda;
    c_losses->add_option("--dataset", l_dataset,
                         "dataset manifest (augment layout)");
    c_losses->add_option("--probmaps", l_probmaps,
                         "directory with <id>.pmap (default: oracle)");
    c_losses->add_option("--lambda", l_lambda, "loss weight (default 100)");

    // split
    auto *c_split =
        app.add_subcommand("split", "deterministic train/test split");
    CommonFlags f_split;
    f_split.attach(c_split);
    std::optional<std::string> sp_ids;
    std::optional<double> sp_fraction;
    c_split->add_option("--ids", sp_ids, "JSON id array or manifest");
    c_split->add_option("--train-fraction", sp_fraction,
                        "training share (default 0.8)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_augment->parsed()) {
            AugmentOptions opt;
            return run_command(
                f_augment, opt,
                [&](AugmentOptions &o) {
                    if (a_input)
                        o.input_manifest = *a_input;
                    if (a_pool)
                        o.pool_file = *a_pool;
                    if (a_n)
                        o.n_illuminants = *a_n;
                    if (a_k)
                        o.seeds_per_illuminant = *a_k;
                    if (a_sigma)
                        o.feather_sigma = *a_sigma;
                    if (a_synth)
                        o.synthetic_segments = *a_synth;
                },
                cmd_augment);
        }
        if (c_seeds->parsed()) {
            SeedsOptions opt;
            return run_command(
                f_seeds, opt,
                [&](SeedsOptions &o) {
                    if (s_dataset)
                        o.dataset_manifest = *s_dataset;
                    if (s_clusters)
                        o.clusters = *s_clusters;
                    if (s_fraction)
                        o.gray_top_fraction = *s_fraction;
                    if (s_gray)
                        o.write_grayness = *s_gray;
                },
                cmd_seeds);
        }
        if (c_estimate->parsed()) {
            EstimateOptions opt;
            return run_command(
                f_estimate, opt,
                [&](EstimateOptions &o) {
                    if (e_dataset)
                        o.dataset_manifest = *e_dataset;
                    if (e_name)
                        o.estimator = *e_name;
                    if (e_clusters)
                        o.clusters = *e_clusters;
                    if (e_fraction)
                        o.gray_top_fraction = *e_fraction;
                    if (e_schroma)
                        o.sigma_chroma = *e_schroma;
                    if (e_sspatial)
                        o.sigma_spatial_frac = *e_sspatial;
                    if (e_probmaps)
                        o.probmap_dir = *e_probmaps;
                    if (e_ppngs)
                        o.write_probability_pngs = *e_ppngs;
                },
                cmd_estimate);
        }
        if (c_correct->parsed()) {
            CorrectOptions opt;
            return run_command(
                f_correct, opt,
                [&](CorrectOptions &o) {
                    if (co_dataset)
                        o.dataset_manifest = *co_dataset;
                    if (co_preds)
                        o.predictions_manifest = *co_preds;
                },
                cmd_correct);
        }
        if (c_evaluate->parsed()) {
            EvaluateOptions opt;
            return run_command(
                f_evaluate, opt,
                [&](EvaluateOptions &o) {
                    if (ev_gt)
                        o.gt_manifest = *ev_gt;
                    if (ev_preds)
                        o.predictions_manifest = *ev_preds;
                },
                cmd_evaluate);
        }
        if (c_losses->parsed()) {
            LossesOptions opt;
            return run_command(
                f_losses, opt,
                [&](LossesOptions &o) {
                    if (l_dataset)
                        o.dataset_manifest = *l_dataset;
                    if (l_probmaps)
                        o.probmap_dir = *l_probmaps;
                    if (l_lambda)
                        o.lambda = *l_lambda;
                },
                cmd_losses);
        }
        if (c_split->parsed()) {
            SplitOptions opt;
            return run_command(
                f_split, opt,
                [&](SplitOptions &o) {
                    if (sp_ids)
                        o.ids_file = *sp_ids;
                    if (sp_fraction)
                        o.train_fraction = *sp_fraction;
                },
                cmd_split);
        }
    } catch (const micc::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
