#pragma once

#include <cstdint>
#include <string>

namespace micc::harness {

// Options shared by every subcommand. Every field is serialized into the
// run's output manifest, so a run is reproducible from its metadata alone.
struct CommonOptions {
    std::string out_dir;
    uint64_t rng_seed = 1;
    int jobs = 0;                 // 0 = all available cores
    std::string format = "png16"; // png16 | pfm
    bool visualize = false;
};

struct AugmentOptions {
    CommonOptions run;
    std::string input_manifest;
    std::string pool_file;
    int n_illuminants = 4;
    int seeds_per_illuminant = 16;
    double feather_sigma = 8.0;
    bool synthetic_segments = false; // Voronoi partition instead of files
};

struct SeedsOptions {
    CommonOptions run;
    std::string dataset_manifest;
    int clusters = 4;
    double gray_top_fraction = 0.005;
    bool write_grayness = false;
};

struct EstimateOptions {
    CommonOptions run;
    std::string dataset_manifest;
    std::string estimator = "grey-world"; // classical names, doing-nothing,
                                          // seed-diffusion, import
    int clusters = 4;
    double gray_top_fraction = 0.005;
    double sigma_chroma = 0.05;
    double sigma_spatial_frac = 0.25;
    std::string probmap_dir; // import: <id>.pmap + <id>.seeds.json
    bool write_probability_pngs = false;
};

struct CorrectOptions {
    CommonOptions run;
    std::string dataset_manifest;
    std::string predictions_manifest;
};

struct EvaluateOptions {
    CommonOptions run;
    std::string gt_manifest;
    std::string predictions_manifest;
};

struct LossesOptions {
    CommonOptions run;
    std::string dataset_manifest;
    std::string probmap_dir; // empty: oracle probabilities from ground truth
    double lambda = 100.0;
};

struct SplitOptions {
    CommonOptions run;
    std::string ids_file; // JSON id array, or any manifest with ids
    double train_fraction = 0.8;
};

// Commands return 0 on success and 1 when at least one sample failed
// (partial results are kept, failures are listed in the manifest).
// Global problems (missing manifests, bad config) throw.
int cmd_augment(const AugmentOptions &opt);
int cmd_seeds(const SeedsOptions &opt);
int cmd_estimate(const EstimateOptions &opt);
int cmd_correct(const CorrectOptions &opt);
int cmd_evaluate(const EvaluateOptions &opt);
int cmd_losses(const LossesOptions &opt);
int cmd_split(const SplitOptions &opt);

// Overlays a JSON run-config document (keys mirror the CLI flags) onto the
// given options. Unknown keys are rejected so typos cannot silently alter a
// run. Command line flags are applied on top by the caller and win.
void load_config_file(const std::string &path, AugmentOptions &opt);
void load_config_file(const std::string &path, SeedsOptions &opt);
void load_config_file(const std::string &path, EstimateOptions &opt);
void load_config_file(const std::string &path, CorrectOptions &opt);
void load_config_file(const std::string &path, EvaluateOptions &opt);
void load_config_file(const std::string &path, LossesOptions &opt);
void load_config_file(const std::string &path, SplitOptions &opt);

} // namespace micc::harness
