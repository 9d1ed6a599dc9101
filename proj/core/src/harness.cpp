#include "micc/harness.hpp"

#include "micc/augment.hpp"
#include "micc/color.hpp"
#include "micc/estimators.hpp"
#include "micc/grayness.hpp"
#include "micc/io.hpp"
#include "micc/metrics.hpp"
#include "micc/mixture.hpp"
#include "micc/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace micc::harness {

namespace {

uint64_t fnv1a64(const std::string &s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t sample_seed(uint64_t run_seed, const std::string &id) {
    return Rng(run_seed ^ fnv1a64(id)).next();
}

void check_id(const std::string &id) {
    if (id.empty())
        throw FormatError("empty sample id");
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
              c == '-' || c == '.'))
            throw FormatError("sample id '" + id +
                              "' contains characters outside [A-Za-z0-9._-]");
}

// Timestamped messages go here and only here; manifests stay byte-stable.
class RunLog {
  public:
    explicit RunLog(const fs::path &path) : out_(path, std::ios::app) {}
    void note(const std::string &msg) {
        std::lock_guard<std::mutex> lock(mu_);
        auto now = std::chrono::system_clock::now().time_since_epoch();
        auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        out_ << "[" << ms << "] " << msg << "\n";
        out_.flush();
    }

  private:
    std::ofstream out_;
    std::mutex mu_;
};

void parallel_for(size_t n, int jobs, const std::function<void(size_t)> &fn) {
    unsigned workers = jobs > 0 ? unsigned(jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, n ? unsigned(n) : 1u);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                fn(i);
        });
    for (auto &th : pool)
        th.join();
}

json read_json_file(const fs::path &path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open " + path.string());
    try {
        json doc;
        f >> doc;
        return doc;
    } catch (const json::exception &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path &path, const json &doc) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot write " + path.string());
    f << doc.dump(2) << "\n";
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

LinearImage load_image_any(const fs::path &path) {
    if (path.extension() == ".pfm")
        return io::load_pfm(path.string());
    return io::load_png_linear(path.string());
}

LinearImage map_as_image(const IlluminationMap &map) {
    LinearImage img(map.width(), map.height());
    img.data() = map.data();
    return img;
}

// ---------------------------------------------------------------------
// Manifest entries. Dataset manifests come in two shapes: the augment
// output ("samples", per-sample directories) and a generic image list
// ("images"). Paths are resolved relative to the manifest location.

struct DatasetEntry {
    std::string id;
    fs::path image;      // color-biased input
    fs::path corrected;  // augment layout only
    fs::path illum_map;  // per-pixel ground truth (pfm)
    std::optional<Illuminant> illuminant; // single ground truth
    fs::path mask;
    fs::path segments;
    std::vector<fs::path> seed_masks;
    std::vector<Illuminant> seed_colors;
};

std::optional<Illuminant> triple_of(const json &j) {
    if (!j.is_array() || j.size() != 3)
        return std::nullopt;
    return Illuminant{j.at(0).get<double>(), j.at(1).get<double>(),
                      j.at(2).get<double>()};
}

std::vector<DatasetEntry> load_dataset_manifest(const fs::path &path) {
    json doc = read_json_file(path);
    fs::path base = path.parent_path();
    std::vector<DatasetEntry> out;

    auto resolve = [&](const fs::path &dir, const json &e,
                       const char *key) -> fs::path {
        if (!e.contains(key) || e.at(key).is_null())
            return {};
        return dir / e.at(key).get<std::string>();
    };

    if (doc.contains("samples")) {
        for (const auto &e : doc.at("samples")) {
            DatasetEntry d;
            d.id = e.at("id").get<std::string>();
            check_id(d.id);
            fs::path dir = base / e.at("dir").get<std::string>();
            d.image = resolve(dir, e, "biased");
            d.corrected = resolve(dir, e, "corrected");
            d.illum_map = resolve(dir, e, "illum_map");
            if (e.contains("illuminants"))
                for (const auto &c : e.at("illuminants")) {
                    json cj = read_json_file(dir / c.get<std::string>());
                    auto t = triple_of(cj.at("color"));
                    if (!t)
                        throw FormatError(d.id + ": bad illuminant color file");
                    d.seed_colors.push_back(*t);
                }
            if (e.contains("seed_masks"))
                for (const auto &m : e.at("seed_masks"))
                    d.seed_masks.push_back(dir / m.get<std::string>());
            out.push_back(std::move(d));
        }
    } else if (doc.contains("images")) {
        for (const auto &e : doc.at("images")) {
            DatasetEntry d;
            d.id = e.at("id").get<std::string>();
            check_id(d.id);
            d.image = resolve(base, e, "image");
            d.illum_map = resolve(base, e, "illum_map");
            d.mask = resolve(base, e, "mask");
            d.segments = resolve(base, e, "segments");
            if (e.contains("gt_illuminant"))
                d.illuminant = triple_of(e.at("gt_illuminant"));
            if (e.contains("illuminant"))
                d.illuminant = triple_of(e.at("illuminant"));
            out.push_back(std::move(d));
        }
    } else {
        throw FormatError(path.string() +
                          ": manifest has neither 'samples' nor 'images'");
    }
    return out;
}

struct PredictionEntry {
    std::string id;
    fs::path map;
    std::optional<Illuminant> illuminant;
    fs::path probability_map;
    fs::path seeds;
};

std::vector<PredictionEntry> load_predictions_manifest(const fs::path &path) {
    json doc = read_json_file(path);
    fs::path base = path.parent_path();
    if (!doc.contains("predictions"))
        throw FormatError(path.string() + ": manifest has no 'predictions'");
    std::vector<PredictionEntry> out;
    for (const auto &e : doc.at("predictions")) {
        PredictionEntry p;
        p.id = e.at("id").get<std::string>();
        check_id(p.id);
        if (e.contains("map"))
            p.map = base / e.at("map").get<std::string>();
        if (e.contains("probability_map"))
            p.probability_map = base / e.at("probability_map").get<std::string>();
        if (e.contains("seeds"))
            p.seeds = base / e.at("seeds").get<std::string>();
        if (e.contains("illuminant"))
            p.illuminant = triple_of(e.at("illuminant"));
        out.push_back(std::move(p));
    }
    return out;
}

json common_config_json(const CommonOptions &run) {
    json j;
    j["out"] = run.out_dir;
    j["rng-seed"] = run.rng_seed;
    j["jobs"] = run.jobs;
    j["format"] = run.format;
    j["visualize"] = run.visualize;
    return j;
}

void check_common(const CommonOptions &run) {
    if (run.out_dir.empty())
        throw ConfigError("--out is required");
    if (run.format != "png16" && run.format != "pfm")
        throw ConfigError("format must be png16 or pfm");
    if (run.jobs < 0)
        throw ConfigError("jobs must be >= 0");
}

// Per-item worker harness: runs items in parallel, collects json results
// sorted by input order and failures as (id, message).
struct BatchResult {
    std::vector<json> entries;
    std::vector<std::pair<std::string, std::string>> failures;
};

BatchResult run_batch(size_t n, int jobs, RunLog &log,
                      const std::function<std::string(size_t)> &id_of,
                      const std::function<json(size_t)> &work) {
    std::vector<std::optional<json>> slots(n);
    std::vector<std::optional<std::string>> errors(n);
    parallel_for(n, jobs, [&](size_t i) {
        try {
            slots[i] = work(i);
        } catch (const std::exception &e) {
            errors[i] = e.what();
            log.note("FAIL " + id_of(i) + ": " + e.what());
        }
    });
    BatchResult r;
    for (size_t i = 0; i < n; ++i) {
        if (slots[i])
            r.entries.push_back(std::move(*slots[i]));
        else
            r.failures.emplace_back(id_of(i), errors[i] ? *errors[i]
                                                        : "unknown error");
    }
    std::sort(r.entries.begin(), r.entries.end(),
              [](const json &a, const json &b) {
                  return a.at("id").get<std::string>() <
                         b.at("id").get<std::string>();
              });
    std::sort(r.failures.begin(), r.failures.end());
    return r;
}

json failures_json(const BatchResult &r) {
    json f = json::array();
    for (const auto &[id, msg] : r.failures)
        f.push_back({{"id", id}, {"error", msg}});
    return f;
}

} // namespace

// ---------------------------------------------------------------------
// augment

int cmd_augment(const AugmentOptions &opt) {
    check_common(opt.run);
    if (opt.n_illuminants < 1)
        throw ConfigError("n must be >= 1");
    if (opt.seeds_per_illuminant < 1)
        throw ConfigError("k must be >= 1");
    if (!(opt.feather_sigma >= 0.0))
        throw ConfigError("feather-sigma must be >= 0");

    auto pool = io::load_pool_json(opt.pool_file);
    json input = read_json_file(opt.input_manifest);
    if (!input.contains("images"))
        throw FormatError(opt.input_manifest + ": manifest has no 'images'");
    fs::path in_base = fs::path(opt.input_manifest).parent_path();
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    const auto &images = input.at("images");
    const std::string img_ext = opt.run.format == "pfm" ? ".pfm" : ".png16";

    auto id_of = [&](size_t i) {
        return images.at(i).value("id", "item" + std::to_string(i));
    };

    auto work = [&](size_t i) -> json {
        const json &e = images.at(i);
        std::string id = e.at("id").get<std::string>();
        check_id(id);
        uint64_t seed = sample_seed(opt.run.rng_seed, id);

        LinearImage img = load_image_any(in_base / e.at("image").get<std::string>());
        if (e.contains("mask")) {
            int mw, mh;
            auto m = io::load_mask_png((in_base / e.at("mask").get<std::string>()).string(),
                                       mw, mh);
            if (mw != img.width() || mh != img.height())
                throw ShapeError(id + ": mask dimensions differ from image");
            img.set_mask(std::move(m));
        }

        bool corrected_to_canonical = false;
        if (e.contains("gt_illuminant")) {
            auto gt = triple_of(e.at("gt_illuminant"));
            if (!gt)
                throw FormatError(id + ": bad gt_illuminant");
            // scale so the largest channel is 1: keeps intensity in range
            Illuminant n = gt->normalized();
            double mx = std::max({n.r, n.g, n.b});
            img = von_kries_correct(img, Illuminant{n.r / mx, n.g / mx, n.b / mx});
            corrected_to_canonical = true;
        }

        SegmentMap segments;
        std::string segments_source;
        if (opt.synthetic_segments) {
            segments = voronoi_segments(img.width(), img.height(),
                                        opt.n_illuminants,
                                        Rng(seed).fork(99).next());
            segments_source = "voronoi";
        } else {
            if (!e.contains("segments"))
                throw ConfigError(id + ": no segment file and synthetic "
                                       "segments not enabled");
            segments = io::load_segments_png(
                (in_base / e.at("segments").get<std::string>()).string(),
                opt.n_illuminants);
            segments_source = e.at("segments").get<std::string>();
        }

        AugmentedSample sample =
            augment(img, segments, pool, opt.n_illuminants,
                    opt.seeds_per_illuminant, seed, opt.feather_sigma);
        sample.source_id = id;

        // Atomic per-sample write: stage into a temp dir, then rename.
        fs::path final_dir = out / id;
        fs::path tmp_dir = out / (id + ".__tmp");
        fs::remove_all(tmp_dir);
        fs::create_directories(tmp_dir);

        json artifacts = json::array();
        auto emit_image = [&](const std::string &name, const LinearImage &im) {
            if (opt.run.format == "pfm")
                io::save_pfm((tmp_dir / name).string(), im);
            else
                io::save_png16_srgb((tmp_dir / name).string(), im);
            artifacts.push_back(name);
        };
        emit_image("biased" + img_ext, sample.biased);
        emit_image("corrected" + img_ext, sample.corrected);
        io::save_pfm((tmp_dir / "illum.pfm").string(), sample.illum_map);

        json illum_files = json::array(), mask_files = json::array();
        for (int li = 0; li < sample.n_illuminants(); ++li) {
            std::string cname = "illum_" + std::to_string(li) + ".json";
            const Illuminant &c = sample.illuminant_colors[size_t(li)];
            write_json_file(tmp_dir / cname,
                            json{{"schema", 1}, {"color", {c.r, c.g, c.b}}});
            illum_files.push_back(cname);
            artifacts.push_back(cname);
            std::string mname = "seedmask_" + std::to_string(li) + ".png";
            io::save_mask_png((tmp_dir / mname).string(),
                              sample.seeds.mask(li), sample.seeds.width,
                              sample.seeds.height);
            mask_files.push_back(mname);
            artifacts.push_back(mname);
        }

        json meta;
        meta["schema"] = 1;
        meta["id"] = id;
        meta["rng_seed"] = sample.rng_seed;
        meta["pool_ids"] = sample.pool_ids;
        meta["feather_sigma"] = sample.feather_sigma;
        meta["seeds_per_illuminant"] = sample.seeds_per_illuminant;
        meta["n_illuminants"] = sample.n_illuminants();
        meta["source_image"] = e.at("image").get<std::string>();
        meta["segments_source"] = segments_source;
        meta["corrected_to_canonical"] = corrected_to_canonical;
        meta["format"] = opt.run.format;
        write_json_file(tmp_dir / "meta.json", meta);

        fs::remove_all(final_dir);
        fs::rename(tmp_dir, final_dir);
        log.note("wrote sample " + id);

        json entry;
        entry["id"] = id;
        entry["dir"] = id;
        entry["biased"] = "biased" + img_ext;
        entry["corrected"] = "corrected" + img_ext;
        entry["illum_map"] = "illum.pfm";
        entry["illuminants"] = illum_files;
        entry["seed_masks"] = mask_files;
        entry["meta"] = "meta.json";
        entry["artifacts"] = artifacts;
        return entry;
    };

    BatchResult r = run_batch(images.size(), opt.run.jobs, log, id_of, work);

    json cfg = common_config_json(opt.run);
    cfg["input"] = opt.input_manifest;
    cfg["pool"] = opt.pool_file;
    cfg["n"] = opt.n_illuminants;
    cfg["k"] = opt.seeds_per_illuminant;
    cfg["feather-sigma"] = opt.feather_sigma;
    cfg["synthetic-segments"] = opt.synthetic_segments;

    json manifest;
    manifest["schema"] = 1;
    manifest["command"] = "augment";
    manifest["config"] = cfg;
    manifest["samples"] = r.entries;
    manifest["failures"] = failures_json(r);
    write_json_file(out / "manifest.json", manifest);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// seeds

int cmd_seeds(const SeedsOptions &opt) {
    check_common(opt.run);
    if (opt.clusters < 1)
        throw ConfigError("clusters must be >= 1");
    auto entries = load_dataset_manifest(opt.dataset_manifest);
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    auto id_of = [&](size_t i) { return entries[i].id; };
    auto work = [&](size_t i) -> json {
        const auto &d = entries[i];
        if (d.image.empty())
            throw ConfigError(d.id + ": manifest entry has no image");
        LinearImage img = load_image_any(d.image);
        GraynessMap gmap = grayness_map(img);
        GraySeedConfig cfg;
        cfg.top_fraction = opt.gray_top_fraction;
        cfg.rng_seed = sample_seed(opt.run.rng_seed, d.id);
        SeedSet seeds = cluster_gray_pixels(img, gmap, opt.clusters, cfg);

        std::string seeds_file = d.id + ".seeds.json";
        io::save_seed_set_json((out / seeds_file).string(), seeds);
        json masks = json::array();
        for (int li = 0; li < seeds.n_illuminants(); ++li) {
            std::string mname =
                d.id + "_seedmask_" + std::to_string(li) + ".png";
            io::save_mask_png((out / mname).string(), seeds.mask(li),
                              seeds.width, seeds.height);
            masks.push_back(mname);
        }
        if (opt.write_grayness) {
            float peak = 0.0f;
            for (float s : gmap.score)
                if (s < kZeroPixelGrayness)
                    peak = std::max(peak, s);
            std::vector<float> vis(gmap.score.size());
            for (size_t p = 0; p < vis.size(); ++p)
                vis[p] = peak > 0 ? std::min(1.0f, gmap.score[p] / peak) : 0.0f;
            io::save_gray_png8((out / (d.id + "_grayness.png")).string(), vis,
                               gmap.width, gmap.height);
        }
        log.note("seeds for " + d.id);
        json entry;
        entry["id"] = d.id;
        entry["seeds"] = seeds_file;
        entry["seed_masks"] = masks;
        return entry;
    };

    BatchResult r = run_batch(entries.size(), opt.run.jobs, log, id_of, work);

    json cfg = common_config_json(opt.run);
    cfg["dataset"] = opt.dataset_manifest;
    cfg["clusters"] = opt.clusters;
    cfg["gray-top-fraction"] = opt.gray_top_fraction;
    cfg["write-grayness"] = opt.write_grayness;

    json manifest;
    manifest["schema"] = 1;
    manifest["command"] = "seeds";
    manifest["config"] = cfg;
    manifest["seeds"] = r.entries;
    manifest["failures"] = failures_json(r);
    write_json_file(out / "seeds.json", manifest);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// estimate

int cmd_estimate(const EstimateOptions &opt) {
    check_common(opt.run);
    const std::string &est = opt.estimator;
    auto names = classical_estimator_names();
    bool classical =
        std::find(names.begin(), names.end(), est) != names.end();
    if (!classical && est != "doing-nothing" && est != "seed-diffusion" &&
        est != "import")
        throw ConfigError("unknown estimator: " + est);
    if (est == "import" && opt.probmap_dir.empty())
        throw ConfigError("import estimator needs --probmaps");

    auto entries = load_dataset_manifest(opt.dataset_manifest);
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    auto id_of = [&](size_t i) { return entries[i].id; };
    auto work = [&](size_t i) -> json {
        const auto &d = entries[i];
        if (d.image.empty())
            throw ConfigError(d.id + ": manifest entry has no image");
        LinearImage img = load_image_any(d.image);
        if (!d.mask.empty()) {
            int mw, mh;
            auto m = io::load_mask_png(d.mask.string(), mw, mh);
            if (mw != img.width() || mh != img.height())
                throw ShapeError(d.id + ": mask dimensions differ from image");
            img.set_mask(std::move(m));
        }

        json entry;
        entry["id"] = d.id;
        std::string map_file = d.id + ".pfm";

        if (classical) {
            Illuminant e = estimate_by_name(est, img);
            io::save_pfm((out / map_file).string(),
                         IlluminationMap(img.width(), img.height(), e));
            entry["type"] = "illuminant";
            entry["illuminant"] = {e.r, e.g, e.b};
            entry["map"] = map_file;
        } else if (est == "doing-nothing") {
            IlluminationMap map = doing_nothing(img);
            io::save_pfm((out / map_file).string(), map);
            entry["type"] = "map";
            entry["map"] = map_file;
        } else if (est == "seed-diffusion") {
            GraynessMap gmap = grayness_map(img);
            GraySeedConfig gcfg;
            gcfg.top_fraction = opt.gray_top_fraction;
            gcfg.rng_seed = sample_seed(opt.run.rng_seed, d.id);
            SeedSet seeds = cluster_gray_pixels(img, gmap, opt.clusters, gcfg);
            DiffusionConfig dcfg;
            dcfg.sigma_chroma = opt.sigma_chroma;
            dcfg.sigma_spatial_frac = opt.sigma_spatial_frac;
            ProbabilityMap p = seed_diffusion_estimate(img, seeds, dcfg);
            IlluminationMap map = reconstruct_illumination(p, seeds);
            io::save_pfm((out / map_file).string(), map);
            io::save_probability_map((out / (d.id + ".pmap")).string(), p);
            io::save_seed_set_json((out / (d.id + ".seeds.json")).string(),
                                   seeds);
            if (opt.write_probability_pngs)
                for (int c = 0; c < p.n; ++c) {
                    std::vector<float> plane(p.pixel_count());
                    for (size_t px = 0; px < plane.size(); ++px)
                        plane[px] = p.data[px * size_t(p.n) + size_t(c)];
                    io::save_gray_png8(
                        (out / (d.id + "_p" + std::to_string(c) + ".png"))
                            .string(),
                        plane, p.width, p.height);
                }
            entry["type"] = "map";
            entry["map"] = map_file;
            entry["probability_map"] = d.id + ".pmap";
            entry["seeds"] = d.id + ".seeds.json";
        } else { // import
            fs::path src = fs::path(opt.probmap_dir) / (d.id + ".pmap");
            size_t repaired = 0;
            ProbabilityMap p = io::load_probability_map(src.string(), &repaired);
            if (repaired)
                log.note(d.id + ": renormalized " + std::to_string(repaired) +
                         " probability rows on import");
            SeedSet seeds = io::load_seed_set_json(
                (fs::path(opt.probmap_dir) / (d.id + ".seeds.json")).string());
            if (p.width != img.width() || p.height != img.height())
                throw ShapeError(d.id + ": probability map dimensions differ "
                                        "from image");
            IlluminationMap map = reconstruct_illumination(p, seeds);
            io::save_pfm((out / map_file).string(), map);
            io::save_probability_map((out / (d.id + ".pmap")).string(), p);
            io::save_seed_set_json((out / (d.id + ".seeds.json")).string(),
                                   seeds);
            entry["type"] = "map";
            entry["map"] = map_file;
            entry["probability_map"] = d.id + ".pmap";
            entry["seeds"] = d.id + ".seeds.json";
        }
        log.note("estimated " + d.id);
        return entry;
    };

    BatchResult r = run_batch(entries.size(), opt.run.jobs, log, id_of, work);

    json cfg = common_config_json(opt.run);
    cfg["dataset"] = opt.dataset_manifest;
    cfg["estimator"] = est;
    if (classical) {
        EstimatorConfig ec = estimator_preset(est);
        cfg["estimator-params"] = {
            {"minkowski_p", std::isinf(ec.minkowski_p)
                                ? json("inf")
                                : json(ec.minkowski_p)},
            {"derivative_order", ec.derivative_order},
            {"smoothing_sigma", ec.smoothing_sigma},
            {"saturation_threshold", ec.saturation_threshold}};
    }
    if (est == "seed-diffusion") {
        cfg["clusters"] = opt.clusters;
        cfg["gray-top-fraction"] = opt.gray_top_fraction;
        cfg["sigma-chroma"] = opt.sigma_chroma;
        cfg["sigma-spatial-frac"] = opt.sigma_spatial_frac;
    }
    if (est == "import")
        cfg["probmaps"] = opt.probmap_dir;

    json manifest;
    manifest["schema"] = 1;
    manifest["command"] = "estimate";
    manifest["config"] = cfg;
    manifest["predictions"] = r.entries;
    manifest["failures"] = failures_json(r);
    write_json_file(out / "predictions.json", manifest);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// correct

int cmd_correct(const CorrectOptions &opt) {
    check_common(opt.run);
    auto dataset = load_dataset_manifest(opt.dataset_manifest);
    auto preds = load_predictions_manifest(opt.predictions_manifest);
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    std::vector<std::pair<DatasetEntry, PredictionEntry>> aligned;
    for (const auto &d : dataset)
        for (const auto &p : preds)
            if (p.id == d.id) {
                aligned.emplace_back(d, p);
                break;
            }
    if (aligned.empty())
        throw ConfigError("no ids shared between dataset and predictions");

    const std::string img_ext = opt.run.format == "pfm" ? ".pfm" : ".png16";
    auto id_of = [&](size_t i) { return aligned[i].first.id; };
    auto work = [&](size_t i) -> json {
        const auto &[d, p] = aligned[i];
        if (d.image.empty())
            throw ConfigError(d.id + ": manifest entry has no image");
        LinearImage img = load_image_any(d.image);
        LinearImage corrected(1, 1);
        if (!p.map.empty()) {
            IlluminationMap map = io::load_pfm_map(p.map.string());
            corrected = von_kries_correct(img, map);
        } else if (p.illuminant) {
            corrected = von_kries_correct(img, p.illuminant->normalized());
        } else {
            throw ConfigError(d.id + ": prediction has neither map nor "
                                     "illuminant");
        }
        std::string name = d.id + "_corrected" + img_ext;
        if (opt.run.format == "pfm")
            io::save_pfm((out / name).string(), corrected);
        else
            io::save_png16_srgb((out / name).string(), corrected);
        if (opt.run.visualize)
            io::save_png8_srgb((out / (d.id + "_corrected_vis.png")).string(),
                               corrected);
        log.note("corrected " + d.id);
        return json{{"id", d.id}, {"corrected", name}};
    };

    BatchResult r = run_batch(aligned.size(), opt.run.jobs, log, id_of, work);

    json cfg = common_config_json(opt.run);
    cfg["dataset"] = opt.dataset_manifest;
    cfg["predictions"] = opt.predictions_manifest;

    json manifest;
    manifest["schema"] = 1;
    manifest["command"] = "correct";
    manifest["config"] = cfg;
    manifest["corrected"] = r.entries;
    manifest["failures"] = failures_json(r);
    write_json_file(out / "corrected.json", manifest);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// evaluate

namespace {

json stats_json(const ErrorStats &s) {
    return json{{"mean", s.mean},       {"median", s.median},
                {"trimean", s.trimean}, {"best25", s.best25},
                {"worst25", s.worst25}, {"max", s.max},
                {"count", s.count}};
}

} // namespace

int cmd_evaluate(const EvaluateOptions &opt) {
    check_common(opt.run);
    auto gt = load_dataset_manifest(opt.gt_manifest);
    auto preds = load_predictions_manifest(opt.predictions_manifest);
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    std::vector<std::pair<DatasetEntry, PredictionEntry>> aligned;
    std::vector<std::string> missing_pred, missing_gt;
    for (const auto &d : gt) {
        bool found = false;
        for (const auto &p : preds)
            if (p.id == d.id) {
                aligned.emplace_back(d, p);
                found = true;
                break;
            }
        if (!found)
            missing_pred.push_back(d.id);
    }
    for (const auto &p : preds) {
        bool found = false;
        for (const auto &d : gt)
            if (p.id == d.id)
                found = true;
        if (!found)
            missing_gt.push_back(p.id);
    }
    for (const auto &id : missing_pred)
        log.note("warning: no prediction for " + id + ", excluded");
    for (const auto &id : missing_gt)
        log.note("warning: no ground truth for " + id + ", excluded");
    if (aligned.empty())
        throw ConfigError("no ids shared between ground truth and predictions");

    if (opt.run.visualize)
        fs::create_directories(out / "vis");

    auto id_of = [&](size_t i) { return aligned[i].first.id; };
    auto work = [&](size_t i) -> json {
        const auto &[d, p] = aligned[i];
        json row;
        row["id"] = d.id;

        bool gt_single = !d.illuminant.has_value() ? false : d.illum_map.empty();
        bool pred_single = p.map.empty();
        if (gt_single && pred_single) {
            if (!p.illuminant)
                throw ConfigError(d.id + ": prediction has neither map nor "
                                         "illuminant");
            double err = angular_error(d.illuminant->normalized(),
                                       p.illuminant->normalized());
            ErrorStats s = summarize({err});
            row["protocol"] = "single-illuminant";
            row["stats"] = stats_json(s);
            row["representative"] = err;
            return row;
        }

        // Map protocol; broadcast whichever side is a single illuminant.
        IlluminationMap gt_map(1, 1);
        if (!d.illum_map.empty()) {
            gt_map = io::load_pfm_map(d.illum_map.string());
        } else if (d.illuminant) {
            IlluminationMap pm = io::load_pfm_map(p.map.string());
            gt_map = IlluminationMap(pm.width(), pm.height(),
                                     d.illuminant->normalized());
        } else {
            throw ConfigError(d.id + ": ground truth has neither map nor "
                                     "illuminant");
        }
        IlluminationMap pred_map(1, 1);
        if (!p.map.empty())
            pred_map = io::load_pfm_map(p.map.string());
        else if (p.illuminant)
            pred_map = IlluminationMap(gt_map.width(), gt_map.height(),
                                       p.illuminant->normalized());
        else
            throw ConfigError(d.id + ": prediction has neither map nor "
                                     "illuminant");

        std::vector<uint8_t> mask;
        if (!d.mask.empty()) {
            int mw, mh;
            mask = io::load_mask_png(d.mask.string(), mw, mh);
            if (mw != gt_map.width() || mh != gt_map.height())
                throw ShapeError(d.id + ": mask dimensions differ from map");
        }
        MapAngularError err = map_angular_error(gt_map, pred_map, mask);
        std::vector<double> per_pixel;
        per_pixel.reserve(err.valid_count);
        for (float v : err.degrees)
            if (!std::isnan(v))
                per_pixel.push_back(double(v));
        ErrorStats s = summarize(per_pixel);
        row["protocol"] = "per-pixel-map";
        row["stats"] = stats_json(s);
        row["representative"] = err.mean;

        if (opt.run.visualize) {
            io::save_png8_srgb((out / "vis" / (d.id + "_gt.png")).string(),
                               map_as_image(gt_map));
            io::save_png8_srgb((out / "vis" / (d.id + "_pred.png")).string(),
                               map_as_image(pred_map));
            if (!d.image.empty()) {
                LinearImage img = load_image_any(d.image);
                io::save_png8_srgb(
                    (out / "vis" / (d.id + "_corrected.png")).string(),
                    von_kries_correct(img, pred_map));
            }
        }
        return row;
    };

    BatchResult r = run_batch(aligned.size(), opt.run.jobs, log, id_of, work);

    // CSV: one row per image, six statistics of its error distribution.
    {
        std::ofstream csv(out / "errors.csv");
        csv << "id,mean,median,trimean,best25,worst25,max\n";
        for (const auto &row : r.entries) {
            const json &s = row.at("stats");
            csv << row.at("id").get<std::string>() << ","
                << fmt_double(s.at("mean").get<double>()) << ","
                << fmt_double(s.at("median").get<double>()) << ","
                << fmt_double(s.at("trimean").get<double>()) << ","
                << fmt_double(s.at("best25").get<double>()) << ","
                << fmt_double(s.at("worst25").get<double>()) << ","
                << fmt_double(s.at("max").get<double>()) << "\n";
        }
    }

    json cfg = common_config_json(opt.run);
    cfg["gt"] = opt.gt_manifest;
    cfg["predictions"] = opt.predictions_manifest;

    json report;
    report["schema"] = 1;
    report["command"] = "evaluate";
    report["config"] = cfg;
    report["averaging"] = "per-image mean of per-pixel errors, then dataset "
                          "statistics over images";
    report["per_image"] = r.entries;
    if (!r.entries.empty()) {
        std::vector<double> reps;
        for (const auto &row : r.entries)
            reps.push_back(row.at("representative").get<double>());
        report["dataset"] = stats_json(summarize(reps));
    }
    report["missing_predictions"] = missing_pred;
    report["missing_ground_truth"] = missing_gt;
    report["failures"] = failures_json(r);
    write_json_file(out / "report.json", report);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// losses

int cmd_losses(const LossesOptions &opt) {
    check_common(opt.run);
    if (!(opt.lambda > 0.0))
        throw ConfigError("lambda must be > 0");
    auto entries = load_dataset_manifest(opt.dataset_manifest);
    fs::path out = opt.run.out_dir;
    fs::create_directories(out);
    RunLog log(out / "run.log");

    auto id_of = [&](size_t i) { return entries[i].id; };
    auto work = [&](size_t i) -> json {
        const auto &d = entries[i];
        if (d.image.empty() || d.corrected.empty() || d.illum_map.empty() ||
            d.seed_masks.empty() || d.seed_colors.size() != d.seed_masks.size())
            throw ConfigError(d.id +
                              ": losses need the augment sample layout "
                              "(biased, corrected, illum map, seed masks)");
        LinearImage biased = load_image_any(d.image);
        LinearImage white = load_image_any(d.corrected);
        IlluminationMap gt_map = io::load_pfm_map(d.illum_map.string());

        SeedSet seeds;
        seeds.width = gt_map.width();
        seeds.height = gt_map.height();
        for (size_t m = 0; m < d.seed_masks.size(); ++m) {
            int mw, mh;
            auto mask = io::load_mask_png(d.seed_masks[m].string(), mw, mh);
            if (mw != seeds.width || mh != seeds.height)
                throw ShapeError(d.id + ": seed mask dimensions differ");
            SeedGroup g;
            g.color = d.seed_colors[m].normalized();
            for (int y = 0; y < mh; ++y)
                for (int x = 0; x < mw; ++x)
                    if (mask[size_t(y) * mw + x])
                        g.points.push_back({x, y});
            seeds.groups.push_back(std::move(g));
        }
        seeds.validate();

        ProbabilityMap p;
        std::string source;
        if (!opt.probmap_dir.empty()) {
            size_t repaired = 0;
            p = io::load_probability_map(
                (fs::path(opt.probmap_dir) / (d.id + ".pmap")).string(),
                &repaired);
            if (repaired)
                log.note(d.id + ": renormalized " + std::to_string(repaired) +
                         " probability rows");
            source = "imported";
        } else {
            p = oracle_probabilities(gt_map, seeds).probabilities;
            source = "oracle";
        }

        LossReport rep = total_loss(gt_map, p, biased, white, seeds, opt.lambda);
        log.note("losses for " + d.id);
        json row;
        row["id"] = d.id;
        row["probability_source"] = source;
        row["illum"] = rep.illum;
        row["rgb"] = rep.rgb;
        row["masks"] = rep.masks;
        row["lambda"] = rep.lambda;
        row["total_supervised"] = rep.total_supervised;
        row["adversarial"] = "absent";
        return row;
    };

    BatchResult r = run_batch(entries.size(), opt.run.jobs, log, id_of, work);

    json cfg = common_config_json(opt.run);
    cfg["dataset"] = opt.dataset_manifest;
    cfg["probmaps"] = opt.probmap_dir;
    cfg["lambda"] = opt.lambda;

    json doc;
    doc["schema"] = 1;
    doc["command"] = "losses";
    doc["config"] = cfg;
    doc["adversarial"] = "absent";
    doc["per_sample"] = r.entries;
    if (!r.entries.empty()) {
        detail::CompensatedSum si, sr, sm, st;
        for (const auto &row : r.entries) {
            si.add(row.at("illum").get<double>());
            sr.add(row.at("rgb").get<double>());
            sm.add(row.at("masks").get<double>());
            st.add(row.at("total_supervised").get<double>());
        }
        double n = double(r.entries.size());
        doc["aggregate"] = {{"illum", si.value() / n},
                            {"rgb", sr.value() / n},
                            {"masks", sm.value() / n},
                            {"total_supervised", st.value() / n}};
    }
    doc["failures"] = failures_json(r);
    write_json_file(out / "losses.json", doc);
    return r.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------
// split

int cmd_split(const SplitOptions &opt) {
    check_common(opt.run);
    json doc = read_json_file(opt.ids_file);
    std::vector<std::string> ids;
    if (doc.is_array()) {
        for (const auto &e : doc)
            ids.push_back(e.get<std::string>());
    } else if (doc.contains("samples")) {
        for (const auto &e : doc.at("samples"))
            ids.push_back(e.at("id").get<std::string>());
    } else if (doc.contains("images")) {
        for (const auto &e : doc.at("images"))
            ids.push_back(e.at("id").get<std::string>());
    } else {
        throw FormatError(opt.ids_file + ": no ids found");
    }
    auto [train, test] =
        split_dataset(ids, opt.train_fraction, opt.run.rng_seed);

    fs::path out = opt.run.out_dir;
    fs::create_directories(out);

    json cfg = common_config_json(opt.run);
    cfg["ids"] = opt.ids_file;
    cfg["train-fraction"] = opt.train_fraction;

    json result;
    result["schema"] = 1;
    result["command"] = "split";
    result["config"] = cfg;
    result["train"] = train;
    result["test"] = test;
    write_json_file(out / "split.json", result);
    return 0;
}

// ---------------------------------------------------------------------
// config files

namespace {

class ConfigReader {
  public:
    explicit ConfigReader(const std::string &path)
        : path_(path), doc_(read_json_file(path)) {
        if (!doc_.is_object())
            throw ConfigError(path + ": config must be a JSON object");
    }

    template <typename T> void get(const char *key, T &dst) {
        if (doc_.contains(key)) {
            try {
                dst = doc_.at(key).get<T>();
            } catch (const json::exception &) {
                throw ConfigError(path_ + ": bad value for '" + key + "'");
            }
            seen_.push_back(key);
        }
    }

    void finish() const {
        for (const auto &[key, _] : doc_.items())
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
                throw ConfigError(path_ + ": unknown config key '" + key + "'");
    }

  private:
    std::string path_;
    json doc_;
    std::vector<std::string> seen_;
};

void read_common(ConfigReader &r, CommonOptions &run) {
    r.get("out", run.out_dir);
    r.get("rng-seed", run.rng_seed);
    r.get("jobs", run.jobs);
    r.get("format", run.format);
    r.get("visualize", run.visualize);
}

} // namespace

void load_config_file(const std::string &path, AugmentOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("input", opt.input_manifest);
    r.get("pool", opt.pool_file);
    r.get("n", opt.n_illuminants);
    r.get("k", opt.seeds_per_illuminant);
    r.get("feather-sigma", opt.feather_sigma);
    r.get("synthetic-segments", opt.synthetic_segments);
    r.finish();
}

void load_config_file(const std::string &path, SeedsOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("dataset", opt.dataset_manifest);
    r.get("clusters", opt.clusters);
    r.get("gray-top-fraction", opt.gray_top_fraction);
    r.get("write-grayness", opt.write_grayness);
    r.finish();
}

void load_config_file(const std::string &path, EstimateOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("dataset", opt.dataset_manifest);
    r.get("estimator", opt.estimator);
    r.get("clusters", opt.clusters);
    r.get("gray-top-fraction", opt.gray_top_fraction);
    r.get("sigma-chroma", opt.sigma_chroma);
    r.get("sigma-spatial-frac", opt.sigma_spatial_frac);
    r.get("probmaps", opt.probmap_dir);
    r.get("write-probability-pngs", opt.write_probability_pngs);
    r.finish();
}

void load_config_file(const std::string &path, CorrectOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("dataset", opt.dataset_manifest);
    r.get("predictions", opt.predictions_manifest);
    r.finish();
}

void load_config_file(const std::string &path, EvaluateOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("gt", opt.gt_manifest);
    r.get("predictions", opt.predictions_manifest);
    r.finish();
}

void load_config_file(const std::string &path, LossesOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("dataset", opt.dataset_manifest);
    r.get("probmaps", opt.probmap_dir);
    r.get("lambda", opt.lambda);
    r.finish();
}

void load_config_file(const std::string &path, SplitOptions &opt) {
    ConfigReader r(path);
    read_common(r, opt.run);
    r.get("ids", opt.ids_file);
    r.get("train-fraction", opt.train_fraction);
    r.finish();
}

} // namespace micc::harness
