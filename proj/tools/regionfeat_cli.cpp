// Command-line front end: every subcommand is a thin wrapper over the
// library. Machine-readable results go to stdout as JSON, diagnostics to
// stderr. Exit codes: 0 success, 1 input/validation error, 2 numerical
// failure (non-finite values).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regionfeat/regionfeat.hpp"

namespace rf = regionfeat;
using ojson = nlohmann::ordered_json;

namespace {

rf::FeatureMap load_features(const std::string& path) {
    const rf::NdArray a = rf::read_tensor(path);
    if (a.dims.size() != 3) {
        throw std::invalid_argument("feature tensor must have dims [H, W, C]: " + path);
    }
    return rf::feature_map_from_array(a);
}

std::vector<rf::RoI> load_rois(const std::string& path, double stride) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open RoI file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("malformed RoI JSON in " + path + ": " + e.what());
    }
    if (!doc.is_array() || doc.empty()) {
        throw std::invalid_argument("RoI file must hold a non-empty JSON array: " + path);
    }
    std::vector<rf::RoI> rois;
    rois.reserve(doc.size());
    for (const auto& item : doc) {
        for (const char* key : {"x1", "y1", "x2", "y2"}) {
            if (!item.contains(key) || !item[key].is_number()) {
                throw std::invalid_argument("RoI entries need numeric x1/y1/x2/y2: " + path);
            }
        }
        rf::RoI b{item["x1"].get<double>() / stride, item["y1"].get<double>() / stride,
                  item["x2"].get<double>() / stride, item["y2"].get<double>() / stride};
        rf::validate_roi(b);
        rois.push_back(b);
    }
    return rois;
}

rf::InstanceMask load_mask(const std::string& path) {
    const rf::NdArray a = rf::read_tensor(path);
    if (a.dims.size() != 2) {
        throw std::invalid_argument("mask tensor must have dims [H, W]: " + path);
    }
    return rf::mask_from_array(a);
}

rf::SupportSpec make_support(const std::string& kind, int max_in, int max_out) {
    rf::SupportSpec spec;
    if (kind == "roi1x") {
        spec.kind = rf::SupportKind::roi_1x;
    } else if (kind == "roi2x") {
        spec.kind = rf::SupportKind::roi_2x;
    } else if (kind == "whole") {
        spec.kind = rf::SupportKind::whole_image;
    } else {
        throw std::invalid_argument("unknown support kind: " + kind);
    }
    spec.max_in = max_in;
    spec.max_out = max_out;
    rf::validate_support_spec(spec);
    return spec;
}

void ensure_finite(const std::vector<double>& values, const std::string& what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw rf::NumericalError("non-finite value in " + what);
    }
}

void write_region_features(const std::string& path,
                           const std::vector<rf::PartFeatureMatrix>& outs) {
    rf::NdArray a;
    a.dims = {static_cast<std::uint32_t>(outs.size()),
              static_cast<std::uint32_t>(outs.front().parts),
              static_cast<std::uint32_t>(outs.front().channels)};
    a.data.reserve(outs.size() * outs.front().data.size());
    for (const rf::PartFeatureMatrix& y : outs) {
        a.data.insert(a.data.end(), y.data.begin(), y.data.end());
    }
    ensure_finite(a.data, "region feature output");
    rf::write_tensor(path, a);
}

struct IoFlags {
    std::string features;
    std::string rois;
    std::string out;
    double stride = 1.0;
};

void add_io_flags(CLI::App* cmd, IoFlags& io) {
    cmd->add_option("--features", io.features, "feature map tensor, dims [H, W, C]")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--rois", io.rois, "JSON array of {x1, y1, x2, y2} boxes")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", io.out, "output tensor path, dims [N, K, C]")->required();
    cmd->add_option("--stride", io.stride,
                    "divide RoI coordinates by this feature stride (pixel-space boxes)")
        ->check(CLI::PositiveNumber);
}

struct SupportFlags {
    std::string kind = "whole";
    int max_in = 196;
    int max_out = 196;
};

void add_support_flags(CLI::App* cmd, SupportFlags& s) {
    cmd->add_option("--support", s.kind, "support region: roi1x, roi2x or whole")
        ->check(CLI::IsMember({"roi1x", "roi2x", "whole"}));
    cmd->add_option("--max-in", s.max_in, "inside-RoI sample budget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-out", s.max_out, "outside-RoI sample budget (0 only for roi1x)");
}

// ---------------------------------------------------------------- extract

struct ExtractOpts {
    IoFlags io;
    std::string checkpoint;
    SupportFlags support;
};

void run_extract(const ExtractOpts& opt) {
    const rf::FeatureMap x = load_features(opt.io.features);
    const std::vector<rf::RoI> rois = load_rois(opt.io.rois, opt.io.stride);
    const rf::AttentionParams params = rf::load_checkpoint(opt.checkpoint);
    if (params.feat_dim != x.channels) {
        throw std::invalid_argument("checkpoint C_f does not match the feature map");
    }
    const rf::SupportSpec spec = make_support(opt.support.kind, opt.support.max_in,
                                              opt.support.max_out);
    const rf::PositionCache shared = rf::build_position_cache(x, params);
    std::vector<rf::PartFeatureMatrix> outs(rois.size());
    rf::parallel_for(rois.size(), [&](std::size_t i) {
        outs[i] = rf::extract_cached(x, rois[i], params, spec, shared);
    });
    write_region_features(opt.io.out, outs);
    ojson summary;
    summary["rois"] = rois.size();
    summary["parts"] = params.parts;
    summary["channels"] = params.feat_dim;
    summary["out"] = opt.io.out;
    std::cout << summary.dump() << "\n";
}

// ------------------------------------------------------------------- pool

struct PoolOpts {
    IoFlags io;
    std::string method;
    int rows = 7;
    int cols = 7;
    std::string mode = "avg";
    int samples = 1;
    std::string offsets;
    std::string predictor;
    std::string mask;
};

rf::OffsetField offsets_for_roi(const rf::NdArray& t, int parts, std::size_t roi_index,
                                std::size_t roi_count) {
    const auto k = static_cast<std::uint32_t>(parts);
    std::size_t base = 0;
    if (t.dims == std::vector<std::uint32_t>{k, 2u}) {
        base = 0;
    } else if (t.dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(roi_count), k,
                                                    2u}) {
        base = roi_index * static_cast<std::size_t>(parts) * 2;
    } else {
        throw std::invalid_argument("offsets tensor must have dims [K, 2] or [N, K, 2]");
    }
    rf::OffsetField field = rf::OffsetField::zeros(parts);
    for (int i = 0; i < parts; ++i) {
        field.du[i] = t.data[base + 2 * i];
        field.dv[i] = t.data[base + 2 * i + 1];
    }
    return field;
}

void run_pool(const PoolOpts& opt) {
    const rf::FeatureMap x = load_features(opt.io.features);
    const std::vector<rf::RoI> rois = load_rois(opt.io.rois, opt.io.stride);

    rf::NdArray offsets_tensor;
    rf::OffsetPredictorParams predictor;
    bool use_predictor = false;
    if (opt.method == "deformable") {
        if (!opt.offsets.empty()) {
            offsets_tensor = rf::read_tensor(opt.offsets);
        } else if (!opt.predictor.empty()) {
            const int parts = opt.rows * opt.cols;
            const rf::NdArray w =
                rf::read_tensor(opt.predictor + "/weight.rft");
            const rf::NdArray b = rf::read_tensor(opt.predictor + "/bias.rft");
            const auto two_k = static_cast<std::uint32_t>(2 * parts);
            if (w.dims != std::vector<std::uint32_t>{
                              two_k, static_cast<std::uint32_t>(parts * x.channels)} ||
                b.dims != std::vector<std::uint32_t>{two_k}) {
                throw std::invalid_argument(
                    "offset predictor needs weight [2K, K*C] and bias [2K]");
            }
            predictor = rf::OffsetPredictorParams{parts, x.channels, w.data, b.data};
            use_predictor = true;
        } else {
            throw std::invalid_argument(
                "deformable pooling needs --offsets or --predictor");
        }
    }
    rf::InstanceMask mask;
    if (opt.method == "masked") {
        if (opt.mask.empty()) throw std::invalid_argument("masked pooling needs --mask");
        mask = load_mask(opt.mask);
        if (mask.height != x.height || mask.width != x.width) {
            throw std::invalid_argument("mask dims must match the feature map");
        }
    }

    std::vector<rf::PartFeatureMatrix> outs;
    outs.reserve(rois.size());
    for (std::size_t i = 0; i < rois.size(); ++i) {
        const rf::RoI& b = rois[i];
        const rf::BinGrid grid = rf::make_bin_grid(b, opt.rows, opt.cols);
        if (opt.method == "regular") {
            outs.push_back(rf::regular_pool(
                x, b, grid, opt.mode == "max" ? rf::PoolMode::max : rf::PoolMode::avg));
        } else if (opt.method == "aligned") {
            outs.push_back(rf::aligned_pool(x, b, grid, opt.samples));
        } else if (opt.method == "deformable") {
            const rf::OffsetField field =
                use_predictor ? rf::predict_offsets(x, b, grid, predictor)
                              : offsets_for_roi(offsets_tensor, grid.parts(), i, rois.size());
            outs.push_back(rf::deformable_pool(x, b, grid, field));
        } else if (opt.method == "ps") {
            outs.push_back(rf::ps_roi_pool(x, b, grid));
        } else if (opt.method == "center") {
            outs.push_back(rf::center_feature(x, b));
        } else if (opt.method == "masked") {
            outs.push_back(rf::masked_pool(x, b, grid, mask));
        } else {
            throw std::invalid_argument("unknown pooling method: " + opt.method);
        }
    }
    write_region_features(opt.io.out, outs);
    ojson summary;
    summary["rois"] = rois.size();
    summary["method"] = opt.method;
    summary["out"] = opt.io.out;
    std::cout << summary.dump() << "\n";
}

// ------------------------------------------------------------------ train

struct TrainOpts {
    rf::TrainConfig cfg;
    std::string task = "mask_fit";
    std::string out;
    std::string log;
};

void run_train(const TrainOpts& opt) {
    rf::TrainConfig cfg = opt.cfg;
    cfg.task = rf::parse_task(opt.task);
    const rf::TrainResult result = rf::run_training(cfg);
    rf::save_checkpoint(opt.out, result.params);

    std::ofstream log(opt.log, std::ios::binary);
    if (!log) throw std::invalid_argument("cannot open training log for writing: " + opt.log);
    for (const rf::TrainRecord& rec : result.log.records) {
        ojson line;
        line["step"] = rec.step;
        line["loss"] = rec.loss;
        line["mean_kl_parts"] = rec.mean_kl_parts;
        if (std::isnan(rec.kl_of_mask)) {
            line["kl_of_mask"] = nullptr;
        } else {
            line["kl_of_mask"] = rec.kl_of_mask;
        }
        line["in_roi_mass"] = rec.in_roi_mass;
        log << line.dump() << "\n";
    }
    if (!log.good()) throw std::runtime_error("failed writing training log: " + opt.log);

    ojson summary;
    summary["task"] = opt.task;
    summary["steps"] = cfg.steps;
    summary["initial_loss"] = result.log.records.front().loss;
    summary["final_loss"] = result.log.records.back().loss;
    summary["checkpoint"] = opt.out;
    summary["log"] = opt.log;
    std::cout << summary.dump() << "\n";
}

// -------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    std::uint64_t seed = 0;
    double eps = 1e-3;
    int height = 6;
    int width = 6;
    int channels = 3;
    int parts = 4;
    int embed_dim = 4;
    int geo_dim = 3;
    double param_sigma = 0.05;
    SupportFlags support;
};

void run_gradcheck(const GradcheckOpts& opt) {
    std::mt19937_64 rng(opt.seed);
    rf::FeatureMap x(opt.height, opt.width, opt.channels);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x.data) v = gauss(rng);
    rf::AttentionParams params = rf::init_params(opt.parts, opt.embed_dim, opt.geo_dim,
                                                 opt.channels, opt.param_sigma, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    rf::RoI b;
    b.x1 = unit(rng) * (opt.width / 2.0);
    b.y1 = unit(rng) * (opt.height / 2.0);
    b.x2 = b.x1 + 2.0 + unit(rng) * (opt.width / 2.0 - 2.0);
    b.y2 = b.y1 + 2.0 + unit(rng) * (opt.height / 2.0 - 2.0);
    const rf::SupportSpec spec = make_support(opt.support.kind, opt.support.max_in,
                                              opt.support.max_out);
    const rf::FiniteDiffReport report =
        rf::finite_diff_check(x, b, params, spec, opt.eps, opt.seed);
    if (!std::isfinite(report.max_rel_error())) {
        throw rf::NumericalError("gradient check produced non-finite errors");
    }
    ojson out;
    out["max_rel_error"] = report.max_rel_error();
    out["d_x"] = report.d_x;
    out["d_v_box"] = report.d_v_box;
    out["d_w_box_hat"] = report.d_w_box_hat;
    out["d_w_im"] = report.d_w_im;
    out["d_w_app"] = report.d_w_app;
    out["eps"] = opt.eps;
    out["seed"] = opt.seed;
    std::cout << out.dump() << "\n";
}

// ------------------------------------------------------------------ flops

struct FlopsOpts {
    rf::CostConfig cfg;
};

void run_flops(const FlopsOpts& opt) {
    const rf::CostBreakdown cost = rf::flops(opt.cfg);
    ojson out;
    out["p1"] = cost.p1;
    out["p2"] = cost.p2;
    out["p3"] = cost.p3;
    out["p4"] = cost.p4;
    out["p5"] = cost.p5;
    out["total"] = cost.total;
    std::cout << out.dump() << "\n";
}

// ------------------------------------------------------------------ bench

struct BenchOpts {
    int height = 48;
    int width = 48;
    int channels = 32;
    int parts = 9;
    int embed_dim = 64;
    int geo_dim = 32;
    int rois = 100;
    int max_in = 196;
    int max_out = 196;
    int reps = 3;
    std::uint64_t seed = 0;
};

void run_bench(const BenchOpts& opt) {
    if (opt.reps < 1) throw std::invalid_argument("bench needs --reps >= 1");
    std::mt19937_64 rng(opt.seed);
    rf::FeatureMap x(opt.height, opt.width, opt.channels);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x.data) v = gauss(rng);
    rf::AttentionParams params = rf::init_params(opt.parts, opt.embed_dim, opt.geo_dim,
                                                 opt.channels, 0.01, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<rf::RoI> rois;
    rois.reserve(opt.rois);
    for (int i = 0; i < opt.rois; ++i) {
        rf::RoI b;
        const double bw = 4.0 + unit(rng) * (opt.width / 2.0 - 4.0);
        const double bh = 4.0 + unit(rng) * (opt.height / 2.0 - 4.0);
        b.x1 = unit(rng) * (opt.width - bw);
        b.y1 = unit(rng) * (opt.height - bh);
        b.x2 = b.x1 + bw;
        b.y2 = b.y1 + bh;
        rois.push_back(b);
    }

    rf::SupportSpec sparse_spec = rf::SupportSpec::whole_image();
    sparse_spec.max_in = opt.max_in;
    sparse_spec.max_out = opt.max_out;
    const rf::SupportSpec dense_spec = rf::SupportSpec::whole_image();

    std::vector<rf::SamplingPlan> sparse_plans, dense_plans;
    for (const rf::RoI& b : rois) {
        sparse_plans.push_back(rf::build_plan(b, opt.height, opt.width, sparse_spec));
        dense_plans.push_back(rf::dense_plan(b, opt.height, opt.width, dense_spec));
    }

    const auto time_variant = [&](bool dense) {
        double best_ms = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < opt.reps; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const rf::PositionCache shared = rf::build_position_cache(x, params);
            double sink = 0.0;
            for (std::size_t i = 0; i < rois.size(); ++i) {
                const std::vector<rf::Position> positions =
                    dense ? dense_plans[i].all_positions() : sparse_plans[i].all_positions();
                const rf::PartFeatureMatrix y = rf::detail::extract_core(
                    x, rois[i], positions, params, &shared, nullptr);
                sink += y.data.front();
            }
            const auto t1 = std::chrono::steady_clock::now();
            if (!std::isfinite(sink)) throw rf::NumericalError("non-finite bench output");
            best_ms = std::min(best_ms,
                               std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        return best_ms;
    };
    const double dense_ms = time_variant(true);
    const double sparse_ms = time_variant(false);

    rf::CostConfig base;
    base.n = opt.rois;
    base.k = opt.parts;
    base.c_e = opt.embed_dim;
    base.c_g = opt.geo_dim;
    base.c_f = opt.channels;
    base.h = opt.height;
    base.w = opt.width;
    const rf::MeasuredCost sparse_cost = rf::measured_flops(sparse_plans, base);
    const rf::MeasuredCost dense_cost = rf::measured_flops(dense_plans, base);

    ojson out;
    out["dense_ms"] = dense_ms;
    out["sparse_ms"] = sparse_ms;
    out["speedup"] = dense_ms / sparse_ms;
    out["dense_flops"] = dense_cost.breakdown.total;
    out["sparse_flops"] = sparse_cost.breakdown.total;
    std::cout << out.dump() << "\n";
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts {
    std::string features;
    std::string rois;
    std::string mask;
    std::string checkpoint;
    double stride = 1.0;
    SupportFlags support;
    double epsilon = 1e-8;
    std::string export_pgm;  // prefix; empty = no export
};

void run_analyze(const AnalyzeOpts& opt) {
    const rf::FeatureMap x = load_features(opt.features);
    const std::vector<rf::RoI> rois = load_rois(opt.rois, opt.stride);
    const rf::InstanceMask mask = load_mask(opt.mask);
    if (mask.height != x.height || mask.width != x.width) {
        throw std::invalid_argument("mask dims must match the feature map");
    }
    const rf::AttentionParams params = rf::load_checkpoint(opt.checkpoint);
    if (params.feat_dim != x.channels) {
        throw std::invalid_argument("checkpoint C_f does not match the feature map");
    }
    const rf::SupportSpec spec = make_support(opt.support.kind, opt.support.max_in,
                                              opt.support.max_out);
    const rf::PositionCache shared = rf::build_position_cache(x, params);
    for (std::size_t i = 0; i < rois.size(); ++i) {
        rf::ForwardCache cache;
        rf::extract_cached(x, rois[i], params, spec, shared, &cache);
        const rf::DenseWeightMap wm = rf::scatter_weights(cache.weights, x.height, x.width);
        ojson line;
        line["roi_index"] = i;
        line["mean_kl_parts"] = rf::mean_kl_between_parts(wm, opt.epsilon);
        line["kl_of_mask"] = rf::kl_of_mask(wm, mask, opt.epsilon);
        std::cout << line.dump() << "\n";
        if (!opt.export_pgm.empty()) {
            rf::export_weight_map(wm, rf::kMaxPooledPart,
                                  opt.export_pgm + ".roi" + std::to_string(i) + ".max.pgm");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"region feature extraction toolkit"};
    app.require_subcommand(1);

    ExtractOpts extract_opts;
    CLI::App* extract_cmd =
        app.add_subcommand("extract", "attention-weighted region features for each RoI");
    add_io_flags(extract_cmd, extract_opts.io);
    extract_cmd->add_option("--checkpoint", extract_opts.checkpoint,
                            "parameter checkpoint directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    add_support_flags(extract_cmd, extract_opts.support);
    extract_cmd->callback([&] { run_extract(extract_opts); });

    PoolOpts pool_opts;
    CLI::App* pool_cmd = app.add_subcommand("pool", "hand-crafted pooling baselines");
    add_io_flags(pool_cmd, pool_opts.io);
    pool_cmd->add_option("--method", pool_opts.method, "pooling method")
        ->required()
        ->check(CLI::IsMember({"regular", "aligned", "deformable", "ps", "center", "masked"}));
    pool_cmd->add_option("--rows", pool_opts.rows, "bin grid rows")
        ->check(CLI::PositiveNumber);
    pool_cmd->add_option("--cols", pool_opts.cols, "bin grid cols")
        ->check(CLI::PositiveNumber);
    pool_cmd->add_option("--mode", pool_opts.mode, "regular pooling mode")
        ->check(CLI::IsMember({"avg", "max"}));
    pool_cmd->add_option("--samples", pool_opts.samples, "aligned samples per bin (1 or 4)")
        ->check(CLI::IsMember({1, 4}));
    pool_cmd->add_option("--offsets", pool_opts.offsets,
                         "offsets tensor for deformable pooling, dims [K,2] or [N,K,2]")
        ->check(CLI::ExistingFile);
    pool_cmd->add_option("--predictor", pool_opts.predictor,
                         "offset predictor directory (weight.rft, bias.rft)")
        ->check(CLI::ExistingDirectory);
    pool_cmd->add_option("--mask", pool_opts.mask, "instance mask tensor, dims [H,W]")
        ->check(CLI::ExistingFile);
    pool_cmd->callback([&] { run_pool(pool_opts); });

    TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "toy-scale surrogate training");
    train_cmd->add_option("--task", train_opts.task, "training task")
        ->check(CLI::IsMember({"distill_aligned", "distill_regular", "mask_fit"}));
    train_cmd->add_option("--steps", train_opts.cfg.steps, "SGD steps")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", train_opts.cfg.seed, "RNG seed");
    train_cmd->add_option("--lr", train_opts.cfg.base_lr, "base learning rate");
    train_cmd->add_option("--out", train_opts.out, "checkpoint output directory")->required();
    train_cmd->add_option("--log", train_opts.log, "JSON-lines training log path")->required();
    train_cmd->add_option("--height", train_opts.cfg.map_height, "scene map height");
    train_cmd->add_option("--width", train_opts.cfg.map_width, "scene map width");
    train_cmd->add_option("--cf", train_opts.cfg.feat_dim, "scene channel count");
    train_cmd->add_option("--rows", train_opts.cfg.grid_rows, "target grid rows");
    train_cmd->add_option("--cols", train_opts.cfg.grid_cols, "target grid cols");
    train_cmd->add_option("--ce", train_opts.cfg.embed_dim, "embedding dim C_E");
    train_cmd->add_option("--cg", train_opts.cfg.geo_dim, "transform dim C_g");
    train_cmd->add_option("--rois-per-step", train_opts.cfg.rois_per_step,
                          "RoIs per distillation step");
    train_cmd->add_option("--log-interval", train_opts.cfg.log_interval, "steps between logs");
    train_cmd->callback([&] { run_train(train_opts); });

    GradcheckOpts grad_opts;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    grad_cmd->add_option("--seed", grad_opts.seed, "scene seed");
    grad_cmd->add_option("--eps", grad_opts.eps, "finite-difference step")
        ->check(CLI::PositiveNumber);
    grad_cmd->add_option("--height", grad_opts.height, "map height");
    grad_cmd->add_option("--width", grad_opts.width, "map width");
    grad_cmd->add_option("--cf", grad_opts.channels, "channel count");
    grad_cmd->add_option("--k", grad_opts.parts, "part count");
    grad_cmd->add_option("--ce", grad_opts.embed_dim, "embedding dim C_E");
    grad_cmd->add_option("--cg", grad_opts.geo_dim, "transform dim C_g");
    grad_cmd->add_option("--sigma", grad_opts.param_sigma, "parameter init scale");
    add_support_flags(grad_cmd, grad_opts.support);
    grad_cmd->callback([&] { run_gradcheck(grad_opts); });

    FlopsOpts flops_opts;
    CLI::App* flops_cmd = app.add_subcommand("flops", "five-stage FLOP cost model");
    flops_cmd->add_option("--n", flops_opts.cfg.n, "RoI count N");
    flops_cmd->add_option("--k", flops_opts.cfg.k, "part count K");
    flops_cmd->add_option("--ce", flops_opts.cfg.c_e, "embedding dim C_E");
    flops_cmd->add_option("--cg", flops_opts.cfg.c_g, "transform dim C_g");
    flops_cmd->add_option("--cf", flops_opts.cfg.c_f, "channel count C_f");
    flops_cmd->add_option("--height", flops_opts.cfg.h, "map height H");
    flops_cmd->add_option("--width", flops_opts.cfg.w, "map width W");
    flops_cmd->add_option("--omega", flops_opts.cfg.omega, "average sample count |Omega|");
    flops_cmd->callback([&] { run_flops(flops_opts); });

    BenchOpts bench_opts;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "dense vs sparse extraction wall clock and FLOPs");
    bench_cmd->add_option("--height", bench_opts.height, "map height");
    bench_cmd->add_option("--width", bench_opts.width, "map width");
    bench_cmd->add_option("--cf", bench_opts.channels, "channel count");
    bench_cmd->add_option("--k", bench_opts.parts, "part count");
    bench_cmd->add_option("--ce", bench_opts.embed_dim, "embedding dim C_E");
    bench_cmd->add_option("--cg", bench_opts.geo_dim, "transform dim C_g");
    bench_cmd->add_option("--n", bench_opts.rois, "RoI count")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-in", bench_opts.max_in, "inside budget")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-out", bench_opts.max_out, "outside budget")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--reps", bench_opts.reps, "repetitions (best-of)");
    bench_cmd->add_option("--seed", bench_opts.seed, "scene seed");
    bench_cmd->callback([&] { run_bench(bench_opts); });

    AnalyzeOpts analyze_opts;
    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "weight-distribution metrics per RoI");
    analyze_cmd->add_option("--features", analyze_opts.features, "feature map tensor")
        ->required()
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--rois", analyze_opts.rois, "RoI JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--mask", analyze_opts.mask, "instance mask tensor")
        ->required()
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--checkpoint", analyze_opts.checkpoint, "checkpoint directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    analyze_cmd->add_option("--stride", analyze_opts.stride, "RoI coordinate divisor")
        ->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--epsilon", analyze_opts.epsilon, "KL smoothing epsilon");
    analyze_cmd->add_option("--export-pgm", analyze_opts.export_pgm,
                            "prefix for max-pooled weight map PGM exports");
    add_support_flags(analyze_cmd, analyze_opts.support);
    analyze_cmd->callback([&] { run_analyze(analyze_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const rf::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
