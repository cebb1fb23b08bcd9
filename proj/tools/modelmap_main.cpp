// modelmap: build and audit model maps from log-likelihood matrices.
//
// Subcommands cover the full pipeline: clipping/centering, resampling plans,
// draws, exact and weighted distances, bootstrap error decomposition, the
// min-n search, Procrustes map-stability analysis, the new-model workflow,
// ridge prediction of downstream scores, and a self-contained verification
// suite backed by exhaustive enumeration.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "modelmap/digest.hpp"
#include "modelmap/errors.hpp"
#include "modelmap/io.hpp"
#include "modelmap/mapalign.hpp"
#include "modelmap/matrixcore.hpp"
#include "modelmap/oracle.hpp"
#include "modelmap/predict.hpp"
#include "modelmap/rng.hpp"
#include "modelmap/sampling.hpp"

namespace fs = std::filesystem;
using namespace modelmap;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitVerify = 4;

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;  // 0: hardware default; results never depend on it
};

struct ClipOpts {
    std::optional<double> clip_pct;
    std::optional<double> threshold;
};

void add_clip_options(CLI::App* cmd, ClipOpts& clip) {
    cmd->add_option("--clip-pct", clip.clip_pct,
                    "Clip at the lower percentile of all entries");
    cmd->add_option("--threshold", clip.threshold,
                    "Clip at a fixed threshold (nats)");
}

LikelihoodMatrix load_and_clip(const fs::path& input, const ClipOpts& clip,
                               io::Metadata& meta) {
    LikelihoodMatrix L = io::read_matrix(input);
    meta.add("input", input.string());
    meta.add("input_digest", matrix_digest(L.values));
    if (clip.clip_pct && clip.threshold)
        throw CLI::ValidationError("--clip-pct and --threshold are exclusive");
    if (clip.clip_pct) {
        L = clip_lower_percentile(L, *clip.clip_pct);
        meta.add("clip_pct", *clip.clip_pct);
        meta.add("clip_threshold", *L.clip_threshold);
        meta.add("percentile_convention",
                 std::string("linear interpolation between order statistics, "
                             "h=(pct/100)*(K*N-1)"));
    } else if (clip.threshold) {
        L = apply_threshold(L, *clip.threshold);
        meta.add("clip_threshold", *clip.threshold);
    }
    return L;
}

CenteredMatrix load_centered(const fs::path& input, const ClipOpts& clip,
                             bool assume_centered, io::Metadata& meta) {
    const LikelihoodMatrix L = load_and_clip(input, clip, meta);
    if (assume_centered) {
        meta.add("centering", std::string("assumed"));
        return CenteredMatrix{L.values, L.model_ids, L.text_ids};
    }
    meta.add("centering", std::string("row-then-column"));
    return double_center(L);
}

io::Metadata base_meta(const std::string& command, const std::string& config,
                       std::uint64_t seed) {
    io::Metadata meta;
    meta.add("modelmap_version", std::string(kVersion));
    meta.add("command", command);
    Digest d;
    d.update(config);
    meta.add("config_digest", d.hex());
    meta.add("seed", seed);
    return meta;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for writing: " + path.string());
    return os;
}

// Grid syntax: "default", "lo:hi" (default grid restricted to [lo,hi]), or a
// comma-separated list of counts.
std::vector<std::size_t> parse_n_grid(const std::string& spec) {
    if (spec.empty() || spec == "default") return default_n_grid();
    const std::size_t colon = spec.find(':');
    if (colon != std::string::npos) {
        const auto lo = static_cast<std::size_t>(
            std::stoull(spec.substr(0, colon)));
        const auto hi = static_cast<std::size_t>(
            std::stoull(spec.substr(colon + 1)));
        std::vector<std::size_t> grid;
        for (const std::size_t n : default_n_grid())
            if (n >= lo && n <= hi) grid.push_back(n);
        if (grid.empty()) throw CLI::ValidationError("empty n-grid range");
        return grid;
    }
    std::vector<std::size_t> grid;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        grid.push_back(static_cast<std::size_t>(std::stoull(item)));
    return grid;
}

std::string join_grid(const std::vector<std::size_t>& grid) {
    std::string out;
    for (const std::size_t n : grid) {
        if (!out.empty()) out += ',';
        out += std::to_string(n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// center

struct CenterArgs {
    std::string input, output;
    ClipOpts clip;
    std::string out_format = "delimited";
};

int run_center(const CenterArgs& a, const GlobalOpts& g) {
    io::Metadata meta = base_meta(
        "center", "center|" + a.input + "|" + a.out_format, g.seed);
    const LikelihoodMatrix L = load_and_clip(a.input, a.clip, meta);
    validate(L);
    const CenteredMatrix Q = double_center(L);
    meta.add("output_digest", matrix_digest(Q.values));

    const LikelihoodMatrix out{Q.values, Q.model_ids, Q.text_ids, std::nullopt};
    io::write_matrix(a.output, out, meta,
                     a.out_format == "binary" ? io::MatrixFormat::binary
                                              : io::MatrixFormat::delimited);
    return 0;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
    std::string input, output, method = "ls";
    ClipOpts clip;
    bool assume_centered = false;
};

int run_plan(const PlanArgs& a, const GlobalOpts& g) {
    io::Metadata meta =
        base_meta("plan", "plan|" + a.input + "|" + a.method, g.seed);
    const CenteredMatrix Q =
        load_centered(a.input, a.clip, a.assume_centered, meta);
    const SamplingPlan plan = make_plan(Q, method_from_name(a.method));
    std::ofstream os = open_output(a.output);
    io::write_plan(os, plan, Q.text_ids, meta);
    return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
    std::string plan_path, output;
    std::size_t n = 0;
};

int run_sample(const SampleArgs& a, const GlobalOpts& g) {
    io::Metadata meta = base_meta(
        "sample", "sample|" + a.plan_path + "|" + std::to_string(a.n), g.seed);
    std::vector<std::string> text_ids;
    const SamplingPlan plan = io::read_plan(a.plan_path, &text_ids);
    const ResampleDraw dr = draw(plan, a.n, g.seed);
    meta.add("plan_method", std::string(method_name(plan.method)));
    meta.add("unique_texts", static_cast<std::uint64_t>(dr.unique_count()));
    std::ofstream os = open_output(a.output);
    io::write_draw(os, dr, text_ids, meta);
    return 0;
}

// ---------------------------------------------------------------------------
// distances

struct DistanceArgs {
    std::string input, output;
    ClipOpts clip;
    bool assume_centered = false;
    std::string draw_path;
    double scale = 1.0;
    std::string kl_output;
    std::string row_center = "self-normalized";
};

int run_distances(const DistanceArgs& a, const GlobalOpts& g) {
    io::Metadata meta = base_meta(
        "distances", "distances|" + a.input + "|" + a.draw_path, g.seed);
    const CenteredMatrix Q =
        load_centered(a.input, a.clip, a.assume_centered, meta);

    DistanceMatrix gmat;
    std::size_t comparable_N = static_cast<std::size_t>(Q.values.cols());
    if (a.draw_path.empty()) {
        gmat = pairwise_distances(Q, a.scale, g.threads);
        meta.add("kind", std::string("exact"));
        meta.add("scale", a.scale);
    } else {
        const ResampleDraw dr = io::read_draw(a.draw_path);
        if (dr.population_size != Q.values.cols())
            throw InvalidArgument("draw does not match the matrix width");
        const RowCenterMode mode = a.row_center == "horvitz-thompson"
                                       ? RowCenterMode::horvitz_thompson
                                       : RowCenterMode::self_normalized;
        const WeightedCoordinates wc = weighted_center(
            restrict_columns(Q.values, dr.unique_indices), dr, mode,
            Q.model_ids);
        gmat = weighted_distance(wc);
        comparable_N = static_cast<std::size_t>(dr.population_size);
        meta.add("kind", std::string("resampled"));
        meta.add("draw_n", static_cast<std::uint64_t>(dr.n));
        meta.add("unique_texts", static_cast<std::uint64_t>(dr.unique_count()));
        meta.add("row_center", std::string(row_center_mode_name(mode)));
        meta.add("column_center", std::string("unweighted over models"));
    }

    {
        std::ofstream os = open_output(a.output);
        io::write_square_table(os, gmat.values, Q.model_ids, meta);
    }
    if (!a.kl_output.empty()) {
        const Matrix kl = kl_estimate(gmat, comparable_N);
        io::Metadata kl_meta = meta;
        kl_meta.add("estimate", std::string("kl, nats"));
        std::ofstream os = open_output(a.kl_output);
        io::write_square_table(os, kl, Q.model_ids, kl_meta);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// error / min-n

struct ErrorArgs {
    std::string input, output, method = "ls";
    ClipOpts clip;
    bool assume_centered = false;
    std::string n_grid = "default";
    std::size_t R = 100;
    double epsilon0 = 1e-3;
    std::string normalization = "relative";
    std::string weighting = "weighted";
    std::string row_center = "self-normalized";
    bool no_kappa = false;
    std::size_t m = 0;  // min-n only
};

ErrorConfig make_error_config(const ErrorArgs& a, const GlobalOpts& g) {
    ErrorConfig cfg;
    cfg.R = a.R;
    cfg.epsilon0 = a.epsilon0;
    cfg.normalization = a.normalization == "absolute" ? Normalization::absolute
                                                      : Normalization::relative;
    cfg.weighting = a.weighting == "unweighted-duplicates"
                        ? DuplicateWeighting::unweighted
                        : DuplicateWeighting::weighted;
    cfg.row_center = a.row_center == "horvitz-thompson"
                         ? RowCenterMode::horvitz_thompson
                         : RowCenterMode::self_normalized;
    cfg.base_seed = g.seed;
    cfg.threads = g.threads;
    return cfg;
}

std::string error_config_string(const ErrorArgs& a, const GlobalOpts& g,
                                const std::vector<std::size_t>& grid) {
    std::ostringstream ss;
    ss << a.input << "|" << a.method << "|" << join_grid(grid) << "|R=" << a.R
       << "|eps=" << io::fmt_g17(a.epsilon0) << "|" << a.normalization << "|"
       << a.weighting << "|" << a.row_center << "|seed=" << g.seed
       << "|m=" << a.m;
    return ss.str();
}

void add_error_meta(io::Metadata& meta, const ErrorArgs& a,
                    const ErrorConfig& cfg) {
    meta.add("method", a.method);
    meta.add("R", static_cast<std::uint64_t>(cfg.R));
    meta.add("epsilon0", cfg.epsilon0);
    meta.add("normalization", std::string(normalization_name(cfg.normalization)));
    meta.add("duplicate_weighting",
             std::string(duplicate_weighting_name(cfg.weighting)));
    meta.add("row_center", std::string(row_center_mode_name(cfg.row_center)));
}

int run_error(const ErrorArgs& a, const GlobalOpts& g) {
    const std::vector<std::size_t> grid = parse_n_grid(a.n_grid);
    io::Metadata meta = base_meta(
        "error", "error|" + error_config_string(a, g, grid), g.seed);
    const CenteredMatrix Q =
        load_centered(a.input, a.clip, a.assume_centered, meta);
    const ErrorConfig cfg = make_error_config(a, g);
    add_error_meta(meta, a, cfg);

    const SamplingPlan plan = make_plan(Q, method_from_name(a.method));
    const DistanceMatrix exact = pairwise_distances(Q, 1.0, g.threads);

    ErrorConfig full_cfg = cfg;
    full_cfg.base_seed = derive_seed(cfg.base_seed, 0x7546);
    const double tau_full = tau_unif_full(Q, full_cfg);
    meta.add("tau_unif_N", tau_full);

    std::vector<ErrorReport> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ErrorConfig row_cfg = cfg;
        row_cfg.base_seed = derive_seed(cfg.base_seed, 0x100 + i);
        ErrorReport rep = resampling_mse(Q, plan, grid[i], row_cfg, exact);
        rep.tau_unif_N = tau_full;
        rep.sigma_hat = sigma_hat(rep.tau, tau_full);
        if (!a.no_kappa) {
            // Baseline curve: sampling error at the same number of unique
            // texts, estimated by the uniform bootstrap.
            const auto m = static_cast<std::size_t>(
                std::llround(std::max(rep.mean_d, 1.0)));
            ErrorConfig kv = cfg;
            kv.base_seed = derive_seed(cfg.base_seed, 0x9000 + i);
            rep.kappa_hat = kappa_hat(Q, m, kv, exact);
        }
        rows.push_back(std::move(rep));
    }
    std::ofstream os = open_output(a.output);
    io::write_error_table(os, rows, meta);
    return 0;
}

int run_min_n(const ErrorArgs& a, const GlobalOpts& g) {
    const std::vector<std::size_t> grid = parse_n_grid(a.n_grid);
    io::Metadata meta = base_meta(
        "min-n", "min-n|" + error_config_string(a, g, grid), g.seed);
    const CenteredMatrix Q =
        load_centered(a.input, a.clip, a.assume_centered, meta);
    const ErrorConfig cfg = make_error_config(a, g);
    add_error_meta(meta, a, cfg);
    meta.add("m", static_cast<std::uint64_t>(a.m));

    const MinNResult res =
        find_min_n(Q, method_from_name(a.method), a.m, cfg, grid);
    meta.add("kappa_m", res.kappa_m);
    if (res.reached()) {
        meta.add("status", std::string("reached"));
        meta.add("min_n", static_cast<std::uint64_t>(res.report().n));
        meta.add("mean_d", res.report().mean_d);
        meta.add("std_d", res.report().std_d);
    } else {
        meta.add("status", std::string("NotReached"));
    }
    std::ofstream os = open_output(a.output);
    io::write_error_table(os, res.trace, meta);
    return 0;
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
    std::string ref_path;
    std::vector<std::string> trial_paths;
    std::string input;  // pipeline mode
    ClipOpts clip;
    bool assume_centered = false;
    std::string method = "ls";
    std::size_t n = 0;
    std::size_t trials = 100;
    std::string row_center = "self-normalized";
    std::string output;
    std::string aligned_dir;
};

int run_align(const AlignArgs& a, const GlobalOpts& g) {
    io::Metadata meta =
        base_meta("align",
                  "align|" + a.input + "|" + a.ref_path + "|" + a.method + "|" +
                      std::to_string(a.n) + "|" + std::to_string(a.trials),
                  g.seed);
    meta.add("procrustes", std::string("orthogonal (reflections allowed)"));

    Embedding2D reference;
    std::vector<Embedding2D> trials;

    if (!a.ref_path.empty()) {
        // Import mode: externally produced 2-D coordinates per trial.
        reference = center_embedding(io::read_embedding(a.ref_path));
        for (const auto& p : a.trial_paths)
            trials.push_back(center_embedding(io::read_embedding(p)));
        meta.add("embedding", std::string("imported"));
    } else {
        // Pipeline mode: resample -> weighted center -> PCA per trial.
        if (a.input.empty() || a.n == 0)
            throw CLI::ValidationError(
                "pipeline mode needs --input and --n (or use --ref/--trials)");
        const CenteredMatrix Q =
            load_centered(a.input, a.clip, a.assume_centered, meta);
        const SamplingPlan plan = make_plan(Q, method_from_name(a.method));
        const RowCenterMode mode = a.row_center == "horvitz-thompson"
                                       ? RowCenterMode::horvitz_thompson
                                       : RowCenterMode::self_normalized;
        reference = center_embedding(pca_embed(Q, "ref"));
        const AliasTable table(plan.probs);
        for (std::size_t r = 0; r < a.trials; ++r) {
            const ResampleDraw dr =
                draw(table, plan, a.n, derive_seed(g.seed, r));
            const WeightedCoordinates wc = weighted_center(
                restrict_columns(Q.values, dr.unique_indices), dr, mode,
                Q.model_ids);
            trials.push_back(center_embedding(
                pca_embed(wc, "trial" + std::to_string(r))));
        }
        meta.add("embedding", std::string("pca"));
        meta.add("column_center", std::string("unweighted over models"));
        meta.add("method", a.method);
        meta.add("n", static_cast<std::uint64_t>(a.n));
        meta.add("trials", static_cast<std::uint64_t>(a.trials));
    }

    std::vector<Embedding2D> aligned;
    for (const auto& t : trials)
        aligned.push_back(procrustes_align(reference, t));

    if (!a.aligned_dir.empty()) {
        fs::create_directories(a.aligned_dir);
        for (std::size_t r = 0; r < aligned.size(); ++r) {
            std::ofstream os = open_output(
                fs::path(a.aligned_dir) / ("trial" + std::to_string(r) + ".tsv"));
            io::write_embedding(os, aligned[r], meta);
        }
    }

    const std::vector<EllipseSummary> ellipses = centrography(aligned);
    std::ofstream os = open_output(a.output);
    io::write_ellipse_table(os, reference.model_ids, ellipses, meta);
    return 0;
}

// ---------------------------------------------------------------------------
// add-models

struct AddModelsArgs {
    std::string existing_path, new_path, draw_path, output;
    double threshold = 0.0;
    bool threshold_set = false;
    std::string row_center = "self-normalized";
    std::string distances_out;
};

int run_add_models(const AddModelsArgs& a, const GlobalOpts& g) {
    io::Metadata meta = base_meta(
        "add-models",
        "add-models|" + a.existing_path + "|" + a.new_path + "|" + a.draw_path,
        g.seed);

    std::vector<std::string> draw_text_ids;
    const ResampleDraw dr = io::read_draw(a.draw_path, &draw_text_ids);

    LikelihoodMatrix existing = io::read_matrix(a.existing_path);
    meta.add("existing_digest", matrix_digest(existing.values));
    if (existing.values.cols() == dr.population_size) {
        // Full-width matrix: restrict to the draw's unique texts first.
        existing.values = restrict_columns(existing.values, dr.unique_indices);
        std::vector<std::string> kept;
        for (const Index u : dr.unique_indices)
            kept.push_back(existing.text_ids[static_cast<std::size_t>(u)]);
        existing.text_ids = std::move(kept);
    }

    const LikelihoodMatrix new_rows = io::read_matrix(a.new_path);
    meta.add("new_digest", matrix_digest(new_rows.values));
    if (!a.threshold_set)
        throw CLI::ValidationError("--threshold is required");
    meta.add("clip_threshold", a.threshold);

    const RowCenterMode mode = a.row_center == "horvitz-thompson"
                                   ? RowCenterMode::horvitz_thompson
                                   : RowCenterMode::self_normalized;
    const WeightedCoordinates wc =
        add_models(existing, new_rows, a.threshold, dr, mode);
    meta.add("row_center", std::string(row_center_mode_name(mode)));
    meta.add("column_center", std::string("unweighted over models"));
    meta.add("models", static_cast<std::uint64_t>(wc.model_count()));
    meta.add("unique_texts", static_cast<std::uint64_t>(wc.unique_count()));

    {
        const LikelihoodMatrix out{wc.values, wc.model_ids, existing.text_ids,
                                   std::nullopt};
        io::write_matrix(a.output, out, meta, io::MatrixFormat::delimited);
    }
    if (!a.distances_out.empty()) {
        const DistanceMatrix gw = weighted_distance(wc);
        std::ofstream os = open_output(a.distances_out);
        io::write_square_table(os, gw.values, wc.model_ids, meta);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string input, scores_path, output, method = "uniform";
    ClipOpts clip;
    bool assume_centered = false;
    std::size_t n = 0;
    std::string task;  // empty: all tasks
    bool target_loglik = false;
    std::string row_center = "self-normalized";
    std::string predictions_out;
};

int run_predict(const PredictArgs& a, const GlobalOpts& g) {
    io::Metadata meta = base_meta(
        "predict",
        "predict|" + a.input + "|" + a.scores_path + "|" + a.method + "|" +
            std::to_string(a.n) + "|" + a.task +
            (a.target_loglik ? "|loglik" : ""),
        g.seed);

    const LikelihoodMatrix L = load_and_clip(a.input, a.clip, meta);
    const CenteredMatrix Q =
        a.assume_centered ? CenteredMatrix{L.values, L.model_ids, L.text_ids}
                          : double_center(L);

    ScoreTable scores = io::read_scores(a.scores_path);
    if (a.target_loglik) {
        // Mean log-likelihood target from the raw matrix rows.
        scores.task_names.push_back("mean_loglik");
        Matrix extended(scores.model_count(), scores.task_count() + 1);
        extended.leftCols(scores.task_count()) = scores.scores;
        for (Index i = 0; i < scores.model_count(); ++i) {
            const auto it =
                std::find(L.model_ids.begin(), L.model_ids.end(),
                          scores.model_ids[static_cast<std::size_t>(i)]);
            if (it == L.model_ids.end())
                throw InvalidArgument("score model missing from the matrix: " +
                                      scores.model_ids[static_cast<std::size_t>(i)]);
            extended(i, scores.task_count()) =
                L.values.row(it - L.model_ids.begin()).mean();
        }
        scores.scores = std::move(extended);
    }

    // Intersect models: keep matrix rows present in the score table.
    std::vector<Index> matrix_rows;
    std::vector<Index> score_rows;
    for (std::size_t i = 0; i < L.model_ids.size(); ++i) {
        const auto it = std::find(scores.model_ids.begin(),
                                  scores.model_ids.end(), L.model_ids[i]);
        if (it == scores.model_ids.end()) continue;
        matrix_rows.push_back(static_cast<Index>(i));
        score_rows.push_back(
            static_cast<Index>(it - scores.model_ids.begin()));
    }
    if (matrix_rows.size() < 2)
        throw InvalidArgument("fewer than two models shared by matrix and scores");

    ScoreTable joined;
    joined.task_names = scores.task_names;
    joined.scores.resize(static_cast<Index>(score_rows.size()),
                         scores.task_count());
    for (std::size_t i = 0; i < score_rows.size(); ++i) {
        joined.model_ids.push_back(
            scores.model_ids[static_cast<std::size_t>(score_rows[i])]);
        joined.group_labels.push_back(
            scores.group_labels[static_cast<std::size_t>(score_rows[i])]);
        joined.scores.row(static_cast<Index>(i)) =
            scores.scores.row(score_rows[i]);
    }

    Matrix Qjoined(static_cast<Index>(matrix_rows.size()), Q.values.cols());
    for (std::size_t i = 0; i < matrix_rows.size(); ++i)
        Qjoined.row(static_cast<Index>(i)) = Q.values.row(matrix_rows[i]);

    // Resample texts, weighted-center the joined coordinates, scale features.
    const CenteredMatrix Qj{Qjoined, joined.model_ids, Q.text_ids};
    const SamplingPlan plan = make_plan(Qj, method_from_name(a.method));
    const ResampleDraw dr = draw(plan, a.n, g.seed);
    const RowCenterMode mode = a.row_center == "horvitz-thompson"
                                   ? RowCenterMode::horvitz_thompson
                                   : RowCenterMode::self_normalized;
    const WeightedCoordinates wc = weighted_center(
        restrict_columns(Qj.values, dr.unique_indices), dr, mode,
        joined.model_ids);
    const Matrix X = feature_matrix(wc);

    meta.add("method", a.method);
    meta.add("n", static_cast<std::uint64_t>(a.n));
    meta.add("unique_texts", static_cast<std::uint64_t>(dr.unique_count()));
    meta.add("models", static_cast<std::uint64_t>(joined.model_count()));
    meta.add("row_center", std::string(row_center_mode_name(mode)));
    meta.add("column_center", std::string("unweighted over models"));

    std::vector<std::string> tasks;
    if (!a.task.empty())
        tasks.push_back(a.task);
    else
        tasks = joined.task_names;

    std::ofstream os = open_output(a.output);
    io::write_metadata(os, meta);
    os << "task\td\tr_mean\tr_std\tr_per_seed\n";

    std::optional<std::ofstream> pred_os;
    if (!a.predictions_out.empty()) {
        pred_os.emplace(open_output(a.predictions_out));
        io::write_metadata(*pred_os, meta);
        *pred_os << "task\tmodel_id\tprediction\ttruth\n";
    }

    for (const std::string& task : tasks) {
        CvConfig cfg;
        const bool loglik_target = task == "mean_loglik";
        cfg.alpha_grid =
            loglik_target ? alpha_grid_loglik() : alpha_grid_scores();
        if (!loglik_target) cfg.clip = {{0.0, 100.0}};
        cfg.seeds.clear();
        for (std::uint64_t s = 0; s < 5; ++s)
            cfg.seeds.push_back(derive_seed(g.seed, 0x5eed + s));

        CvResult res;
        try {
            res = nested_cv_predict(X, joined, task, cfg);
        } catch (const DegenerateInput&) {
            // Predictions collapsed to a constant (e.g. all clipped); the
            // correlation is undefined for this task.
            os << task << '\t' << dr.unique_count() << "\tNA\tNA\tNA\n";
            continue;
        }
        os << task << '\t' << dr.unique_count() << '\t'
           << io::fmt_g17(res.r_mean) << '\t' << io::fmt_g17(res.r_std) << '\t';
        for (std::size_t s = 0; s < res.r_per_seed.size(); ++s)
            os << (s ? "," : "") << io::fmt_g17(res.r_per_seed[s]);
        os << '\n';

        if (pred_os) {
            const auto task_col = static_cast<Index>(
                std::find(joined.task_names.begin(), joined.task_names.end(),
                          task) -
                joined.task_names.begin());
            for (Index i = 0; i < joined.model_count(); ++i)
                *pred_os << task << '\t'
                         << joined.model_ids[static_cast<std::size_t>(i)] << '\t'
                         << io::fmt_g17(res.predictions.row(i).mean()) << '\t'
                         << io::fmt_g17(joined.scores(i, task_col)) << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::size_t instances = 20;
};

int run_verify(const VerifyArgs& a, const GlobalOpts& g) {
    int failures = 0;
    const auto report = [&](const std::string& name, bool ok,
                            const std::string& detail = "") {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!ok && !detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << '\n';
        if (!ok) ++failures;
    };

    std::mt19937_64 rng(derive_seed(g.seed, 0xacce));
    const auto random_centered = [&](Index K, Index N) {
        Matrix m(K, N);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index r = 0; r < K; ++r)
            for (Index c = 0; c < N; ++c) m(r, c) = normal(rng);
        return CenteredMatrix{double_center(m), {}, {}};
    };

    // Unbiasedness and the variance formula over random small instances.
    double worst_mean_dev = 0.0, worst_var_dev = 0.0;
    for (std::size_t i = 0; i < a.instances; ++i) {
        const Index K = 2 + static_cast<Index>(rng() % 4);
        const Index N = 2 + static_cast<Index>(rng() % 3);
        const std::size_t n = 1 + rng() % 3;
        const CenteredMatrix Q = random_centered(K, N);
        const DistanceMatrix gexact = pairwise_distances(Q, 1.0);
        for (const auto& plan : {plan_uniform(Q), plan_ls(Q), plan_kl(Q)}) {
            const auto res = oracle::enumerate_moments(Q, plan, n);
            worst_mean_dev = std::max(
                worst_mean_dev,
                (res.expectation - gexact.values).cwiseAbs().maxCoeff());
            const Matrix cf = oracle::closed_form_variance(Q, plan, n);
            worst_var_dev = std::max(
                worst_var_dev, (res.variance - cf).cwiseAbs().maxCoeff());
        }
    }
    report("unbiasedness: enumeration mean equals exact distances",
           worst_mean_dev < 1e-10, "max dev " + io::fmt_g17(worst_mean_dev));
    report("variance: closed form equals enumeration", worst_var_dev < 1e-10,
           "max dev " + io::fmt_g17(worst_var_dev));

    // Optimality of the kl plan against the simplex grid.
    bool kl_ok = true;
    std::string kl_detail;
    for (std::size_t i = 0; i < 5; ++i) {
        const CenteredMatrix Q = random_centered(3, 3);
        const SamplingPlan plan = plan_kl(Q);
        const auto grid = oracle::simplex_search_kl(Q, 2, 0.02);
        const double obj = oracle::kl_objective(Q, plan.probs, 2);
        if (obj > grid.objective + 1e-9 * (1.0 + std::abs(grid.objective))) {
            kl_ok = false;
            kl_detail = "plan " + io::fmt_g17(obj) + " > grid " +
                        io::fmt_g17(grid.objective);
        }
    }
    report("kl plan minimizes the summed distance variance", kl_ok, kl_detail);

    bool ls_ok = true;
    std::string ls_detail;
    for (std::size_t i = 0; i < 3; ++i) {
        const CenteredMatrix Q = random_centered(3, 3);
        const SamplingPlan plan = plan_ls(Q);
        const auto grid = oracle::simplex_search_ls(Q, 2, 0.02);
        const double obj = oracle::ls_objective(Q, plan.probs, 2);
        if (obj > grid.objective + 1e-9 * (1.0 + std::abs(grid.objective))) {
            ls_ok = false;
            ls_detail = "plan " + io::fmt_g17(obj) + " > grid " +
                        io::fmt_g17(grid.objective);
        }
    }
    report("ls plan minimizes the expected Frobenius error", ls_ok, ls_detail);

    // Horvitz-Thompson identity by enumeration.
    bool ht_ok = true;
    for (std::size_t i = 0; i < 5 && ht_ok; ++i) {
        const Index N = 2 + static_cast<Index>(rng() % 3);
        const CenteredMatrix Q = random_centered(3, N);
        for (const auto& plan : {plan_uniform(Q), plan_ls(Q), plan_kl(Q)}) {
            Vector f(N);
            std::normal_distribution<double> normal(0.0, 2.0);
            for (Index s = 0; s < N; ++s) f(s) = normal(rng);
            double expectation = 0.0, target = 0.0;
            const std::size_t n = 2;
            oracle::for_each_draw(plan.probs, n,
                                  [&](const std::vector<Index>& tuple,
                                      double prob) {
                                      double sum = 0.0;
                                      for (const Index u : tuple)
                                          sum += f(u) / (static_cast<double>(n) *
                                                         plan.probs(u));
                                      expectation += prob * sum;
                                  });
            for (Index s = 0; s < N; ++s)
                if (plan.probs(s) > 0.0) target += f(s);
            if (std::abs(expectation - target) > 1e-10) ht_ok = false;
        }
    }
    report("horvitz-thompson identity on enumerable instances", ht_ok);

    // Expected unique count versus Monte Carlo.
    {
        const CenteredMatrix Q = random_centered(3, 6);
        const SamplingPlan plan = plan_ls(Q);
        const double expectation = oracle::expected_unique(plan, 6);
        const AliasTable table(plan.probs);
        double sum = 0.0;
        const std::size_t trials = 40000;
        for (std::size_t t = 0; t < trials; ++t)
            sum += static_cast<double>(
                draw(table, plan, 6, derive_seed(g.seed, t)).unique_count());
        const double mean = sum / static_cast<double>(trials);
        report("expected unique count matches Monte Carlo",
               std::abs(mean - expectation) < 0.05,
               io::fmt_g17(mean) + " vs " + io::fmt_g17(expectation));
    }

    std::cout << (failures == 0 ? "verification passed"
                                : "verification FAILED")
              << '\n';
    return failures == 0 ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model map construction and auditing toolkit"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--seed", global.seed, "Base seed for all randomness")
        ->capture_default_str();
    app.add_option("--threads", global.threads,
                   "Worker threads (results are identical for any value)")
        ->capture_default_str();

    CenterArgs center_args;
    auto* center_cmd =
        app.add_subcommand("center", "Clip and double-center a matrix");
    center_cmd->fallthrough();
    center_cmd->add_option("--input", center_args.input)->required();
    center_cmd->add_option("--out", center_args.output)->required();
    center_cmd->add_option("--out-format", center_args.out_format)
        ->check(CLI::IsMember({"delimited", "binary"}));
    add_clip_options(center_cmd, center_args.clip);

    PlanArgs plan_args;
    auto* plan_cmd =
        app.add_subcommand("plan", "Compute resampling probabilities");
    plan_cmd->fallthrough();
    plan_cmd->add_option("--input", plan_args.input)->required();
    plan_cmd->add_option("--method", plan_args.method)
        ->check(CLI::IsMember({"uniform", "ls", "kl"}));
    plan_cmd->add_flag("--assume-centered", plan_args.assume_centered);
    plan_cmd->add_option("--out", plan_args.output)->required();
    add_clip_options(plan_cmd, plan_args.clip);

    SampleArgs sample_args;
    auto* sample_cmd =
        app.add_subcommand("sample", "Draw a with-replacement resample");
    sample_cmd->fallthrough();
    sample_cmd->add_option("--plan", sample_args.plan_path)->required();
    sample_cmd->add_option("--n", sample_args.n)->required();
    sample_cmd->add_option("--out", sample_args.output)->required();

    DistanceArgs dist_args;
    auto* dist_cmd = app.add_subcommand(
        "distances", "Exact or weighted squared distances, optional KL");
    dist_cmd->fallthrough();
    dist_cmd->add_option("--input", dist_args.input)->required();
    dist_cmd->add_flag("--assume-centered", dist_args.assume_centered);
    dist_cmd->add_option("--draw", dist_args.draw_path,
                         "Weighted distances on this draw");
    dist_cmd->add_option("--scale", dist_args.scale);
    dist_cmd->add_option("--kl-out", dist_args.kl_output);
    dist_cmd->add_option("--row-center", dist_args.row_center)
        ->check(CLI::IsMember({"self-normalized", "horvitz-thompson"}));
    dist_cmd->add_option("--out", dist_args.output)->required();
    add_clip_options(dist_cmd, dist_args.clip);

    ErrorArgs error_args;
    auto* error_cmd = app.add_subcommand(
        "error", "Bootstrap error table over an n-grid");
    error_cmd->fallthrough();
    error_cmd->add_option("--input", error_args.input)->required();
    error_cmd->add_option("--method", error_args.method)
        ->check(CLI::IsMember({"uniform", "ls", "kl"}));
    error_cmd->add_flag("--assume-centered", error_args.assume_centered);
    error_cmd->add_option("--n-grid", error_args.n_grid,
                          "'default', 'lo:hi', or comma list");
    error_cmd->add_option("--R", error_args.R)->check(CLI::PositiveNumber);
    error_cmd->add_option("--epsilon0", error_args.epsilon0);
    error_cmd->add_option("--normalization", error_args.normalization)
        ->check(CLI::IsMember({"relative", "absolute"}));
    error_cmd->add_option("--weighting", error_args.weighting)
        ->check(CLI::IsMember({"weighted", "unweighted-duplicates"}));
    error_cmd->add_option("--row-center", error_args.row_center)
        ->check(CLI::IsMember({"self-normalized", "horvitz-thompson"}));
    error_cmd->add_flag("--no-kappa", error_args.no_kappa,
                        "Skip the per-row baseline bootstrap");
    error_cmd->add_option("--out", error_args.output)->required();
    add_clip_options(error_cmd, error_args.clip);

    ErrorArgs minn_args;
    auto* minn_cmd = app.add_subcommand(
        "min-n", "Smallest n with sigma_hat <= kappa_hat_m");
    minn_cmd->fallthrough();
    minn_cmd->add_option("--input", minn_args.input)->required();
    minn_cmd->add_option("--method", minn_args.method)
        ->check(CLI::IsMember({"uniform", "ls", "kl"}));
    minn_cmd->add_flag("--assume-centered", minn_args.assume_centered);
    minn_cmd->add_option("--m", minn_args.m)->required();
    minn_cmd->add_option("--n-grid", minn_args.n_grid);
    minn_cmd->add_option("--R", minn_args.R)->check(CLI::PositiveNumber);
    minn_cmd->add_option("--epsilon0", minn_args.epsilon0);
    minn_cmd->add_option("--normalization", minn_args.normalization)
        ->check(CLI::IsMember({"relative", "absolute"}));
    minn_cmd->add_option("--weighting", minn_args.weighting)
        ->check(CLI::IsMember({"weighted", "unweighted-duplicates"}));
    minn_cmd->add_option("--out", minn_args.output)->required();
    add_clip_options(minn_cmd, minn_args.clip);

    AlignArgs align_args;
    auto* align_cmd = app.add_subcommand(
        "align", "Procrustes alignment and stability ellipses");
    align_cmd->fallthrough();
    align_cmd->add_option("--ref", align_args.ref_path,
                          "Reference embedding (import mode)");
    align_cmd->add_option("--trials", align_args.trial_paths,
                          "Trial embeddings (import mode)");
    align_cmd->add_option("--input", align_args.input,
                          "Matrix for the built-in PCA pipeline");
    align_cmd->add_flag("--assume-centered", align_args.assume_centered);
    align_cmd->add_option("--method", align_args.method)
        ->check(CLI::IsMember({"uniform", "ls", "kl"}));
    align_cmd->add_option("--n", align_args.n);
    align_cmd->add_option("--trials-count", align_args.trials);
    align_cmd->add_option("--row-center", align_args.row_center)
        ->check(CLI::IsMember({"self-normalized", "horvitz-thompson"}));
    align_cmd->add_option("--aligned-dir", align_args.aligned_dir);
    align_cmd->add_option("--out", align_args.output)->required();
    add_clip_options(align_cmd, align_args.clip);

    AddModelsArgs add_args;
    auto* add_cmd = app.add_subcommand(
        "add-models", "Place new models on an existing resampled map");
    add_cmd->fallthrough();
    add_cmd->add_option("--existing", add_args.existing_path)->required();
    add_cmd->add_option("--new", add_args.new_path)->required();
    add_cmd->add_option("--draw", add_args.draw_path)->required();
    auto* thr = add_cmd->add_option("--threshold", add_args.threshold,
                                    "Stored clip threshold (nats)");
    add_cmd->add_option("--row-center", add_args.row_center)
        ->check(CLI::IsMember({"self-normalized", "horvitz-thompson"}));
    add_cmd->add_option("--distances-out", add_args.distances_out);
    add_cmd->add_option("--out", add_args.output)->required();

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand(
        "predict", "Weighted ridge prediction of downstream scores");
    predict_cmd->fallthrough();
    predict_cmd->add_option("--input", predict_args.input)->required();
    predict_cmd->add_option("--scores", predict_args.scores_path)->required();
    predict_cmd->add_option("--method", predict_args.method)
        ->check(CLI::IsMember({"uniform", "ls", "kl"}));
    predict_cmd->add_flag("--assume-centered", predict_args.assume_centered);
    predict_cmd->add_option("--n", predict_args.n)->required();
    predict_cmd->add_option("--task", predict_args.task,
                            "Single task (default: all)");
    predict_cmd->add_flag("--target-loglik", predict_args.target_loglik,
                          "Also predict the mean log-likelihood");
    predict_cmd->add_option("--row-center", predict_args.row_center)
        ->check(CLI::IsMember({"self-normalized", "horvitz-thompson"}));
    predict_cmd->add_option("--predictions-out", predict_args.predictions_out);
    predict_cmd->add_option("--out", predict_args.output)->required();
    add_clip_options(predict_cmd, predict_args.clip);

    VerifyArgs verify_args;
    auto* verify_cmd = app.add_subcommand(
        "verify", "Run the enumeration-backed verification suite");
    verify_cmd->fallthrough();
    verify_cmd->add_option("--instances", verify_args.instances);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*center_cmd) return run_center(center_args, global);
        if (*plan_cmd) return run_plan(plan_args, global);
        if (*sample_cmd) return run_sample(sample_args, global);
        if (*dist_cmd) return run_distances(dist_args, global);
        if (*error_cmd) return run_error(error_args, global);
        if (*minn_cmd) return run_min_n(minn_args, global);
        if (*align_cmd) {
            if (!align_args.ref_path.empty() && align_args.trial_paths.empty())
                throw CLI::ValidationError("--ref requires --trials");
            return run_align(align_args, global);
        }
        if (*add_cmd) {
            add_args.threshold_set = thr->count() > 0;
            return run_add_models(add_args, global);
        }
        if (*predict_cmd) return run_predict(predict_args, global);
        if (*verify_cmd) return run_verify(verify_args, global);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
