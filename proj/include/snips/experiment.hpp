#ifndef SNIPS_EXPERIMENT_HPP
#define SNIPS_EXPERIMENT_HPP

// Experiment runner behind the command-line tool: JSON configuration, degradation of an
// input image, channel-wise posterior sampling, and the artifact set written per run.

#include "binary_io.hpp"
#include "diagnostics.hpp"
#include "external_denoiser.hpp"
#include "image_io.hpp"
#include "sampler.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace snips::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Task { Deblur, SuperResolution, CompressiveSensing, Inpaint, Denoise, Synthesize };

inline const std::vector<std::pair<Task, std::string>>& task_names() {
    static const std::vector<std::pair<Task, std::string>> names{
        {Task::Deblur, "deblur"},   {Task::SuperResolution, "sr"}, {Task::CompressiveSensing, "cs"},
        {Task::Inpaint, "inpaint"}, {Task::Denoise, "denoise"},    {Task::Synthesize, "synthesize"}};
    return names;
}

inline std::string to_string(Task t) {
    for (const auto& [task, name] : task_names())
        if (task == t) return name;
    return "?";
}

inline Task parse_task(const std::string& s) {
    for (const auto& [task, name] : task_names())
        if (name == s) return task;
    throw ArgumentError("unknown task '" + s + "' (expected deblur, sr, cs, inpaint, denoise or synthesize)");
}

struct ScheduleSpec {
    double sigma1 = 90.0;
    double sigma_l = 0.01;
    std::size_t levels = 500;
    double c = 3.3e-2;
    std::size_t tau = 5;
};

/// kind: gaussian | gmm (JSON file at `path`), smooth (built-in image prior), external (`command`).
struct PriorSpec {
    std::string kind = "smooth";
    std::string path;
    std::string command;
    double mean = 0.5;
    double variance = 0.04;
    double length_scale = 2.0;
    double nugget = 0.002;
};

struct ExperimentConfig {
    Task task = Task::Denoise;
    Index kernel = 5;      // deblur: uniform kernel width
    Index block = 2;       // sr: block-averaging factor
    double fraction = 0.25; // cs: kept measurements; inpaint: kept pixels when no mask is given
    std::vector<Index> mask; // inpaint: explicit kept pixel indices
    std::uint64_t operator_seed = 0;
    double sigma0 = 0.1;
    ScheduleSpec schedule;
    PriorSpec prior;
    std::size_t chains = 8;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string input;       // ground-truth PNG
    std::string measurement; // y.snvc for the sample verb
    std::string output;
    Index width = 0; // shape when there is no input image
    Index height = 0;
    int channels = 1;
};

inline json to_json(const ExperimentConfig& c) {
    return json{{"task", to_string(c.task)},
                {"kernel", c.kernel},
                {"block", c.block},
                {"fraction", c.fraction},
                {"mask", c.mask},
                {"operator_seed", c.operator_seed},
                {"sigma0", c.sigma0},
                {"schedule",
                 {{"sigma1", c.schedule.sigma1},
                  {"sigmaL", c.schedule.sigma_l},
                  {"levels", c.schedule.levels},
                  {"c", c.schedule.c},
                  {"tau", c.schedule.tau}}},
                {"prior",
                 {{"kind", c.prior.kind},
                  {"path", c.prior.path},
                  {"command", c.prior.command},
                  {"mean", c.prior.mean},
                  {"variance", c.prior.variance},
                  {"length_scale", c.prior.length_scale},
                  {"nugget", c.prior.nugget}}},
                {"chains", c.chains},
                {"seed", c.seed},
                {"workers", c.workers},
                {"input", c.input},
                {"measurement", c.measurement},
                {"output", c.output},
                {"width", c.width},
                {"height", c.height},
                {"channels", c.channels}};
}

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& field) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("config field '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ArgumentError("unknown " + where + " field '" + key + "'");
    }
}

} // namespace detail

/// Accepts a plain config object or a run manifest (whose "config" member is used).
inline ExperimentConfig config_from_json(const json& doc) {
    const json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
    if (!j.is_object()) throw ArgumentError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"task", "kernel", "block", "fraction", "mask", "operator_seed", "sigma0", "schedule",
                            "prior", "chains", "seed", "workers", "input", "measurement", "output", "width", "height",
                            "channels"},
                           "config");
    ExperimentConfig c;
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    detail::take(j, "kernel", c.kernel);
    detail::take(j, "block", c.block);
    detail::take(j, "fraction", c.fraction);
    detail::take(j, "mask", c.mask);
    detail::take(j, "operator_seed", c.operator_seed);
    detail::take(j, "sigma0", c.sigma0);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        detail::reject_unknown(s, {"sigma1", "sigmaL", "levels", "c", "tau"}, "schedule");
        detail::take(s, "sigma1", c.schedule.sigma1);
        detail::take(s, "sigmaL", c.schedule.sigma_l);
        detail::take(s, "levels", c.schedule.levels);
        detail::take(s, "c", c.schedule.c);
        detail::take(s, "tau", c.schedule.tau);
    }
    if (j.contains("prior")) {
        const json& p = j.at("prior");
        detail::reject_unknown(p, {"kind", "path", "command", "mean", "variance", "length_scale", "nugget"}, "prior");
        detail::take(p, "kind", c.prior.kind);
        detail::take(p, "path", c.prior.path);
        detail::take(p, "command", c.prior.command);
        detail::take(p, "mean", c.prior.mean);
        detail::take(p, "variance", c.prior.variance);
        detail::take(p, "length_scale", c.prior.length_scale);
        detail::take(p, "nugget", c.prior.nugget);
    }
    detail::take(j, "chains", c.chains);
    detail::take(j, "seed", c.seed);
    detail::take(j, "workers", c.workers);
    detail::take(j, "input", c.input);
    detail::take(j, "measurement", c.measurement);
    detail::take(j, "output", c.output);
    detail::take(j, "width", c.width);
    detail::take(j, "height", c.height);
    detail::take(j, "channels", c.channels);
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ArgumentError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

/// Default output directory: $SNIPS_OUTPUT_DIR, else ./snips_out.
inline std::string default_output_dir() {
    const char* env = std::getenv("SNIPS_OUTPUT_DIR");
    return env && *env ? env : "snips_out";
}

/// Checks that task parameters are present and referenced files exist.
inline void validate(const ExperimentConfig& c) {
    if (c.sigma0 < 0.0) throw ArgumentError("sigma0 must be non-negative");
    if (c.chains < 1) throw ArgumentError("chains must be at least 1");
    if (c.workers < 1) throw ArgumentError("workers must be at least 1");
    if (c.task == Task::Deblur && c.kernel < 1) throw ArgumentError("deblur needs kernel >= 1");
    if (c.task == Task::SuperResolution && c.block < 1) throw ArgumentError("sr needs block >= 1");
    if ((c.task == Task::CompressiveSensing || (c.task == Task::Inpaint && c.mask.empty())) &&
        !(c.fraction > 0.0 && c.fraction <= 1.0))
        throw ArgumentError("fraction must lie in (0, 1]");
    if (c.task == Task::Synthesize && c.sigma0 != 0.0) throw ArgumentError("synthesize requires sigma0 = 0");
    if (c.task != Task::Synthesize && c.input.empty() && c.measurement.empty())
        throw ArgumentError("task '" + to_string(c.task) + "' needs an input image or a measurement file");
    if (c.input.empty() && (c.width < 1 || c.height < 1))
        throw ArgumentError("without an input image, width and height must be given");
    if (c.channels != 1 && c.channels != 3) throw ArgumentError("channels must be 1 or 3");
    for (const auto* path : {&c.input, &c.measurement})
        if (!path->empty() && !fs::exists(*path)) throw ArgumentError("file not found: '" + *path + "'");
    const auto& p = c.prior;
    if (p.kind == "gaussian" || p.kind == "gmm") {
        if (p.path.empty()) throw ArgumentError(p.kind + " prior needs a path");
        if (!fs::exists(p.path)) throw ArgumentError("prior file not found: '" + p.path + "'");
    } else if (p.kind == "external") {
        if (p.command.empty()) throw ArgumentError("external prior needs a command");
    } else if (p.kind != "smooth") {
        throw ArgumentError("unknown prior kind '" + p.kind + "' (expected gaussian, gmm, smooth or external)");
    }
    NoiseSchedule probe = make_geometric_schedule(c.schedule.sigma1, c.schedule.sigma_l, c.schedule.levels, c.sigma0,
                                                  c.schedule.c, c.schedule.tau);
    (void)probe;
}

/// Image geometry for a run: from the input image when present, otherwise from the config.
struct Shape {
    Index width = 0;
    Index height = 0;
    int channels = 1;
    Index pixels() const noexcept { return width * height; }
};

inline Shape resolve_shape(const ExperimentConfig& c, const std::optional<Image>& input) {
    if (input) return {input->width, input->height, input->channel_count()};
    return {c.width, c.height, c.channels};
}

inline std::vector<Index> inpaint_mask(const ExperimentConfig& c, Index n) {
    if (!c.mask.empty()) return c.mask;
    const auto kept = static_cast<Index>(std::llround(c.fraction * static_cast<double>(n)));
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    Rng rng(derive_seed(c.operator_seed, 0x1a9a17));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(std::max<Index>(kept, 1)));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Per-channel degradation operator for the configured task.
inline LinearOperator build_operator(const ExperimentConfig& c, const Shape& shape) {
    const Index n = shape.pixels();
    const auto square = [&](const char* task) {
        if (shape.width != shape.height) throw ArgumentError(std::string(task) + " requires a square image");
        return shape.width;
    };
    switch (c.task) {
    case Task::Deblur: return make_uniform_blur(square("deblur"), c.kernel);
    case Task::SuperResolution: return make_block_average(square("sr"), c.block);
    case Task::CompressiveSensing: return make_random_projection(n, c.fraction, c.operator_seed);
    case Task::Inpaint: return make_inpainting_mask(n, inpaint_mask(c, n));
    case Task::Denoise: return make_identity(n);
    case Task::Synthesize: return make_zero(n, n);
    }
    throw ArgumentError("unhandled task");
}

inline GaussianPrior gaussian_from_json(const json& j, Index n) {
    const auto dims = [&](Index got, const char* what) {
        if (got != n)
            throw ArgumentError(std::string("prior ") + what + " has " + std::to_string(got) + " entries, image has " +
                                std::to_string(n) + " pixels");
    };
    Vector mean(n);
    if (j.at("mean").is_number()) {
        mean.setConstant(j.at("mean").get<double>());
    } else {
        const auto m = j.at("mean").get<std::vector<double>>();
        dims(static_cast<Index>(m.size()), "mean");
        mean = Eigen::Map<const Vector>(m.data(), n);
    }
    if (j.contains("variance")) return GaussianPrior(mean, Matrix::Identity(n, n) * j.at("variance").get<double>());
    const auto rows = j.at("covariance").get<std::vector<std::vector<double>>>();
    dims(static_cast<Index>(rows.size()), "covariance");
    Matrix cov(n, n);
    for (Index r = 0; r < n; ++r) {
        dims(static_cast<Index>(rows[static_cast<std::size_t>(r)].size()), "covariance row");
        for (Index col = 0; col < n; ++col) cov(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
    }
    return GaussianPrior(mean, cov);
}

/// Prior files are JSON. Gaussian: {"mean": number | [N], "variance": number} or
/// {"mean": ..., "covariance": [[N]]}. Mixture: {"weights": [K], "components": [gaussian...]}.
inline std::unique_ptr<ScoreModel> make_prior(const PriorSpec& p, const Shape& shape) {
    const Index n = shape.pixels();
    try {
        if (p.kind == "smooth") {
            if (shape.width != shape.height) throw ArgumentError("the smooth prior requires a square image");
            return std::make_unique<GaussianPrior>(
                make_smooth_image_prior(shape.width, p.mean, p.variance, p.length_scale, p.nugget));
        }
        if (p.kind == "gaussian") return std::make_unique<GaussianPrior>(gaussian_from_json(read_json_file(p.path), n));
        if (p.kind == "gmm") {
            const json j = read_json_file(p.path);
            std::vector<GaussianPrior> comps;
            for (const auto& cj : j.at("components")) comps.push_back(gaussian_from_json(cj, n));
            return std::make_unique<GmmPrior>(j.at("weights").get<std::vector<double>>(), std::move(comps));
        }
        if (p.kind == "external") return std::make_unique<ExternalDenoiserScore>(p.command, n);
    } catch (const json::exception& e) {
        throw ArgumentError("prior file '" + p.path + "': " + e.what());
    }
    throw ArgumentError("unknown prior kind '" + p.kind + "'");
}

// Independent random streams drawn from the master seed.
inline constexpr std::uint64_t kDegradeStream = 0xde9;
inline constexpr std::uint64_t kSampleStream = 0x5a3;

struct Degraded {
    LinearOperator op;
    Vector y; // channels stacked, each of length M
    std::uint64_t noise_seed = 0;
};

/// y_c = H x_c + σ_0 z_c per channel.
inline Degraded degrade(const ExperimentConfig& c, const Image& x) {
    const Shape shape{x.width, x.height, x.channel_count()};
    LinearOperator op = build_operator(c, shape);
    const std::uint64_t noise_seed = derive_seed(c.seed, kDegradeStream);
    Rng rng(noise_seed);
    const Index m = op.rows();
    Vector y(m * shape.channels);
    for (int ch = 0; ch < shape.channels; ++ch) {
        Vector yc = op.apply(x.channels[static_cast<std::size_t>(ch)]);
        if (c.sigma0 > 0.0) yc += c.sigma0 * standard_normal(m, rng);
        y.segment(ch * m, m) = yc;
    }
    return {std::move(op), std::move(y), noise_seed};
}

/// Renders y as an image when its layout is pixel-aligned (H = I, blur, block averaging,
/// inpainting with unobserved pixels left black).
inline std::optional<Image> measurement_image(const ExperimentConfig& c, const Shape& shape, const Vector& y) {
    const Index m = y.size() / shape.channels;
    Index w = 0, h = 0;
    switch (c.task) {
    case Task::Deblur:
    case Task::Denoise:
    case Task::Inpaint: w = shape.width; h = shape.height; break;
    case Task::SuperResolution: w = shape.width / c.block; h = shape.height / c.block; break;
    default: return std::nullopt;
    }
    Image im = Image::blank(w, h, shape.channels);
    const auto kept = c.task == Task::Inpaint ? inpaint_mask(c, shape.pixels()) : std::vector<Index>{};
    for (int ch = 0; ch < shape.channels; ++ch) {
        const Vector yc = y.segment(ch * m, m);
        if (c.task == Task::Inpaint)
            for (Index k = 0; k < m; ++k) im.channels[static_cast<std::size_t>(ch)][kept[static_cast<std::size_t>(k)]] = yc[k];
        else
            im.channels[static_cast<std::size_t>(ch)] = yc;
    }
    return im;
}

inline NoiseSchedule schedule_of(const ExperimentConfig& c) {
    return make_geometric_schedule(c.schedule.sigma1, c.schedule.sigma_l, c.schedule.levels, c.sigma0, c.schedule.c,
                                   c.schedule.tau);
}

struct ChainRecord {
    std::size_t index = 0;
    std::vector<std::uint64_t> seeds; // one per channel
    bool ok = true;
    std::string error;
};

struct SampleSet {
    Shape shape;
    std::vector<ChainRecord> chains;
    std::vector<Image> samples; // successful chains only, in chain order
    std::vector<std::size_t> sample_chain;
    Image mean;
    Image stddev;
    std::vector<std::uint64_t> channel_seeds;
    CrossingReport crossing;
};

/// Runs `chains` SNIPS chains per channel. Chain k of the image is chain k of every channel;
/// it succeeds only if all of its channels do.
inline SampleSet sample_channels(const ExperimentConfig& c, const LinearOperator& op, const Vector& y,
                                 const Shape& shape, const ScoreModel& prior) {
    const Index m = op.rows();
    if (y.size() != m * shape.channels)
        throw ArgumentError("measurement has " + std::to_string(y.size()) + " values, expected " +
                            std::to_string(m * shape.channels));
    const DegradationSVD svd = svd_decompose(op);
    SampleSet out;
    out.shape = shape;
    SamplerConfig scfg{schedule_of(c), 0, TracePolicy::None, std::nullopt};
    out.crossing = validate_crossing(scfg.schedule, svd);
    out.chains.resize(c.chains);
    for (std::size_t k = 0; k < c.chains; ++k) out.chains[k].index = k;

    std::vector<ManyResult> per_channel;
    const std::uint64_t master = derive_seed(c.seed, kSampleStream);
    for (int ch = 0; ch < shape.channels; ++ch) {
        scfg.seed = derive_seed(master, static_cast<std::uint64_t>(ch));
        out.channel_seeds.push_back(scfg.seed);
        per_channel.push_back(snips_sample_many(svd, y.segment(ch * m, m), prior, scfg, c.chains, c.workers));
        for (std::size_t k = 0; k < c.chains; ++k) {
            const auto& outcome = per_channel.back().chains[k];
            auto& rec = out.chains[k];
            rec.seeds.push_back(outcome.seed);
            if (!outcome.ok()) {
                rec.ok = false;
                if (!rec.error.empty()) rec.error += "; ";
                rec.error += "channel " + std::to_string(ch) + ": " + outcome.error;
            }
        }
    }
    for (std::size_t k = 0; k < c.chains; ++k) {
        if (!out.chains[k].ok) continue;
        Image im = Image::blank(shape.width, shape.height, shape.channels);
        for (int ch = 0; ch < shape.channels; ++ch)
            im.channels[static_cast<std::size_t>(ch)] = per_channel[static_cast<std::size_t>(ch)].chains[k].result->sample;
        out.samples.push_back(std::move(im));
        out.sample_chain.push_back(k);
    }
    out.mean = Image::blank(shape.width, shape.height, shape.channels);
    out.stddev = Image::blank(shape.width, shape.height, shape.channels);
    const auto count = static_cast<double>(out.samples.size());
    for (int ch = 0; ch < shape.channels && !out.samples.empty(); ++ch) {
        const auto c_idx = static_cast<std::size_t>(ch);
        Vector mean = Vector::Zero(shape.pixels());
        for (const auto& s : out.samples) mean += s.channels[c_idx];
        mean /= count;
        Vector var = Vector::Zero(shape.pixels());
        for (const auto& s : out.samples) var += (s.channels[c_idx] - mean).cwiseAbs2();
        out.mean.channels[c_idx] = mean;
        out.stddev.channels[c_idx] = count > 1 ? Vector((var / (count - 1.0)).cwiseSqrt()) : Vector::Zero(shape.pixels());
    }
    return out;
}

/// Residual y - H x̂ with channels stacked.
inline Vector residual(const LinearOperator& op, const Image& x_hat, const Vector& y) {
    const Index m = op.rows();
    Vector r(y.size());
    for (int ch = 0; ch < x_hat.channel_count(); ++ch)
        r.segment(ch * m, m) = y.segment(ch * m, m) - op.apply(x_hat.channels[static_cast<std::size_t>(ch)]);
    return r;
}

/// metrics.csv: one row per chain, then a "mean" row. PSNR needs a reference image;
/// faithfulness fields need a measurement.
inline std::string metrics_csv(const SampleSet& set, const LinearOperator& op, const std::optional<Vector>& y,
                               double sigma0, const std::optional<Image>& reference) {
    std::ostringstream os;
    const std::size_t nf = faithfulness_fields().size();
    const std::string empty_faith(nf - 1, ',');
    os << "sample,status,psnr," << csv_header() << '\n';
    const auto row = [&](const std::string& label, const std::string& status, const Image* im) {
        os << label << ',' << status << ',';
        if (im && reference) os << format_double(psnr(im->flattened(), reference->flattened()));
        os << ',';
        if (im && y)
            os << to_csv_row(faithfulness_of_residual(residual(op, *im, *y), sigma0));
        else
            os << empty_faith;
        os << '\n';
    };
    std::size_t next = 0;
    for (const auto& rec : set.chains) {
        const Image* im = rec.ok ? &set.samples[next++] : nullptr;
        row(std::to_string(rec.index), rec.ok ? "ok" : "diverged", im);
    }
    row("mean", set.samples.empty() ? "none" : "ok", set.samples.empty() ? nullptr : &set.mean);
    return os.str();
}

inline std::string sample_filename(std::size_t k) {
    std::ostringstream os;
    os << "sample_" << std::setw(2) << std::setfill('0') << k << ".png";
    return os.str();
}

inline Image scaled(const Image& im, double factor) {
    Image out = im;
    for (auto& ch : out.channels) ch *= factor;
    return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

struct RunReport {
    int exit_code = 0;
    std::size_t succeeded = 0;
    std::vector<std::string> artifacts;
    json manifest;
};

inline json crossing_json(const CrossingReport& r) {
    json problems = json::array();
    for (const auto& c : r.coordinates) {
        if (c.status == CrossingStatus::NeverBelow || c.status == CrossingStatus::StartsBelow)
            problems.push_back({{"coordinate", c.coordinate},
                                {"singular", c.singular},
                                {"status", c.status == CrossingStatus::NeverBelow ? "never_below" : "starts_below"}});
    }
    return {{"valid", r.valid}, {"problems", problems}};
}

inline json version_json() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
#if defined(__VERSION__)
    const std::string compiler = __VERSION__;
#else
    const std::string compiler = "unknown";
#endif
    return {{"snips", kVersion}, {"eigen", eigen.str()}, {"png", PNG_LIBPNG_VER_STRING}, {"compiler", compiler}};
}

/// Writes the degraded measurement: y.snvc always, y.png where the layout permits.
inline std::vector<std::string> write_measurement(const ExperimentConfig& c, const Shape& shape, const Degraded& d,
                                                  const fs::path& dir) {
    std::vector<std::string> files;
    fs::create_directories(dir);
    io::save_vector((dir / "y.snvc").string(), d.y);
    files.push_back("y.snvc");
    io::save_operator((dir / "operator.snop").string(), d.op);
    files.push_back("operator.snop");
    if (auto im = measurement_image(c, shape, d.y)) {
        write_png((dir / "y.png").string(), *im);
        files.push_back("y.png");
    }
    return files;
}

inline std::string output_dir(const ExperimentConfig& c) { return c.output.empty() ? default_output_dir() : c.output; }

/// degrade verb: reads the input image and writes y.
inline RunReport run_degrade(const ExperimentConfig& c) {
    validate(c);
    if (c.input.empty()) throw ArgumentError("degrade needs an input image");
    if (c.task == Task::Synthesize) throw ArgumentError("synthesize has no measurement to degrade");
    const Image x = read_png(c.input);
    const Shape shape = resolve_shape(c, x);
    const Degraded d = degrade(c, x);
    RunReport rep;
    rep.artifacts = write_measurement(c, shape, d, output_dir(c));
    rep.manifest = {{"config", to_json(c)},
                    {"seeds", {{"master", c.seed}, {"degrade", d.noise_seed}}},
                    {"versions", version_json()},
                    {"artifacts", rep.artifacts}};
    write_text(fs::path(output_dir(c)) / "manifest.json", rep.manifest.dump(2) + "\n");
    return rep;
}

/// Samples given a measurement (from `c.measurement`, or degraded from the input image when
/// `degrade_input` is set) and writes every artifact.
inline RunReport run_sampling(const ExperimentConfig& c, bool degrade_input) {
    validate(c);
    const fs::path dir = output_dir(c);
    fs::create_directories(dir);
    std::optional<Image> input;
    if (!c.input.empty()) input = read_png(c.input);
    const Shape shape = resolve_shape(c, input);
    if (shape.pixels() < 1) throw ArgumentError("image shape is empty");

    RunReport rep;
    json seeds{{"master", c.seed}};
    LinearOperator op = build_operator(c, shape);
    std::optional<Vector> y;
    if (c.task != Task::Synthesize) {
        if (degrade_input) {
            if (!input) throw ArgumentError("run needs an input image to degrade");
            Degraded d = degrade(c, *input);
            seeds["degrade"] = d.noise_seed;
            const auto files = write_measurement(c, shape, d, dir);
            rep.artifacts.insert(rep.artifacts.end(), files.begin(), files.end());
            y = std::move(d.y);
        } else {
            if (c.measurement.empty()) throw ArgumentError("sample needs a measurement file");
            y = io::load_vector(c.measurement);
        }
    }
    const Vector y_used = y ? *y : Vector::Zero(op.rows() * shape.channels);

    const auto prior = make_prior(c.prior, shape);
    const SampleSet set = sample_channels(c, op, y_used, shape, *prior);
    if (!set.crossing.valid)
        std::cerr << "warning: the schedule does not cross sigma0 on every measured direction\n";

    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        const std::string name = sample_filename(set.sample_chain[i]);
        write_png((dir / name).string(), set.samples[i]);
        rep.artifacts.push_back(name);
    }
    if (!set.samples.empty()) {
        write_png((dir / "mean.png").string(), set.mean);
        write_png((dir / "std_x4.png").string(), scaled(set.stddev, 4.0));
        rep.artifacts.push_back("mean.png");
        rep.artifacts.push_back("std_x4.png");
    }
    write_text(dir / "metrics.csv", metrics_csv(set, op, y, c.sigma0, input));
    rep.artifacts.push_back("metrics.csv");

    json chains = json::array();
    for (const auto& rec : set.chains) {
        json jc{{"index", rec.index}, {"seeds", rec.seeds}, {"status", rec.ok ? "ok" : "diverged"}};
        if (!rec.ok) jc["error"] = rec.error;
        chains.push_back(jc);
    }
    seeds["channels"] = set.channel_seeds;
    rep.succeeded = set.samples.size();
    rep.manifest = {{"config", to_json(c)},   {"seeds", seeds},         {"versions", version_json()},
                    {"chains", chains},       {"crossing", crossing_json(set.crossing)},
                    {"artifacts", rep.artifacts}};
    rep.manifest["artifacts"].push_back("manifest.json");
    write_text(dir / "manifest.json", rep.manifest.dump(2) + "\n");
    rep.artifacts.push_back("manifest.json");
    rep.exit_code = set.samples.empty() ? 1 : 0;
    return rep;
}

inline RunReport run_experiment(const ExperimentConfig& c) { return run_sampling(c, true); }

/// diagnose verb: faithfulness of a restored image against a measurement.
inline FaithfulnessReport diagnose(const ExperimentConfig& c, const std::string& sample_png) {
    const Image x_hat = read_png(sample_png);
    if (c.measurement.empty()) throw ArgumentError("diagnose needs a measurement file");
    const Shape shape{x_hat.width, x_hat.height, x_hat.channel_count()};
    const LinearOperator op = build_operator(c, shape);
    const Vector y = io::load_vector(c.measurement);
    if (y.size() != op.rows() * shape.channels)
        throw ArgumentError("measurement length does not match the operator and image");
    return faithfulness_of_residual(residual(op, x_hat, y), c.sigma0);
}

} // namespace snips::cli

#endif // SNIPS_EXPERIMENT_HPP
