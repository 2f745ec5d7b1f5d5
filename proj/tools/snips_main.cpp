// snips: degrade images and draw posterior samples from the command line.
//
//   snips degrade  --config exp.json
//   snips sample   --config exp.json --measurement out/y.snvc
//   snips run      --task deblur --input face.png --chains 8 --output out
//   snips diagnose --config exp.json --measurement out/y.snvc --image out/sample_00.png
//
// A JSON config supplies defaults; flags override individual fields. A run manifest is also
// accepted as a config and reproduces that run.
#include <snips/experiment.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using snips::cli::ExperimentConfig;

struct Overrides {
    std::string config;
    std::optional<std::string> task, input, measurement, output;
    std::optional<std::string> prior_kind, prior_path, prior_command;
    std::optional<snips::Index> kernel, block, width, height;
    std::optional<int> channels;
    std::optional<double> fraction, sigma0, sigma1, sigma_l, c;
    std::optional<std::size_t> levels, tau, chains, workers;
    std::optional<std::uint64_t> seed, operator_seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON config or run manifest")->check(CLI::ExistingFile);
        app->add_option("--task", task, "deblur | sr | cs | inpaint | denoise | synthesize");
        app->add_option("--input", input, "ground-truth PNG");
        app->add_option("--measurement", measurement, "measurement vector (.snvc)");
        app->add_option("--output", output, "output directory (default $SNIPS_OUTPUT_DIR or ./snips_out)");
        app->add_option("--kernel", kernel, "deblur kernel width");
        app->add_option("--block", block, "super-resolution factor");
        app->add_option("--fraction", fraction, "kept fraction for cs / inpaint");
        app->add_option("--operator-seed", operator_seed, "seed for random projections and masks");
        app->add_option("--sigma0", sigma0, "measurement noise std on the [0,1] pixel scale");
        app->add_option("--sigma1", sigma1, "largest annealing level");
        app->add_option("--sigmaL", sigma_l, "smallest annealing level");
        app->add_option("--levels", levels, "number of annealing levels");
        app->add_option("--c", c, "step-size scale");
        app->add_option("--tau", tau, "Langevin steps per level");
        app->add_option("--prior", prior_kind, "gaussian | gmm | smooth | external");
        app->add_option("--prior-path", prior_path, "prior JSON file");
        app->add_option("--prior-command", prior_command, "external denoiser command line");
        app->add_option("--chains", chains, "number of samples");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--workers", workers, "parallel chains");
        app->add_option("--width", width, "image width when there is no input image");
        app->add_option("--height", height, "image height when there is no input image");
        app->add_option("--channels", channels, "1 or 3 when there is no input image");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : snips::cli::load_config(config);
        if (task) cfg.task = snips::cli::parse_task(*task);
        if (input) cfg.input = *input;
        if (measurement) cfg.measurement = *measurement;
        if (output) cfg.output = *output;
        if (kernel) cfg.kernel = *kernel;
        if (block) cfg.block = *block;
        if (fraction) cfg.fraction = *fraction;
        if (operator_seed) cfg.operator_seed = *operator_seed;
        if (sigma0) cfg.sigma0 = *sigma0;
        if (sigma1) cfg.schedule.sigma1 = *sigma1;
        if (sigma_l) cfg.schedule.sigma_l = *sigma_l;
        if (levels) cfg.schedule.levels = *levels;
        if (c) cfg.schedule.c = *c;
        if (tau) cfg.schedule.tau = *tau;
        if (prior_kind) cfg.prior.kind = *prior_kind;
        if (prior_path) cfg.prior.path = *prior_path;
        if (prior_command) cfg.prior.command = *prior_command;
        if (chains) cfg.chains = *chains;
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (width) cfg.width = *width;
        if (height) cfg.height = *height;
        if (channels) cfg.channels = *channels;
        if (cfg.task == snips::cli::Task::Synthesize && !sigma0) cfg.sigma0 = 0.0;
        if (cfg.output.empty()) cfg.output = snips::cli::default_output_dir();
        return cfg;
    }
};

void print_artifacts(const snips::cli::RunReport& rep, const std::string& dir) {
    for (const auto& a : rep.artifacts) std::cout << (std::filesystem::path(dir) / a).string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SNIPS posterior sampler for noisy linear inverse problems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", snips::kVersion);

    Overrides degrade_opts, sample_opts, run_opts, diag_opts;
    auto* degrade = app.add_subcommand("degrade", "apply H and add noise to an input image");
    auto* sample = app.add_subcommand("sample", "draw posterior samples for an existing measurement");
    auto* run = app.add_subcommand("run", "degrade then sample");
    auto* diagnose = app.add_subcommand("diagnose", "faithfulness report for a restored image");
    degrade_opts.attach(degrade);
    sample_opts.attach(sample);
    run_opts.attach(run);
    diag_opts.attach(diagnose);
    std::string image;
    bool csv = false;
    diagnose->add_option("--image", image, "restored PNG")->required()->check(CLI::ExistingFile);
    diagnose->add_flag("--csv", csv, "print CSV instead of JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (degrade->parsed()) {
            const auto cfg = degrade_opts.resolve();
            print_artifacts(snips::cli::run_degrade(cfg), cfg.output);
            return 0;
        }
        if (sample->parsed() || run->parsed()) {
            const bool is_run = run->parsed();
            const auto cfg = (is_run ? run_opts : sample_opts).resolve();
            const auto rep = snips::cli::run_sampling(cfg, is_run);
            print_artifacts(rep, cfg.output);
            std::cerr << rep.succeeded << "/" << cfg.chains << " chains succeeded\n";
            return rep.exit_code;
        }
        const auto cfg = diag_opts.resolve();
        const auto report = snips::cli::diagnose(cfg, image);
        if (csv)
            std::cout << snips::csv_header() << '\n' << snips::to_csv_row(report) << '\n';
        else
            std::cout << snips::to_json(report).dump(2) << '\n';
        return 0;
    } catch (const snips::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
