// smorph: three-stage sperm-head morphology pipeline
// (pseudo-mask generation, distillation pretraining, soft-tuning).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "smorph/pipeline.hpp"

namespace {

using smorph::RunConfig;

std::string g_config_path;

void add_common_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--data", cfg.dataset_dir, "Dataset directory (images/ + votes.csv)");
    cmd->add_option("--out", cfg.out_dir, "Output directory for stage artifacts");
    cmd->add_option("--fold", cfg.fold, "Fold index to process")->capture_default_str();
    cmd->add_option("--folds", cfg.folds_k, "Number of cross-validation folds")
        ->capture_default_str();
    cmd->add_option("--threads", cfg.threads,
                    "Worker threads (0 = hardware concurrency; 1 guarantees "
                    "deterministic output)")
        ->capture_default_str();
    cmd->add_option("--config", g_config_path,
                    "Key=value config file; keys are the long option names "
                    "without dashes, command-line flags take precedence");
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

// Applies config-file values to fields whose flags were not given on the
// command line.
void apply_config_file(const std::string& path, CLI::App* cmd, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw smorph::UsageError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == '[') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw smorph::UsageError("config file line " + std::to_string(line_no) +
                                     ": expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        std::string flag = "--" + key;
        // command line wins over the file
        if (cmd->get_option_no_throw(flag) && cmd->count(flag) > 0) continue;
        try {
            if (key == "data") cfg.dataset_dir = value;
            else if (key == "out") cfg.out_dir = value;
            else if (key == "fold") cfg.fold = std::stoi(value);
            else if (key == "folds") cfg.folds_k = std::stoi(value);
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "hierarchy-levels") cfg.hierarchy_levels = std::stoi(value);
            else if (key == "height-tolerance") cfg.height_tolerance = std::stod(value);
            else if (key == "dmax-factor") cfg.dmax_factor = std::stod(value);
            else if (key == "input-size") cfg.input_size = std::stoi(value);
            else if (key == "channels") cfg.stage_channels = parse_int_list(value);
            else if (key == "decoder-channels") cfg.decoder_channels = std::stoi(value);
            else if (key == "alpha") cfg.alpha = std::stod(value);
            else if (key == "beta") cfg.beta = std::stod(value);
            else if (key == "ema-decay") cfg.ema_decay = std::stod(value);
            else if (key == "distill-batch") cfg.distill_batch = std::stoi(value);
            else if (key == "fine-iterations") cfg.fine_iterations = std::stoi(value);
            else if (key == "coarse-iterations") cfg.coarse_iterations = std::stoi(value);
            else if (key == "distill-lr") cfg.distill_lr = std::stod(value);
            else if (key == "distill-milestones") cfg.distill_milestones = parse_int_list(value);
            else if (key == "distill-augment") cfg.distill_augment = value;
            else if (key == "coarse-augment") cfg.coarse_augment = value;
            else if (key == "teacher-threshold") cfg.teacher_threshold = std::stod(value);
            else if (key == "lambda") cfg.lambda = std::stod(value);
            else if (key == "tune-batch") cfg.tune_batch = std::stoi(value);
            else if (key == "tune-epochs") cfg.tune_epochs = std::stoi(value);
            else if (key == "curriculum-start") cfg.curriculum_start = std::stoi(value);
            else if (key == "curriculum-end") cfg.curriculum_end = std::stoi(value);
            else if (key == "tune-lr") cfg.tune_lr = std::stod(value);
            else if (key == "tune-milestones") cfg.tune_milestones = parse_int_list(value);
            else if (key == "tune-augment") cfg.tune_augment = value;
            else if (key == "tta") cfg.tta_policy = value;
            else if (key == "val-fraction") cfg.val_fraction = std::stod(value);
            else if (key == "eval-mask-dilations") cfg.eval_mask_dilations = std::stoi(value);
            else if (key == "skip-pretrain") cfg.skip_pretrain = value == "1" || value == "true";
            else throw smorph::UsageError("config file: unknown key '" + key + "'");
        } catch (const smorph::UsageError&) {
            throw;
        } catch (const std::exception&) {
            throw smorph::UsageError("config file line " + std::to_string(line_no) +
                                     ": bad value for '" + key + "'");
        }
    }
}

void add_hpm_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--hierarchy-levels", cfg.hierarchy_levels,
                    "Concentric mask layers h (2 suits noisy gray crops, 1 clean RGB)")
        ->capture_default_str();
    cmd->add_option("--height-tolerance", cfg.height_tolerance,
                    "Relative nucleus-height tolerance for acrosome erosion")
        ->capture_default_str();
    cmd->add_option("--dmax-factor", cfg.dmax_factor,
                    "Distance cut as a multiple of the fitted nucleus semi-axis")
        ->capture_default_str();
}

void add_net_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--input-size", cfg.input_size, "Network input size")
        ->capture_default_str();
    cmd->add_option("--channels", cfg.stage_channels,
                    "Encoder stage channels (3 stages)")
        ->capture_default_str();
    cmd->add_option("--decoder-channels", cfg.decoder_channels, "Decoder width")
        ->capture_default_str();
}

void add_distill_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--alpha", cfg.alpha, "Segmentation loss weight (reference recipe: 1)")
        ->capture_default_str();
    cmd->add_option("--beta", cfg.beta, "Consistency loss weight (reference recipe: 1)")
        ->capture_default_str();
    cmd->add_option("--ema-decay", cfg.ema_decay, "Teacher EMA decay")
        ->capture_default_str();
    cmd->add_option("--distill-batch", cfg.distill_batch, "Distillation batch size")
        ->capture_default_str();
    cmd->add_option("--fine-iterations", cfg.fine_iterations,
                    "Fine distillation iterations")
        ->capture_default_str();
    cmd->add_option("--coarse-iterations", cfg.coarse_iterations,
                    "Coarse (rotation) distillation iterations")
        ->capture_default_str();
    cmd->add_option("--distill-lr", cfg.distill_lr,
                    "Distillation Adam learning rate (reference recipe: 1e-4)")
        ->capture_default_str();
    cmd->add_option("--distill-milestones", cfg.distill_milestones,
                    "Step-decay epochs (reference recipe: 12 19)")
        ->capture_default_str();
    cmd->add_option("--distill-augment", cfg.distill_augment,
                    "T1/T2 augmentation policy")
        ->capture_default_str();
    cmd->add_option("--coarse-augment", cfg.coarse_augment,
                    "Rotation-task augmentation policy")
        ->capture_default_str();
    cmd->add_option("--teacher-threshold", cfg.teacher_threshold,
                    "Teacher mask binarization threshold")
        ->capture_default_str();
}

void add_tune_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--lambda", cfg.lambda,
                    "Majority-class weight of the soft loss (reference recipe: 0.85)")
        ->capture_default_str();
    cmd->add_option("--tune-batch", cfg.tune_batch, "Tuning batch size")
        ->capture_default_str();
    cmd->add_option("--tune-epochs", cfg.tune_epochs, "Tuning epochs")
        ->capture_default_str();
    cmd->add_option("--curriculum-start", cfg.curriculum_start,
                    "Mask dilations at the first epoch (reference recipe: 15)")
        ->capture_default_str();
    cmd->add_option("--curriculum-end", cfg.curriculum_end,
                    "Mask dilations at the last epoch (reference recipe: 0)")
        ->capture_default_str();
    cmd->add_option("--tune-lr", cfg.tune_lr,
                    "Tuning Adam learning rate (reference recipe: 1.5e-4)")
        ->capture_default_str();
    cmd->add_option("--tune-milestones", cfg.tune_milestones,
                    "Step-decay epochs (reference recipe: 14 23)")
        ->capture_default_str();
    cmd->add_option("--tune-augment", cfg.tune_augment,
                    "Mild training augmentation policy (scian-mild / hushem-mild)")
        ->capture_default_str();
    cmd->add_option("--tta", cfg.tta_policy, "Test-time augmentation policy")
        ->capture_default_str();
    cmd->add_option("--val-fraction", cfg.val_fraction,
                    "Training fraction held out for validation logging")
        ->capture_default_str();
    cmd->add_option("--eval-mask-dilations", cfg.eval_mask_dilations,
                    "Mask dilations applied to evaluation inputs")
        ->capture_default_str();
    cmd->add_flag("--skip-pretrain", cfg.skip_pretrain,
                  "Train from random init and mask with HPM masks instead of AID");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smorph: sperm-head morphology pipeline"};
    app.require_subcommand(1);

    // gen-synth
    smorph::CorpusSpec corpus;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-synth",
                                   "Generate a synthetic labeled corpus with ground truth");
    gen->add_option("--out", gen_out, "Corpus directory")->required();
    gen->add_option("--n", corpus.n, "Number of crops")->capture_default_str();
    gen->add_option("--classes", corpus.num_classes, "Number of classes (2-5)")
        ->capture_default_str();
    gen->add_option("--height", corpus.height, "Crop height")->capture_default_str();
    gen->add_option("--width", corpus.width, "Crop width")->capture_default_str();
    gen->add_option("--channels", corpus.channels, "1 (gray) or 3 (RGB)")
        ->capture_default_str();
    gen->add_option("--noise", corpus.noise_sigma, "Gaussian noise sigma")
        ->capture_default_str();
    gen->add_option("--dissent", corpus.dissent_rate,
                    "Fraction of crops with one dissenting expert vote")
        ->capture_default_str();
    gen->add_option("--seed", corpus.seed, "RNG seed")->required();

    RunConfig cfg;

    auto* masks = app.add_subcommand("masks", "Hierarchical pseudo-mask generation");
    add_common_options(masks, cfg);
    add_hpm_options(masks, cfg);
    masks->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();

    auto* pretrain = app.add_subcommand(
        "pretrain", "Fine + coarse anatomical information distillation");
    add_common_options(pretrain, cfg);
    add_hpm_options(pretrain, cfg);
    add_net_options(pretrain, cfg);
    add_distill_options(pretrain, cfg);
    pretrain->add_option("--seed", cfg.seed, "RNG seed")->required();

    auto* tune = app.add_subcommand("tune", "Soft-tuning classification stage");
    add_common_options(tune, cfg);
    add_hpm_options(tune, cfg);
    add_net_options(tune, cfg);
    add_tune_options(tune, cfg);
    tune->add_option("--seed", cfg.seed, "RNG seed")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a tuned classifier on its fold");
    add_common_options(eval, cfg);
    add_hpm_options(eval, cfg);
    add_net_options(eval, cfg);
    add_tune_options(eval, cfg);
    eval->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();

    std::string overlay_id;
    auto* overlay = app.add_subcommand(
        "overlay", "Write a side-by-side qualitative panel for one crop");
    add_common_options(overlay, cfg);
    add_hpm_options(overlay, cfg);
    overlay->add_option("--crop", overlay_id, "Crop id")->required();
    overlay->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();

    std::vector<int> fold_list;
    auto* runall = app.add_subcommand("run-all",
                                      "Chain masks, pretrain, tune and eval per fold");
    add_common_options(runall, cfg);
    add_hpm_options(runall, cfg);
    add_net_options(runall, cfg);
    add_distill_options(runall, cfg);
    add_tune_options(runall, cfg);
    runall->add_option("--fold-list", fold_list, "Folds to run (default: all folds)");
    runall->add_option("--seed", cfg.seed, "RNG seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // 0 for --help, non-zero for usage errors
    }

    try {
        if (!g_config_path.empty()) {
            CLI::App* active = nullptr;
            for (CLI::App* cand : {masks, pretrain, tune, eval, overlay, runall})
                if (cand->parsed()) active = cand;
            if (active) apply_config_file(g_config_path, active, cfg);
        }
        if (gen->parsed()) {
            smorph::generate_corpus(gen_out, corpus);
            std::cerr << "wrote corpus of " << corpus.n << " crops to " << gen_out << "\n";
        } else if (masks->parsed()) {
            smorph::run_masks(cfg);
            std::cerr << "masks written under " << cfg.stage_dir(cfg.fold, "masks") << "\n";
        } else if (pretrain->parsed()) {
            smorph::run_pretrain(cfg);
            std::cerr << "pretraining artifacts under "
                      << cfg.stage_dir(cfg.fold, "pretrain") << "\n";
        } else if (tune->parsed()) {
            smorph::run_tune(cfg);
            std::cerr << "classifier written under " << cfg.stage_dir(cfg.fold, "tune")
                      << "\n";
        } else if (eval->parsed()) {
            smorph::Metrics m = smorph::run_eval(cfg);
            std::fprintf(stderr,
                         "fold %d: accuracy %.4f recall %.4f precision %.4f f1 %.4f\n",
                         cfg.fold, m.accuracy, m.recall, m.precision, m.f1);
        } else if (overlay->parsed()) {
            smorph::run_overlay(cfg, overlay_id);
        } else if (runall->parsed()) {
            smorph::RunAllResult r = smorph::run_all(cfg, fold_list);
            std::fprintf(stderr, "mean accuracy %.4f (std %.4f) over %zu fold(s)\n",
                         r.mean.accuracy, r.stddev.accuracy, r.per_fold.size());
        }
    } catch (const smorph::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const smorph::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const smorph::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
