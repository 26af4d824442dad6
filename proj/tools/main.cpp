// signsynth command-line interface: dataset synthesis, stage training,
// video generation, and evaluation for the text → pose → video pipeline.

#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "signsynth/cli/commands.hpp"

namespace {

using signsynth::ConfigError;
using signsynth::PreconditionError;
using signsynth::cli::RunConfig;

const char* kUsage = R"(signsynth - sign-language production pipeline (text -> pose -> video)

usage: signsynth <command> [flags]

commands:
  make-data   synthesize a signer corpus (poses, frames, styles, hand labels)
  train       train one pipeline stage (see --stage)
  generate    render video from --text or --pose using a trained run
  evaluate    score generated frames of a corpus split against ground truth

global flags:
  --config FILE     load key=value settings before other flags
  --set KEY=VALUE   override one setting (repeatable, applied in order)
  --seed N          shorthand for --set seed=N
  --print-config    print the resolved configuration and exit
  --help            show this message

make-data flags:
  --out DIR         corpus directory (default: corpus)
  --sequences N     shorthand for --set data.sequences=N
  --styles N        shorthand for --set data.styles=N

train flags:
  --stage NAME      text2pose | handnet | pose2video (required)
  --corpus DIR      corpus directory (default: corpus)
  --run DIR         run directory for checkpoints and logs (default: run)
  --max-steps N     cap this invocation's epochs (text2pose, handnet)
                    or generator steps (pose2video)
  --no-key-loss     drop the hand keypoint adversary
                    (--set p2v.lambda_key=0 --set p2v.hand_mode=off)

generate flags:
  --run DIR         trained run directory (default: run)
  --out DIR         output directory for frames + manifest.json
  --text "IDS"      space-separated token ids; runs the full pipeline
  --pose FILE       pose JSON input; skips the text-to-pose stage
  --style-id N      style from the run's style bank
  --style-image F   style PNG at generator resolution (instead of --style-id)
  --max-len N       cap the produced sequence length
  --dump-heatmaps   also write per-limb conditioning heat maps
  --split NAME      batch mode: render every sequence of a corpus split
  --corpus DIR      corpus for --split (default: corpus)

evaluate flags:
  --run DIR         run directory holding generated/<split> (default: run)
  --corpus DIR      corpus directory (default: corpus)
  --split NAME      corpus split to score (default: test)
  --out DIR         report directory (default: <run>/eval_<split>)
  --compare FILE    print a side-by-side table against another report.json

exit codes: 0 success, 2 precondition or configuration errors, 1 otherwise
)";

struct ParsedArgs {
    std::string command;
    std::optional<std::string> config_file;
    std::vector<std::pair<std::string, std::string>> overrides;  // key, value
    bool print_config = false;

    std::optional<std::string> out, corpus, run, stage, split;
    std::optional<std::string> text, pose_file, style_image, compare;
    std::optional<int> max_steps, style_id, max_len;
    bool dump_heatmaps = false;
};

int parse_int_flag(const std::string& flag, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(flag + " expects an integer, got '" + value + "'");
    }
}

ParsedArgs parse_args(int argc, char** argv) {
    ParsedArgs a;
    int i = 1;
    if (i < argc && argv[i][0] != '-') a.command = argv[i++];

    auto value_of = [&](const std::string& flag) -> std::string {
        if (i + 1 >= argc) throw ConfigError(flag + " expects a value");
        return argv[++i];
    };
    auto allow = [&](std::initializer_list<const char*> commands, const std::string& flag) {
        for (const char* c : commands)
            if (a.command == c) return;
        throw ConfigError("unknown flag '" + flag + "' for command '" + a.command + "'");
    };

    for (; i < argc; ++i) {
        const std::string flag = argv[i];
        if (flag == "--help" || flag == "-h") {
            std::cout << kUsage;
            std::exit(0);
        } else if (flag == "--config") {
            a.config_file = value_of(flag);
        } else if (flag == "--set") {
            const std::string kv = value_of(flag);
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
            a.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        } else if (flag == "--seed") {
            a.overrides.emplace_back("seed", value_of(flag));
        } else if (flag == "--print-config") {
            a.print_config = true;
        } else if (flag == "--sequences") {
            allow({"make-data"}, flag);
            a.overrides.emplace_back("data.sequences", value_of(flag));
        } else if (flag == "--styles") {
            allow({"make-data"}, flag);
            a.overrides.emplace_back("data.styles", value_of(flag));
        } else if (flag == "--out") {
            allow({"make-data", "generate", "evaluate"}, flag);
            a.out = value_of(flag);
        } else if (flag == "--stage") {
            allow({"train"}, flag);
            a.stage = value_of(flag);
        } else if (flag == "--corpus") {
            allow({"train", "generate", "evaluate"}, flag);
            a.corpus = value_of(flag);
        } else if (flag == "--run") {
            allow({"train", "generate", "evaluate"}, flag);
            a.run = value_of(flag);
        } else if (flag == "--max-steps") {
            allow({"train"}, flag);
            a.max_steps = parse_int_flag(flag, value_of(flag));
        } else if (flag == "--no-key-loss") {
            allow({"train"}, flag);
            a.overrides.emplace_back("p2v.lambda_key", "0");
            a.overrides.emplace_back("p2v.hand_mode", "off");
        } else if (flag == "--text") {
            allow({"generate"}, flag);
            a.text = value_of(flag);
        } else if (flag == "--pose") {
            allow({"generate"}, flag);
            a.pose_file = value_of(flag);
        } else if (flag == "--style-id") {
            allow({"generate"}, flag);
            a.style_id = parse_int_flag(flag, value_of(flag));
        } else if (flag == "--style-image") {
            allow({"generate"}, flag);
            a.style_image = value_of(flag);
        } else if (flag == "--max-len") {
            allow({"generate"}, flag);
            a.max_len = parse_int_flag(flag, value_of(flag));
        } else if (flag == "--dump-heatmaps") {
            allow({"generate"}, flag);
            a.dump_heatmaps = true;
        } else if (flag == "--split") {
            allow({"generate", "evaluate"}, flag);
            a.split = value_of(flag);
        } else if (flag == "--compare") {
            allow({"evaluate"}, flag);
            a.compare = value_of(flag);
        } else {
            throw ConfigError("unknown flag '" + flag + "'");
        }
    }
    return a;
}

RunConfig resolve_config(const ParsedArgs& a) {
    RunConfig cfg;
    if (a.config_file) signsynth::cli::apply_config_file(cfg, *a.config_file);
    for (const auto& [key, value] : a.overrides) signsynth::cli::set_key(cfg, key, value);
    return cfg;
}

int run(int argc, char** argv) {
    const ParsedArgs a = parse_args(argc, argv);
    const RunConfig cfg = resolve_config(a);

    if (a.print_config) {
        std::cout << signsynth::cli::serialize_config(cfg);
        return 0;
    }
    if (a.command.empty()) {
        std::cerr << kUsage;
        return 2;
    }

    namespace cli = signsynth::cli;
    if (a.command == "make-data") {
        cli::MakeDataArgs args;
        args.cfg = cfg;
        args.out = a.out.value_or(cfg.corpus_dir);
        return cli::cmd_make_data(args);
    }
    if (a.command == "train") {
        if (!a.stage) throw PreconditionError("train: --stage is required");
        cli::TrainArgs args;
        args.cfg = cfg;
        args.stage = *a.stage;
        args.corpus = a.corpus.value_or(cfg.corpus_dir);
        args.run = a.run.value_or("run");
        args.max_steps = a.max_steps;
        return cli::cmd_train(args);
    }
    if (a.command == "generate") {
        cli::GenerateArgs args;
        args.cfg = cfg;
        args.run = a.run.value_or("run");
        if (a.out) args.out = *a.out;
        args.text = a.text;
        if (a.pose_file) args.pose_file = *a.pose_file;
        args.style_id = a.style_id;
        if (a.style_image) args.style_image = *a.style_image;
        args.max_len = a.max_len;
        args.dump_heatmaps = a.dump_heatmaps;
        args.split = a.split;
        args.corpus = a.corpus.value_or(cfg.corpus_dir);
        return cli::cmd_generate(args);
    }
    if (a.command == "evaluate") {
        cli::EvaluateArgs args;
        args.cfg = cfg;
        args.run = a.run.value_or("run");
        args.corpus = a.corpus.value_or(cfg.corpus_dir);
        args.split = a.split.value_or("test");
        if (a.out) args.out = *a.out;
        if (a.compare) args.compare = *a.compare;
        return cli::cmd_evaluate(args);
    }
    throw ConfigError("unknown command '" + a.command + "' (see signsynth --help)");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const PreconditionError& e) {
        std::cerr << "signsynth: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "signsynth: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "signsynth: " << e.what() << "\n";
        return 1;
    }
}
