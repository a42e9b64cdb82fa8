// Command-line front end for the pipeline.

#include <iostream>

#include <CLI11.hpp>

#include "inflacast/common.hpp"
#include "inflacast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace inflacast;

namespace {

void add_common(CLI::App* cmd, pipeline::RunOptions& opt, std::uint64_t& seed) {
    cmd->add_option("--config", opt.config, "TOML config file");
    cmd->add_option("--seed", seed, "seed overriding [run] seed");
    cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
    cmd->add_flag("--quiet", opt.quiet, "no progress lines on stderr");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classify social-network posts by inflation trend: filter, label, train, evaluate, explain."};
    app.require_subcommand(1);

    pipeline::RunOptions opt;
    std::uint64_t seed = 0;

    auto* fixtures_cmd = app.add_subcommand("make-fixtures", "generate seeded synthetic groups, series and posts");
    std::string scale = "small";
    fixtures_cmd->add_option("--scale", scale, "small or standard")
        ->check(CLI::IsMember({"small", "standard"}))
        ->capture_default_str();

    auto* filter_cmd = app.add_subcommand("filter-groups", "filter groups by size and regional share");
    auto* label_cmd = app.add_subcommand("label", "label posts by the inflation trend of their month");

    auto* train_cmd = app.add_subcommand("train", "train one model on the 60/20/20 split");
    std::string model;
    train_cmd->add_option("model", model, "logreg, tree, forest, gbm, encoder-64/128/256/512")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "score saved models on the test split");
    std::vector<fs::path> model_files;
    eval_cmd->add_option("models", model_files, "model files (default: every model under <out>/models)");

    auto* explain_cmd = app.add_subcommand("explain", "Shapley token attribution for one text");
    std::string explain_model;
    std::string text;
    bool logit = false;
    explain_cmd->add_option("--model", explain_model, "model file or name under <out>/models")->required();
    explain_cmd->add_option("--text", text, "text to explain")->required();
    explain_cmd->add_flag("--logit", logit, "attribute the class-1 logit instead of the probability");

    for (auto* cmd : {fixtures_cmd, filter_cmd, label_cmd, train_cmd, eval_cmd, explain_cmd}) {
        add_common(cmd, opt, seed);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto* cmd : app.get_subcommands()) {
            if (cmd->count("--seed") > 0) {
                opt.seed = seed;
            }
        }
        if (fixtures_cmd->parsed()) {
            pipeline::cmd_make_fixtures(opt, fixtures::parse_scale(scale));
        } else if (filter_cmd->parsed()) {
            pipeline::cmd_filter_groups(opt);
        } else if (label_cmd->parsed()) {
            pipeline::cmd_label(opt);
        } else if (train_cmd->parsed()) {
            pipeline::cmd_train(opt, model);
        } else if (eval_cmd->parsed()) {
            pipeline::cmd_evaluate(opt, model_files);
        } else if (explain_cmd->parsed()) {
            pipeline::cmd_explain(opt, explain_model, text,
                                  logit ? attribution::Output::logit : attribution::Output::probability, std::cout);
        }
    } catch (const UsageError& e) {
        std::cerr << "inflacast: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "inflacast: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
