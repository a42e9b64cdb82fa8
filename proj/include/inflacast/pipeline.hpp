#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "inflacast/attribution.hpp"
#include "inflacast/baselines.hpp"
#include "inflacast/config.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/fixtures.hpp"
#include "inflacast/labeler.hpp"
#include "inflacast/vectorizer.hpp"

namespace inflacast::pipeline {

/// Flags shared by every subcommand.
struct RunOptions {
    std::filesystem::path config;  // empty: built-in defaults
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    bool quiet = false;  // suppress progress lines on stderr
};

/// Model names accepted by `train`.
const std::vector<std::string>& model_names();
bool is_encoder_model(const std::string& name);
/// 64, 128, 256 or 512 for encoder names.
std::size_t encoder_max_len(const std::string& name);

/// A TF-IDF vectorizer together with the baseline fitted on its features.
struct BaselineBundle {
    vectorizer::TfidfModel tfidf;
    baselines::AnyModel model;

    std::string serialize() const;
    static BaselineBundle deserialize(std::string_view bytes);
};

/// Either kind of saved model, loaded from disk by its header line.
struct TrainedModel {
    std::variant<BaselineBundle, encoder::EncoderClassifier> model;

    static TrainedModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::string kind() const;
    /// P(class 1) for a raw post text.
    double predict(std::string_view text) const;
    attribution::Game game(std::string_view text, attribution::Output output) const;
};

/// Posts with labels, one JSON object per line: the post fields plus "label".
std::string labeled_to_jsonl(const std::vector<labeler::LabeledPost>& posts);
std::vector<labeler::LabeledPost> read_labeled_jsonl(const std::filesystem::path& path);

// Subcommands. Each loads the config, applies the overrides in RunOptions, writes its outputs
// into opt.out (archiving the effective config as config.toml) and appends timings to run.log.
// Missing inputs and bad arguments raise UsageError; data problems raise other Errors.

void cmd_make_fixtures(const RunOptions& opt, fixtures::Scale scale);
void cmd_filter_groups(const RunOptions& opt);
void cmd_label(const RunOptions& opt);
void cmd_train(const RunOptions& opt, const std::string& model);
/// Scores the given model files (default: every models/*.model in the out dir) on the test split.
void cmd_evaluate(const RunOptions& opt, const std::vector<std::filesystem::path>& models);
/// `model` is a path to a model file or the name of one under <out>/models.
void cmd_explain(const RunOptions& opt, const std::string& model, const std::string& text,
                 attribution::Output output, std::ostream& terminal);

}  // namespace inflacast::pipeline
