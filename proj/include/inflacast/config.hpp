#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "inflacast/attribution.hpp"
#include "inflacast/corpus.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/labeler.hpp"
#include "inflacast/vectorizer.hpp"

namespace inflacast::config {

/// The TOML subset the pipeline reads: [section] headers, `key = value` pairs, comments,
/// and values that are strings, integers, floats, booleans or flat numeric arrays.
using Value = std::variant<bool, long long, double, std::string, std::vector<double>>;

class Document {
public:
    static Document parse(std::string_view text);
    static Document load(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    const Value* find(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, Value value);

    /// Every section/key pair, for unknown-key checks.
    const std::map<std::string, std::map<std::string, Value>>& sections() const noexcept { return sections_; }

    std::string to_toml() const;

private:
    std::map<std::string, std::map<std::string, Value>> sections_;
};

/// A hyperparameter that may be a single value or a list of grid-search candidates.
using Grid = std::vector<double>;

struct BaselineGrids {
    std::map<std::string, Grid> logreg{{"C", {1.0}}, {"max_iter", {1000}}, {"tol", {1e-4}}};
    std::map<std::string, Grid> tree{{"max_depth", {10}}, {"min_leaf", {1}}};
    std::map<std::string, Grid> forest{{"n_trees", {100}}, {"max_depth", {10}}, {"min_leaf", {1}}, {"max_features", {0}}};
    std::map<std::string, Grid> gbm{{"n_estimators", {200}}, {"learning_rate", {0.05}}, {"max_depth", {3}}, {"min_leaf", {1}}};
    int k_folds = 5;

    const std::map<std::string, Grid>& for_model(const std::string& kind) const;
};

struct EncoderSettings {
    encoder::EncoderConfig model;  // max_len is chosen by the model name
    encoder::TrainConfig train;
};

struct PipelineConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    std::filesystem::path groups;
    std::filesystem::path posts;
    std::filesystem::path series;
    std::filesystem::path labeled;  // empty: <out>/labeled_posts.jsonl

    std::uint64_t seed = 42;

    corpus::FilterConfig filter;
    std::uint64_t sweep_lo = 1500;
    std::uint64_t sweep_hi = 2500;
    int sweep_steps = 11;
    int histogram_bins = 100;

    labeler::ExtremaConfig extrema;
    MonthRange window;
    bool keep_empty = false;
    bool lenient = false;
    bool restrict_to_filtered_groups = false;

    vectorizer::TfidfConfig tfidf;
    BaselineGrids baselines;
    EncoderSettings encoder;
    attribution::ExplainConfig explain;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Desk-scale encoder defaults. The learning rate is larger than the 2e-5 used for
/// fine-tuning a pretrained model because these weights start from scratch.
EncoderSettings desk_encoder_defaults();

/// Builds the pipeline config from a document; unknown sections or keys are usage errors.
PipelineConfig from_document(const Document& doc, const std::filesystem::path& base_dir);

/// Loads a config file, or returns defaults when `path` is empty. A seed override replaces
/// [run] seed, and the explain seed too unless [explain] sets its own.
PipelineConfig load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

/// The effective configuration as a document; paths are written relative to `relative_to`.
Document to_document(const PipelineConfig& cfg, const std::filesystem::path& relative_to);

}  // namespace inflacast::config
