#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inflacast/corpus.hpp"
#include "inflacast/labeler.hpp"

namespace inflacast::fixtures {

enum class Scale { small, standard };

Scale parse_scale(std::string_view name);
const char* to_string(Scale scale) noexcept;

struct Sizes {
    std::size_t groups = 0;
    std::size_t posts = 0;
    std::size_t negation_posts = 0;
};

Sizes sizes_for(Scale scale) noexcept;

/// Kinds of negation-suite documents.
///   plain:    "<subject> <verb>"                   label = direction of the verb
///   negated:  "<subject> не <verb>"                label = opposite of the verb
///   contrast: "<subject> не <verb A> а <verb B>"   label = direction of verb B
/// A contrast document always holds one rising and one falling verb, so its word counts
/// carry no information about the label.
enum class NegationKind { plain, negated, contrast };
const char* to_string(NegationKind kind) noexcept;

struct NegationTruth {
    double plain_fraction = 0.35;
    double negated_fraction = 0.25;
    double contrast_fraction = 0.40;
    /// Best macro-F1 any unigram bag-of-words rule can reach on the suite's distribution.
    double bow_macro_f1_ceiling = 0.0;
};

/// Macro-F1 ceiling for bag-of-words rules when a fraction `a` of a balanced corpus is
/// label-independent in its word counts and the rest is separable: 1 - a / 2.
double bow_macro_f1_ceiling(double contrast_fraction) noexcept;

struct FixtureSet {
    std::uint64_t seed = 0;
    Scale scale = Scale::small;

    std::vector<corpus::GroupRecord> groups;

    labeler::InflationSeries series;
    std::vector<labeler::Breakpoint> planted;  // extrema the series was built around
    std::vector<int> month_labels;              // planted class per series index

    std::vector<corpus::PostRecord> posts;
    std::vector<int> post_labels;

    std::vector<corpus::PostRecord> negation_posts;
    std::vector<int> negation_labels;
    std::vector<NegationKind> negation_kinds;
    NegationTruth negation;
};

FixtureSet generate(std::uint64_t seed, Scale scale);

/// Writes groups.csv, series.csv, planted_breakpoints.csv, posts.jsonl, negation.jsonl,
/// negation_kinds.csv, fixture_truth.json, and two ready-to-run configs (pipeline.toml,
/// negation.toml) whose paths are relative to `dir`.
void write(const FixtureSet& set, const std::filesystem::path& dir);

}  // namespace inflacast::fixtures
