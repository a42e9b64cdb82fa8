#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "inflacast/baselines.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/vectorizer.hpp"

namespace inflacast::attribution {

/// Per-token contributions to the model output, plus the two endpoints they connect.
struct Attribution {
    std::vector<std::string> tokens;
    std::vector<double> phi;
    double base_value = 0.0;  // output with every token masked
    double fx = 0.0;          // output on the full input
    bool exact = true;
    std::size_t evaluations = 0;

    double phi_sum() const;
};

struct ExplainConfig {
    std::size_t exact_max_tokens = 12;
    std::size_t n_permutations = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Output { probability, logit };

/// A coalition game over tokens: value(present) is the model output when only the tokens
/// flagged in `present` are visible.
struct Game {
    std::vector<std::string> tokens;
    std::function<double(const std::vector<char>& present)> value;

    std::size_t size() const noexcept { return tokens.size(); }
};

/// Baseline models: tokens are the vectorizer's tokens; absent tokens are dropped from the counts.
Game baseline_game(const vectorizer::TfidfModel& tfidf, const baselines::AnyModel& model, std::string_view text,
                   Output output = Output::probability);

/// Encoder: tokens are the normalized words; an absent word's subwords become [PAD] with mask 0,
/// so every other token keeps its position.
Game encoder_game(const encoder::EncoderClassifier& clf, std::string_view text, Output output = Output::probability);

/// phi_i = sum over S without i of |S|! (n - |S| - 1)! / n! * (v(S + i) - v(S)).
/// Throws UsageError when the input has more than cfg.exact_max_tokens tokens.
Attribution shapley_exact(const Game& game, const ExplainConfig& cfg = {});

/// Mean marginal contribution over seeded random permutations, drawn in antithetic pairs (each
/// permutation followed by its reverse), then shifted uniformly so the values sum to fx - base_value.
Attribution shapley_sampled(const Game& game, const ExplainConfig& cfg = {});

/// Exact when the input is short enough, sampled otherwise.
Attribution explain(const Game& game, const ExplainConfig& cfg = {});

/// Self-contained HTML: red for phi > 0, blue for phi < 0, opacity |phi| / max |phi|.
std::string render_html(const Attribution& a, const std::string& title = "Token attribution");
/// Terminal rendering with 24-bit background colors.
std::string render_ansi(const Attribution& a);
/// `token,phi` rows.
std::string sidecar_csv(const Attribution& a);
/// base_value, fx, method and evaluation count.
std::string summary_json(const Attribution& a);

/// Writes `html_path` plus the sidecar table next to it (same stem, `.csv`).
void render_report(const Attribution& a, const std::filesystem::path& html_path);

}  // namespace inflacast::attribution
