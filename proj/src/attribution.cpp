#include "inflacast/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "inflacast/common.hpp"
#include "inflacast/parallel.hpp"
#include "inflacast/random.hpp"
#include "inflacast/text.hpp"

namespace inflacast::attribution {

double Attribution::phi_sum() const { return std::accumulate(phi.begin(), phi.end(), 0.0); }

void ExplainConfig::validate() const {
    if (exact_max_tokens < 1 || exact_max_tokens > 24) {
        throw UsageError("exact_max_tokens must lie in [1, 24]");
    }
    if (n_permutations < 1) {
        throw UsageError("n_permutations must be at least 1");
    }
}

Game baseline_game(const vectorizer::TfidfModel& tfidf, const baselines::AnyModel& model, std::string_view text,
                   Output output) {
    Game g;
    g.tokens = vectorizer::tokenize(text, tfidf.config());
    g.value = [&tfidf, &model, tokens = g.tokens, output](const std::vector<char>& present) {
        std::vector<std::string> kept;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (present[i]) {
                kept.push_back(tokens[i]);
            }
        }
        const auto x = tfidf.transform_tokens(kept);
        return output == Output::probability ? baselines::predict_proba(model, x) : baselines::predict_logit(model, x);
    };
    return g;
}

Game encoder_game(const encoder::EncoderClassifier& clf, std::string_view text, Output output) {
    Game g;
    g.tokens = text::split_words(text::normalize(text));
    g.value = [&clf, full = clf.tokenizer.encode_words(g.tokens, clf.model.config().max_len),
               output](const std::vector<char>& present) {
        auto seq = full;
        for (std::size_t p = 0; p < seq.length(); ++p) {
            const int w = seq.word_of[p];
            if (w >= 0 && !present[static_cast<std::size_t>(w)]) {
                seq.ids[p] = encoder::SubwordTokenizer::kPad;
                seq.mask[p] = 0;
            }
        }
        return output == Output::probability ? encoder::predict_proba(clf.model, seq)
                                             : encoder::class1_logit(clf.model, seq);
    };
    return g;
}

Attribution shapley_exact(const Game& game, const ExplainConfig& cfg) {
    cfg.validate();
    const std::size_t n = game.size();
    if (n > cfg.exact_max_tokens) {
        throw UsageError("exact Shapley values are limited to " + std::to_string(cfg.exact_max_tokens) +
                         " tokens (input has " + std::to_string(n) + "); use sampled mode");
    }
    const std::size_t subsets = std::size_t{1} << n;
    std::vector<double> v(subsets);
    parallel_for(subsets, [&](std::size_t s) {
        std::vector<char> present(n);
        for (std::size_t i = 0; i < n; ++i) {
            present[i] = static_cast<char>((s >> i) & 1u);
        }
        v[s] = game.value(present);
    });

    // weight[k] = k! (n - k - 1)! / n!
    std::vector<double> weight(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        weight[k] = std::exp(std::lgamma(static_cast<double>(k) + 1) + std::lgamma(static_cast<double>(n - k)) -
                             std::lgamma(static_cast<double>(n) + 1));
    }
    Attribution a;
    a.tokens = game.tokens;
    a.phi.assign(n, 0.0);
    a.base_value = v[0];
    a.fx = v[subsets - 1];
    a.exact = true;
    a.evaluations = subsets;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        double sum = 0.0;
        for (std::size_t s = 0; s < subsets; ++s) {
            if (s & bit) {
                continue;
            }
            sum += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
        }
        a.phi[i] = sum;
    }
    return a;
}

Attribution shapley_sampled(const Game& game, const ExplainConfig& cfg) {
    cfg.validate();
    const std::size_t n = game.size();
    Attribution a;
    a.tokens = game.tokens;
    a.exact = false;
    a.base_value = game.value(std::vector<char>(n, 0));
    a.fx = game.value(std::vector<char>(n, 1));
    a.evaluations = 2;
    a.phi.assign(n, 0.0);
    if (n == 0) {
        return a;
    }
    const std::size_t P = cfg.n_permutations;
    std::vector<std::vector<double>> contrib(P);
    parallel_for(P, [&](std::size_t p) {
        // antithetic pairs: odd draws walk the previous permutation backwards
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = Rng::derive(cfg.seed, 0x5A4B, p / 2);
        rng.shuffle(order);
        if (p % 2 == 1) {
            std::reverse(order.begin(), order.end());
        }
        std::vector<char> present(n, 0);
        auto& c = contrib[p];
        c.assign(n, 0.0);
        double prev = a.base_value;
        for (std::size_t k = 0; k < n; ++k) {
            present[order[k]] = 1;
            const double cur = k + 1 == n ? a.fx : game.value(present);
            c[order[k]] = cur - prev;
            prev = cur;
        }
    });
    for (const auto& c : contrib) {
        for (std::size_t i = 0; i < n; ++i) {
            a.phi[i] += c[i];
        }
    }
    for (auto& f : a.phi) {
        f /= static_cast<double>(P);
    }
    a.evaluations += P * (n - 1);
    const double shift = (a.fx - a.base_value - a.phi_sum()) / static_cast<double>(n);
    for (auto& f : a.phi) {
        f += shift;
    }
    return a;
}

Attribution explain(const Game& game, const ExplainConfig& cfg) {
    return game.size() <= cfg.exact_max_tokens ? shapley_exact(game, cfg) : shapley_sampled(game, cfg);
}

namespace {

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

struct Tint {
    int r, g, b;
};
constexpr Tint kRed{214, 39, 40};
constexpr Tint kBlue{31, 119, 180};

}  // namespace

std::string render_html(const Attribution& a, const std::string& title) {
    const double m = max_abs(a.phi);
    std::string out;
    out += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + html_escape(title) + "</title>\n";
    out += "<style>body{font-family:sans-serif;margin:2em;line-height:2.2}"
           ".tok{padding:2px 4px;margin:0 1px;border-radius:3px}"
           ".summary{color:#444;font-size:90%}</style>\n</head>\n<body>\n";
    out += "<h1>" + html_escape(title) + "</h1>\n";
    out += "<p class=\"summary\" data-base=\"" + format_double(a.base_value) + "\" data-fx=\"" + format_double(a.fx) +
           "\">base value " + format_fixed(a.base_value, 4) + " &rarr; f(x) " + format_fixed(a.fx, 4) + " (" +
           (a.exact ? "exact" : "sampled") + ")</p>\n<p class=\"text\">\n";
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        const double phi = a.phi[i];
        out += "<span class=\"tok\" data-phi=\"" + format_double(phi) + "\"";
        if (m > 0.0 && phi != 0.0) {
            const Tint t = phi > 0 ? kRed : kBlue;
            out += " style=\"background-color:rgba(" + std::to_string(t.r) + "," + std::to_string(t.g) + "," +
                   std::to_string(t.b) + "," + format_fixed(std::abs(phi) / m, 3) + ")\"";
        }
        out += " title=\"" + format_double(phi) + "\">" + html_escape(a.tokens[i]) + "</span>\n";
    }
    out += "</p>\n</body>\n</html>\n";
    return out;
}

std::string render_ansi(const Attribution& a) {
    const double m = max_abs(a.phi);
    std::string out;
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        if (i) {
            out += ' ';
        }
        const double phi = a.phi[i];
        if (m > 0.0 && phi != 0.0) {
            const Tint t = phi > 0 ? kRed : kBlue;
            const double alpha = std::abs(phi) / m;
            auto blend = [&](int c) { return std::to_string(static_cast<int>(std::lround(255 - alpha * (255 - c)))); };
            out += "\x1b[48;2;" + blend(t.r) + ";" + blend(t.g) + ";" + blend(t.b) + "m" + a.tokens[i] + "\x1b[0m";
        } else {
            out += a.tokens[i];
        }
    }
    out += "\nbase " + format_fixed(a.base_value, 4) + " -> f(x) " + format_fixed(a.fx, 4) + "\n";
    return out;
}

std::string sidecar_csv(const Attribution& a) {
    std::string out = "token,phi\n";
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        out += csv::escape(a.tokens[i]) + "," + format_double(a.phi[i]) + "\n";
    }
    return out;
}

std::string summary_json(const Attribution& a) {
    nlohmann::ordered_json j;
    j["method"] = a.exact ? "exact" : "sampled";
    j["base_value"] = a.base_value;
    j["fx"] = a.fx;
    j["phi_sum"] = a.phi_sum();
    j["n_tokens"] = a.tokens.size();
    j["evaluations"] = a.evaluations;
    return j.dump(2) + "\n";
}

void render_report(const Attribution& a, const std::filesystem::path& html_path) {
    write_file_atomic(html_path, render_html(a));
    auto side = html_path;
    side.replace_extension(".csv");
    write_file_atomic(side, sidecar_csv(a));
}

}  // namespace inflacast::attribution
