#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace inflacast::vectorizer {

struct SparseEntry {
    std::uint32_t index = 0;
    double weight = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse document vector; entries sorted by strictly increasing index.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const noexcept { return entries.empty(); }
    double norm() const;
    double dot(const std::vector<double>& dense) const;
    /// Value at `index`, 0 when absent.
    double at(std::uint32_t index) const;

    friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

struct TfidfConfig {
    bool lowercase = true;
    std::size_t min_token_len = 2;  // in code points
    std::size_t max_vocab = 50000;
};

/// Lowercases, then returns maximal runs of word characters at least two code points long.
std::vector<std::string> tokenize(std::string_view text);

/// Tokenizer honouring a config (lowercase flag and minimum length).
std::vector<std::string> tokenize(std::string_view text, const TfidfConfig& cfg);

struct Vocabulary {
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::string> terms;  // terms[index[t]] == t
    std::vector<std::uint64_t> df;
    std::uint64_t n_docs = 0;

    std::size_t size() const noexcept { return terms.size(); }
    /// Returns -1 when the term is unknown.
    long long find(const std::string& term) const;
};

class TfidfModel {
public:
    TfidfModel() = default;

    /// Fit vocabulary and smoothed idf = ln((1 + n) / (1 + df)) + 1.
    static TfidfModel fit(const std::vector<std::string>& docs, const TfidfConfig& cfg = {});

    /// Raw counts times idf, L2-normalized. Out-of-vocabulary tokens are ignored.
    SparseVector transform(std::string_view doc) const;

    /// Same as transform, but over an explicit token list (used for coalition masking).
    SparseVector transform_tokens(const std::vector<std::string>& tokens) const;

    const Vocabulary& vocabulary() const noexcept { return vocab_; }
    const std::vector<double>& idf() const noexcept { return idf_; }
    const TfidfConfig& config() const noexcept { return cfg_; }
    std::size_t dimension() const noexcept { return vocab_.size(); }

    std::string serialize() const;
    static TfidfModel deserialize(std::string_view content);
    void save(const std::filesystem::path& path) const;
    static TfidfModel load(const std::filesystem::path& path);

private:
    TfidfConfig cfg_;
    Vocabulary vocab_;
    std::vector<double> idf_;
};

}  // namespace inflacast::vectorizer
