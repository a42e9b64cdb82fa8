#include "inflacast/vectorizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inflacast/common.hpp"
#include "inflacast/text.hpp"

namespace inflacast::vectorizer {

namespace {
constexpr std::string_view kMagic = "inflacast-tfidf v1";
}

double SparseVector::norm() const {
    double sum = 0.0;
    for (const auto& e : entries) {
        sum += e.weight * e.weight;
    }
    return std::sqrt(sum);
}

double SparseVector::dot(const std::vector<double>& dense) const {
    double sum = 0.0;
    for (const auto& e : entries) {
        sum += e.weight * dense[e.index];
    }
    return sum;
}

double SparseVector::at(std::uint32_t index) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), index,
                               [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
    return it != entries.end() && it->index == index ? it->weight : 0.0;
}

std::vector<std::string> tokenize(std::string_view text) { return tokenize(text, TfidfConfig{}); }

std::vector<std::string> tokenize(std::string_view text, const TfidfConfig& cfg) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t length = 0;
    auto flush = [&] {
        if (length >= cfg.min_token_len && length > 0) {
            tokens.push_back(current);
        }
        current.clear();
        length = 0;
    };
    for (char32_t cp : text::decode_utf8(text)) {
        if (text::is_word_char(cp)) {
            text::append_utf8(current, cfg.lowercase ? text::to_lower(cp) : cp);
            ++length;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

long long Vocabulary::find(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? -1 : static_cast<long long>(it->second);
}

TfidfModel TfidfModel::fit(const std::vector<std::string>& docs, const TfidfConfig& cfg) {
    if (docs.empty()) {
        throw Error("cannot fit a vectorizer on zero documents");
    }
    if (cfg.max_vocab == 0) {
        throw UsageError("max_vocab must be positive");
    }
    std::unordered_map<std::string, std::pair<std::uint64_t, std::uint64_t>> stats;  // term -> (count, df)
    for (const auto& doc : docs) {
        auto tokens = tokenize(doc, cfg);
        std::sort(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size();) {
            std::size_t j = i;
            while (j < tokens.size() && tokens[j] == tokens[i]) {
                ++j;
            }
            auto& s = stats[tokens[i]];
            s.first += j - i;
            s.second += 1;
            i = j;
        }
    }
    if (stats.empty()) {
        throw Error("cannot fit a vectorizer: every document is empty after tokenization");
    }

    std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> ranked(stats.begin(), stats.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) {
            return a.second.first > b.second.first;
        }
        return a.first < b.first;
    });
    if (ranked.size() > cfg.max_vocab) {
        ranked.resize(cfg.max_vocab);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    TfidfModel m;
    m.cfg_ = cfg;
    m.vocab_.n_docs = docs.size();
    const auto n = static_cast<double>(docs.size());
    for (const auto& [term, s] : ranked) {
        const auto idx = static_cast<std::uint32_t>(m.vocab_.terms.size());
        m.vocab_.index.emplace(term, idx);
        m.vocab_.terms.push_back(term);
        m.vocab_.df.push_back(s.second);
        m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(s.second))) + 1.0);
    }
    return m;
}

SparseVector TfidfModel::transform(std::string_view doc) const { return transform_tokens(tokenize(doc, cfg_)); }

SparseVector TfidfModel::transform_tokens(const std::vector<std::string>& tokens) const {
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto it = vocab_.index.find(t);
        if (it != vocab_.index.end()) {
            ids.push_back(it->second);
        }
    }
    std::sort(ids.begin(), ids.end());
    SparseVector v;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) {
            ++j;
        }
        v.entries.push_back({ids[i], static_cast<double>(j - i) * idf_[ids[i]]});
        i = j;
    }
    const double norm = v.norm();
    if (norm > 0.0) {
        for (auto& e : v.entries) {
            e.weight /= norm;
        }
    }
    return v;
}

std::string TfidfModel::serialize() const {
    std::string out(kMagic);
    out += "\n";
    out += "n_docs=" + std::to_string(vocab_.n_docs) + ",lowercase=" + (cfg_.lowercase ? "1" : "0") +
           ",min_token_len=" + std::to_string(cfg_.min_token_len) + ",max_vocab=" + std::to_string(cfg_.max_vocab) +
           "\n";
    out += "term,index,df,idf\n";
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        out += csv::escape(vocab_.terms[i]) + "," + std::to_string(i) + "," + std::to_string(vocab_.df[i]) + "," +
               format_double(idf_[i]) + "\n";
    }
    return out;
}

TfidfModel TfidfModel::deserialize(std::string_view content) {
    std::istringstream in{std::string(content)};
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw ParseError("not a tfidf model file (bad magic)", 1);
    }
    TfidfModel m;
    if (!std::getline(in, line)) {
        throw ParseError("missing tfidf config line", 2);
    }
    for (const auto& kv : csv::split_line(line)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ParseError("bad tfidf config entry '" + kv + "'", 2);
        }
        const auto key = kv.substr(0, eq);
        const auto value = parse_int(kv.substr(eq + 1));
        if (key == "n_docs") {
            m.vocab_.n_docs = static_cast<std::uint64_t>(value);
        } else if (key == "lowercase") {
            m.cfg_.lowercase = value != 0;
        } else if (key == "min_token_len") {
            m.cfg_.min_token_len = static_cast<std::size_t>(value);
        } else if (key == "max_vocab") {
            m.cfg_.max_vocab = static_cast<std::size_t>(value);
        } else {
            throw ParseError("unknown tfidf config key '" + key + "'", 2);
        }
    }
    if (!std::getline(in, line) || line != "term,index,df,idf") {
        throw ParseError("missing tfidf table header", 3);
    }
    std::size_t line_no = 3;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() != 4) {
            throw ParseError("expected term,index,df,idf", line_no);
        }
        const auto idx = static_cast<std::size_t>(parse_int(f[1]));
        if (idx != m.vocab_.terms.size()) {
            throw ParseError("vocabulary indices must be dense and ordered", line_no);
        }
        m.vocab_.index.emplace(f[0], static_cast<std::uint32_t>(idx));
        m.vocab_.terms.push_back(f[0]);
        m.vocab_.df.push_back(static_cast<std::uint64_t>(parse_int(f[2])));
        m.idf_.push_back(parse_double(f[3]));
    }
    return m;
}

void TfidfModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

TfidfModel TfidfModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace inflacast::vectorizer
