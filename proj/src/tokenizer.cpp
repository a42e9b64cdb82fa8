#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "inflacast/common.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/text.hpp"

namespace inflacast::encoder {

namespace {

std::vector<std::string> characters(std::string_view word) {
    std::vector<std::string> out;
    for (char32_t cp : text::decode_utf8(word)) {
        std::string s;
        text::append_utf8(s, cp);
        out.push_back(std::move(s));
    }
    return out;
}

std::uint64_t pair_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

std::size_t Encoding::active() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

SubwordTokenizer SubwordTokenizer::train(const std::vector<std::string>& corpus, std::size_t vocab_size) {
    if (corpus.empty()) {
        throw Error("tokenizer training corpus is empty");
    }
    std::map<std::string, std::uint64_t> word_freq;
    for (const auto& doc : corpus) {
        for (auto& w : text::split_words(text::normalize(doc))) {
            ++word_freq[w];
        }
    }
    std::set<std::string> alphabet{std::string(kWordStart)};
    for (const auto& [w, f] : word_freq) {
        for (auto& c : characters(w)) {
            alphabet.insert(std::move(c));
        }
    }

    SubwordTokenizer tok;
    tok.capacity_ = vocab_size;
    tok.symbols_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    tok.symbols_.insert(tok.symbols_.end(), alphabet.begin(), alphabet.end());
    tok.base_size_ = alphabet.size();
    if (vocab_size < tok.symbols_.size()) {
        throw UsageError("vocab_size " + std::to_string(vocab_size) + " cannot hold the " +
                         std::to_string(kSpecials) + " special tokens and " + std::to_string(alphabet.size()) +
                         " base symbols");
    }
    tok.rebuild_index();

    // Work on symbol ids; words are kept with their frequencies.
    struct Word {
        std::vector<int> seq;
        std::uint64_t freq;
    };
    std::vector<Word> words;
    words.reserve(word_freq.size());
    for (const auto& [w, f] : word_freq) {
        Word wd{{tok.index_.at(std::string(kWordStart))}, f};
        for (const auto& c : characters(w)) {
            wd.seq.push_back(tok.index_.at(c));
        }
        words.push_back(std::move(wd));
    }

    while (tok.symbols_.size() < vocab_size) {
        std::unordered_map<std::uint64_t, std::uint64_t> counts;
        for (const auto& w : words) {
            for (std::size_t i = 0; i + 1 < w.seq.size(); ++i) {
                counts[pair_key(w.seq[i], w.seq[i + 1])] += w.freq;
            }
        }
        if (counts.empty()) {
            break;
        }
        std::uint64_t best_count = 0;
        std::pair<int, int> best{-1, -1};
        for (const auto& [key, c] : counts) {
            const int a = static_cast<int>(key >> 32);
            const int b = static_cast<int>(key & 0xffffffffu);
            bool better = c > best_count;
            if (!better && c == best_count) {
                const auto& sa = tok.symbols_[static_cast<std::size_t>(a)];
                const auto& sb = tok.symbols_[static_cast<std::size_t>(b)];
                const auto& ba = tok.symbols_[static_cast<std::size_t>(best.first)];
                const auto& bb = tok.symbols_[static_cast<std::size_t>(best.second)];
                better = std::tie(sa, sb) < std::tie(ba, bb);
            }
            if (better) {
                best_count = c;
                best = {a, b};
            }
        }
        const auto& left = tok.symbols_[static_cast<std::size_t>(best.first)];
        const auto& right = tok.symbols_[static_cast<std::size_t>(best.second)];
        const std::string merged = left + right;
        tok.merges_.emplace_back(left, right);
        int merged_id;
        if (auto it = tok.index_.find(merged); it != tok.index_.end()) {
            merged_id = it->second;
        } else {
            merged_id = static_cast<int>(tok.symbols_.size());
            tok.symbols_.push_back(merged);
            tok.index_.emplace(merged, merged_id);
        }
        for (auto& w : words) {
            std::vector<int> out;
            out.reserve(w.seq.size());
            for (std::size_t i = 0; i < w.seq.size(); ++i) {
                if (i + 1 < w.seq.size() && w.seq[i] == best.first && w.seq[i + 1] == best.second) {
                    out.push_back(merged_id);
                    ++i;
                } else {
                    out.push_back(w.seq[i]);
                }
            }
            w.seq = std::move(out);
        }
    }
    tok.rebuild_index();
    return tok;
}

void SubwordTokenizer::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        index_.emplace(symbols_[i], static_cast<int>(i));
    }
    rank_.clear();
    for (std::size_t r = 0; r < merges_.size(); ++r) {
        rank_.emplace(merges_[r], static_cast<int>(r));  // a repeated pair keeps its first rank
    }
}

int SubwordTokenizer::id_of(const std::string& symbol) const {
    const auto it = index_.find(symbol);
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> SubwordTokenizer::encode_word(std::string_view word) const {
    std::vector<std::string> seq{std::string(kWordStart)};
    for (auto& c : characters(word)) {
        seq.push_back(std::move(c));
    }
    for (;;) {
        int best_rank = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            const auto it = rank_.find({seq[i], seq[i + 1]});
            if (it != rank_.end() && it->second < best_rank) {
                best_rank = it->second;
            }
        }
        if (best_rank == std::numeric_limits<int>::max()) {
            break;
        }
        const auto& [a, b] = merges_[static_cast<std::size_t>(best_rank)];
        std::vector<std::string> out;
        out.reserve(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i + 1 < seq.size() && seq[i] == a && seq[i + 1] == b) {
                out.push_back(a + b);
                ++i;
            } else {
                out.push_back(std::move(seq[i]));
            }
        }
        seq = std::move(out);
    }
    std::vector<int> ids;
    ids.reserve(seq.size());
    for (const auto& s : seq) {
        const int id = id_of(s);
        ids.push_back(id < 0 ? kUnk : id);
    }
    return ids;
}

std::vector<int> SubwordTokenizer::tokenize(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& w : text::split_words(text::normalize(text))) {
        const auto part = encode_word(w);
        ids.insert(ids.end(), part.begin(), part.end());
    }
    return ids;
}

std::vector<std::string> SubwordTokenizer::pieces(std::string_view text) const {
    std::vector<std::string> out;
    for (int id : tokenize(text)) {
        out.push_back(symbols_[static_cast<std::size_t>(id)]);
    }
    return out;
}

Encoding SubwordTokenizer::encode(std::string_view text, std::size_t max_len) const {
    return encode_words(text::split_words(text::normalize(text)), max_len);
}

Encoding SubwordTokenizer::encode_words(const std::vector<std::string>& words, std::size_t max_len) const {
    if (max_len < 2) {
        throw UsageError("max_len must leave room for [CLS] and [SEP]");
    }
    Encoding e;
    e.ids.assign(max_len, kPad);
    e.mask.assign(max_len, 0);
    e.word_of.assign(max_len, -1);
    std::size_t pos = 0;
    e.ids[pos] = kCls;
    e.mask[pos++] = 1;
    const std::size_t limit = max_len - 1;
    for (std::size_t w = 0; w < words.size() && pos < limit; ++w) {
        for (int id : encode_word(words[w])) {
            if (pos >= limit) {
                break;
            }
            e.ids[pos] = id;
            e.mask[pos] = 1;
            e.word_of[pos++] = static_cast<int>(w);
        }
    }
    e.ids[pos] = kSep;
    e.mask[pos] = 1;
    return e;
}

std::string SubwordTokenizer::decode(const std::vector<int>& ids) const {
    std::string joined;
    for (int id : ids) {
        if (id < kSpecials || static_cast<std::size_t>(id) >= symbols_.size()) {
            continue;
        }
        joined += symbols_[static_cast<std::size_t>(id)];
    }
    std::string out;
    std::size_t i = 0;
    while (i < joined.size()) {
        if (joined.compare(i, kWordStart.size(), kWordStart) == 0) {
            out += ' ';
            i += kWordStart.size();
        } else {
            out += joined[i++];
        }
    }
    return std::string(trim(out));
}

std::string SubwordTokenizer::to_json() const {
    nlohmann::ordered_json j;
    j["capacity"] = capacity_;
    j["base_size"] = base_size_;
    j["symbols"] = symbols_;
    auto merges = nlohmann::json::array();
    for (const auto& [a, b] : merges_) {
        merges.push_back({a, b});
    }
    j["merges"] = std::move(merges);
    return j.dump();
}

SubwordTokenizer SubwordTokenizer::from_json(std::string_view json) {
    SubwordTokenizer tok;
    try {
        const auto j = nlohmann::json::parse(json);
        tok.capacity_ = j.at("capacity").get<std::size_t>();
        tok.base_size_ = j.at("base_size").get<std::size_t>();
        tok.symbols_ = j.at("symbols").get<std::vector<std::string>>();
        for (const auto& m : j.at("merges")) {
            tok.merges_.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tokenizer description: ") + e.what());
    }
    if (tok.symbols_.size() < kSpecials + tok.base_size_) {
        throw ParseError("tokenizer description: too few symbols");
    }
    tok.rebuild_index();
    return tok;
}

}  // namespace inflacast::encoder
