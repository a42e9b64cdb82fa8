#include "inflacast/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "inflacast/common.hpp"

namespace inflacast::config {

namespace {

bool is_bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

// Removes a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string parse_basic_string(std::string_view s, std::size_t line_no) {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '\\') {
            if (i + 2 >= s.size()) {
                throw ParseError("config: dangling escape", line_no);
            }
            switch (s[++i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: throw ParseError("config: unsupported escape", line_no);
            }
        } else {
            out += c;
        }
    }
    return out;
}

double parse_number(std::string_view s, std::size_t line_no) {
    try {
        return parse_double(s);
    } catch (const Error&) {
        throw ParseError("config: '" + std::string(s) + "' is not a number", line_no);
    }
}

Value parse_value(std::string_view raw, std::size_t line_no) {
    const auto v = trim(raw);
    if (v.empty()) {
        throw ParseError("config: missing value", line_no);
    }
    if (v.front() == '"' || v.front() == '\'') {
        if (v.size() < 2 || v.back() != v.front()) {
            throw ParseError("config: unterminated string", line_no);
        }
        if (v.front() == '\'') {
            return std::string(v.substr(1, v.size() - 2));
        }
        return parse_basic_string(v, line_no);
    }
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    if (v.front() == '[') {
        if (v.back() != ']') {
            throw ParseError("config: arrays must close on the same line", line_no);
        }
        std::vector<double> items;
        auto body = v.substr(1, v.size() - 2);
        while (!trim(body).empty()) {
            const auto comma = body.find(',');
            const auto item = trim(body.substr(0, comma));
            if (item.empty()) {
                if (comma == std::string_view::npos) {
                    break;
                }
                throw ParseError("config: empty array element", line_no);
            }
            items.push_back(parse_number(item, line_no));
            if (comma == std::string_view::npos) {
                break;
            }
            body = body.substr(comma + 1);
        }
        if (items.empty()) {
            throw ParseError("config: empty arrays are not allowed", line_no);
        }
        return items;
    }
    const bool integral = std::all_of(v.begin(), v.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+';
    });
    if (integral) {
        try {
            return parse_int(v);
        } catch (const Error&) {
            throw ParseError("config: '" + std::string(v) + "' is not an integer", line_no);
        }
    }
    return parse_number(v, line_no);
}

std::string value_to_toml(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, long long>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                auto s = format_double(x);
                if (s.find_first_of(".eEn") == std::string::npos) {
                    s += ".0";
                }
                return s;
            } else if constexpr (std::is_same_v<T, std::string>) {
                std::string out = "\"";
                for (char c : x) {
                    if (c == '"' || c == '\\') {
                        out += '\\';
                    }
                    if (c == '\n') {
                        out += "\\n";
                        continue;
                    }
                    out += c;
                }
                return out + "\"";
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < x.size(); ++i) {
                    out += (i ? ", " : "") + format_double(x[i]);
                }
                return out + "]";
            }
        },
        v);
}

// ---- typed accessors ---------------------------------------------------------

class Reader {
public:
    explicit Reader(const Document& doc) : doc_(doc) {}

    const Value* get(const std::string& section, const std::string& key) {
        used_.insert(section + "." + key);
        return doc_.find(section, key);
    }

    void number(const std::string& section, const std::string& key, double& out) {
        if (const auto* v = get(section, key)) {
            out = as_number(*v, section, key);
        }
    }
    template <class Int>
    void integer(const std::string& section, const std::string& key, Int& out) {
        if (const auto* v = get(section, key)) {
            const auto* i = std::get_if<long long>(v);
            if (!i || *i < 0) {
                throw UsageError("config: [" + section + "] " + key + " must be a non-negative integer");
            }
            out = static_cast<Int>(*i);
        }
    }
    void boolean(const std::string& section, const std::string& key, bool& out) {
        if (const auto* v = get(section, key)) {
            const auto* b = std::get_if<bool>(v);
            if (!b) {
                throw UsageError("config: [" + section + "] " + key + " must be true or false");
            }
            out = *b;
        }
    }
    void string(const std::string& section, const std::string& key, std::string& out) {
        if (const auto* v = get(section, key)) {
            const auto* s = std::get_if<std::string>(v);
            if (!s) {
                throw UsageError("config: [" + section + "] " + key + " must be a string");
            }
            out = *s;
        }
    }
    void path(const std::string& section, const std::string& key, std::filesystem::path& out) {
        std::string s;
        string(section, key, s);
        if (!s.empty()) {
            out = s;
        }
    }
    void grid(const std::string& section, std::map<std::string, Grid>& grids) {
        for (auto& [key, values] : grids) {
            if (const auto* v = get(section, key)) {
                if (const auto* arr = std::get_if<std::vector<double>>(v)) {
                    values = *arr;
                } else {
                    values = {as_number(*v, section, key)};
                }
            }
        }
    }

    void reject_unused() const {
        for (const auto& [section, keys] : doc_.sections()) {
            for (const auto& [key, value] : keys) {
                if (!used_.count(section + "." + key)) {
                    throw UsageError("config: unknown key '" + key + "' in [" + section + "]");
                }
            }
        }
    }

private:
    static double as_number(const Value& v, const std::string& section, const std::string& key) {
        if (const auto* d = std::get_if<double>(&v)) {
            return *d;
        }
        if (const auto* i = std::get_if<long long>(&v)) {
            return static_cast<double>(*i);
        }
        throw UsageError("config: [" + section + "] " + key + " must be a number");
    }

    const Document& doc_;
    std::set<std::string> used_;
};

}  // namespace

Document Document::parse(std::string_view text) {
    Document doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ParseError("config: malformed section header", line_no);
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty() || !std::all_of(section.begin(), section.end(), [](char c) {
                    return is_bare_key_char(c) || c == '.';
                })) {
                throw ParseError("config: malformed section name", line_no);
            }
            doc.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("config: expected key = value", line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty() || !std::all_of(key.begin(), key.end(), is_bare_key_char)) {
            throw ParseError("config: malformed key '" + key + "'", line_no);
        }
        if (section.empty()) {
            throw ParseError("config: key '" + key + "' appears before any [section]", line_no);
        }
        auto& keys = doc.sections_[section];
        if (keys.count(key)) {
            throw ParseError("config: duplicate key '" + key + "' in [" + section + "]", line_no);
        }
        keys.emplace(key, parse_value(line.substr(eq + 1), line_no));
    }
    return doc;
}

Document Document::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw UsageError("config file not found: " + path.string());
    }
    return parse(read_file(path));
}

bool Document::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

const Value* Document::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) {
        return nullptr;
    }
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

void Document::set(const std::string& section, const std::string& key, Value value) {
    sections_[section][key] = std::move(value);
}

std::string Document::to_toml() const {
    std::string out;
    for (const auto& [section, keys] : sections_) {
        if (!out.empty()) {
            out += '\n';
        }
        out += "[" + section + "]\n";
        for (const auto& [key, value] : keys) {
            out += key + " = " + value_to_toml(value) + "\n";
        }
    }
    return out;
}

const std::map<std::string, Grid>& BaselineGrids::for_model(const std::string& kind) const {
    if (kind == "logreg") {
        return logreg;
    }
    if (kind == "tree") {
        return tree;
    }
    if (kind == "forest") {
        return forest;
    }
    if (kind == "gbm") {
        return gbm;
    }
    throw UsageError("unknown baseline model '" + kind + "'");
}

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return base_dir / p;
}

EncoderSettings desk_encoder_defaults() {
    EncoderSettings s;
    s.model.vocab_size = 8000;
    s.model.d_model = 64;
    s.model.n_heads = 4;
    s.model.n_layers = 2;
    s.model.d_ff = 256;
    s.model.dropout = 0.1;
    s.train.batch_size = 32;
    s.train.epochs = 5;
    s.train.learning_rate = 1e-3;
    s.train.weight_decay = 0.01;
    return s;
}

PipelineConfig from_document(const Document& doc, const std::filesystem::path& base_dir) {
    PipelineConfig c;
    c.base_dir = base_dir;
    c.encoder = desk_encoder_defaults();
    Reader r(doc);

    r.integer("run", "seed", c.seed);

    r.path("paths", "groups", c.groups);
    r.path("paths", "posts", c.posts);
    r.path("paths", "series", c.series);
    r.path("paths", "labeled", c.labeled);

    r.integer("filter", "min_members", c.filter.min_members);
    r.number("filter", "min_share_pct", c.filter.min_share_pct);
    r.integer("filter", "sweep_lo", c.sweep_lo);
    r.integer("filter", "sweep_hi", c.sweep_hi);
    r.integer("filter", "sweep_steps", c.sweep_steps);
    r.integer("filter", "histogram_bins", c.histogram_bins);

    r.integer("labeler", "order", c.extrema.order);
    r.integer("labeler", "merge_window_months", c.extrema.merge_window_months);

    std::string first = c.window.first.str();
    std::string last = c.window.last.str();
    r.string("corpus", "window_first", first);
    r.string("corpus", "window_last", last);
    try {
        c.window.first = Month::parse(first);
        c.window.last = Month::parse(last);
    } catch (const Error& e) {
        throw UsageError(std::string("config: [corpus] window: ") + e.what());
    }
    r.boolean("corpus", "keep_empty", c.keep_empty);
    r.boolean("corpus", "lenient", c.lenient);
    r.boolean("corpus", "restrict_to_filtered_groups", c.restrict_to_filtered_groups);

    r.boolean("tfidf", "lowercase", c.tfidf.lowercase);
    r.integer("tfidf", "min_token_len", c.tfidf.min_token_len);
    r.integer("tfidf", "max_vocab", c.tfidf.max_vocab);

    r.grid("logreg", c.baselines.logreg);
    r.grid("tree", c.baselines.tree);
    r.grid("forest", c.baselines.forest);
    r.grid("gbm", c.baselines.gbm);
    r.integer("grid", "k_folds", c.baselines.k_folds);

    auto& em = c.encoder.model;
    auto& et = c.encoder.train;
    r.integer("encoder", "vocab_size", em.vocab_size);
    r.integer("encoder", "d_model", em.d_model);
    r.integer("encoder", "n_heads", em.n_heads);
    r.integer("encoder", "n_layers", em.n_layers);
    r.integer("encoder", "d_ff", em.d_ff);
    r.number("encoder", "dropout", em.dropout);
    r.boolean("encoder", "any_max_len", em.any_max_len);
    r.integer("encoder", "batch_size", et.batch_size);
    r.integer("encoder", "epochs", et.epochs);
    r.number("encoder", "learning_rate", et.learning_rate);
    r.number("encoder", "weight_decay", et.weight_decay);
    r.number("encoder", "beta1", et.beta1);
    r.number("encoder", "beta2", et.beta2);
    r.number("encoder", "epsilon", et.epsilon);

    r.integer("explain", "exact_max_tokens", c.explain.exact_max_tokens);
    r.integer("explain", "n_permutations", c.explain.n_permutations);
    r.integer("explain", "seed", c.explain.seed);
    if (!doc.has("explain", "seed")) {
        c.explain.seed = c.seed;
    }

    r.reject_unused();

    c.filter.validate();
    c.extrema.validate();
    et.validate();
    {
        auto em = c.encoder.model;  // max_len comes from the model name at train time
        em.max_len = 64;
        em.validate();
    }
    c.explain.validate();
    if (c.sweep_lo > c.sweep_hi || c.sweep_steps < 1) {
        throw UsageError("config: sweep needs sweep_lo <= sweep_hi and sweep_steps >= 1");
    }
    if (c.histogram_bins < 1) {
        throw UsageError("config: histogram_bins must be at least 1");
    }
    if (c.baselines.k_folds < 2) {
        throw UsageError("config: k_folds must be at least 2");
    }
    return c;
}

PipelineConfig load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    Document doc;
    std::filesystem::path base = std::filesystem::current_path();
    if (!path.empty()) {
        doc = Document::load(path);
        base = std::filesystem::absolute(path).parent_path();
    }
    if (seed_override) {
        doc.set("run", "seed", static_cast<long long>(*seed_override));
    }
    return from_document(doc, base);
}

namespace {

Value int_value(std::uint64_t v) { return static_cast<long long>(v); }

Value grid_value(const Grid& g) {
    if (g.size() == 1) {
        return g.front();
    }
    return g;
}

std::string relative_path(const PipelineConfig& cfg, const std::filesystem::path& p,
                          const std::filesystem::path& relative_to) {
    if (p.empty()) {
        return "";
    }
    const auto abs = std::filesystem::weakly_canonical(std::filesystem::absolute(cfg.resolve(p)));
    const auto base = std::filesystem::weakly_canonical(std::filesystem::absolute(relative_to));
    return abs.lexically_relative(base).generic_string();
}

}  // namespace

Document to_document(const PipelineConfig& cfg, const std::filesystem::path& relative_to) {
    Document d;
    d.set("run", "seed", int_value(cfg.seed));
    const std::pair<const char*, const std::filesystem::path*> paths[] = {
        {"groups", &cfg.groups}, {"posts", &cfg.posts}, {"series", &cfg.series}, {"labeled", &cfg.labeled}};
    for (const auto& [key, p] : paths) {
        if (!p->empty()) {
            d.set("paths", key, relative_path(cfg, *p, relative_to));
        }
    }
    d.set("filter", "min_members", int_value(cfg.filter.min_members));
    d.set("filter", "min_share_pct", cfg.filter.min_share_pct);
    d.set("filter", "sweep_lo", int_value(cfg.sweep_lo));
    d.set("filter", "sweep_hi", int_value(cfg.sweep_hi));
    d.set("filter", "sweep_steps", static_cast<long long>(cfg.sweep_steps));
    d.set("filter", "histogram_bins", static_cast<long long>(cfg.histogram_bins));
    d.set("labeler", "order", static_cast<long long>(cfg.extrema.order));
    d.set("labeler", "merge_window_months", static_cast<long long>(cfg.extrema.merge_window_months));
    d.set("corpus", "window_first", cfg.window.first.str());
    d.set("corpus", "window_last", cfg.window.last.str());
    d.set("corpus", "keep_empty", cfg.keep_empty);
    d.set("corpus", "lenient", cfg.lenient);
    d.set("corpus", "restrict_to_filtered_groups", cfg.restrict_to_filtered_groups);
    d.set("tfidf", "lowercase", cfg.tfidf.lowercase);
    d.set("tfidf", "min_token_len", int_value(cfg.tfidf.min_token_len));
    d.set("tfidf", "max_vocab", int_value(cfg.tfidf.max_vocab));
    for (const char* kind : {"logreg", "tree", "forest", "gbm"}) {
        for (const auto& [key, grid] : cfg.baselines.for_model(kind)) {
            d.set(kind, key, grid_value(grid));
        }
    }
    d.set("grid", "k_folds", static_cast<long long>(cfg.baselines.k_folds));
    const auto& em = cfg.encoder.model;
    const auto& et = cfg.encoder.train;
    d.set("encoder", "vocab_size", int_value(em.vocab_size));
    d.set("encoder", "d_model", int_value(em.d_model));
    d.set("encoder", "n_heads", int_value(em.n_heads));
    d.set("encoder", "n_layers", int_value(em.n_layers));
    d.set("encoder", "d_ff", int_value(em.d_ff));
    d.set("encoder", "dropout", em.dropout);
    d.set("encoder", "any_max_len", em.any_max_len);
    d.set("encoder", "batch_size", int_value(et.batch_size));
    d.set("encoder", "epochs", static_cast<long long>(et.epochs));
    d.set("encoder", "learning_rate", et.learning_rate);
    d.set("encoder", "weight_decay", et.weight_decay);
    d.set("encoder", "beta1", et.beta1);
    d.set("encoder", "beta2", et.beta2);
    d.set("encoder", "epsilon", et.epsilon);
    d.set("explain", "exact_max_tokens", int_value(cfg.explain.exact_max_tokens));
    d.set("explain", "n_permutations", int_value(cfg.explain.n_permutations));
    d.set("explain", "seed", int_value(cfg.explain.seed));
    return d;
}

}  // namespace inflacast::config
