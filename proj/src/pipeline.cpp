#include "inflacast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "inflacast/common.hpp"
#include "inflacast/corpus.hpp"
#include "inflacast/evalkit.hpp"
#include "inflacast/parallel.hpp"
#include "inflacast/random.hpp"
#include "inflacast/svg.hpp"

namespace inflacast::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kBundleMagic = "inflacast-bundle v1";
constexpr std::string_view kEncoderMagic = "inflacast-encoder v1";

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Context {
public:
    Context(const RunOptions& opt, std::string command)
        : cfg(config::load(opt.config, opt.seed)), out(opt.out), command_(std::move(command)), quiet_(opt.quiet) {
        if (out.empty()) {
            throw UsageError("--out must not be empty");
        }
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec || !fs::is_directory(out)) {
            throw UsageError("cannot create output directory '" + out.string() + "'");
        }
        write_file_atomic(out / "config.toml", config::to_document(cfg, out).to_toml());
    }

    /// Timestamped line in run.log, echoed to stderr unless quiet.
    void log(const std::string& message) const {
        std::ofstream f(out / "run.log", std::ios::app);
        f << utc_timestamp() << ' ' << command_ << ' ' << message << '\n';
        if (!quiet_) {
            std::cerr << command_ << ": " << message << '\n';
        }
    }

    fs::path require_input(const fs::path& configured, const std::string& key) const {
        if (configured.empty()) {
            throw UsageError("no " + key + " file configured; set [paths] " + key);
        }
        const auto p = cfg.resolve(configured);
        if (!fs::is_regular_file(p)) {
            throw UsageError(key + " file not found: " + p.string());
        }
        return p;
    }

    fs::path labeled_path() const {
        if (!cfg.labeled.empty()) {
            return require_input(cfg.labeled, "labeled");
        }
        const auto p = out / "labeled_posts.jsonl";
        if (!fs::is_regular_file(p)) {
            throw UsageError("labeled corpus not found: " + p.string() + " (run `label` first)");
        }
        return p;
    }

    config::PipelineConfig cfg;
    fs::path out;

private:
    std::string command_;
    bool quiet_;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Reads "<tag> <n>\n" followed by n raw bytes.
std::string_view take_section(std::string_view& rest, std::string_view tag) {
    const auto nl = rest.find('\n');
    if (nl == std::string_view::npos) {
        throw ParseError("model bundle: missing " + std::string(tag) + " section");
    }
    const auto header = rest.substr(0, nl);
    if (header.substr(0, tag.size()) != tag || header.size() <= tag.size() + 1 || header[tag.size()] != ' ') {
        throw ParseError("model bundle: expected " + std::string(tag) + " section");
    }
    long long n = 0;
    try {
        n = parse_int(header.substr(tag.size() + 1));
    } catch (const Error&) {
        throw ParseError("model bundle: bad " + std::string(tag) + " length");
    }
    rest.remove_prefix(nl + 1);
    if (n < 0 || static_cast<std::size_t>(n) > rest.size()) {
        throw ParseError("model bundle: truncated " + std::string(tag) + " section");
    }
    const auto body = rest.substr(0, static_cast<std::size_t>(n));
    rest.remove_prefix(static_cast<std::size_t>(n));
    return body;
}

struct Corpus {
    std::vector<labeler::LabeledPost> posts;
    std::vector<int> labels;
    evalkit::DatasetSplit split;

    std::vector<std::string> texts(const std::vector<std::size_t>& idx) const {
        std::vector<std::string> t;
        t.reserve(idx.size());
        for (auto i : idx) {
            t.push_back(posts[i].post.text);
        }
        return t;
    }
    std::vector<int> labels_of(const std::vector<std::size_t>& idx) const {
        std::vector<int> y;
        y.reserve(idx.size());
        for (auto i : idx) {
            y.push_back(labels[i]);
        }
        return y;
    }
};

Corpus load_corpus(const Context& ctx) {
    Corpus c;
    c.posts = read_labeled_jsonl(ctx.labeled_path());
    for (const auto& p : c.posts) {
        c.labels.push_back(p.label);
    }
    c.split = evalkit::split(c.labels, ctx.cfg.seed);
    return c;
}

std::vector<double> predict_all(const TrainedModel& m, const std::vector<std::string>& texts) {
    std::vector<double> proba(texts.size());
    parallel_for(texts.size(), [&](std::size_t i) { proba[i] = m.predict(texts[i]); });
    return proba;
}

std::vector<int> to_classes(const std::vector<double>& proba) {
    std::vector<int> pred;
    pred.reserve(proba.size());
    for (double p : proba) {
        pred.push_back(p >= 0.5 ? 1 : 0);
    }
    return pred;
}

std::string predictions_csv(const Corpus& c, const std::vector<std::size_t>& idx, const std::vector<double>& proba) {
    std::string out = "post_id,label,proba,pred\n";
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out += csv::escape(c.posts[idx[k]].post.post_id) + "," + std::to_string(c.labels[idx[k]]) + "," +
               format_double(proba[k]) + "," + (proba[k] >= 0.5 ? "1" : "0") + "\n";
    }
    return out;
}

std::string grid_csv(const std::vector<baselines::ParamMap>& cells, const baselines::GridResult& gr) {
    std::string out;
    if (cells.empty()) {
        return out;
    }
    for (const auto& [k, v] : cells.front()) {
        out += k + ",";
    }
    out += "mean_macro_f1,best\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (const auto& [k, v] : cells[i]) {
            out += format_double(v) + ",";
        }
        out += format_double(gr.mean_scores[i]) + "," + (i == gr.best_index ? "1" : "0") + "\n";
    }
    return out;
}

TrainedModel train_baseline(const Context& ctx, const Corpus& c, const std::string& name) {
    const auto& cfg = ctx.cfg;
    const auto tfidf = vectorizer::TfidfModel::fit(c.texts(c.split.train), cfg.tfidf);
    baselines::Dataset data;
    data.n_features = tfidf.dimension();
    for (auto i : c.split.train) {
        data.rows.push_back(tfidf.transform(c.posts[i].post.text));
        data.labels.push_back(c.labels[i]);
    }
    std::vector<std::pair<std::string, std::vector<double>>> axes(cfg.baselines.for_model(name).begin(),
                                                                   cfg.baselines.for_model(name).end());
    if (name == "forest") {
        // Forest seeds travel through the double-valued parameter map.
        axes.emplace_back("seed", std::vector<double>{static_cast<double>(cfg.seed & ((std::uint64_t{1} << 53) - 1))});
    }
    const auto cells = baselines::expand_grid(axes);
    const auto trainer = baselines::trainer_for(name);
    baselines::ParamMap chosen = cells.front();
    if (cells.size() > 1) {
        const auto gr = baselines::grid_search(trainer, cells, data, cfg.baselines.k_folds, cfg.seed);
        chosen = gr.best;
        fs::create_directories(ctx.out / "grid");
        write_file_atomic(ctx.out / "grid" / (name + ".csv"), grid_csv(cells, gr));
        ctx.log(name + " grid search over " + std::to_string(cells.size()) + " cells, best cell " +
                std::to_string(gr.best_index) + " mean macro-F1 " + format_fixed(gr.mean_scores[gr.best_index], 4));
    }
    return TrainedModel{BaselineBundle{tfidf, trainer(chosen, data)}};
}

TrainedModel train_encoder(const Context& ctx, const Corpus& c, const std::string& name) {
    auto settings = ctx.cfg.encoder;
    settings.model.max_len = encoder_max_len(name);
    auto tok = encoder::SubwordTokenizer::train(c.texts(c.split.train), settings.model.vocab_size);
    settings.model.vocab_size = tok.vocab_size();
    settings.model.validate();
    settings.train.seed = ctx.cfg.seed;

    auto encode = [&](const std::vector<std::size_t>& idx) {
        encoder::LabeledSequences s;
        s.inputs.resize(idx.size());
        parallel_for(idx.size(), [&](std::size_t k) {
            s.inputs[k] = tok.encode(c.posts[idx[k]].post.text, settings.model.max_len);
        });
        s.labels = c.labels_of(idx);
        return s;
    };
    const auto train_set = encode(c.split.train);
    const auto val_set = encode(c.split.validation);

    auto model = encoder::EncoderModel::initialized(settings.model, Rng::derive(ctx.cfg.seed, 0xE7C0).next());
    const auto curve = encoder::train(model, train_set, val_set, settings.train, [&](const encoder::EpochLoss& e) {
        ctx.log(name + " epoch " + std::to_string(e.epoch) + " train_loss " + format_fixed(e.train_loss, 6) +
                " val_loss " + format_fixed(e.val_loss, 6));
    });

    fs::create_directories(ctx.out / "curves");
    write_file_atomic(ctx.out / "curves" / (name + "_loss.csv"), curve.to_csv());
    svg::Series tr{"train", {}, {}, "#1f77b4"};
    svg::Series va{"validation", {}, {}, "#ff7f0e"};
    for (const auto& e : curve.epochs) {
        tr.x.push_back(e.epoch);
        tr.y.push_back(e.train_loss);
        va.x.push_back(e.epoch);
        va.y.push_back(e.val_loss);
    }
    write_file_atomic(ctx.out / "curves" / (name + "_loss.svg"),
                      svg::line_chart(name + " loss", "epoch", "cross-entropy", {tr, va}));
    return TrainedModel{encoder::EncoderClassifier{std::move(tok), std::move(model)}};
}

evalkit::MetricsReport score(const Corpus& c, const std::vector<double>& proba) {
    return evalkit::metrics(evalkit::confusion(c.labels_of(c.split.test), to_classes(proba)));
}

fs::path resolve_model(const Context& ctx, const std::string& model) {
    if (model.empty()) {
        throw UsageError("no model given");
    }
    if (fs::is_regular_file(model)) {
        return model;
    }
    const auto named = ctx.out / "models" / (model + ".model");
    if (fs::is_regular_file(named)) {
        return named;
    }
    throw UsageError("model not found: " + model);
}

}  // namespace

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"logreg",     "tree",        "forest",      "gbm",
                                                "encoder-64", "encoder-128", "encoder-256", "encoder-512"};
    return names;
}

bool is_encoder_model(const std::string& name) { return name.rfind("encoder-", 0) == 0; }

std::size_t encoder_max_len(const std::string& name) {
    if (!is_encoder_model(name) || std::find(model_names().begin(), model_names().end(), name) == model_names().end()) {
        throw UsageError("unknown encoder model '" + name + "'");
    }
    return static_cast<std::size_t>(parse_int(name.substr(8)));
}

std::string BaselineBundle::serialize() const {
    const auto t = tfidf.serialize();
    const auto m = baselines::serialize(model);
    std::string out(kBundleMagic);
    out += "\ntfidf " + std::to_string(t.size()) + "\n" + t;
    out += "model " + std::to_string(m.size()) + "\n" + m;
    return out;
}

BaselineBundle BaselineBundle::deserialize(std::string_view bytes) {
    if (bytes.substr(0, kBundleMagic.size()) != kBundleMagic || bytes.size() <= kBundleMagic.size() ||
        bytes[kBundleMagic.size()] != '\n') {
        throw ParseError("not a baseline model bundle");
    }
    auto rest = bytes.substr(kBundleMagic.size() + 1);
    const auto t = take_section(rest, "tfidf");
    const auto m = take_section(rest, "model");
    BaselineBundle b{vectorizer::TfidfModel::deserialize(t), baselines::deserialize(m)};
    if (baselines::model_dimension(b.model) != b.tfidf.dimension()) {
        throw ParseError("model bundle: model and vectorizer dimensions differ");
    }
    return b;
}

TrainedModel TrainedModel::load(const fs::path& path) {
    if (!fs::is_regular_file(path)) {
        throw UsageError("model file not found: " + path.string());
    }
    const auto bytes = read_file(path);
    if (bytes.rfind(kBundleMagic, 0) == 0) {
        return TrainedModel{BaselineBundle::deserialize(bytes)};
    }
    if (bytes.rfind(kEncoderMagic, 0) == 0) {
        return TrainedModel{encoder::EncoderClassifier::deserialize(bytes)};
    }
    throw ParseError("unrecognized model file: " + path.string());
}

void TrainedModel::save(const fs::path& path) const {
    if (const auto* b = std::get_if<BaselineBundle>(&model)) {
        write_file_atomic(path, b->serialize());
    } else {
        write_file_atomic(path, std::get<encoder::EncoderClassifier>(model).serialize());
    }
}

std::string TrainedModel::kind() const {
    if (const auto* b = std::get_if<BaselineBundle>(&model)) {
        return baselines::model_kind(b->model);
    }
    return "encoder-" + std::to_string(std::get<encoder::EncoderClassifier>(model).model.config().max_len);
}

double TrainedModel::predict(std::string_view text) const {
    if (const auto* b = std::get_if<BaselineBundle>(&model)) {
        return baselines::predict_proba(b->model, b->tfidf.transform(text));
    }
    return std::get<encoder::EncoderClassifier>(model).predict(text);
}

attribution::Game TrainedModel::game(std::string_view text, attribution::Output output) const {
    if (const auto* b = std::get_if<BaselineBundle>(&model)) {
        return attribution::baseline_game(b->tfidf, b->model, text, output);
    }
    return attribution::encoder_game(std::get<encoder::EncoderClassifier>(model), text, output);
}

std::string labeled_to_jsonl(const std::vector<labeler::LabeledPost>& posts) {
    std::string out;
    for (const auto& lp : posts) {
        nlohmann::ordered_json j;
        j["post_id"] = lp.post.post_id;
        j["group_id"] = lp.post.group_id;
        j["text"] = lp.post.text;
        j["month"] = lp.post.month.str();
        j["label"] = lp.label;
        out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
    return out;
}

std::vector<labeler::LabeledPost> read_labeled_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open labeled corpus '" + path.string() + "'");
    }
    std::vector<labeler::LabeledPost> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        labeler::LabeledPost lp;
        lp.post = corpus::parse_post_line(line, line_no);
        const auto j = nlohmann::json::parse(line);
        const auto it = j.find("label");
        if (it == j.end() || !it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
            throw ParseError("labeled record needs an integer label of 0 or 1", line_no);
        }
        lp.label = it->get<int>();
        out.push_back(std::move(lp));
    }
    if (out.empty()) {
        throw Error("labeled corpus '" + path.string() + "' is empty");
    }
    return out;
}

void cmd_make_fixtures(const RunOptions& opt, fixtures::Scale scale) {
    Context ctx(opt, "make-fixtures");
    Stopwatch sw;
    const auto set = fixtures::generate(ctx.cfg.seed, scale);
    fixtures::write(set, ctx.out);
    ctx.log("scale " + std::string(fixtures::to_string(scale)) + " seed " + std::to_string(ctx.cfg.seed) + ": " +
            std::to_string(set.groups.size()) + " groups, " + std::to_string(set.posts.size()) + " posts, " +
            std::to_string(set.negation_posts.size()) + " negation posts in " + format_fixed(sw.seconds(), 3) + " s");
}

void cmd_filter_groups(const RunOptions& opt) {
    Context ctx(opt, "filter-groups");
    const auto& cfg = ctx.cfg;
    Stopwatch sw;
    const auto groups = corpus::read_groups_csv(ctx.require_input(cfg.groups, "groups"));
    const auto kept = corpus::filter_groups(groups, cfg.filter);
    write_file_atomic(ctx.out / "filtered_groups.csv", corpus::groups_to_csv(kept, true));

    for (const bool log_view : {false, true}) {
        const auto h = corpus::share_histogram(groups, cfg.histogram_bins, log_view);
        const std::string stem = log_view ? "share_histogram_log" : "share_histogram";
        write_file_atomic(ctx.out / (stem + ".csv"), h.to_csv());
        std::vector<double> heights;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            heights.push_back(log_view ? h.log_counts[i] : static_cast<double>(h.counts[i]));
        }
        write_file_atomic(ctx.out / (stem + ".svg"),
                          svg::histogram(log_view ? "Regional share of groups (log scale)" : "Regional share of groups",
                                         "regional members, %", log_view ? "log10(groups + 1)" : "groups", h.edges,
                                         heights));
    }

    const auto sweep = corpus::robustness_sweep(groups, cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_steps,
                                                cfg.filter.min_share_pct);
    write_file_atomic(ctx.out / "robustness_sweep.csv", sweep.to_csv());
    svg::Series s{"surviving groups", {}, {}, "#1f77b4"};
    for (const auto& r : sweep.rows) {
        s.x.push_back(static_cast<double>(r.threshold));
        s.y.push_back(static_cast<double>(r.surviving));
    }
    write_file_atomic(ctx.out / "robustness_sweep.svg",
                      svg::line_chart("Member threshold sweep", "min members", "surviving groups", {s}));
    ctx.log(std::to_string(kept.size()) + " of " + std::to_string(groups.size()) + " groups kept; sweep change " +
            format_fixed(sweep.max_relative_change, 4) + " in " + format_fixed(sw.seconds(), 3) + " s");
}

void cmd_label(const RunOptions& opt) {
    Context ctx(opt, "label");
    const auto& cfg = ctx.cfg;
    Stopwatch sw;
    const auto series = labeler::read_series_csv(ctx.require_input(cfg.series, "series"));
    auto report = corpus::ingest_posts(ctx.require_input(cfg.posts, "posts"), cfg.window, cfg.keep_empty,
                                       cfg.lenient ? corpus::IngestMode::lenient : corpus::IngestMode::strict);
    std::size_t outside_groups = 0;
    if (cfg.restrict_to_filtered_groups) {
        const auto filtered = ctx.out / "filtered_groups.csv";
        if (!fs::is_regular_file(filtered)) {
            throw UsageError("restrict_to_filtered_groups needs " + filtered.string() + " (run `filter-groups` first)");
        }
        std::set<std::string> ids;
        for (const auto& g : corpus::read_groups_csv(filtered)) {
            ids.insert(g.group_id);
        }
        const auto before = report.posts.size();
        std::erase_if(report.posts, [&](const corpus::PostRecord& p) { return !ids.count(p.group_id); });
        outside_groups = before - report.posts.size();
    }

    const auto bps = labeler::detect_breakpoints(series, cfg.extrema);
    const auto tl = labeler::assign_labels(series, bps);
    const auto labeled = labeler::label_posts(report.posts, tl);

    write_file_atomic(ctx.out / "labeled_posts.jsonl", labeled_to_jsonl(labeled));
    write_file_atomic(ctx.out / "breakpoints.csv", labeler::breakpoints_to_csv(bps, series));
    write_file_atomic(ctx.out / "month_labels.csv", tl.to_csv());

    svg::Series s{"inflation, % m/m", {}, {}, "#1f77b4"};
    for (std::size_t i = 0; i < series.size(); ++i) {
        s.x.push_back(static_cast<double>(i));
        s.y.push_back(series.values[i]);
    }
    std::vector<svg::Marker> markers;
    for (const auto& b : bps) {
        markers.push_back({static_cast<double>(b.index),
                           b.kind == labeler::ExtremumKind::maximum ? "#d62728" : "#1f77b4"});
    }
    write_file_atomic(ctx.out / "series.svg", svg::line_chart("Monthly inflation and breakpoints",
                                                              "months since " + series.start_month.str(), "%", {s},
                                                              markers));

    std::size_t class1 = 0;
    for (const auto& lp : labeled) {
        class1 += static_cast<std::size_t>(lp.label);
    }
    nlohmann::ordered_json summary;
    summary["posts"] = labeled.size();
    summary["class1"] = class1;
    summary["class0"] = labeled.size() - class1;
    summary["breakpoints"] = bps.size();
    summary["malformed_lines"] = report.malformed_lines;
    summary["out_of_window"] = report.out_of_window;
    summary["empty_dropped"] = report.empty_dropped;
    summary["duplicates"] = report.duplicates;
    summary["outside_filtered_groups"] = outside_groups;
    write_file_atomic(ctx.out / "label_summary.json", summary.dump(2) + "\n");
    ctx.log(std::to_string(labeled.size()) + " posts labeled against " + std::to_string(bps.size()) +
            " breakpoints in " + format_fixed(sw.seconds(), 3) + " s");
}

void cmd_train(const RunOptions& opt, const std::string& name) {
    if (std::find(model_names().begin(), model_names().end(), name) == model_names().end()) {
        throw UsageError("unknown model '" + name + "'");
    }
    Context ctx(opt, "train");
    const auto c = load_corpus(ctx);
    Stopwatch sw;
    const auto trained = is_encoder_model(name) ? train_encoder(ctx, c, name) : train_baseline(ctx, c, name);
    const double train_seconds = sw.seconds();

    const auto proba = predict_all(trained, c.texts(c.split.test));
    fs::create_directories(ctx.out / "models");
    fs::create_directories(ctx.out / "predictions");
    fs::create_directories(ctx.out / "metrics");
    trained.save(ctx.out / "models" / (name + ".model"));
    write_file_atomic(ctx.out / "predictions" / (name + ".csv"), predictions_csv(c, c.split.test, proba));
    const auto report = score(c, proba);
    write_file_atomic(ctx.out / "metrics" / (name + ".csv"), evalkit::metrics_table_csv({{name, report}}));
    ctx.log(name + " trained on " + std::to_string(c.split.train.size()) + " posts in " +
            format_fixed(train_seconds, 3) + " s; test macro-F1 " + format_fixed(report.macro_f1, 4));
}

void cmd_evaluate(const RunOptions& opt, const std::vector<fs::path>& models) {
    Context ctx(opt, "evaluate");
    auto paths = models;
    if (paths.empty()) {
        const auto dir = ctx.out / "models";
        if (fs::is_directory(dir)) {
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file() && e.path().extension() == ".model") {
                    paths.push_back(e.path());
                }
            }
        }
        std::sort(paths.begin(), paths.end());
        if (paths.empty()) {
            throw UsageError("no models to evaluate in " + dir.string());
        }
    }
    for (const auto& p : paths) {
        if (!fs::is_regular_file(p)) {
            throw UsageError("model file not found: " + p.string());
        }
    }
    const auto c = load_corpus(ctx);
    const auto texts = c.texts(c.split.test);
    std::vector<evalkit::MetricsRow> rows;
    for (const auto& p : paths) {
        const auto m = TrainedModel::load(p);
        rows.push_back({p.stem().string(), score(c, predict_all(m, texts))});
    }
    write_file_atomic(ctx.out / "metrics.csv", evalkit::metrics_table_csv(rows));
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.report.macro_f1 != b.report.macro_f1) {
            return a.report.macro_f1 > b.report.macro_f1;
        }
        return a.model < b.model;
    });
    std::vector<std::string> names;
    std::vector<double> f1;
    for (const auto& r : rows) {
        names.push_back(r.model);
        f1.push_back(r.report.macro_f1);
    }
    write_file_atomic(ctx.out / "metrics.svg", svg::bar_chart("Macro F1 on the test split", "F1", names, f1));
    ctx.log("evaluated " + std::to_string(rows.size()) + " models on " + std::to_string(texts.size()) + " test posts");
}

void cmd_explain(const RunOptions& opt, const std::string& model, const std::string& text,
                 attribution::Output output, std::ostream& terminal) {
    Context ctx(opt, "explain");
    if (trim(text).empty()) {
        throw UsageError("explain needs a non-empty --text");
    }
    const auto m = TrainedModel::load(resolve_model(ctx, model));
    Stopwatch sw;
    const auto game = m.game(text, output);
    if (game.size() == 0) {
        throw UsageError("the text has no tokens the model can see");
    }
    const auto a = attribution::explain(game, ctx.cfg.explain);
    attribution::render_report(a, ctx.out / "explain.html");
    write_file_atomic(ctx.out / "explain.json", attribution::summary_json(a));
    terminal << attribution::render_ansi(a);
    ctx.log(m.kind() + " explained " + std::to_string(a.tokens.size()) + " tokens (" +
            (a.exact ? "exact" : "sampled") + ", " + std::to_string(a.evaluations) + " evaluations) in " +
            format_fixed(sw.seconds(), 3) + " s");
}

}  // namespace inflacast::pipeline
